#include "vqlab/stats.hpp"

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

namespace vqlab {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("pearson: need at least 2 samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double denom = static_cast<double>(n - 1);
    if (sxx / denom < 1e-12 || syy / denom < 1e-12) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

namespace {

// leading eigenpair of a symmetric matrix by power iteration
std::pair<double, std::vector<double>> powerIteration(const std::vector<double>& m,
                                                      std::size_t d) {
    std::vector<double> v(d, 0.0);
    v[0] = 1.0;  // deterministic start
    double lambda = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<double> w(d, 0.0);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) w[i] += m[i * d + j] * v[j];
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-30) break;
        for (auto& x : w) x /= norm;
        double newLambda = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) newLambda += w[i] * m[i * d + j] * w[j];
        double diff = 0.0;
        for (std::size_t i = 0; i < d; ++i) diff += std::abs(w[i] - v[i]);
        v = std::move(w);
        const bool converged = diff < 1e-9 || std::abs(newLambda - lambda) < 1e-9;
        lambda = newLambda;
        if (converged && iter > 0) break;
    }
    return {lambda, v};
}

}  // namespace

Pca2Result pca2(const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    if (n < 3) throw std::invalid_argument("pca2: need at least 3 points");
    const std::size_t d = points[0].size();
    for (const auto& p : points)
        if (p.size() != d) throw std::invalid_argument("pca2: ragged input");

    std::vector<double> mean(d, 0.0);
    for (const auto& p : points)
        for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
    for (auto& m : mean) m /= static_cast<double>(n);

    std::vector<double> cov(d * d, 0.0);
    for (const auto& p : points)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j)
                cov[i * d + j] += (p[i] - mean[i]) * (p[j] - mean[j]);
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov[i * d + j] /= static_cast<double>(n - 1);
            cov[j * d + i] = cov[i * d + j];
            if (i == j) total += cov[i * d + i];
        }
    if (total < 1e-30) throw std::invalid_argument("pca2: zero covariance");

    auto [l1, v1] = powerIteration(cov, d);
    // deflate and repeat
    std::vector<double> deflated = cov;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) deflated[i * d + j] -= l1 * v1[i] * v1[j];
    auto [l2, v2] = powerIteration(deflated, d);

    Pca2Result res;
    res.eigenvalues[0] = l1;
    res.eigenvalues[1] = l2;
    res.explained[0] = l1 / total;
    res.explained[1] = l2 / total;
    res.projections.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = points[k][j] - mean[j];
            a += c * v1[j];
            b += c * v2[j];
        }
        res.projections[k] = {a, b};
    }
    return res;
}

double meanSilhouette(const std::vector<std::vector<double>>& points,
                      const std::vector<int>& labels) {
    const std::size_t n = points.size();
    if (labels.size() != n) throw std::invalid_argument("silhouette: label count mismatch");
    std::map<int, std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < n; ++i) clusters[labels[i]].push_back(i);
    if (clusters.size() < 2) throw std::invalid_argument("silhouette: need >= 2 clusters");

    auto dist = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t j = 0; j < points[a].size(); ++j) {
            const double d = points[a][j] - points[b][j];
            s += d * d;
        }
        return std::sqrt(s);
    };

    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& own = clusters[labels[i]];
        if (own.size() < 2) continue;  // singleton clusters contribute 0 by convention
        double a = 0.0;
        for (auto j : own)
            if (j != i) a += dist(i, j);
        a /= static_cast<double>(own.size() - 1);
        double b = HUGE_VAL;
        for (const auto& [lab, members] : clusters) {
            if (lab == labels[i]) continue;
            double m = 0.0;
            for (auto j : members) m += dist(i, j);
            m /= static_cast<double>(members.size());
            b = std::min(b, m);
        }
        sum += (b - a) / std::max(a, b);
        ++counted;
    }
    return counted ? sum / static_cast<double>(counted) : 0.0;
}

}  // namespace vqlab
