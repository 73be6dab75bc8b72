#include "vqlab/ground_truth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace vqlab {

const std::array<const char*, kNumQuantifiers> kQuantifierNames = {
    "none",  "almost_none", "few",  "the_smaller_part", "some",
    "many",  "most",        "almost_all", "all"};

const std::vector<Ratio>& canonicalRatios() {
    static const std::vector<Ratio> ratios = {
        {0, 1}, {1, 9}, {1, 5}, {1, 4}, {1, 3}, {1, 2}, {2, 3}, {3, 4}, {1, 1},
        {4, 3}, {3, 2}, {2, 1}, {3, 1}, {4, 1}, {5, 1}, {9, 1}, {1, 0}};
    return ratios;
}

std::size_t ratioIndex(const Ratio& r) {
    const auto& ratios = canonicalRatios();
    for (std::size_t i = 0; i < ratios.size(); ++i)
        if (ratios[i] == r) return i;
    throw std::invalid_argument("ratio " + r.str() + " is not in the canonical set");
}

std::vector<Combination> enumerateCombinations(const Ratio& r) {
    ratioIndex(r);  // validate
    std::vector<Combination> out;
    if (r.a == 0 || r.b == 0) {
        for (int n = kMinObjects; n <= kMaxObjects; ++n)
            out.push_back(r.a == 0 ? Combination{0, n} : Combination{n, 0});
        return out;
    }
    const int unit = r.a + r.b;
    for (int k = 1; k * unit <= kMaxObjects; ++k)
        if (k * unit >= kMinObjects) out.push_back({k * r.a, k * r.b});
    return out;
}

Ratio parentRatio(const Combination& c) {
    if (c.nTargets < 0 || c.nNonTargets < 0)
        throw std::invalid_argument("negative counts in combination");
    if (c.total() < kMinObjects || c.total() > kMaxObjects)
        throw std::invalid_argument("combination total " + std::to_string(c.total()) +
                                    " outside [3,20]");
    Ratio r;
    if (c.nTargets == 0) {
        r = {0, 1};
    } else if (c.nNonTargets == 0) {
        r = {1, 0};
    } else {
        const int g = std::gcd(c.nTargets, c.nNonTargets);
        r = {c.nTargets / g, c.nNonTargets / g};
    }
    ratioIndex(r);  // throws if the reduced ratio is not canonical
    return r;
}

std::array<double, kNumQuantifiers> QuantifierModel::defaultPrototypes() {
    return {0.0, 0.10, 0.23, 0.38, 0.50, 0.62, 0.77, 0.90, 1.0};
}

std::array<double, kNumQuantifiers> QuantifierModel::distribution(double p) const {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::domain_error("proportion " + std::to_string(p) + " outside [0,1]");
    // bandwidth narrows linearly inside the endpoint bands, so the endpoint
    // classes become near-deterministic while the map stays continuous
    double s = sigma;
    if (p < endpointBand)
        s = endpointSigma + (sigma - endpointSigma) * (p / endpointBand);
    else if (p > 1.0 - endpointBand)
        s = endpointSigma + (sigma - endpointSigma) * ((1.0 - p) / endpointBand);

    std::array<double, kNumQuantifiers> out{};
    double mx = -HUGE_VAL;
    for (std::size_t i = 0; i < kNumQuantifiers; ++i) {
        const double d = p - mu[i];
        out[i] = -(d * d) / (2.0 * s * s);
        mx = std::max(mx, out[i]);
    }
    double sum = 0.0;
    for (auto& v : out) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : out) v /= sum;
    return out;
}

void QuantifierModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write quantifier model: " + path);
    out.precision(17);
    for (std::size_t i = 0; i < kNumQuantifiers; ++i)
        out << "mu_" << (i + 1) << " = " << mu[i] << "\n";
    out << "sigma = " << sigma << "\n";
    out << "endpoint_sigma = " << endpointSigma << "\n";
    out << "endpoint_band = " << endpointBand << "\n";
}

QuantifierModel QuantifierModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read quantifier model: " + path);
    QuantifierModel m;
    m.mu = defaultPrototypes();
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string key, eq;
        double value = 0.0;
        if (!(ss >> key >> eq >> value) || eq != "=") continue;
        if (key.rfind("mu_", 0) == 0) {
            const std::size_t i = static_cast<std::size_t>(std::stoi(key.substr(3))) - 1;
            if (i >= kNumQuantifiers) throw std::runtime_error("bad key in " + path);
            m.mu[i] = value;
        } else if (key == "sigma") {
            m.sigma = value;
        } else if (key == "endpoint_sigma") {
            m.endpointSigma = value;
        } else if (key == "endpoint_band") {
            m.endpointBand = value;
        } else {
            throw std::runtime_error("unknown key '" + key + "' in " + path);
        }
    }
    return m;
}

double meanMaxQuantifierProbability(const QuantifierModel& m) {
    double sum = 0.0;
    for (const auto& r : canonicalRatios()) {
        const auto dist = m.distribution(r.proportion());
        sum += *std::max_element(dist.begin(), dist.end());
    }
    return sum / static_cast<double>(kNumRatios);
}

QuantifierModel calibrateQuantifierModel() {
    QuantifierModel m;
    m.mu = QuantifierModel::defaultPrototypes();
    constexpr double kLo = 0.50, kHi = 0.56, kTarget = 0.53;
    // mean max probability is decreasing in sigma, so bisect
    double lo = 0.02, hi = 0.40;
    for (int iter = 0; iter < 60; ++iter) {
        m.sigma = 0.5 * (lo + hi);
        const double mm = meanMaxQuantifierProbability(m);
        if (mm >= kLo && mm <= kHi) return m;
        if (mm > kTarget)
            lo = m.sigma;
        else
            hi = m.sigma;
    }
    std::ostringstream diag;
    diag << "quantifier calibration failed; sigma sweep:\n";
    for (double s = 0.02; s <= 0.40; s += 0.02) {
        m.sigma = s;
        diag << "  sigma=" << s << " meanMax=" << meanMaxQuantifierProbability(m) << "\n";
    }
    throw CalibrationError(diag.str());
}

TaskLabels labelScene(const Combination& c, const QuantifierModel& model) {
    const Ratio r = parentRatio(c);  // throws on inadmissible combinations
    TaskLabels labels;
    if (c.nTargets > c.nNonTargets)
        labels.setComp = SetComp::More;
    else if (c.nTargets < c.nNonTargets)
        labels.setComp = SetComp::Less;
    else
        labels.setComp = SetComp::Same;
    labels.propClass = static_cast<int>(ratioIndex(r));
    labels.nTarg = c.nTargets;
    labels.quantDist = model.distribution(r.proportion());
    return labels;
}

}  // namespace vqlab
