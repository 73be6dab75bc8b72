#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace vqlab {

// Sample Pearson correlation. Returns 0 when either vector has variance
// below 1e-12 (uninformative predictions score zero, not NaN).
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct Pca2Result {
    std::vector<std::array<double, 2>> projections;  // mean-centered scores
    double explained[2];                             // variance fractions
    double eigenvalues[2];
};

// Projection onto the top-2 covariance eigenvectors, computed by power
// iteration with deflation (tolerance 1e-9, max 1000 iterations). The start
// vector is the first basis vector, so results are deterministic.
Pca2Result pca2(const std::vector<std::vector<double>>& points);

// Mean silhouette coefficient over all points, clusters given by labels.
double meanSilhouette(const std::vector<std::vector<double>>& points,
                      const std::vector<int>& labels);

}  // namespace vqlab
