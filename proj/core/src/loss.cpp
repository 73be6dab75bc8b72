#include "vqlab/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vqlab {

namespace {
constexpr double kEps = 1e-12;
}

double crossEntropy(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw std::invalid_argument("cross-entropy: shape mismatch " +
                                    Tensor::shapeString(pred.shape()) + " vs " +
                                    Tensor::shapeString(target.shape()));
    const std::size_t rows = pred.rows(), cols = pred.lastDim();
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double t = target[r * cols + c];
            if (t == 0.0) continue;
            // no clamping: a collapsed probability must surface as a
            // non-finite loss so training can detect divergence
            loss -= t * std::log(pred[r * cols + c]);
        }
    return loss / static_cast<double>(rows);
}

Tensor crossEntropyGrad(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw std::invalid_argument("cross-entropy grad: shape mismatch");
    const std::size_t rows = pred.rows(), cols = pred.lastDim();
    Tensor g(pred.shape());
    const double scale = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double t = target[r * cols + c];
            if (t == 0.0) continue;
            const double p = std::clamp(pred[r * cols + c], kEps, 1.0);
            g[r * cols + c] = -scale * t / p;
        }
    return g;
}

}  // namespace vqlab
