#pragma once

#include "vqlab/tensor.hpp"

namespace vqlab {

// Soft-target cross-entropy, averaged over rows. pred entries are clamped to
// [1e-12, 1] before the log. Targets may be one-hot or full distributions.
double crossEntropy(const Tensor& pred, const Tensor& target);

// Gradient of crossEntropy with respect to pred (the probability rows, not
// the logits); feed this through the softmax layer's backward.
Tensor crossEntropyGrad(const Tensor& pred, const Tensor& target);

}  // namespace vqlab
