#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "vqlab/param_store.hpp"
#include "vqlab/tensor.hpp"

namespace vqlab {

enum class LayerKind {
    Conv3x3,   // same padding, stride 1, input [B,H,W,Cin] -> [B,H,W,Cout]
    MaxPool2,  // window w, stride w, [B,H,W,C] -> [B,H/w,W/w,C]
    Dense,     // last axis in -> out
    Relu,
    Softmax,   // over the last axis
    Concat,    // [B,R,W] -> [B,R*W]
    MeanPool,  // [B,R,D] -> [B,D], average over the R axis
};

struct LayerSpec {
    LayerKind kind;
    std::string name;       // parameter prefix, required for Conv3x3/Dense
    std::size_t in = 0;     // channels (conv) or features (dense)
    std::size_t out = 0;
    std::size_t window = 2; // MaxPool2 only

    static LayerSpec conv3x3(std::string name, std::size_t in, std::size_t out) {
        return {LayerKind::Conv3x3, std::move(name), in, out, 0};
    }
    static LayerSpec maxpool2(std::size_t window = 2) {
        return {LayerKind::MaxPool2, "", 0, 0, window};
    }
    static LayerSpec dense(std::string name, std::size_t in, std::size_t out) {
        return {LayerKind::Dense, std::move(name), in, out, 0};
    }
    static LayerSpec relu() { return {LayerKind::Relu, "", 0, 0, 0}; }
    static LayerSpec softmax() { return {LayerKind::Softmax, "", 0, 0, 0}; }
    static LayerSpec concat() { return {LayerKind::Concat, "", 0, 0, 0}; }
    static LayerSpec meanPool() { return {LayerKind::MeanPool, "", 0, 0, 0}; }
};

class GraphError : public std::runtime_error {
public:
    GraphError(std::size_t layerIndex, const std::string& what)
        : std::runtime_error("layer " + std::to_string(layerIndex) + ": " + what),
          layerIndex(layerIndex) {}
    std::size_t layerIndex;
};

// A fixed chain of layers sharing a parameter prefix. forward returns every
// intermediate activation (activations[0] is the input); backward consumes
// them and accumulates parameter gradients, returning the input gradient.
class Sequential {
public:
    Sequential() = default;
    Sequential(std::string paramPrefix, std::vector<LayerSpec> layers)
        : prefix_(std::move(paramPrefix)), layers_(std::move(layers)) {}

    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::string& prefix() const { return prefix_; }

    void initParams(ParamStore& params, Rng& rng) const;
    std::vector<std::string> paramPaths() const;

    std::vector<std::size_t> outputShape(std::vector<std::size_t> inShape) const;

    std::vector<Tensor> forward(const ParamStore& params, const Tensor& input) const;
    Tensor backward(ParamStore& params, const std::vector<Tensor>& activations,
                    const Tensor& outputGrad) const;

private:
    std::string paramPath(std::size_t layerIdx, const char* leaf) const;

    std::string prefix_;
    std::vector<LayerSpec> layers_;
};

// exposed for targeted unit tests
void softmaxRows(Tensor& t);

}  // namespace vqlab
