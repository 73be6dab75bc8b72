#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "vqlab/rng.hpp"
#include "vqlab/tensor.hpp"

namespace vqlab {

struct Param {
    Tensor value;
    Tensor grad;
};

class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& path)
        : std::runtime_error("non-finite gradient at parameter " + path) {}
};

// Named trainable parameters with explicit gradient accumulators.
class ParamStore {
public:
    // registers a parameter initialized uniform in +-sqrt(6/(fanIn+fanOut));
    // no-op if the path already exists (so graph builders are idempotent)
    Tensor& create(const std::string& path, std::vector<std::size_t> shape,
                   std::size_t fanIn, std::size_t fanOut, Rng& rng);
    Tensor& createZeros(const std::string& path, std::vector<std::size_t> shape);

    bool has(const std::string& path) const { return params_.count(path) != 0; }
    Param& at(const std::string& path);
    const Param& at(const std::string& path) const;

    void zeroGrads();

    // theta <- theta - lr * grad, then grads are zeroed;
    // throws DivergenceError naming the first non-finite gradient
    void sgdStep(double lr);

    std::size_t paramCount() const;  // total scalar parameters
    std::size_t size() const { return params_.size(); }

    const std::map<std::string, Param>& entries() const { return params_; }
    std::map<std::string, Param>& entries() { return params_; }

    // length-prefixed binary archive plus text index, versioned header
    void save(const std::string& path) const;
    static ParamStore load(const std::string& path);

    // copy values (not grads) from another store; shapes must match
    void assignValues(const ParamStore& other);

private:
    std::map<std::string, Param> params_;
};

}  // namespace vqlab
