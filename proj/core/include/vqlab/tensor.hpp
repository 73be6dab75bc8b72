#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqlab {

// Dense row-major tensor of doubles.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(numelOf(shape_), 0.0) {}

    Tensor(std::initializer_list<std::size_t> shape)
        : Tensor(std::vector<std::size_t>(shape)) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != numelOf(shape_))
            throw std::invalid_argument("tensor: data length does not match shape");
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t numel() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at2(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    // reinterpret without copying; product of extents must match
    Tensor reshaped(std::vector<std::size_t> shape) const {
        if (numelOf(shape) != data_.size())
            throw std::invalid_argument("tensor: reshape changes element count");
        return Tensor(std::move(shape), data_);
    }

    void fill(double v) { data_.assign(data_.size(), v); }

    // size of everything but the last axis, i.e. the row count when the
    // tensor is viewed as a matrix [rows, lastDim]
    std::size_t rows() const {
        if (shape_.empty()) return 0;
        return data_.size() / shape_.back();
    }
    std::size_t lastDim() const { return shape_.empty() ? 0 : shape_.back(); }

    static std::size_t numelOf(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (auto e : shape) n *= e;
        return shape.empty() ? 0 : n;
    }

    static std::string shapeString(const std::vector<std::size_t>& shape) {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace vqlab
