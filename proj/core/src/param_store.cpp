#include "vqlab/param_store.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace vqlab {

namespace {
constexpr char kMagic[8] = {'V', 'Q', 'P', 'A', 'R', 'M', '0', '1'};
}

Tensor& ParamStore::create(const std::string& path, std::vector<std::size_t> shape,
                           std::size_t fanIn, std::size_t fanOut, Rng& rng) {
    auto it = params_.find(path);
    if (it != params_.end()) return it->second.value;
    Param p;
    p.value = Tensor(shape);
    p.grad = Tensor(shape);
    const double bound = std::sqrt(6.0 / static_cast<double>(fanIn + fanOut));
    for (auto& v : p.value.values()) v = rng.uniform(-bound, bound);
    return params_.emplace(path, std::move(p)).first->second.value;
}

Tensor& ParamStore::createZeros(const std::string& path, std::vector<std::size_t> shape) {
    auto it = params_.find(path);
    if (it != params_.end()) return it->second.value;
    Param p;
    p.value = Tensor(shape);
    p.grad = Tensor(shape);
    return params_.emplace(path, std::move(p)).first->second.value;
}

Param& ParamStore::at(const std::string& path) {
    auto it = params_.find(path);
    if (it == params_.end()) throw std::out_of_range("no parameter named " + path);
    return it->second;
}

const Param& ParamStore::at(const std::string& path) const {
    auto it = params_.find(path);
    if (it == params_.end()) throw std::out_of_range("no parameter named " + path);
    return it->second;
}

void ParamStore::zeroGrads() {
    for (auto& [path, p] : params_) p.grad.fill(0.0);
}

void ParamStore::sgdStep(double lr) {
    for (auto& [path, p] : params_) {
        for (double g : p.grad.values())
            if (!std::isfinite(g)) throw DivergenceError(path);
    }
    for (auto& [path, p] : params_) {
        auto& v = p.value.values();
        const auto& g = p.grad.values();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
        p.grad.fill(0.0);
    }
}

std::size_t ParamStore::paramCount() const {
    std::size_t n = 0;
    for (const auto& [path, p] : params_) n += p.value.numel();
    return n;
}

void ParamStore::assignValues(const ParamStore& other) {
    for (auto& [path, p] : params_) {
        const Param& src = other.at(path);
        if (src.value.shape() != p.value.shape())
            throw std::invalid_argument("shape mismatch assigning " + path);
        p.value.values() = src.value.values();
    }
}

void ParamStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t count = params_.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& [name, p] : params_) {
        const std::uint64_t nameLen = name.size();
        out.write(reinterpret_cast<const char*>(&nameLen), sizeof(nameLen));
        out.write(name.data(), static_cast<std::streamsize>(nameLen));
        const std::uint64_t rank = p.value.rank();
        out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
        for (auto e : p.value.shape()) {
            const std::uint64_t ext = e;
            out.write(reinterpret_cast<const char*>(&ext), sizeof(ext));
        }
        out.write(reinterpret_cast<const char*>(p.value.data()),
                  static_cast<std::streamsize>(p.value.numel() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write failed: " + path);

    std::ofstream idx(path + ".index");
    for (const auto& [name, p] : params_)
        idx << name << " " << Tensor::shapeString(p.value.shape()) << "\n";
}

ParamStore ParamStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("bad parameter archive header: " + path);
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    ParamStore store;
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t nameLen = 0;
        in.read(reinterpret_cast<char*>(&nameLen), sizeof(nameLen));
        std::string name(nameLen, '\0');
        in.read(name.data(), static_cast<std::streamsize>(nameLen));
        std::uint64_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), sizeof(rank));
        std::vector<std::size_t> shape(rank);
        for (auto& e : shape) {
            std::uint64_t ext = 0;
            in.read(reinterpret_cast<char*>(&ext), sizeof(ext));
            e = static_cast<std::size_t>(ext);
        }
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!in) throw std::runtime_error("truncated parameter archive: " + path);
        Param p;
        p.grad = Tensor(shape);
        p.value = std::move(t);
        store.params_.emplace(std::move(name), std::move(p));
    }
    return store;
}

}  // namespace vqlab
