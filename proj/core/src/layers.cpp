#include "vqlab/layers.hpp"

#include <algorithm>
#include <cblas.h>
#include <cmath>

namespace vqlab {

namespace {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool transA = false, bool transB = false, double beta = 0.0) {
    cblas_dgemm(CblasRowMajor, transA ? CblasTrans : CblasNoTrans,
                transB ? CblasTrans : CblasNoTrans, static_cast<int>(m),
                static_cast<int>(n), static_cast<int>(k), 1.0, a,
                static_cast<int>(transA ? m : k), b, static_cast<int>(transB ? k : n),
                beta, c, static_cast<int>(n));
}

// [B,H,W,C] -> [B*H*W, 9*C], zero padded borders
void im2col3x3(const Tensor& in, std::size_t B, std::size_t H, std::size_t W,
               std::size_t C, std::vector<double>& col) {
    col.assign(B * H * W * 9 * C, 0.0);
    const double* src = in.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                double* dst = col.data() + ((b * H + y) * W + x) * 9 * C;
                for (int dy = -1; dy <= 1; ++dy) {
                    const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + dy;
                    if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(H)) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + dx;
                        if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(W)) continue;
                        const std::size_t tap = static_cast<std::size_t>((dy + 1) * 3 + (dx + 1));
                        const double* s =
                            src + ((b * H + static_cast<std::size_t>(yy)) * W +
                                   static_cast<std::size_t>(xx)) * C;
                        std::copy(s, s + C, dst + tap * C);
                    }
                }
            }
}

// scatter-add of the column gradient back onto the input image grid
void col2im3x3(const std::vector<double>& col, std::size_t B, std::size_t H,
               std::size_t W, std::size_t C, Tensor& dIn) {
    double* dst = dIn.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                const double* src = col.data() + ((b * H + y) * W + x) * 9 * C;
                for (int dy = -1; dy <= 1; ++dy) {
                    const std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + dy;
                    if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(H)) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + dx;
                        if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(W)) continue;
                        const std::size_t tap = static_cast<std::size_t>((dy + 1) * 3 + (dx + 1));
                        double* d = dst + ((b * H + static_cast<std::size_t>(yy)) * W +
                                           static_cast<std::size_t>(xx)) * C;
                        const double* s = src + tap * C;
                        for (std::size_t c = 0; c < C; ++c) d[c] += s[c];
                    }
                }
            }
}

}  // namespace

void softmaxRows(Tensor& t) {
    const std::size_t cols = t.lastDim();
    const std::size_t rows = t.rows();
    double* p = t.data();
    for (std::size_t r = 0; r < rows; ++r, p += cols) {
        double mx = p[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, p[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            p[j] = std::exp(p[j] - mx);
            sum += p[j];
        }
        for (std::size_t j = 0; j < cols; ++j) p[j] /= sum;
    }
}

std::string Sequential::paramPath(std::size_t layerIdx, const char* leaf) const {
    const auto& spec = layers_[layerIdx];
    std::string base = prefix_.empty() ? spec.name : prefix_ + "." + spec.name;
    return base + "." + leaf;
}

void Sequential::initParams(ParamStore& params, Rng& rng) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        switch (l.kind) {
            case LayerKind::Conv3x3: {
                const std::size_t fanIn = 9 * l.in, fanOut = 9 * l.out;
                params.create(paramPath(i, "kernel"), {3, 3, l.in, l.out}, fanIn, fanOut, rng);
                params.createZeros(paramPath(i, "bias"), {l.out});
                break;
            }
            case LayerKind::Dense:
                params.create(paramPath(i, "weight"), {l.in, l.out}, l.in, l.out, rng);
                params.createZeros(paramPath(i, "bias"), {l.out});
                break;
            default:
                break;
        }
    }
}

std::vector<std::string> Sequential::paramPaths() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        switch (layers_[i].kind) {
            case LayerKind::Conv3x3:
                out.push_back(paramPath(i, "kernel"));
                out.push_back(paramPath(i, "bias"));
                break;
            case LayerKind::Dense:
                out.push_back(paramPath(i, "weight"));
                out.push_back(paramPath(i, "bias"));
                break;
            default:
                break;
        }
    }
    return out;
}

std::vector<std::size_t> Sequential::outputShape(std::vector<std::size_t> s) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        switch (l.kind) {
            case LayerKind::Conv3x3:
                if (s.size() != 4 || s[3] != l.in)
                    throw GraphError(i, "conv3x3 expects [B,H,W," + std::to_string(l.in) +
                                            "], got " + Tensor::shapeString(s));
                s[3] = l.out;
                break;
            case LayerKind::MaxPool2:
                if (s.size() != 4 || s[1] % l.window || s[2] % l.window)
                    throw GraphError(i, "maxpool window " + std::to_string(l.window) +
                                            " does not divide " + Tensor::shapeString(s));
                s[1] /= l.window;
                s[2] /= l.window;
                break;
            case LayerKind::Dense:
                if (s.empty() || s.back() != l.in)
                    throw GraphError(i, "dense expects last axis " + std::to_string(l.in) +
                                            ", got " + Tensor::shapeString(s));
                s.back() = l.out;
                break;
            case LayerKind::Relu:
            case LayerKind::Softmax:
                break;
            case LayerKind::Concat:
                if (s.size() != 3) throw GraphError(i, "concat expects rank-3 input");
                s = {s[0], s[1] * s[2]};
                break;
            case LayerKind::MeanPool:
                if (s.size() != 3) throw GraphError(i, "mean-pool expects rank-3 input");
                s = {s[0], s[2]};
                break;
        }
    }
    return s;
}

std::vector<Tensor> Sequential::forward(const ParamStore& params, const Tensor& input) const {
    std::vector<Tensor> acts;
    acts.reserve(layers_.size() + 1);
    acts.push_back(input);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        const Tensor& x = acts.back();
        const auto& s = x.shape();
        switch (l.kind) {
            case LayerKind::Conv3x3: {
                if (s.size() != 4 || s[3] != l.in)
                    throw GraphError(i, "conv3x3 input shape " + Tensor::shapeString(s));
                const std::size_t B = s[0], H = s[1], W = s[2];
                const Tensor& kernel = params.at(paramPath(i, "kernel")).value;
                const Tensor& bias = params.at(paramPath(i, "bias")).value;
                std::vector<double> col;
                im2col3x3(x, B, H, W, l.in, col);
                Tensor y({B, H, W, l.out});
                matmul(col.data(), kernel.data(), y.data(), B * H * W, 9 * l.in, l.out);
                double* yp = y.data();
                for (std::size_t r = 0; r < B * H * W; ++r, yp += l.out)
                    for (std::size_t c = 0; c < l.out; ++c) yp[c] += bias[c];
                acts.push_back(std::move(y));
                break;
            }
            case LayerKind::MaxPool2: {
                if (s.size() != 4 || s[1] % l.window || s[2] % l.window)
                    throw GraphError(i, "maxpool input shape " + Tensor::shapeString(s));
                const std::size_t B = s[0], H = s[1], W = s[2], C = s[3], w = l.window;
                Tensor y({B, H / w, W / w, C});
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t oy = 0; oy < H / w; ++oy)
                        for (std::size_t ox = 0; ox < W / w; ++ox)
                            for (std::size_t c = 0; c < C; ++c) {
                                double best = -HUGE_VAL;
                                for (std::size_t dy = 0; dy < w; ++dy)
                                    for (std::size_t dx = 0; dx < w; ++dx) {
                                        const double v =
                                            x[((b * H + oy * w + dy) * W + ox * w + dx) * C + c];
                                        best = std::max(best, v);
                                    }
                                y[((b * (H / w) + oy) * (W / w) + ox) * C + c] = best;
                            }
                acts.push_back(std::move(y));
                break;
            }
            case LayerKind::Dense: {
                if (s.empty() || s.back() != l.in)
                    throw GraphError(i, "dense input shape " + Tensor::shapeString(s));
                const std::size_t rows = x.rows();
                auto outShape = s;
                outShape.back() = l.out;
                const Tensor& weight = params.at(paramPath(i, "weight")).value;
                const Tensor& bias = params.at(paramPath(i, "bias")).value;
                Tensor y(outShape);
                matmul(x.data(), weight.data(), y.data(), rows, l.in, l.out);
                double* yp = y.data();
                for (std::size_t r = 0; r < rows; ++r, yp += l.out)
                    for (std::size_t c = 0; c < l.out; ++c) yp[c] += bias[c];
                acts.push_back(std::move(y));
                break;
            }
            case LayerKind::Relu: {
                Tensor y = x;
                for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
                acts.push_back(std::move(y));
                break;
            }
            case LayerKind::Softmax: {
                Tensor y = x;
                softmaxRows(y);
                acts.push_back(std::move(y));
                break;
            }
            case LayerKind::Concat: {
                if (s.size() != 3) throw GraphError(i, "concat input shape " + Tensor::shapeString(s));
                acts.push_back(x.reshaped({s[0], s[1] * s[2]}));
                break;
            }
            case LayerKind::MeanPool: {
                if (s.size() != 3) throw GraphError(i, "mean-pool input shape " + Tensor::shapeString(s));
                const std::size_t B = s[0], R = s[1], D = s[2];
                Tensor y({B, D});
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t r = 0; r < R; ++r)
                        for (std::size_t d = 0; d < D; ++d)
                            y[b * D + d] += x[(b * R + r) * D + d] / static_cast<double>(R);
                acts.push_back(std::move(y));
                break;
            }
        }
    }
    return acts;
}

Tensor Sequential::backward(ParamStore& params, const std::vector<Tensor>& acts,
                            const Tensor& outputGrad) const {
    if (acts.size() != layers_.size() + 1)
        throw GraphError(layers_.size(), "activation count does not match graph");
    Tensor g = outputGrad;
    for (std::size_t ii = layers_.size(); ii-- > 0;) {
        const auto& l = layers_[ii];
        const Tensor& x = acts[ii];
        const Tensor& y = acts[ii + 1];
        if (g.shape() != y.shape())
            throw GraphError(ii, "gradient shape " + Tensor::shapeString(g.shape()) +
                                     " does not match activation " +
                                     Tensor::shapeString(y.shape()));
        switch (l.kind) {
            case LayerKind::Conv3x3: {
                const auto& s = x.shape();
                const std::size_t B = s[0], H = s[1], W = s[2];
                Param& kernel = params.at(paramPath(ii, "kernel"));
                Param& bias = params.at(paramPath(ii, "bias"));
                std::vector<double> col;
                im2col3x3(x, B, H, W, l.in, col);
                // dK += col^T * dY ; accumulate in place
                matmul(col.data(), g.data(), kernel.grad.data(), 9 * l.in, B * H * W, l.out,
                       true, false, 1.0);
                const double* gp = g.data();
                for (std::size_t r = 0; r < B * H * W; ++r, gp += l.out)
                    for (std::size_t c = 0; c < l.out; ++c) bias.grad[c] += gp[c];
                std::vector<double> dCol(col.size());
                matmul(g.data(), kernel.value.data(), dCol.data(), B * H * W, l.out, 9 * l.in,
                       false, true);
                Tensor dIn(x.shape());
                col2im3x3(dCol, B, H, W, l.in, dIn);
                g = std::move(dIn);
                break;
            }
            case LayerKind::MaxPool2: {
                const auto& s = x.shape();
                const std::size_t B = s[0], H = s[1], W = s[2], C = s[3], w = l.window;
                Tensor dIn(x.shape());
                // route gradient to the first max in scan order
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t oy = 0; oy < H / w; ++oy)
                        for (std::size_t ox = 0; ox < W / w; ++ox)
                            for (std::size_t c = 0; c < C; ++c) {
                                std::size_t bestIdx = 0;
                                double best = -HUGE_VAL;
                                for (std::size_t dy = 0; dy < w; ++dy)
                                    for (std::size_t dx = 0; dx < w; ++dx) {
                                        const std::size_t idx =
                                            ((b * H + oy * w + dy) * W + ox * w + dx) * C + c;
                                        if (x[idx] > best) {
                                            best = x[idx];
                                            bestIdx = idx;
                                        }
                                    }
                                dIn[bestIdx] +=
                                    g[((b * (H / w) + oy) * (W / w) + ox) * C + c];
                            }
                g = std::move(dIn);
                break;
            }
            case LayerKind::Dense: {
                const std::size_t rows = x.rows();
                Param& weight = params.at(paramPath(ii, "weight"));
                Param& bias = params.at(paramPath(ii, "bias"));
                matmul(x.data(), g.data(), weight.grad.data(), l.in, rows, l.out, true, false,
                       1.0);
                const double* gp = g.data();
                for (std::size_t r = 0; r < rows; ++r, gp += l.out)
                    for (std::size_t c = 0; c < l.out; ++c) bias.grad[c] += gp[c];
                Tensor dIn(x.shape());
                matmul(g.data(), weight.value.data(), dIn.data(), rows, l.out, l.in, false,
                       true);
                g = std::move(dIn);
                break;
            }
            case LayerKind::Relu: {
                Tensor dIn = g;
                for (std::size_t k = 0; k < dIn.numel(); ++k)
                    if (x[k] <= 0.0) dIn[k] = 0.0;
                g = std::move(dIn);
                break;
            }
            case LayerKind::Softmax: {
                const std::size_t cols = y.lastDim(), rows = y.rows();
                Tensor dIn(x.shape());
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* p = y.data() + r * cols;
                    const double* gr = g.data() + r * cols;
                    double dot = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * p[c];
                    double* d = dIn.data() + r * cols;
                    for (std::size_t c = 0; c < cols; ++c) d[c] = p[c] * (gr[c] - dot);
                }
                g = std::move(dIn);
                break;
            }
            case LayerKind::Concat:
            case LayerKind::MeanPool: {
                if (l.kind == LayerKind::Concat) {
                    g = g.reshaped(x.shape());
                } else {
                    const auto& s = x.shape();
                    const std::size_t B = s[0], R = s[1], D = s[2];
                    Tensor dIn(x.shape());
                    for (std::size_t b = 0; b < B; ++b)
                        for (std::size_t r = 0; r < R; ++r)
                            for (std::size_t d = 0; d < D; ++d)
                                dIn[(b * R + r) * D + d] =
                                    g[b * D + d] / static_cast<double>(R);
                    g = std::move(dIn);
                }
                break;
            }
        }
    }
    return g;
}

}  // namespace vqlab
