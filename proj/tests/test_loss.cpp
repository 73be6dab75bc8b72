#include <cmath>

#include "doctest.h"
#include "vqlab/layers.hpp"
#include "vqlab/loss.hpp"
#include "vqlab/rng.hpp"

using namespace vqlab;

TEST_CASE("cross entropy of a one-hot prediction against itself is zero") {
    Tensor p({1, 4}, {0.0, 1.0, 0.0, 0.0});
    CHECK(crossEntropy(p, p) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("uniform prediction against a one-hot target costs ln 9") {
    Tensor pred({1, 9});
    pred.fill(1.0 / 9.0);
    Tensor target({1, 9});
    target[4] = 1.0;
    CHECK(crossEntropy(pred, target) == doctest::Approx(std::log(9.0)).epsilon(1e-12));
    CHECK(crossEntropy(pred, target) == doctest::Approx(2.1972).epsilon(1e-4));
}

TEST_CASE("cross entropy averages over rows") {
    Tensor pred({2, 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.5, 0.25, 0.25});
    Tensor target({2, 3}, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0});
    const double expected = 0.5 * (std::log(3.0) + std::log(4.0));
    CHECK(crossEntropy(pred, target) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("loss gradient through softmax equals (p - t) / B") {
    Rng rng(5);
    const std::size_t B = 4, C = 9;
    Tensor logits({B, C});
    for (auto& v : logits.values()) v = rng.uniform(-2.0, 2.0);
    Tensor target({B, C});
    for (std::size_t r = 0; r < B; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            target[r * C + c] = rng.uniform(0.0, 1.0);
            sum += target[r * C + c];
        }
        for (std::size_t c = 0; c < C; ++c) target[r * C + c] /= sum;
    }

    Sequential net("s", {LayerSpec::softmax()});
    ParamStore params;
    const auto acts = net.forward(params, logits);
    const Tensor& probs = acts.back();
    const Tensor probGrad = crossEntropyGrad(probs, target);
    const Tensor logitGrad = net.backward(params, acts, probGrad);
    for (std::size_t i = 0; i < logits.numel(); ++i)
        CHECK(logitGrad[i] ==
              doctest::Approx((probs[i] - target[i]) / static_cast<double>(B))
                  .epsilon(1e-9));
}

TEST_CASE("loss gradient matches central finite differences") {
    Rng rng(6);
    const std::size_t B = 3, C = 5;
    Tensor pred({B, C});
    for (std::size_t r = 0; r < B; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            pred[r * C + c] = rng.uniform(0.05, 1.0);
            sum += pred[r * C + c];
        }
        for (std::size_t c = 0; c < C; ++c) pred[r * C + c] /= sum;
    }
    Tensor target({B, C});
    target[2] = 1.0;
    target[C + 1] = 0.3;
    target[C + 4] = 0.7;
    target[2 * C] = 1.0;

    const Tensor grad = crossEntropyGrad(pred, target);
    const double h = 1e-6;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double keep = pred[i];
        pred[i] = keep + h;
        const double up = crossEntropy(pred, target);
        pred[i] = keep - h;
        const double down = crossEntropy(pred, target);
        pred[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::abs(grad[i]) + std::abs(numeric);
        if (denom > 1e-9) CHECK(std::abs(grad[i] - numeric) / denom < 1e-4);
    }
}
