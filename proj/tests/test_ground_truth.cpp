#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "vqlab/ground_truth.hpp"

using namespace vqlab;

TEST_CASE("canonical ratio list: 17 classes, increasing, mirror-symmetric") {
    const auto& ratios = canonicalRatios();
    REQUIRE(ratios.size() == kNumRatios);
    for (std::size_t i = 1; i < ratios.size(); ++i)
        CHECK(ratios[i].proportion() > ratios[i - 1].proportion());
    for (std::size_t i = 0; i < ratios.size(); ++i)
        CHECK(ratios[i].proportion() + ratios[ratios.size() - 1 - i].proportion() ==
              doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("canonical list carries the documented proportions") {
    auto prop = [](int a, int b) { return canonicalRatios()[ratioIndex({a, b})].proportion(); };
    CHECK(prop(1, 4) == doctest::Approx(0.20));
    CHECK(prop(2, 3) == doctest::Approx(0.40));
    CHECK(prop(3, 4) == doctest::Approx(3.0 / 7.0));   // 43%
    CHECK(prop(2, 1) == doctest::Approx(2.0 / 3.0));   // 67%
    CHECK(prop(3, 1) == doctest::Approx(0.75));
    CHECK(prop(1, 1) == doctest::Approx(0.50));
    CHECK(prop(3, 2) == doctest::Approx(0.60));
}

TEST_CASE("ratioIndex rejects unknown ratios") {
    CHECK_THROWS_AS(ratioIndex({5, 7}), std::invalid_argument);
    CHECK_THROWS_AS(ratioIndex({2, 8}), std::invalid_argument);  // not coprime form
}

TEST_CASE("combination enumeration reproduces the documented counts") {
    const auto c14 = enumerateCombinations({1, 4});
    REQUIRE(c14.size() == 4);
    CHECK(c14[0] == Combination{1, 4});
    CHECK(c14[1] == Combination{2, 8});
    CHECK(c14[2] == Combination{3, 12});
    CHECK(c14[3] == Combination{4, 16});

    const auto c01 = enumerateCombinations({0, 1});
    REQUIRE(c01.size() == 18);
    CHECK(c01.front() == Combination{0, 3});
    CHECK(c01.back() == Combination{0, 20});

    const auto c34 = enumerateCombinations({3, 4});
    REQUIRE(c34.size() == 2);  // 9+12 = 21 exceeds the 20-object cap
    CHECK(c34[0] == Combination{3, 4});
    CHECK(c34[1] == Combination{6, 8});
}

TEST_CASE("97 admissible combinations: min 2, max 18, mean 5.7") {
    std::size_t total = 0, minC = SIZE_MAX, maxC = 0;
    for (const auto& r : canonicalRatios()) {
        const auto combos = enumerateCombinations(r);
        for (const auto& c : combos) {
            CHECK(c.total() >= kMinObjects);
            CHECK(c.total() <= kMaxObjects);
            CHECK(parentRatio(c) == r);
        }
        total += combos.size();
        minC = std::min(minC, combos.size());
        maxC = std::max(maxC, combos.size());
    }
    CHECK(total == 97);
    CHECK(minC == 2);
    CHECK(maxC == 18);
    const double mean = static_cast<double>(total) / kNumRatios;
    CHECK(std::round(mean * 10.0) / 10.0 == doctest::Approx(5.7));
}

TEST_CASE("parentRatio reduces and validates") {
    CHECK(parentRatio({3, 12}) == Ratio{1, 4});
    CHECK(parentRatio({6, 8}) == Ratio{3, 4});
    CHECK(parentRatio({0, 17}) == Ratio{0, 1});
    CHECK_THROWS_AS(parentRatio({1, 1}), std::invalid_argument);   // total 2 < 3
    CHECK_THROWS_AS(parentRatio({7, 13}), std::invalid_argument);  // ratio not in set
    CHECK_THROWS_AS(parentRatio({11, 11}), std::invalid_argument); // total 22 > 20
}

TEST_CASE("labelScene covers the three comparison outcomes") {
    const QuantifierModel m{QuantifierModel::defaultPrototypes()};
    {
        const auto l = labelScene({3, 12}, m);
        CHECK(l.setComp == SetComp::Less);
        CHECK(l.propClass == static_cast<int>(ratioIndex({1, 4})));
        CHECK(l.nTarg == 3);
    }
    {
        const auto l = labelScene({10, 10}, m);
        CHECK(l.setComp == SetComp::Same);
        CHECK(l.propClass == static_cast<int>(ratioIndex({1, 1})));
        CHECK(l.nTarg == 10);
    }
    {
        const auto l = labelScene({20, 0}, m);
        CHECK(l.setComp == SetComp::More);
        CHECK(l.propClass == static_cast<int>(ratioIndex({1, 0})));
        CHECK(l.nTarg == 20);
    }
}

TEST_CASE("quantifier distributions are proper and sharp at the endpoints") {
    QuantifierModel m{QuantifierModel::defaultPrototypes()};
    for (double p : {0.0, 0.1, 0.25, 0.5, 0.77, 1.0}) {
        const auto d = m.distribution(p);
        double sum = 0.0;
        for (double v : d) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(m.distribution(0.0)[0] >= 0.95);                    // `none'
    CHECK(m.distribution(1.0)[kNumQuantifiers - 1] >= 0.95);  // `all'
    CHECK_THROWS_AS(m.distribution(-0.01), std::domain_error);
    CHECK_THROWS_AS(m.distribution(1.01), std::domain_error);
}

TEST_CASE("argmax quantifier index is non-decreasing over the proportion sweep") {
    QuantifierModel m{QuantifierModel::defaultPrototypes()};
    int lastArg = -1;
    for (int i = 0; i <= 1000; ++i) {
        const auto d = m.distribution(i / 1000.0);
        int arg = 0;
        for (int q = 1; q < static_cast<int>(kNumQuantifiers); ++q)
            if (d[q] > d[arg]) arg = q;
        CHECK(arg >= lastArg);
        lastArg = arg;
    }
}

TEST_CASE("argmax at proportion 0.20 is `few'") {
    const QuantifierModel m = calibrateQuantifierModel();
    const auto d = m.distribution(0.20);
    int arg = 0;
    for (int q = 1; q < static_cast<int>(kNumQuantifiers); ++q)
        if (d[q] > d[arg]) arg = q;
    CHECK(std::string(kQuantifierNames[arg]) == "few");
}

TEST_CASE("calibration lands in the target band") {
    const QuantifierModel m = calibrateQuantifierModel();
    const double meanMax = meanMaxQuantifierProbability(m);
    CHECK(meanMax >= 0.50);
    CHECK(meanMax <= 0.56);
    CHECK(m.distribution(0.0)[0] >= 0.95);
    CHECK(m.distribution(1.0)[kNumQuantifiers - 1] >= 0.95);
}

TEST_CASE("mean max-probability decreases strictly with sigma") {
    double last = 2.0;
    for (double sigma = 0.05; sigma <= 0.351; sigma += 0.05) {
        QuantifierModel m{QuantifierModel::defaultPrototypes()};
        m.sigma = sigma;
        const double v = meanMaxQuantifierProbability(m);
        CHECK(v < last);
        last = v;
    }
}

TEST_CASE("quantifier model round-trips through its text format") {
    const QuantifierModel m = calibrateQuantifierModel();
    const std::string path = "qm_roundtrip_test.txt";
    m.save(path);
    const QuantifierModel m2 = QuantifierModel::load(path);
    CHECK(m2.sigma == doctest::Approx(m.sigma).epsilon(1e-15));
    CHECK(m2.endpointSigma == doctest::Approx(m.endpointSigma).epsilon(1e-15));
    CHECK(m2.endpointBand == doctest::Approx(m.endpointBand).epsilon(1e-15));
    for (std::size_t q = 0; q < kNumQuantifiers; ++q)
        CHECK(m2.mu[q] == doctest::Approx(m.mu[q]).epsilon(1e-15));
    std::remove(path.c_str());
}

TEST_CASE("quantifier model loader rejects unknown keys") {
    const std::string path = "qm_badkey_test.txt";
    {
        std::ofstream out(path);
        out << "sigma = 0.1\nbogus_key = 3\n";
    }
    CHECK_THROWS(QuantifierModel::load(path));
    std::remove(path.c_str());
}
