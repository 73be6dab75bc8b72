#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqlab {

// Coprime target:non-target ratio class.
struct Ratio {
    int a = 0;  // target units
    int b = 0;  // non-target units

    double proportion() const { return static_cast<double>(a) / static_cast<double>(a + b); }
    std::string str() const { return std::to_string(a) + ":" + std::to_string(b); }
    bool operator==(const Ratio&) const = default;
};

// Concrete cardinality pair realizing a ratio under the 3..20 total constraint.
struct Combination {
    int nTargets = 0;
    int nNonTargets = 0;

    int total() const { return nTargets + nNonTargets; }
    bool operator==(const Combination&) const = default;
};

enum class SetComp { More = 0, Same = 1, Less = 2 };

inline const char* setCompName(SetComp s) {
    switch (s) {
        case SetComp::More: return "more";
        case SetComp::Same: return "same";
        case SetComp::Less: return "less";
    }
    return "?";
}

constexpr std::size_t kNumRatios = 17;
constexpr std::size_t kNumQuantifiers = 9;
constexpr int kMinObjects = 3;
constexpr int kMaxObjects = 20;

extern const std::array<const char*, kNumQuantifiers> kQuantifierNames;

// The 17 ratio classes in increasing-proportion order: 8 below one half,
// one at one half, 8 above, mirror-symmetric. Enumerating admissible
// combinations over this set yields 97 total (min 2, max 18 per ratio).
const std::vector<Ratio>& canonicalRatios();

// index into canonicalRatios(), or throws for an unknown ratio
std::size_t ratioIndex(const Ratio& r);

// All (k*a, k*b) with 3 <= k*(a+b) <= 20; for the 0:1 / 1:0 endpoints, all
// single-family counts from 3 to 20.
std::vector<Combination> enumerateCombinations(const Ratio& r);

// parent ratio of a combination, or throws if inadmissible
Ratio parentRatio(const Combination& c);

// Gaussian-prototype quantifier semantics over the proportion scale.
struct QuantifierModel {
    std::array<double, kNumQuantifiers> mu;  // strictly increasing, mu[0]=0, mu[8]=1
    double sigma = 0.18;
    double endpointSigma = 0.01;   // sharpness inside the endpoint bands
    double endpointBand = 0.02;    // width of the p<band / p>1-band regions

    // 9-d probability vector at proportion p; continuous on (0,1)
    std::array<double, kNumQuantifiers> distribution(double p) const;

    // plain-text key-value persistence (mu_1..mu_9, sigma, endpoint_sigma,
    // endpoint_band)
    void save(const std::string& path) const;
    static QuantifierModel load(const std::string& path);

    static std::array<double, kNumQuantifiers> defaultPrototypes();
};

class CalibrationError : public std::runtime_error {
public:
    explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

// Searches sigma so that the mean over the 17 canonical ratios of the
// highest quantifier probability lands in [0.50, 0.56]; throws
// CalibrationError with a diagnostic table if no sigma in range works.
QuantifierModel calibrateQuantifierModel();

// mean over the canonical ratios of max_i distribution(p_r)[i]
double meanMaxQuantifierProbability(const QuantifierModel& m);

// The four supervision signals for one scene.
struct TaskLabels {
    SetComp setComp = SetComp::Same;
    std::array<double, kNumQuantifiers> quantDist{};
    int propClass = 0;  // index into canonicalRatios()
    int nTarg = 0;      // 0..20

    bool operator==(const TaskLabels&) const = default;
};

TaskLabels labelScene(const Combination& c, const QuantifierModel& model);

}  // namespace vqlab
