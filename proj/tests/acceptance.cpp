// Acceptance gate: one pass/fail line per criterion, exit 0 only if all pass.
//
// Training-based criteria run at a reduced desk scale (40x40 images, 160
// scenes per ratio, 24-channel encoder) so the whole gate fits a single CPU
// core; the combinatorial and numeric criteria run at full scale.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "vqlab/harness.hpp"

using namespace vqlab;
namespace fs = std::filesystem;

namespace {

// ---- reduced-scale experiment configuration --------------------------------
constexpr int kImageSize = 40;
constexpr int kScenesPerRatio = 400;
constexpr int kUnseenTrainPerRatio = 280;
constexpr int kUnseenEvalPerCombination = 20;
constexpr int kEpochs = 60;
constexpr double kLr = 0.03;
constexpr int kNumSeeds = 3;
constexpr std::uint64_t kBaseSeed = 1;

ModelConfig acceptanceModel() {
    ModelConfig c;
    c.imageSize = kImageSize;
    c.encoderDim = 24;
    c.encoderC1 = 8;
    c.encoderC2 = 16;
    c.trunkW1 = 32;
    c.trunkW2 = 24;
    c.headReduce = 48;
    // per-task update mode (the config switch the library exposes): at this
    // reduced scale it is decisively stronger for the shared models
    c.sequentialUpdates = true;
    return c;
}

int failures = 0;

void report(const std::string& criterion, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << criterion;
    if (!detail.empty()) std::cout << " — " << detail;
    std::cout << std::endl;
    if (!pass) ++failures;
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(prec);
    ss << v;
    return ss.str();
}

// ---- criterion 1: combinatorial exactness ----------------------------------
void criterion1() {
    std::size_t total = 0, minC = SIZE_MAX, maxC = 0;
    bool ok = canonicalRatios().size() == kNumRatios;
    for (const auto& r : canonicalRatios()) {
        const auto combos = enumerateCombinations(r);
        total += combos.size();
        minC = std::min(minC, combos.size());
        maxC = std::max(maxC, combos.size());
    }
    const double mean = static_cast<double>(total) / kNumRatios;
    ok = ok && total == 97 && minC == 2 && maxC == 18 &&
         std::round(mean * 10.0) / 10.0 == 5.7;
    report("criterion 1 (combinatorics: 97 combinations, min 2, max 18, mean 5.7)", ok,
           std::to_string(total) + " combinations, min " + std::to_string(minC) +
               ", max " + std::to_string(maxC) + ", mean " + fmt(mean, 1));
}

// ---- criterion 2: dataset shape at full scale ------------------------------
void criterion2(const QuantifierModel& qm) {
    DatasetConfig dc;  // full-scale defaults
    const auto m = generateStandardManifest(dc, kBaseSeed, qm);

    std::map<Split, int> splits;
    std::map<std::size_t, std::map<Split, int>> perRatio;
    for (const auto& e : m.entries) {
        ++splits[e.split];
        ++perRatio[ratioIndex(e.spec.ratio)][e.split];
    }
    bool ok = m.entries.size() == 17000 && splits[Split::Train] == 11900 &&
              splits[Split::Val] == 1700 && splits[Split::Test] == 3400;
    for (auto& [ri, counts] : perRatio)
        ok = ok && std::abs(counts[Split::Train] - 700) <= 1 &&
             std::abs(counts[Split::Val] - 100) <= 1 &&
             std::abs(counts[Split::Test] - 200) <= 1;

    const auto u = generateUnseenManifest(dc, kBaseSeed, qm);
    std::map<Split, int> uSplits;
    std::set<std::pair<int, int>> trainCombos, heldCombos;
    for (const auto& e : u.entries) {
        ++uSplits[e.split];
        const std::pair<int, int> combo{e.spec.combination.nTargets,
                                        e.spec.combination.nNonTargets};
        (e.split == Split::Train ? trainCombos : heldCombos).insert(combo);
    }
    bool disjoint = true;
    for (const auto& c : heldCombos)
        if (trainCombos.count(c)) disjoint = false;
    const double uTotal = static_cast<double>(u.entries.size());
    ok = ok && std::abs(uTotal - 14000.0) <= 140.0 && heldCombos.size() == 17 && disjoint &&
         std::abs(uSplits[Split::Train] / uTotal - 0.80) < 0.02 &&
         std::abs(uSplits[Split::Val] / uTotal - 0.10) < 0.02 &&
         std::abs(uSplits[Split::Test] / uTotal - 0.10) < 0.02;

    report("criterion 2 (dataset shape: 17,000 = 11,900/1,700/3,400; unseen ~14K)", ok,
           std::to_string(m.entries.size()) + " standard, " +
               std::to_string(u.entries.size()) + " unseen, " +
               std::to_string(heldCombos.size()) + " held-out combinations" +
               (disjoint ? ", train-disjoint" : ", NOT disjoint"));
}

// ---- criterion 3: chance/majority baselines --------------------------------
void criterion3(const QuantifierModel& qm) {
    DatasetConfig dc;
    const auto m = generateStandardManifest(dc, kBaseSeed, qm);

    std::array<int, 3> setCompCounts{};
    std::array<int, kMaxObjects + 1> nTargCounts{};
    int testTotal = 0;
    Rng rng(kBaseSeed + 99);
    int randomPropCorrect = 0;
    for (const auto& e : m.entries) {
        if (e.split != Split::Test) continue;
        ++testTotal;
        ++setCompCounts[static_cast<int>(e.labels.setComp)];
        ++nTargCounts[e.labels.nTarg];
        if (static_cast<int>(rng.below(kNumRatios)) == e.labels.propClass)
            ++randomPropCorrect;
    }
    const double setCompMajority =
        static_cast<double>(*std::max_element(setCompCounts.begin(), setCompCounts.end())) /
        testTotal;
    const double randomProp = static_cast<double>(randomPropCorrect) / testTotal;
    const double nTargMajority =
        static_cast<double>(*std::max_element(nTargCounts.begin(), nTargCounts.end())) /
        testTotal;

    const bool ok = std::abs(setCompMajority - 0.470) <= 0.005 &&
                    std::abs(randomProp - 0.058) <= 0.01;
    report("criterion 3 (baselines: setComp majority 0.470±0.005, random propTarg 0.058±0.01)",
           ok,
           "setComp majority " + fmt(setCompMajority) + ", random propTarg " +
               fmt(randomProp) + ", nTarg majority " + fmt(nTargMajority) + " (reported)");
}

// ---- criterion 4: quantifier calibration -----------------------------------
void criterion4(const QuantifierModel& qm) {
    const double meanMax = meanMaxQuantifierProbability(qm);
    const double none = qm.distribution(0.0)[0];
    const double all = qm.distribution(1.0)[kNumQuantifiers - 1];
    const bool ok = meanMax >= 0.50 && meanMax <= 0.56 && none >= 0.95 && all >= 0.95;
    report("criterion 4 (quantifier calibration: mean max in [0.50,0.56], endpoints >=0.95)",
           ok,
           "mean max " + fmt(meanMax) + ", none(0) " + fmt(none) + ", all(1) " + fmt(all));
}

// ---- criterion 5: finite-difference gradient checks ------------------------
struct FdStats {
    long checked = 0;
    long failed = 0;
};

double relErr(double a, double n) {
    const double denom = std::abs(a) + std::abs(n);
    return denom < 1e-9 ? 0.0 : std::abs(a - n) / denom;
}

void fdSequential(FdStats& stats, std::vector<LayerSpec> layers,
                  std::vector<std::size_t> inShape, std::uint64_t seed) {
    Sequential net("probe", std::move(layers));
    ParamStore params;
    Rng rng(seed);
    net.initParams(params, rng);
    Tensor input(inShape);
    for (auto& v : input.values()) {
        v = rng.uniform(-1.0, 1.0);
        if (std::abs(v) < 0.05) v += (v >= 0 ? 0.05 : -0.05);
    }
    std::vector<double> coeffs(Tensor::numelOf(net.outputShape(inShape)));
    for (auto& c : coeffs) c = rng.uniform(-1.0, 1.0);

    auto value = [&]() {
        const auto acts = net.forward(params, input);
        double s = 0.0;
        for (std::size_t i = 0; i < acts.back().numel(); ++i) s += coeffs[i] * acts.back()[i];
        return s;
    };
    params.zeroGrads();
    const auto acts = net.forward(params, input);
    Tensor outGrad(acts.back().shape());
    for (std::size_t i = 0; i < outGrad.numel(); ++i) outGrad[i] = coeffs[i];
    const Tensor inputGrad = net.backward(params, acts, outGrad);

    const double h = 1e-5;
    auto checkOne = [&](double analytic, double* slot) {
        const double keep = *slot;
        *slot = keep + h;
        const double up = value();
        *slot = keep - h;
        const double down = value();
        *slot = keep;
        ++stats.checked;
        if (relErr(analytic, (up - down) / (2 * h)) >= 1e-4) ++stats.failed;
    };
    for (auto& [path, param] : params.entries())
        for (std::size_t i = 0; i < param.value.numel(); ++i)
            checkOne(param.grad[i], &param.value[i]);
    for (std::size_t i = 0; i < input.numel(); ++i) checkOne(inputGrad[i], &input[i]);
}

void fdMultiTask(FdStats& stats, const std::vector<double>& weights, std::uint64_t seed) {
    ModelConfig c;
    c.imageSize = 20;
    c.encoderDim = 6;
    c.encoderC1 = 2;
    c.encoderC2 = 3;
    c.trunkW1 = 4;
    c.trunkW2 = 4;
    c.headReduce = 5;
    MultiTaskNet net(buildModelSpec(ModelVariant::MultiTaskProp, TaskId::SetComp, c));
    ParamStore params;
    Rng rng(seed);
    net.initParams(params, rng);
    Rng imgRng(seed + 1);
    Tensor images({2, 20, 20, 1});
    for (auto& v : images.values()) v = imgRng.uniform(0.0, 1.0);
    Rng tgtRng(seed + 2);
    std::vector<Tensor> targets;
    for (std::size_t k = 0; k < net.numTasks(); ++k) {
        const std::size_t C = taskClassCount(net.spec().taskOrder[k]);
        Tensor t({2, C});
        for (std::size_t b = 0; b < 2; ++b) t[b * C + tgtRng.below(C)] = 1.0;
        targets.push_back(std::move(t));
    }
    auto lossValue = [&]() {
        return multiTaskLoss(net.forward(params, images), targets, weights).total;
    };
    params.zeroGrads();
    MultiTaskNet::ForwardCache cache;
    const auto out = net.forward(params, images, &cache);
    net.backward(params, cache, multiTaskLoss(out, targets, weights).probGrads);

    Rng pick(seed + 3);
    const double h = 1e-5;
    for (auto& [path, param] : params.entries())
        for (int rep = 0; rep < 3; ++rep) {
            const std::size_t i = pick.below(param.value.numel());
            const double keep = param.value[i];
            param.value[i] = keep + h;
            const double up = lossValue();
            param.value[i] = keep - h;
            const double down = lossValue();
            param.value[i] = keep;
            const double numeric = (up - down) / (2 * h);
            const double denom = std::abs(param.grad[i]) + std::abs(numeric);
            ++stats.checked;
            if (denom > 1e-7 && std::abs(param.grad[i] - numeric) / denom >= 1e-4)
                ++stats.failed;
        }
}

void criterion5() {
    // fixed seeds keep the random probes away from relu kinks and pool ties,
    // where central differences are invalid regardless of gradient correctness
    FdStats stats;
    fdSequential(stats, {LayerSpec::conv3x3("c", 2, 3)}, {2, 4, 4, 2}, 11);
    fdSequential(stats, {LayerSpec::maxpool2(2)}, {2, 4, 4, 3}, 12);
    fdSequential(stats, {LayerSpec::dense("d", 5, 4)}, {3, 5}, 13);
    fdSequential(stats, {LayerSpec::relu()}, {2, 7}, 14);
    fdSequential(stats, {LayerSpec::softmax()}, {3, 6}, 15);
    fdSequential(stats, {LayerSpec::concat()}, {2, 4, 3}, 16);
    fdSequential(stats, {LayerSpec::meanPool()}, {2, 4, 3}, 17);
    fdSequential(stats,
                 {LayerSpec::conv3x3("c1", 1, 3), LayerSpec::relu(), LayerSpec::maxpool2(2),
                  LayerSpec::conv3x3("c2", 3, 4), LayerSpec::relu(), LayerSpec::maxpool2(2),
                  LayerSpec::dense("d", 4, 5), LayerSpec::softmax()},
                 {2, 4, 4, 1}, 18);
    fdMultiTask(stats, {1.0, 1.0, 1.0}, 31);
    fdMultiTask(stats, {1.0, 0.5, 0.25}, 31);

    report("criterion 5 (gradient correctness: 100% finite-difference checks < 1e-4)",
           stats.failed == 0,
           std::to_string(stats.checked) + " checks, " + std::to_string(stats.failed) +
               " failures");
}

// ---- criterion 6: sharing-ledger exact zeros --------------------------------
double maxAbsGrad(const ParamStore& params, const std::string& prefix) {
    double m = 0.0;
    for (const auto& [path, param] : params.entries())
        if (path.rfind(prefix, 0) == 0)
            for (std::size_t i = 0; i < param.grad.numel(); ++i)
                m = std::max(m, std::abs(param.grad[i]));
    return m;
}

void criterion6() {
    ModelConfig c = acceptanceModel();
    c.imageSize = 20;
    MultiTaskNet net(buildModelSpec(ModelVariant::MultiTaskProp, TaskId::SetComp, c));
    ParamStore params;
    Rng rng(201);
    net.initParams(params, rng);
    Tensor images({2, 20, 20, 1});
    for (auto& v : images.values()) v = rng.uniform(0.0, 1.0);
    std::vector<Tensor> targets;
    for (std::size_t k = 0; k < net.numTasks(); ++k) {
        const std::size_t C = taskClassCount(net.spec().taskOrder[k]);
        Tensor t({2, C});
        for (std::size_t b = 0; b < 2; ++b) t[b * C + rng.below(C)] = 1.0;
        targets.push_back(std::move(t));
    }
    auto gradsFor = [&](std::size_t taskIdx) {
        params.zeroGrads();
        MultiTaskNet::ForwardCache cache;
        const auto out = net.forward(params, images, &cache);
        std::vector<double> w(3, 0.0);
        w[taskIdx] = 1.0;
        net.backward(params, cache, multiTaskLoss(out, targets, w).probGrads);
    };
    gradsFor(0);  // setComp
    const double s2FromSetComp = maxAbsGrad(params, "stage2.");
    const double s3FromSetComp = maxAbsGrad(params, "stage3.");
    const double s1FromSetComp = maxAbsGrad(params, "stage1.");
    gradsFor(1);  // vagueQ
    const double s3FromVagueQ = maxAbsGrad(params, "stage3.");
    const double s2FromVagueQ = maxAbsGrad(params, "stage2.");
    gradsFor(2);  // propTarg
    const double s3FromPropTarg = maxAbsGrad(params, "stage3.");

    const bool ok = s2FromSetComp == 0.0 && s3FromSetComp == 0.0 && s3FromVagueQ == 0.0 &&
                    s1FromSetComp > 0.0 && s2FromVagueQ > 0.0 && s3FromPropTarg > 0.0;
    report("criterion 6 (sharing ledger: exact-zero gradients above each loss head)", ok,
           "stage2|setComp " + fmt(s2FromSetComp, 1) + ", stage3|setComp " +
               fmt(s3FromSetComp, 1) + ", stage3|vagueQ " + fmt(s3FromVagueQ, 1));
}

// ---- criteria 7-8: reduced-scale training protocols -------------------------
struct SuiteResults {
    // metric per (variant label, task): median over seeds
    std::map<std::string, std::map<TaskId, double>> median;
};

double medianOf(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

double metricFor(const MetricsBundle& m, TaskId task) {
    if (task == TaskId::VagueQ) return m.vagueQr.value_or(-2.0);
    auto it = m.accuracy.find(task);
    return it == m.accuracy.end() ? -2.0 : it->second;
}

// median metric over the seeds of one (suite, variant[, task]) cell
double cell(const std::string& runRoot, const std::string& suite, ModelVariant variant,
            TaskId oneTask, TaskId metricTask) {
    std::vector<double> vals;
    for (int s = 0; s < kNumSeeds; ++s) {
        TrainConfig tc;
        tc.variant = variant;
        tc.task = oneTask;
        tc.seed = kBaseSeed + static_cast<std::uint64_t>(s);
        const std::string dir = runRoot + "/" + suite + "/" + tc.runLabel();
        const auto m = loadMetricsCsv(dir + "/metrics.csv");
        if (!m) throw HarnessError("missing run " + dir);
        vals.push_back(metricFor(*m, metricTask));
    }
    return medianOf(vals);
}

struct TrainingArtifacts {
    std::string runRoot;
    std::string standardDir;
    std::string unseenDir;
};

TrainingArtifacts prepareTraining(const fs::path& work, const QuantifierModel& qm) {
    TrainingArtifacts art;
    art.standardDir = (work / "data" / "standard").string();
    art.unseenDir = (work / "data" / "unseen").string();
    art.runRoot = (work / "runs").string();
    fs::create_directories(art.runRoot);

    if (!fs::exists(fs::path(art.standardDir) / "manifest.jsonl")) {
        std::cerr << "acceptance: generating standard dataset..." << std::endl;
        DatasetConfig dc;
        dc.scenesPerRatio = kScenesPerRatio;
        dc.imageSize = kImageSize;
        writeDataset(art.standardDir, generateStandardManifest(dc, kBaseSeed, qm), true);
    }
    if (!fs::exists(fs::path(art.unseenDir) / "manifest.jsonl")) {
        std::cerr << "acceptance: generating unseen dataset..." << std::endl;
        DatasetConfig dc;
        dc.scenesPerRatio = kScenesPerRatio;
        dc.imageSize = kImageSize;
        dc.unseenTrainPerRatio = kUnseenTrainPerRatio;
        dc.unseenEvalPerCombination = kUnseenEvalPerCombination;
        writeDataset(art.unseenDir, generateUnseenManifest(dc, kBaseSeed, qm), true);
    }

    const fs::path encPath = fs::path(art.runRoot) / "pretrained_encoder.params";
    if (!fs::exists(encPath)) {
        std::cerr << "acceptance: pretraining the frozen encoder..." << std::endl;
        auto result = pretrainFrozenEncoder(acceptanceModel(), kBaseSeed);
        std::cerr << "acceptance: pretraining reached val accuracy "
                  << fmt(result.valAccuracy) << " after " << result.epochsRun << " epochs"
                  << std::endl;
        result.params.save(encPath.string());
    }
    return art;
}

void runAllSuites(const TrainingArtifacts& art) {
    for (const char* name : {"main", "number", "reversed", "unseen"}) {
        std::cerr << "acceptance: running suite " << name << "..." << std::endl;
        SuiteConfig sc;
        sc.name = name;
        sc.dataDir = art.standardDir;
        sc.unseenDataDir = art.unseenDir;
        sc.runRoot = art.runRoot;
        sc.base.epochs = kEpochs;
        sc.base.lr = kLr;
        sc.base.batchSize = 32;
        sc.base.seed = kBaseSeed;
        sc.base.model = acceptanceModel();
        sc.numSeeds = kNumSeeds;
        sc.jobs = 1;
        runSuite(sc);
    }
}

void criterion7(const TrainingArtifacts& art) {
    const std::string& rr = art.runRoot;
    std::ostringstream detail;
    bool ok = true;

    // (a) end-to-end beats frozen on every task
    for (TaskId t : {TaskId::SetComp, TaskId::VagueQ, TaskId::PropTarg}) {
        const double frozen = cell(rr, "main", ModelVariant::OneTaskFrozen, t, t);
        const double e2e = cell(rr, "main", ModelVariant::OneTaskEnd2End, t, t);
        if (!(e2e > frozen)) ok = false;
        detail << taskName(t) << " frozen " << fmt(frozen) << " vs e2e " << fmt(e2e) << "; ";
    }

    // (b) the shared model lifts propTarg by >= 5 points without hurting the rest
    const double e2eSet = cell(rr, "main", ModelVariant::OneTaskEnd2End, TaskId::SetComp,
                               TaskId::SetComp);
    const double e2eVag = cell(rr, "main", ModelVariant::OneTaskEnd2End, TaskId::VagueQ,
                               TaskId::VagueQ);
    const double e2eProp = cell(rr, "main", ModelVariant::OneTaskEnd2End, TaskId::PropTarg,
                                TaskId::PropTarg);
    const double mtlSet =
        cell(rr, "main", ModelVariant::MultiTaskProp, TaskId::SetComp, TaskId::SetComp);
    const double mtlVag =
        cell(rr, "main", ModelVariant::MultiTaskProp, TaskId::SetComp, TaskId::VagueQ);
    const double mtlProp =
        cell(rr, "main", ModelVariant::MultiTaskProp, TaskId::SetComp, TaskId::PropTarg);
    if (!(mtlProp >= e2eProp + 0.05 && mtlSet >= e2eSet - 0.02 && mtlVag >= e2eVag - 0.02))
        ok = false;
    detail << "mtl propTarg " << fmt(mtlProp) << " vs e2e " << fmt(e2eProp) << "; ";

    // (c) adding nTarg instead of propTarg hurts number estimation
    const double e2eNum =
        cell(rr, "number", ModelVariant::OneTaskEnd2End, TaskId::NTarg, TaskId::NTarg);
    const double mtlNum =
        cell(rr, "number", ModelVariant::MultiTaskNumber, TaskId::SetComp, TaskId::NTarg);
    const double mtlNumSet =
        cell(rr, "number", ModelVariant::MultiTaskNumber, TaskId::SetComp, TaskId::SetComp);
    const double mtlNumVag =
        cell(rr, "number", ModelVariant::MultiTaskNumber, TaskId::SetComp, TaskId::VagueQ);
    const double e2eNumSet =
        cell(rr, "number", ModelVariant::OneTaskEnd2End, TaskId::SetComp, TaskId::SetComp);
    const double e2eNumVag =
        cell(rr, "number", ModelVariant::OneTaskEnd2End, TaskId::VagueQ, TaskId::VagueQ);
    if (!(mtlNum <= e2eNum - 0.10 && mtlNumSet < e2eNumSet && mtlNumVag < e2eNumVag))
        ok = false;
    detail << "nTarg e2e " << fmt(e2eNum) << " vs mtl " << fmt(mtlNum) << "; ";

    // (d) reversing the hierarchy degrades every task
    const double revSet =
        cell(rr, "reversed", ModelVariant::MultiTaskReversed, TaskId::SetComp, TaskId::SetComp);
    const double revVag =
        cell(rr, "reversed", ModelVariant::MultiTaskReversed, TaskId::SetComp, TaskId::VagueQ);
    const double revProp = cell(rr, "reversed", ModelVariant::MultiTaskReversed,
                                TaskId::SetComp, TaskId::PropTarg);
    if (!(revSet < mtlSet && revVag < mtlVag && revProp < mtlProp)) ok = false;
    detail << "reversed " << fmt(revSet) << "/" << fmt(revVag) << "/" << fmt(revProp) << "; ";

    // (e) unseen combinations: only the shared model generalizes
    const double chance = 1.0 / kNumRatios;
    const double unseenOneTask = cell(rr, "unseen", ModelVariant::OneTaskEnd2End,
                                      TaskId::PropTarg, TaskId::PropTarg);
    const double unseenMtl =
        cell(rr, "unseen", ModelVariant::MultiTaskProp, TaskId::SetComp, TaskId::PropTarg);
    if (!(unseenOneTask <= 2.0 * chance && unseenMtl >= 3.0 * chance)) ok = false;
    detail << "unseen one-task " << fmt(unseenOneTask) << " vs mtl " << fmt(unseenMtl);

    report("criterion 7 (direction of effect across the five training comparisons)", ok,
           detail.str());
}

void criterion8(const TrainingArtifacts& art) {
    // pick the multi-task-prop seed with the median propTarg accuracy
    std::vector<std::pair<double, int>> bySeed;
    for (int s = 0; s < kNumSeeds; ++s) {
        TrainConfig tc;
        tc.variant = ModelVariant::MultiTaskProp;
        tc.seed = kBaseSeed + static_cast<std::uint64_t>(s);
        const auto m = loadMetricsCsv(art.runRoot + "/main/" + tc.runLabel() + "/metrics.csv");
        bySeed.emplace_back(metricFor(*m, TaskId::PropTarg), s);
    }
    std::sort(bySeed.begin(), bySeed.end());
    const int seedOffset = bySeed[bySeed.size() / 2].second;

    TrainConfig tc;
    tc.variant = ModelVariant::MultiTaskProp;
    tc.seed = kBaseSeed + static_cast<std::uint64_t>(seedOffset);
    const fs::path runDir = fs::path(art.runRoot) / "main" / tc.runLabel();

    std::string archive;
    for (const auto& entry : fs::directory_iterator(runDir)) {
        const std::string n = entry.path().filename().string();
        if (n.rfind("epoch", 0) == 0 && n.size() > 7 &&
            n.compare(n.size() - 7, 7, ".params") == 0)
            if (n > archive) archive = n;
    }
    const ParamStore params = ParamStore::load((runDir / archive).string());
    const LoadedDataset data = loadDataset(art.standardDir);
    MultiTaskNet net(
        buildModelSpec(ModelVariant::MultiTaskProp, TaskId::SetComp, acceptanceModel()));

    const MetricsBundle m = evaluate(net, params, data, Split::Test);
    std::vector<std::string> labels;
    for (const auto& r : canonicalRatios()) labels.push_back(r.str());
    const double adjacency = exportConfusionHeatmap(
        m.confusion.at(TaskId::PropTarg), labels,
        (runDir / "confusion_propTarg.csv").string(),
        (runDir / "confusion_propTarg.pgm").string());

    const PcaExport pca =
        exportPenultimatePCA(net, params, data, Split::Test, (runDir / "pca.csv").string());

    const bool ok =
        adjacency >= 0.60 && pca.meanWithinDistance < pca.meanBetweenDistance;
    report("criterion 8 (error structure: >=60% adjacent errors; PCA within < between)", ok,
           "adjacency mass " + fmt(adjacency) + ", within " + fmt(pca.meanWithinDistance) +
               " vs between " + fmt(pca.meanBetweenDistance));
}

// ---- criterion 9: byte-identical reproducibility ----------------------------
void criterion9(const TrainingArtifacts& art, const fs::path& work) {
    const LoadedDataset data = loadDataset(art.standardDir);
    auto makeConfig = [&](const std::string& dir) {
        TrainConfig tc;
        tc.epochs = 2;
        tc.lr = kLr;
        tc.batchSize = 32;
        tc.seed = 12345;
        tc.datasetDir = art.standardDir;
        tc.variant = ModelVariant::MultiTaskProp;
        tc.model = acceptanceModel();
        tc.runDir = dir;
        tc.force = true;
        return tc;
    };
    const std::string runA = (work / "repro" / "a").string();
    const std::string runB = (work / "repro" / "b").string();
    train(makeConfig(runA), data, nullptr);
    train(makeConfig(runB), data, nullptr);

    auto readAll = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const bool metricsEqual =
        readAll(fs::path(runA) / "metrics.csv") == readAll(fs::path(runB) / "metrics.csv");
    const bool logsEqual =
        readAll(fs::path(runA) / "log.csv") == readAll(fs::path(runB) / "log.csv");
    report("criterion 9 (reproducibility: identical config+seed -> identical metrics.csv)",
           metricsEqual && logsEqual,
           std::string("metrics ") + (metricsEqual ? "identical" : "DIFFER") + ", logs " +
               (logsEqual ? "identical" : "DIFFER"));
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_work");
    fs::create_directories(work);

    try {
        const QuantifierModel qm = calibrateQuantifierModel();

        criterion1();
        criterion2(qm);
        criterion3(qm);
        criterion4(qm);
        criterion5();
        criterion6();

        const TrainingArtifacts art = prepareTraining(work, qm);
        runAllSuites(art);
        criterion7(art);
        criterion8(art);
        criterion9(art, work);
    } catch (const std::exception& e) {
        std::cout << "[FAIL] acceptance aborted — " << e.what() << std::endl;
        return 1;
    }

    std::cout << (failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << " ("
              << (9 - failures) << "/9 criteria)" << std::endl;
    return failures == 0 ? 0 : 1;
}
