#include "vqlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "vqlab/rng.hpp"

namespace vqlab {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

std::vector<std::uint8_t> readPgmRaw(const std::string& path, int expectSize) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingDataError("cannot read " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 255 || w != expectSize || h != expectSize)
        throw HarnessError("unexpected PGM header in " + path);
    in.get();
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw HarnessError("truncated PGM " + path);
    return bytes;
}

std::size_t argmaxRow(const Tensor& t, std::size_t row) {
    const std::size_t C = t.lastDim();
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c)
        if (t[row * C + c] > t[row * C + best]) best = c;
    return best;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int classLabelOf(const DatasetEntry& e, TaskId task) {
    switch (task) {
        case TaskId::SetComp: return static_cast<int>(e.labels.setComp);
        case TaskId::PropTarg: return e.labels.propClass;
        case TaskId::NTarg: return e.labels.nTarg;
        case TaskId::VagueQ: break;
    }
    throw HarnessError("vagueQ has no class label");
}

}  // namespace

Tensor LoadedDataset::batchImages(const std::vector<std::size_t>& idx, std::size_t lo,
                                  std::size_t hi) const {
    const std::size_t H = static_cast<std::size_t>(imageSize);
    Tensor t({hi - lo, H, H, 1});
    for (std::size_t b = 0; b < hi - lo; ++b) {
        const auto& img = images[idx[lo + b]];
        double* dst = t.data() + b * H * H;
        // centered so the uniform background maps to zero; a small sprite is
        // then the only signal instead of a perturbation on a large common mode
        for (std::size_t i = 0; i < img.size(); ++i) dst[i] = img[i] / 255.0 - 0.5;
    }
    return t;
}

std::vector<const DatasetEntry*> LoadedDataset::batchEntries(
    const std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi) const {
    std::vector<const DatasetEntry*> out;
    out.reserve(hi - lo);
    for (std::size_t b = lo; b < hi; ++b) out.push_back(&manifest.entries[idx[b]]);
    return out;
}

LoadedDataset loadDataset(const std::string& dir) {
    if (!fs::exists(fs::path(dir) / "dataset_info.txt"))
        throw MissingDataError("no dataset at " + dir);
    LoadedDataset data;
    data.manifest = loadManifest(dir);
    data.imageSize = data.manifest.config.imageSize;
    data.images.reserve(data.manifest.entries.size());
    for (std::size_t i = 0; i < data.manifest.entries.size(); ++i) {
        const auto& e = data.manifest.entries[i];
        data.images.push_back(
            readPgmRaw((fs::path(dir) / e.imagePath()).string(), data.imageSize));
        data.splitIdx[static_cast<int>(e.split)].push_back(i);
    }
    return data;
}

Tensor computeFrozenFeatures(const LoadedDataset& data, const ParamStore& encoderParams,
                             const ModelConfig& config, std::size_t batchSize) {
    ModelConfig cfg = config;
    cfg.imageSize = data.imageSize;
    const Sequential encoder = buildEncoder(cfg.imageSize, cfg);
    const std::size_t N = data.manifest.entries.size();
    Tensor features({N, cfg.encoderDim});
    std::vector<std::size_t> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t lo = 0; lo < N; lo += batchSize) {
        const std::size_t hi = std::min(lo + batchSize, N);
        const Tensor batch = data.batchImages(idx, lo, hi);
        const Tensor feats = extractFrozenFeatures(encoder, encoderParams, batch);
        std::copy(feats.data(), feats.data() + feats.numel(),
                  features.data() + lo * cfg.encoderDim);
    }
    return features;
}

std::string TrainConfig::describe() const {
    const bool oneTask = variant == ModelVariant::OneTaskFrozen ||
                         variant == ModelVariant::OneTaskEnd2End;
    std::ostringstream ss;
    ss << "variant = " << variantName(variant) << "\n";
    if (oneTask) ss << "task = " << taskName(task) << "\n";
    ss << "epochs = " << epochs << "\n";
    ss << "lr = " << fmt(lr) << "\n";
    ss << "batch_size = " << batchSize << "\n";
    ss << "seed = " << seed << "\n";
    ss << "dataset_dir = " << datasetDir << "\n";
    ss << "encoder_dim = " << model.encoderDim << "\n";
    ss << "encoder_c1 = " << model.encoderC1 << "\n";
    ss << "encoder_c2 = " << model.encoderC2 << "\n";
    ss << "trunk_w1 = " << model.trunkW1 << "\n";
    ss << "trunk_w2 = " << model.trunkW2 << "\n";
    ss << "head_reduce = " << model.headReduce << "\n";
    // the update mode only matters with more than one task; record 0 for
    // one-task variants so identical runs hash identically across suites
    ss << "sequential_updates = " << (model.sequentialUpdates && !oneTask ? 1 : 0)
       << "\n";
    if (!encoderParamsPath.empty()) ss << "encoder_params = " << encoderParamsPath << "\n";
    return ss.str();
}

std::string TrainConfig::hash() const {
    const std::string s = describe();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

std::string TrainConfig::runLabel() const {
    std::string label = variantName(variant);
    if (variant == ModelVariant::OneTaskFrozen || variant == ModelVariant::OneTaskEnd2End)
        label += std::string("-") + taskName(task);
    label += "-s" + std::to_string(seed);
    return label;
}

namespace {

struct TaskEval {
    // per-task forward outputs over a whole split
    std::vector<Tensor> outputs;  // one [N,C] tensor per task
};

TaskEval forwardSplit(const MultiTaskNet& net, const ParamStore& params,
                      const LoadedDataset& data, const std::vector<std::size_t>& idx,
                      const Tensor* frozenFeatures, std::size_t batchSize,
                      std::vector<std::vector<std::vector<double>>>* penultimate = nullptr,
                      std::size_t penultimateTask = 0) {
    TaskEval eval;
    const std::size_t K = net.numTasks();
    for (std::size_t k = 0; k < K; ++k)
        eval.outputs.emplace_back(
            std::vector<std::size_t>{idx.size(), taskClassCount(net.spec().taskOrder[k])});
    for (std::size_t lo = 0; lo < idx.size(); lo += batchSize) {
        const std::size_t hi = std::min(lo + batchSize, idx.size());
        Tensor input;
        if (net.usesEncoder()) {
            input = data.batchImages(idx, lo, hi);
        } else {
            const std::size_t D = frozenFeatures->lastDim();
            input = Tensor({hi - lo, D});
            for (std::size_t b = 0; b < hi - lo; ++b)
                std::copy(frozenFeatures->data() + idx[lo + b] * D,
                          frozenFeatures->data() + (idx[lo + b] + 1) * D,
                          input.data() + b * D);
        }
        MultiTaskNet::ForwardCache cache;
        const auto outputs = net.forward(params, input, &cache);
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t C = outputs[k].lastDim();
            std::copy(outputs[k].data(), outputs[k].data() + outputs[k].numel(),
                      eval.outputs[k].data() + lo * C);
        }
        if (penultimate) {
            const auto& acts = cache.headActs[penultimateTask];
            const Tensor& pen = acts[acts.size() - 3];
            const std::size_t D = pen.lastDim();
            for (std::size_t b = 0; b < hi - lo; ++b)
                penultimate->push_back({std::vector<double>(pen.data() + b * D,
                                                            pen.data() + (b + 1) * D)});
        }
    }
    return eval;
}

double splitLoss(const MultiTaskNet& net, const ParamStore& params, const LoadedDataset& data,
                 const std::vector<std::size_t>& idx, const Tensor* frozenFeatures,
                 std::size_t batchSize, std::vector<double>* perTask) {
    const auto eval = forwardSplit(net, params, data, idx, frozenFeatures, batchSize);
    std::vector<const DatasetEntry*> entries = data.batchEntries(idx, 0, idx.size());
    double total = 0.0;
    if (perTask) perTask->clear();
    for (std::size_t k = 0; k < net.numTasks(); ++k) {
        const Tensor targets = makeTargets(entries, net.spec().taskOrder[k]);
        const double ce = crossEntropy(eval.outputs[k], targets);
        total += ce;
        if (perTask) perTask->push_back(ce);
    }
    return total;
}

}  // namespace

MetricsBundle evaluate(const MultiTaskNet& net, const ParamStore& params,
                       const LoadedDataset& data, Split split,
                       const Tensor* frozenFeatures) {
    if (!net.usesEncoder() && !frozenFeatures)
        throw HarnessError("frozen model evaluation needs precomputed features");
    const auto& idx = data.indices(split);
    if (idx.empty()) throw HarnessError("empty split");
    const auto eval = forwardSplit(net, params, data, idx, frozenFeatures, 64);

    MetricsBundle metrics;
    for (std::size_t k = 0; k < net.numTasks(); ++k) {
        const TaskId task = net.spec().taskOrder[k];
        if (task == TaskId::VagueQ) {
            double sum = 0.0;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const DatasetEntry& e = data.manifest.entries[idx[i]];
                std::vector<double> pred(eval.outputs[k].data() + i * kNumQuantifiers,
                                         eval.outputs[k].data() + (i + 1) * kNumQuantifiers);
                std::vector<double> truth(e.labels.quantDist.begin(),
                                          e.labels.quantDist.end());
                sum += pearson(pred, truth);
            }
            metrics.vagueQr = sum / static_cast<double>(idx.size());
        } else {
            const std::size_t C = taskClassCount(task);
            std::vector<std::vector<int>> confusion(C, std::vector<int>(C, 0));
            std::size_t correct = 0;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const int truth = classLabelOf(data.manifest.entries[idx[i]], task);
                const std::size_t pred = argmaxRow(eval.outputs[k], i);
                ++confusion[static_cast<std::size_t>(truth)][pred];
                if (pred == static_cast<std::size_t>(truth)) ++correct;
            }
            metrics.accuracy[task] = static_cast<double>(correct) / static_cast<double>(idx.size());
            metrics.confusion[task] = std::move(confusion);
        }
    }

    // baselines recomputed from split statistics
    {
        std::array<int, 3> setCompCounts{};
        std::array<int, kMaxObjects + 1> nTargCounts{};
        for (auto i : idx) {
            const auto& e = data.manifest.entries[i];
            ++setCompCounts[static_cast<std::size_t>(e.labels.setComp)];
            ++nTargCounts[static_cast<std::size_t>(e.labels.nTarg)];
        }
        metrics.baselines["setComp_majority"] =
            static_cast<double>(*std::max_element(setCompCounts.begin(), setCompCounts.end())) /
            static_cast<double>(idx.size());
        metrics.baselines["propTarg_chance"] = 1.0 / static_cast<double>(kNumRatios);
        metrics.baselines["nTarg_majority"] =
            static_cast<double>(*std::max_element(nTargCounts.begin(), nTargCounts.end())) /
            static_cast<double>(idx.size());

        // vagueQ baseline: correlation of each datapoint with the train-set
        // mean distribution
        std::array<double, kNumQuantifiers> trainMean{};
        const auto& trainIdx = data.indices(Split::Train);
        for (auto i : trainIdx)
            for (std::size_t q = 0; q < kNumQuantifiers; ++q)
                trainMean[q] += data.manifest.entries[i].labels.quantDist[q];
        for (auto& v : trainMean) v /= static_cast<double>(trainIdx.size());
        const std::vector<double> meanVec(trainMean.begin(), trainMean.end());
        double sum = 0.0;
        for (auto i : idx) {
            const auto& qd = data.manifest.entries[i].labels.quantDist;
            sum += pearson(meanVec, std::vector<double>(qd.begin(), qd.end()));
        }
        metrics.baselines["vagueQ_meanDist"] = sum / static_cast<double>(idx.size());
    }
    return metrics;
}

namespace {

void writeMetricsCsv(const std::string& path, const MetricsBundle& m, int selectedEpoch,
                     const std::string& configHash) {
    std::ofstream out(path);
    if (!out) throw HarnessError("cannot write " + path);
    out << "metric,value\n";
    for (const auto& [task, acc] : m.accuracy)
        out << "acc_" << taskName(task) << "," << fmt(acc) << "\n";
    if (m.vagueQr) out << "r_vagueQ," << fmt(*m.vagueQr) << "\n";
    for (const auto& [name, v] : m.baselines) out << "baseline_" << name << "," << fmt(v) << "\n";
    out << "selected_epoch," << selectedEpoch << "\n";
    out << "config_hash," << configHash << "\n";
}

}  // namespace

std::optional<MetricsBundle> loadMetricsCsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    MetricsBundle m;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        const std::string key = line.substr(0, comma);
        const std::string value = line.substr(comma + 1);
        if (key.rfind("acc_", 0) == 0)
            m.accuracy[taskFromName(key.substr(4))] = std::stod(value);
        else if (key == "r_vagueQ")
            m.vagueQr = std::stod(value);
        else if (key.rfind("baseline_", 0) == 0)
            m.baselines[key.substr(9)] = std::stod(value);
    }
    return m;
}

ExperimentRecord train(const TrainConfig& config, const LoadedDataset& data,
                       const ParamStore* pretrainedEncoder,
                       const Tensor* sharedFrozenFeatures) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path runDir(config.runDir);
    if (fs::exists(runDir / "metrics.csv") && !config.force)
        throw HarnessError("run directory " + config.runDir +
                           " already has results (use force to overwrite)");
    fs::create_directories(runDir);
    {
        std::ofstream cfg(runDir / "config.txt");
        cfg << config.describe();
    }

    ModelConfig modelCfg = config.model;
    modelCfg.imageSize = data.imageSize;
    ModelSpec spec = buildModelSpec(config.variant, config.task, modelCfg);
    MultiTaskNet net(spec);

    Rng rng(config.seed);
    ParamStore params;
    net.initParams(params, rng);

    Tensor frozenFeatures;
    const Tensor* features = nullptr;
    const bool frozen = !net.usesEncoder();
    if (frozen) {
        if (sharedFrozenFeatures) {
            features = sharedFrozenFeatures;
        } else if (pretrainedEncoder) {
            frozenFeatures = computeFrozenFeatures(data, *pretrainedEncoder, modelCfg);
            features = &frozenFeatures;
        } else {
            throw HarnessError("frozen variant needs pretrained encoder parameters");
        }
    }

    const std::size_t K = net.numTasks();
    const std::vector<double> weights(K, 1.0);
    std::vector<std::size_t> order = data.indices(Split::Train);
    const auto& valIdx = data.indices(Split::Val);
    if (order.empty() || valIdx.empty()) throw HarnessError("dataset lacks train/val scenes");

    std::ofstream log(runDir / "log.csv");
    log << "epoch";
    for (std::size_t k = 0; k < K; ++k) log << ",train_" << taskName(spec.taskOrder[k]);
    for (std::size_t k = 0; k < K; ++k) log << ",val_" << taskName(spec.taskOrder[k]);
    log << ",val_total\n";
    log.flush();

    ExperimentRecord record;
    record.configHash = config.hash();
    ParamStore bestParams = params;
    double bestValLoss = HUGE_VAL;

    auto archivePath = [&](int epoch) {
        std::ostringstream ss;
        ss << "epoch" << std::setw(3) << std::setfill('0') << epoch << ".params";
        return (runDir / ss.str()).string();
    };

    std::string bestArchive;
    try {
        for (int epoch = 0; epoch < config.epochs; ++epoch) {
            rng.shuffle(order);
            std::vector<double> trainLossSum(K, 0.0);
            std::size_t nBatches = 0;
            for (std::size_t lo = 0; lo < order.size(); lo += config.batchSize) {
                const std::size_t hi = std::min(lo + config.batchSize, order.size());
                Tensor input;
                if (frozen) {
                    const std::size_t D = features->lastDim();
                    input = Tensor({hi - lo, D});
                    for (std::size_t b = 0; b < hi - lo; ++b)
                        std::copy(features->data() + order[lo + b] * D,
                                  features->data() + (order[lo + b] + 1) * D,
                                  input.data() + b * D);
                } else {
                    input = data.batchImages(order, lo, hi);
                }
                const auto entries = data.batchEntries(order, lo, hi);
                std::vector<Tensor> targets;
                for (std::size_t k = 0; k < K; ++k)
                    targets.push_back(makeTargets(entries, spec.taskOrder[k]));

                if (modelCfg.sequentialUpdates && K > 1) {
                    // one backpropagation pass and update per task, in order
                    for (std::size_t k = 0; k < K; ++k) {
                        MultiTaskNet::ForwardCache cache;
                        const auto outputs = net.forward(params, input, &cache);
                        std::vector<double> w(K, 0.0);
                        w[k] = 1.0;
                        const auto loss = multiTaskLoss(outputs, targets, w);
                        trainLossSum[k] += loss.perTask[k];
                        net.backward(params, cache, loss.probGrads);
                        params.sgdStep(config.lr);
                    }
                } else {
                    MultiTaskNet::ForwardCache cache;
                    const auto outputs = net.forward(params, input, &cache);
                    const auto loss = multiTaskLoss(outputs, targets, weights);
                    for (std::size_t k = 0; k < K; ++k) trainLossSum[k] += loss.perTask[k];
                    net.backward(params, cache, loss.probGrads);
                    params.sgdStep(config.lr);
                }
                ++nBatches;
            }

            EpochLog el;
            for (std::size_t k = 0; k < K; ++k)
                el.trainLoss.push_back(trainLossSum[k] / static_cast<double>(nBatches));
            el.totalValLoss = splitLoss(net, params, data, valIdx, features, 64, &el.valLoss);
            record.epochs.push_back(el);

            for (double v : el.trainLoss)
                if (!std::isfinite(v)) throw DivergenceError("train loss");
            if (!std::isfinite(el.totalValLoss)) throw DivergenceError("validation loss");

            log << epoch;
            for (double v : el.trainLoss) log << "," << fmt(v);
            for (double v : el.valLoss) log << "," << fmt(v);
            log << "," << fmt(el.totalValLoss) << "\n";

            if (std::getenv("VQLAB_EPOCH_EVAL")) {
                const MetricsBundle m = evaluate(net, params, data, Split::Test, features);
                std::fprintf(stderr, "epoch %d:", epoch);
                for (const auto& [t, acc] : m.accuracy)
                    std::fprintf(stderr, " %s %.4f", taskName(t), acc);
                if (m.vagueQr) std::fprintf(stderr, " vagueQr %.4f", *m.vagueQr);
                std::fprintf(stderr, "\n");
            }
            log.flush();

            if (el.totalValLoss < bestValLoss) {
                bestValLoss = el.totalValLoss;
                bestParams.entries().clear();
                bestParams = params;
                record.selectedEpoch = epoch;
            }
        }
    } catch (const DivergenceError& e) {
        bestParams.save((runDir / "last_good.params").string());
        throw TrainingDivergedError(std::string("training diverged: ") + e.what() +
                                    " (last good weights archived)");
    }

    bestArchive = archivePath(record.selectedEpoch);
    bestParams.save(bestArchive);

    record.testMetrics = evaluate(net, bestParams, data, Split::Test, features);
    writeMetricsCsv((runDir / "metrics.csv").string(), record.testMetrics,
                    record.selectedEpoch, record.configHash);

    // standard exports where the model supports them
    for (std::size_t k = 0; k < K; ++k) {
        const TaskId task = spec.taskOrder[k];
        if (task == TaskId::VagueQ) {
            exportQuantifierCurves(net, bestParams, data, Split::Test,
                                   (runDir / "quantcurves.csv").string(), features);
        } else {
            std::vector<std::string> labels;
            if (task == TaskId::PropTarg) {
                for (const auto& r : canonicalRatios())
                    labels.push_back(std::to_string(r.a) + std::to_string(r.b));
            } else if (task == TaskId::SetComp) {
                labels = {"more", "same", "less"};
            } else {
                for (int n = 0; n <= kMaxObjects; ++n) labels.push_back(std::to_string(n));
            }
            const std::string base = std::string("confusion_") + taskName(task);
            exportConfusionHeatmap(record.testMetrics.confusion.at(task), labels,
                                   (runDir / (base + ".csv")).string(),
                                   (runDir / (base + ".pgm")).string());
        }
        if (task == TaskId::PropTarg)
            exportPenultimatePCA(net, bestParams, data, Split::Test,
                                 (runDir / "pca.csv").string(), features);
    }

    record.wallSeconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream timing(runDir / "timing.txt");
    timing << "wall_seconds = " << record.wallSeconds << "\n";
    return record;
}

ExperimentRecord train(const TrainConfig& config) {
    const LoadedDataset data = loadDataset(config.datasetDir);
    if (config.variant == ModelVariant::OneTaskFrozen) {
        if (config.encoderParamsPath.empty())
            throw HarnessError("one-task-frozen requires encoder parameters");
        const ParamStore encoder = ParamStore::load(config.encoderParamsPath);
        return train(config, data, &encoder);
    }
    return train(config, data, nullptr);
}

double exportConfusionHeatmap(const std::vector<std::vector<int>>& confusion,
                              const std::vector<std::string>& classLabels,
                              const std::string& csvPath, const std::string& pgmPath) {
    const std::size_t C = confusion.size();
    if (classLabels.size() != C) throw HarnessError("confusion label count mismatch");

    std::ofstream csv(csvPath);
    if (!csv) throw HarnessError("cannot write " + csvPath);
    csv << "true\\pred";
    for (const auto& l : classLabels) csv << "," << l;
    csv << "\n";
    for (std::size_t i = 0; i < C; ++i) {
        csv << classLabels[i];
        for (std::size_t j = 0; j < C; ++j) csv << "," << confusion[i][j];
        csv << "\n";
    }

    std::vector<double> pixels(C * C, 0.0);
    for (std::size_t i = 0; i < C; ++i) {
        long rowSum = 0;
        for (std::size_t j = 0; j < C; ++j) rowSum += confusion[i][j];
        for (std::size_t j = 0; j < C; ++j)
            pixels[i * C + j] = rowSum ? confusion[i][j] / static_cast<double>(rowSum) : 0.0;
    }
    writePgm(pgmPath, static_cast<int>(C), static_cast<int>(C), pixels);

    long errors = 0, adjacent = 0;
    for (std::size_t i = 0; i < C; ++i)
        for (std::size_t j = 0; j < C; ++j) {
            if (i == j) continue;
            errors += confusion[i][j];
            if (i + 1 == j || j + 1 == i) adjacent += confusion[i][j];
        }
    const double adjacencyMass =
        errors ? static_cast<double>(adjacent) / static_cast<double>(errors) : 1.0;
    std::ofstream stat(csvPath + ".stats");
    stat << "errors = " << errors << "\nadjacency_mass = " << fmt(adjacencyMass) << "\n";
    return adjacencyMass;
}

PcaExport exportPenultimatePCA(const MultiTaskNet& net, const ParamStore& params,
                               const LoadedDataset& data, Split split,
                               const std::string& csvPath, const Tensor* frozenFeatures) {
    std::size_t taskIdx = net.numTasks();
    for (std::size_t k = 0; k < net.numTasks(); ++k)
        if (net.spec().taskOrder[k] == TaskId::PropTarg) taskIdx = k;
    if (taskIdx == net.numTasks())
        throw HarnessError("model has no propTarg head; PCA export unavailable");

    const auto& fullIdx = data.indices(split);
    // subsample deterministically; silhouette is quadratic in point count
    std::vector<std::size_t> idx;
    const std::size_t stride = fullIdx.size() > 2000 ? fullIdx.size() / 2000 + 1 : 1;
    for (std::size_t i = 0; i < fullIdx.size(); i += stride) idx.push_back(fullIdx[i]);

    std::vector<std::vector<std::vector<double>>> penRows;
    forwardSplit(net, params, data, idx, frozenFeatures, 64, &penRows, taskIdx);
    std::vector<std::vector<double>> points;
    points.reserve(idx.size());
    for (auto& row : penRows) points.push_back(std::move(row[0]));

    const Pca2Result pca = pca2(points);

    std::vector<int> labels(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        labels[i] = data.manifest.entries[idx[i]].labels.propClass;

    std::ofstream csv(csvPath);
    if (!csv) throw HarnessError("cannot write " + csvPath);
    csv << "sceneId,ratio,proportion,x,y\n";
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& e = data.manifest.entries[idx[i]];
        csv << e.sceneId << "," << e.spec.ratio.str() << ","
            << fmt(e.spec.ratio.proportion()) << "," << fmt(pca.projections[i][0]) << ","
            << fmt(pca.projections[i][1]) << "\n";
    }

    std::vector<std::vector<double>> coords;
    coords.reserve(idx.size());
    for (const auto& p : pca.projections) coords.push_back({p[0], p[1]});

    PcaExport result;
    result.explained[0] = pca.explained[0];
    result.explained[1] = pca.explained[1];
    result.silhouette = meanSilhouette(coords, labels);

    double within = 0.0, between = 0.0;
    std::size_t nWithin = 0, nBetween = 0;
    for (std::size_t i = 0; i < coords.size(); ++i)
        for (std::size_t j = i + 1; j < coords.size(); ++j) {
            const double dx = coords[i][0] - coords[j][0];
            const double dy = coords[i][1] - coords[j][1];
            const double d = std::sqrt(dx * dx + dy * dy);
            if (labels[i] == labels[j]) {
                within += d;
                ++nWithin;
            } else {
                between += d;
                ++nBetween;
            }
        }
    result.meanWithinDistance = nWithin ? within / static_cast<double>(nWithin) : 0.0;
    result.meanBetweenDistance = nBetween ? between / static_cast<double>(nBetween) : 0.0;

    std::ofstream stat(csvPath + ".stats");
    stat << "silhouette = " << fmt(result.silhouette) << "\n";
    stat << "mean_within_distance = " << fmt(result.meanWithinDistance) << "\n";
    stat << "mean_between_distance = " << fmt(result.meanBetweenDistance) << "\n";
    stat << "explained_1 = " << fmt(result.explained[0]) << "\n";
    stat << "explained_2 = " << fmt(result.explained[1]) << "\n";
    return result;
}

double exportQuantifierCurves(const MultiTaskNet& net, const ParamStore& params,
                              const LoadedDataset& data, Split split,
                              const std::string& csvPath, const Tensor* frozenFeatures) {
    std::size_t taskIdx = net.numTasks();
    for (std::size_t k = 0; k < net.numTasks(); ++k)
        if (net.spec().taskOrder[k] == TaskId::VagueQ) taskIdx = k;
    if (taskIdx == net.numTasks())
        throw HarnessError("model has no vagueQ head; curve export unavailable");

    const auto& idx = data.indices(split);
    const auto eval = forwardSplit(net, params, data, idx, frozenFeatures, 64);

    std::vector<std::array<double, kNumQuantifiers>> predMean(kNumRatios);
    std::vector<std::array<double, kNumQuantifiers>> truthMean(kNumRatios);
    std::vector<int> counts(kNumRatios, 0);
    for (auto& a : predMean) a.fill(0.0);
    for (auto& a : truthMean) a.fill(0.0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& e = data.manifest.entries[idx[i]];
        const std::size_t r = static_cast<std::size_t>(e.labels.propClass);
        ++counts[r];
        for (std::size_t q = 0; q < kNumQuantifiers; ++q) {
            predMean[r][q] += eval.outputs[taskIdx][i * kNumQuantifiers + q];
            truthMean[r][q] += e.labels.quantDist[q];
        }
    }
    for (std::size_t r = 0; r < kNumRatios; ++r)
        if (counts[r])
            for (std::size_t q = 0; q < kNumQuantifiers; ++q) {
                predMean[r][q] /= counts[r];
                truthMean[r][q] /= counts[r];
            }

    std::ofstream csv(csvPath);
    if (!csv) throw HarnessError("cannot write " + csvPath);
    csv << "quantifier,ratio,proportion,predicted,truth\n";
    double gap = 0.0;
    std::size_t nGap = 0;
    const auto& ratios = canonicalRatios();
    for (std::size_t q = 0; q < kNumQuantifiers; ++q)
        for (std::size_t r = 0; r < kNumRatios; ++r) {
            if (!counts[r]) continue;
            csv << kQuantifierNames[q] << "," << ratios[r].str() << ","
                << fmt(ratios[r].proportion()) << "," << fmt(predMean[r][q]) << ","
                << fmt(truthMean[r][q]) << "\n";
            gap += std::abs(predMean[r][q] - truthMean[r][q]);
            ++nGap;
        }
    const double meanGap = nGap ? gap / static_cast<double>(nGap) : 0.0;
    std::ofstream stat(csvPath + ".stats");
    stat << "mean_abs_gap = " << fmt(meanGap) << "\n";
    return meanGap;
}

namespace {

struct SuiteRun {
    TrainConfig config;
    bool unseenData = false;
};

// The suites overlap: `number` reuses the main suite's one-task rows and
// `reversed` reuses its multi-task-prop row. When a sibling suite has already
// completed a run with a byte-identical configuration, link it instead of
// retraining.
bool linkSiblingRun(const std::string& runRoot, const std::string& suite,
                    const TrainConfig& config) {
    const fs::path runDir(config.runDir);
    for (const char* other : {"main", "number", "reversed", "unseen"}) {
        if (suite == other) continue;
        const fs::path cand = fs::path(runRoot) / other / runDir.filename();
        if (!fs::exists(cand / "metrics.csv")) continue;
        std::ifstream in(cand / "config.txt", std::ios::binary);
        const std::string recorded(std::istreambuf_iterator<char>(in), {});
        if (recorded != config.describe()) continue;
        std::error_code ec;
        fs::remove_all(runDir, ec);
        fs::create_directory_symlink(fs::absolute(cand), runDir, ec);
        if (!ec) return true;
    }
    return false;
}

double cellValue(const MetricsBundle& m, TaskId task) {
    if (task == TaskId::VagueQ) return m.vagueQr.value_or(0.0);
    auto it = m.accuracy.find(task);
    return it == m.accuracy.end() ? std::nan("") : it->second;
}

}  // namespace

std::string runSuite(const SuiteConfig& config) {
    const std::string& name = config.name;
    if (name != "main" && name != "number" && name != "reversed" && name != "unseen")
        throw HarnessError("unknown suite '" + name + "'");
    if (name == "unseen" && config.unseenDataDir.empty())
        throw HarnessError("unseen suite needs the unseen dataset directory");

    const fs::path suiteRoot = fs::path(config.runRoot) / name;
    fs::create_directories(suiteRoot);

    // which (variant, task) rows the suite trains
    std::vector<std::pair<ModelVariant, TaskId>> rows;
    std::vector<TaskId> columns;
    const bool unseenData = name == "unseen";
    if (name == "main" || name == "unseen") {
        columns = {TaskId::SetComp, TaskId::VagueQ, TaskId::PropTarg};
        for (TaskId t : columns) rows.emplace_back(ModelVariant::OneTaskFrozen, t);
        for (TaskId t : columns) rows.emplace_back(ModelVariant::OneTaskEnd2End, t);
        rows.emplace_back(ModelVariant::MultiTaskProp, TaskId::SetComp);
    } else if (name == "number") {
        columns = {TaskId::SetComp, TaskId::VagueQ, TaskId::NTarg};
        rows.emplace_back(ModelVariant::OneTaskFrozen, TaskId::NTarg);
        rows.emplace_back(ModelVariant::OneTaskEnd2End, TaskId::NTarg);
        for (TaskId t : {TaskId::SetComp, TaskId::VagueQ})
            rows.emplace_back(ModelVariant::OneTaskEnd2End, t);
        rows.emplace_back(ModelVariant::MultiTaskNumber, TaskId::SetComp);
    } else {  // reversed
        columns = {TaskId::SetComp, TaskId::VagueQ, TaskId::PropTarg};
        rows.emplace_back(ModelVariant::MultiTaskReversed, TaskId::SetComp);
        rows.emplace_back(ModelVariant::MultiTaskProp, TaskId::SetComp);
    }

    const std::string dataDir = unseenData ? config.unseenDataDir : config.dataDir;
    const LoadedDataset data = loadDataset(dataDir);

    // one pretrained encoder shared by every frozen run
    bool needsFrozen = false;
    for (const auto& [v, t] : rows)
        if (v == ModelVariant::OneTaskFrozen) needsFrozen = true;
    ParamStore encoderParams;
    Tensor sharedFeatures;
    if (needsFrozen) {
        const fs::path encPath = fs::path(config.runRoot) / "pretrained_encoder.params";
        if (fs::exists(encPath) && !config.force) {
            encoderParams = ParamStore::load(encPath.string());
        } else {
            ModelConfig cfg = config.base.model;
            cfg.imageSize = data.imageSize;
            auto result = pretrainFrozenEncoder(cfg, config.base.seed);
            encoderParams = std::move(result.params);
            encoderParams.save(encPath.string());
            std::ofstream info(fs::path(config.runRoot) / "pretrained_encoder.txt");
            info << "val_accuracy = " << fmt(result.valAccuracy) << "\n"
                 << "epochs = " << result.epochsRun << "\n";
        }
        ModelConfig featCfg = config.base.model;
        featCfg.imageSize = data.imageSize;
        sharedFeatures = computeFrozenFeatures(data, encoderParams, featCfg);
    }

    std::vector<SuiteRun> runs;
    for (const auto& [variant, task] : rows)
        for (int s = 0; s < config.numSeeds; ++s) {
            SuiteRun run;
            run.config = config.base;
            run.config.variant = variant;
            run.config.task = task;
            run.config.seed = config.base.seed + static_cast<std::uint64_t>(s);
            run.config.datasetDir = dataDir;
            run.config.force = false;
            run.config.runDir = (suiteRoot / run.config.runLabel()).string();
            run.unseenData = unseenData;
            runs.push_back(std::move(run));
        }

    // train what is missing; completed run directories are reused
    auto worker = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < runs.size(); i += step) {
            const auto& run = runs[i];
            if (loadMetricsCsv(run.config.runDir + "/metrics.csv") && !config.force) continue;
            if (!config.force && linkSiblingRun(config.runRoot, name, run.config)) continue;
            TrainConfig tc = run.config;
            tc.force = true;  // stale partial runs are rebuilt
            const bool frozenRun = tc.variant == ModelVariant::OneTaskFrozen;
            train(tc, data, frozenRun ? &encoderParams : nullptr,
                  frozenRun ? &sharedFeatures : nullptr);
        }
    };
    const int jobs = std::max(1, config.jobs);
    if (jobs == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back(worker, static_cast<std::size_t>(j),
                              static_cast<std::size_t>(jobs));
        for (auto& t : pool) t.join();
    }

    // aggregate: median per cell, raw values in a sidecar
    std::map<std::string, std::map<TaskId, std::vector<double>>> cells;
    MetricsBundle anyMetrics;
    for (const auto& run : runs) {
        const auto m = loadMetricsCsv(run.config.runDir + "/metrics.csv");
        if (!m) throw HarnessError("missing metrics for " + run.config.runDir);
        anyMetrics = *m;
        std::string rowName = variantName(run.config.variant);
        if (run.config.variant == ModelVariant::OneTaskFrozen ||
            run.config.variant == ModelVariant::OneTaskEnd2End)
            for (TaskId col : columns)
                if (col == run.config.task)
                    cells[rowName][col].push_back(cellValue(*m, col));
        if (run.config.variant != ModelVariant::OneTaskFrozen &&
            run.config.variant != ModelVariant::OneTaskEnd2End)
            for (TaskId col : columns) {
                const double v = cellValue(*m, col);
                if (!std::isnan(v)) cells[rowName][col].push_back(v);
            }
    }

    const std::string tablePath =
        (suiteRoot / (name == "main" ? "table2.csv" : "table.csv")).string();
    std::ofstream table(tablePath);
    table << "model";
    for (TaskId col : columns) table << "," << taskName(col);
    table << "\n";
    table << "chance/majority";
    for (TaskId col : columns) {
        double v = 0.0;
        switch (col) {
            case TaskId::SetComp: v = anyMetrics.baselines["setComp_majority"]; break;
            case TaskId::VagueQ: v = anyMetrics.baselines["vagueQ_meanDist"]; break;
            case TaskId::PropTarg: v = anyMetrics.baselines["propTarg_chance"]; break;
            case TaskId::NTarg: v = anyMetrics.baselines["nTarg_majority"]; break;
        }
        table << "," << fmt(v);
    }
    table << "\n";

    std::ofstream sidecar(suiteRoot / "table_runs.csv");
    sidecar << "model,task,seed_values...\n";
    for (const auto& [rowName, byTask] : cells) {
        table << rowName;
        for (TaskId col : columns) {
            auto it = byTask.find(col);
            if (it == byTask.end() || it->second.empty()) {
                table << ",";
                continue;
            }
            table << "," << fmt(median(it->second));
            sidecar << rowName << "," << taskName(col);
            for (double v : it->second) sidecar << "," << fmt(v);
            sidecar << "\n";
        }
        table << "\n";
    }
    return tablePath;
}

}  // namespace vqlab
