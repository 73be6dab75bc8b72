// vqlab: dataset generation, pretraining, training, evaluation and suites
// for the shared-trunk visual quantification models.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error,
// 4 training divergence, 5 missing data.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "vqlab/config.hpp"
#include "vqlab/harness.hpp"

namespace fs = std::filesystem;
using namespace vqlab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitMissingData = 5;

KeyValueConfig makeConfig() {
    KeyValueConfig cfg;
    cfg.declare("image_size", "100", "square image side, divisible by 20");
    cfg.declare("scenes_per_ratio", "1000", "standard dataset scenes per ratio class");
    cfg.declare("splits", "0.70/0.10/0.20", "train/val/test fractions");
    cfg.declare("jitter", "0", "in-cell placement jitter when generating scenes");
    cfg.declare("unseen_train_per_ratio", "660", "unseen dataset train scenes per ratio");
    cfg.declare("unseen_eval_per_combination", "82",
                "unseen dataset val and test scenes per held-out combination");
    cfg.declare("lr", "0.01", "SGD learning rate");
    cfg.declare("epochs", "100", "training epochs");
    cfg.declare("pretrain_lr", "0.3", "SGD learning rate for encoder pretraining");
    cfg.declare("pretrain_epochs", "50", "maximum encoder pretraining epochs");
    cfg.declare("batch_size", "32", "minibatch size");
    cfg.declare("variant", "multi-task-prop",
                "one-task-frozen | one-task-end2end | multi-task-prop | "
                "multi-task-number | multi-task-reversed");
    cfg.declare("task", "setComp", "task for one-task variants");
    cfg.declare("seed", "1", "base random seed");
    cfg.declare("num_seeds", "3", "seeds per suite cell");
    cfg.declare("data_dir", "data/standard", "dataset directory");
    cfg.declare("unseen_data_dir", "data/unseen", "unseen dataset directory");
    cfg.declare("run_dir", "runs", "run artifact root");
    cfg.declare("encoder_params", "", "pretrained encoder archive (frozen variants)");
    cfg.declare("encoder_dim", "64", "encoder output channels D");
    cfg.declare("encoder_c1", "16", "first conv width");
    cfg.declare("encoder_c2", "32", "second conv width");
    cfg.declare("trunk_w1", "48", "stage-1 hidden width");
    cfg.declare("trunk_w2", "32", "trunk stage output width");
    cfg.declare("head_reduce", "64", "head reduction width");
    cfg.declare("sequential_updates", "0", "one SGD pass per task instead of summed loss");
    return cfg;
}

void splitFractions(const std::string& s, DatasetConfig& dc) {
    double a = 0, b = 0, c = 0;
    char s1 = 0, s2 = 0;
    std::istringstream ss(s);
    if (!(ss >> a >> s1 >> b >> s2 >> c) || s1 != '/' || s2 != '/' ||
        std::abs(a + b + c - 1.0) > 1e-9)
        throw ConfigError("splits must be three fractions a/b/c summing to 1, got " + s);
    dc.splitTrain = a;
    dc.splitVal = b;
    dc.splitTest = c;
}

ModelConfig modelConfigFrom(const KeyValueConfig& cfg) {
    ModelConfig mc;
    mc.imageSize = static_cast<int>(cfg.integer("image_size"));
    mc.encoderDim = static_cast<std::size_t>(cfg.integer("encoder_dim"));
    mc.encoderC1 = static_cast<std::size_t>(cfg.integer("encoder_c1"));
    mc.encoderC2 = static_cast<std::size_t>(cfg.integer("encoder_c2"));
    mc.trunkW1 = static_cast<std::size_t>(cfg.integer("trunk_w1"));
    mc.trunkW2 = static_cast<std::size_t>(cfg.integer("trunk_w2"));
    mc.headReduce = static_cast<std::size_t>(cfg.integer("head_reduce"));
    mc.sequentialUpdates = cfg.flag("sequential_updates");
    return mc;
}

TrainConfig trainConfigFrom(const KeyValueConfig& cfg) {
    TrainConfig tc;
    tc.epochs = static_cast<int>(cfg.integer("epochs"));
    tc.lr = cfg.real("lr");
    tc.batchSize = static_cast<std::size_t>(cfg.integer("batch_size"));
    tc.seed = cfg.u64("seed");
    tc.datasetDir = cfg.str("data_dir");
    tc.variant = variantFromName(cfg.str("variant"));
    tc.task = taskFromName(cfg.str("task"));
    tc.model = modelConfigFrom(cfg);
    tc.encoderParamsPath = cfg.str("encoder_params");
    return tc;
}

void requireDataset(const std::string& dir) {
    if (!fs::exists(fs::path(dir) / "manifest.jsonl"))
        throw MissingDataError("no dataset at " + dir + " (manifest.jsonl not found)");
}

std::string defaultEncoderPath(const KeyValueConfig& cfg) {
    return (fs::path(cfg.str("run_dir")) / "pretrained_encoder.params").string();
}

int cmdGenData(const KeyValueConfig& cfg, bool unseen, bool force) {
    DatasetConfig dc;
    dc.scenesPerRatio = static_cast<int>(cfg.integer("scenes_per_ratio"));
    dc.imageSize = static_cast<int>(cfg.integer("image_size"));
    dc.jitter = cfg.flag("jitter");
    dc.unseenTrainPerRatio = static_cast<int>(cfg.integer("unseen_train_per_ratio"));
    dc.unseenEvalPerCombination =
        static_cast<int>(cfg.integer("unseen_eval_per_combination"));
    splitFractions(cfg.str("splits"), dc);

    const std::string outDir = cfg.str(unseen ? "unseen_data_dir" : "data_dir");
    if (fs::exists(fs::path(outDir) / "manifest.jsonl") && !force)
        throw ConfigError("dataset already exists at " + outDir +
                          " (use --force to overwrite)");

    const QuantifierModel model = calibrateQuantifierModel();
    const std::uint64_t seed = cfg.u64("seed");
    const DatasetManifest manifest = unseen
                                         ? generateUnseenManifest(dc, seed, model)
                                         : generateStandardManifest(dc, seed, model);
    const std::string& dir = outDir;
    writeDataset(dir, manifest, force);

    // summary
    const auto ratios = canonicalRatios();
    std::size_t minCombos = SIZE_MAX, maxCombos = 0, total = 0;
    for (const auto& r : ratios) {
        const auto combos = enumerateCombinations(r);
        minCombos = std::min(minCombos, combos.size());
        maxCombos = std::max(maxCombos, combos.size());
        total += combos.size();
    }
    std::cout << "dataset written to " << dir << (unseen ? " (unseen protocol)" : "")
              << "\n";
    std::cout << "combinations: " << total << " (min " << minCombos << ", max "
              << maxCombos << ")\n";
    if (unseen) std::cout << "held-out combinations: " << ratios.size() << "\n";

    std::map<std::string, std::map<Split, int>> counts;
    std::map<Split, int> splitTotals;
    for (const auto& e : manifest.entries) {
        ++counts[e.spec.ratio.str()][e.split];
        ++splitTotals[e.split];
    }
    std::cout << "scenes: " << manifest.entries.size() << " (train "
              << splitTotals[Split::Train] << ", val " << splitTotals[Split::Val]
              << ", test " << splitTotals[Split::Test] << ")\n";
    std::cout << "per ratio (train/val/test):\n";
    for (const auto& r : ratios) {
        auto& c = counts[r.str()];
        std::cout << "  " << r.str() << ": " << c[Split::Train] << "/" << c[Split::Val]
                  << "/" << c[Split::Test] << "\n";
    }
    return 0;
}

int cmdPretrain(const KeyValueConfig& cfg, const std::string& outFlag, bool force) {
    const std::string out = outFlag.empty() ? defaultEncoderPath(cfg) : outFlag;
    if (fs::exists(out) && !force) {
        std::cerr << out << " already exists (use --force to overwrite)\n";
        return kExitConfig;
    }
    fs::create_directories(fs::path(out).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(out).parent_path());
    auto result = pretrainFrozenEncoder(modelConfigFrom(cfg), cfg.u64("seed"), 12, 3,
                                        static_cast<int>(cfg.integer("pretrain_epochs")),
                                        cfg.real("pretrain_lr"),
                                        static_cast<std::size_t>(cfg.integer("batch_size")));
    result.params.save(out);
    std::cout << "pretrained encoder saved to " << out << " (val accuracy "
              << result.valAccuracy << " after " << result.epochsRun << " epochs)\n";
    return 0;
}

int cmdTrain(const KeyValueConfig& cfg, bool force) {
    requireDataset(cfg.str("data_dir"));
    TrainConfig tc = trainConfigFrom(cfg);
    tc.force = force;
    if (tc.variant == ModelVariant::OneTaskFrozen) {
        if (tc.encoderParamsPath.empty()) tc.encoderParamsPath = defaultEncoderPath(cfg);
        if (!fs::exists(tc.encoderParamsPath))
            throw MissingDataError("pretrained encoder not found at " +
                                   tc.encoderParamsPath +
                                   " (run pretrain-encoder first)");
    }
    tc.runDir = (fs::path(cfg.str("run_dir")) / "manual" / tc.runLabel()).string();
    if (fs::exists(fs::path(tc.runDir) / "metrics.csv") && !force)
        throw ConfigError("run " + tc.runDir +
                          " already has results (use --force to overwrite)");
    const auto record = train(tc);
    std::cout << "run complete: " << tc.runDir << "\n";
    std::cout << "selected epoch: " << record.selectedEpoch << "\n";
    for (const auto& [task, acc] : record.testMetrics.accuracy)
        std::cout << "acc_" << taskName(task) << " = " << acc << "\n";
    if (record.testMetrics.vagueQr)
        std::cout << "r_vagueQ = " << *record.testMetrics.vagueQr << "\n";
    return 0;
}

int cmdEval(const KeyValueConfig& cfg, const std::string& paramsPath,
            const std::string& splitName_) {
    requireDataset(cfg.str("data_dir"));
    const LoadedDataset data = loadDataset(cfg.str("data_dir"));

    ModelConfig mc = modelConfigFrom(cfg);
    mc.imageSize = data.imageSize;
    const ModelVariant variant = variantFromName(cfg.str("variant"));
    const TaskId task = taskFromName(cfg.str("task"));
    MultiTaskNet net(buildModelSpec(variant, task, mc));

    ParamStore params;
    if (paramsPath.empty()) {
        Rng rng(cfg.u64("seed"));
        net.initParams(params, rng);
        std::cout << "no parameter archive given; evaluating fresh weights\n";
    } else {
        if (!fs::exists(paramsPath))
            throw MissingDataError("parameter archive not found: " + paramsPath);
        params = ParamStore::load(paramsPath);
    }

    Split split = Split::Test;
    if (splitName_ == "train") split = Split::Train;
    else if (splitName_ == "val") split = Split::Val;
    else if (splitName_ != "test")
        throw ConfigError("split must be train, val or test");

    Tensor features;
    const Tensor* featPtr = nullptr;
    if (!net.usesEncoder()) {
        std::string encPath = cfg.str("encoder_params");
        if (encPath.empty()) encPath = defaultEncoderPath(cfg);
        if (!fs::exists(encPath))
            throw MissingDataError("pretrained encoder not found at " + encPath);
        const ParamStore enc = ParamStore::load(encPath);
        features = computeFrozenFeatures(data, enc, mc);
        featPtr = &features;
    }

    const MetricsBundle m = evaluate(net, params, data, split, featPtr);
    for (const auto& [t, acc] : m.accuracy)
        std::cout << "acc_" << taskName(t) << " = " << acc << "\n";
    if (m.vagueQr) std::cout << "r_vagueQ = " << *m.vagueQr << "\n";
    for (const auto& [name, v] : m.baselines)
        std::cout << "baseline_" << name << " = " << v << "\n";
    return 0;
}

int cmdSuite(const KeyValueConfig& cfg, const std::string& name, int jobs, bool force) {
    if (name != "main" && name != "number" && name != "reversed" && name != "unseen")
        throw ConfigError("unknown suite '" + name + "'");
    requireDataset(cfg.str(name == "unseen" ? "unseen_data_dir" : "data_dir"));
    SuiteConfig sc;
    sc.name = name;
    sc.dataDir = cfg.str("data_dir");
    sc.unseenDataDir = cfg.str("unseen_data_dir");
    sc.runRoot = cfg.str("run_dir");
    sc.base = trainConfigFrom(cfg);
    sc.numSeeds = static_cast<int>(cfg.integer("num_seeds"));
    sc.jobs = jobs;
    sc.force = force;
    const std::string table = runSuite(sc);
    std::cout << "suite " << name << " complete; table at " << table << "\n";
    std::ifstream in(table);
    std::cout << in.rdbuf();
    return 0;
}

int cmdExport(const KeyValueConfig& cfg, const std::string& runDirFlag) {
    const fs::path runDir(runDirFlag);
    if (!fs::exists(runDir / "config.txt"))
        throw MissingDataError("no config.txt in " + runDirFlag);

    // run configs record dataset_dir rather than data_dir; declare every key
    // a recorded config may contain, then read the file
    KeyValueConfig rc;
    rc.declare("dataset_dir", cfg.str("data_dir"), "");
    rc.declare("variant", "multi-task-prop", "");
    rc.declare("task", "setComp", "");
    rc.declare("epochs", "100", "");
    rc.declare("lr", "0.01", "");
    rc.declare("batch_size", "32", "");
    rc.declare("seed", "1", "");
    rc.declare("encoder_dim", "64", "");
    rc.declare("encoder_c1", "16", "");
    rc.declare("encoder_c2", "32", "");
    rc.declare("trunk_w1", "48", "");
    rc.declare("trunk_w2", "32", "");
    rc.declare("head_reduce", "64", "");
    rc.declare("sequential_updates", "0", "");
    rc.declare("encoder_params", "", "");
    rc.loadFile((runDir / "config.txt").string());

    // newest selected-epoch archive in the run directory
    std::string archive;
    for (const auto& entry : fs::directory_iterator(runDir)) {
        const std::string n = entry.path().filename().string();
        if (n.rfind("epoch", 0) == 0 && n.size() > 7 &&
            n.compare(n.size() - 7, 7, ".params") == 0)
            if (n > archive) archive = n;
    }
    if (archive.empty())
        throw MissingDataError("no epochNNN.params archive in " + runDirFlag);

    requireDataset(rc.str("dataset_dir"));
    const LoadedDataset data = loadDataset(rc.str("dataset_dir"));
    ModelConfig mc;
    mc.imageSize = data.imageSize;
    mc.encoderDim = static_cast<std::size_t>(rc.integer("encoder_dim"));
    mc.encoderC1 = static_cast<std::size_t>(rc.integer("encoder_c1"));
    mc.encoderC2 = static_cast<std::size_t>(rc.integer("encoder_c2"));
    mc.trunkW1 = static_cast<std::size_t>(rc.integer("trunk_w1"));
    mc.trunkW2 = static_cast<std::size_t>(rc.integer("trunk_w2"));
    mc.headReduce = static_cast<std::size_t>(rc.integer("head_reduce"));
    MultiTaskNet net(buildModelSpec(variantFromName(rc.str("variant")),
                                    taskFromName(rc.str("task")), mc));
    const ParamStore params = ParamStore::load((runDir / archive).string());

    Tensor features;
    const Tensor* featPtr = nullptr;
    if (!net.usesEncoder()) {
        const std::string encPath = rc.str("encoder_params");
        if (encPath.empty() || !fs::exists(encPath))
            throw MissingDataError("frozen run needs its encoder archive: " + encPath);
        const ParamStore enc = ParamStore::load(encPath);
        features = computeFrozenFeatures(data, enc, mc);
        featPtr = &features;
    }

    const MetricsBundle m = evaluate(net, params, data, Split::Test, featPtr);
    for (std::size_t k = 0; k < net.numTasks(); ++k) {
        const TaskId t = net.spec().taskOrder[k];
        if (t == TaskId::VagueQ) {
            const double gap = exportQuantifierCurves(
                net, params, data, Split::Test, (runDir / "quantcurves.csv").string(),
                featPtr);
            std::cout << "quantcurves.csv written (mean abs gap " << gap << ")\n";
        } else {
            std::vector<std::string> labels;
            if (t == TaskId::PropTarg)
                for (const auto& r : canonicalRatios())
                    labels.push_back(std::to_string(r.a) + std::to_string(r.b));
            else if (t == TaskId::SetComp)
                labels = {"more", "same", "less"};
            else
                for (int n = 0; n <= kMaxObjects; ++n) labels.push_back(std::to_string(n));
            const std::string base = std::string("confusion_") + taskName(t);
            const double adj = exportConfusionHeatmap(
                m.confusion.at(t), labels, (runDir / (base + ".csv")).string(),
                (runDir / (base + ".pgm")).string());
            std::cout << base << ".{csv,pgm} written (adjacency mass " << adj << ")\n";
        }
        if (t == TaskId::PropTarg) {
            const PcaExport pca = exportPenultimatePCA(
                net, params, data, Split::Test, (runDir / "pca.csv").string(), featPtr);
            std::cout << "pca.csv written (within " << pca.meanWithinDistance
                      << ", between " << pca.meanBetweenDistance << ")\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"visual quantification laboratory"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand name

    KeyValueConfig cfg = makeConfig();
    std::string configFile;
    std::vector<std::string> overrides;
    bool force = false;
    int jobs = 1;

    app.add_option("--config", configFile, "key = value configuration file");
    app.add_option("--set", overrides, "override: key=value (repeatable)");
    app.add_flag("--force", force, "overwrite existing outputs");
    app.footer("configuration keys:\n" + cfg.helpText());

    // direct flags for the common keys
    std::map<std::string, std::string> flagToKey = {
        {"--image-size", "image_size"},   {"--scenes-per-ratio", "scenes_per_ratio"},
        {"--splits", "splits"},           {"--lr", "lr"},
        {"--epochs", "epochs"},           {"--batch-size", "batch_size"},
        {"--variant", "variant"},         {"--task", "task"},
        {"--seed", "seed"},               {"--num-seeds", "num_seeds"},
        {"--data-dir", "data_dir"},       {"--unseen-data-dir", "unseen_data_dir"},
        {"--run-dir", "run_dir"},         {"--encoder-params", "encoder_params"},
        {"--encoder-dim", "encoder_dim"}, {"--jitter", "jitter"}};
    std::map<std::string, std::string> flagValues;
    for (const auto& [flag, key] : flagToKey)
        app.add_option(flag, flagValues[flag], "sets " + key);

    auto* genData = app.add_subcommand("gen-data", "synthesize a dataset");
    bool unseen = false;
    genData->add_flag("--unseen", unseen, "held-out-combination protocol");

    std::string pretrainOut;
    auto* pretrain =
        app.add_subcommand("pretrain-encoder", "sprite-classification pretraining");
    pretrain->add_option("--out", pretrainOut, "output parameter archive");

    auto* trainCmd = app.add_subcommand("train", "train one model variant");

    std::string evalParams, evalSplit = "test";
    auto* evalCmd = app.add_subcommand("eval", "evaluate a parameter archive");
    evalCmd->add_option("--params", evalParams, "parameter archive (default: fresh init)");
    evalCmd->add_option("--split", evalSplit, "train | val | test");

    std::string suiteName;
    auto* suiteCmd = app.add_subcommand("suite", "run a full experiment protocol");
    suiteCmd->add_option("name", suiteName, "main | number | reversed | unseen")
        ->required();
    suiteCmd->add_option("--jobs", jobs, "parallel runs");

    std::string exportRunDir;
    auto* exportCmd = app.add_subcommand("export", "regenerate run exports");
    exportCmd->add_option("run", exportRunDir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (!configFile.empty()) cfg.loadFile(configFile);
        for (const auto& [flag, key] : flagToKey)
            if (!flagValues[flag].empty()) cfg.set(key, flagValues[flag]);
        for (const auto& ov : overrides) {
            const auto eq = ov.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects key=value, got " + ov);
            cfg.set(ov.substr(0, eq), ov.substr(eq + 1));
        }

        if (genData->parsed()) return cmdGenData(cfg, unseen, force);
        if (pretrain->parsed()) return cmdPretrain(cfg, pretrainOut, force);
        if (trainCmd->parsed()) return cmdTrain(cfg, force);
        if (evalCmd->parsed()) return cmdEval(cfg, evalParams, evalSplit);
        if (suiteCmd->parsed()) return cmdSuite(cfg, suiteName, jobs, force);
        if (exportCmd->parsed()) return cmdExport(cfg, exportRunDir);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TrainingDivergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const MissingDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissingData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}
