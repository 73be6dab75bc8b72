#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vqlab/dataset.hpp"
#include "vqlab/models.hpp"
#include "vqlab/stats.hpp"

namespace vqlab {

// Dataset resident in memory; images stay quantized (as stored on disk)
// until a batch is assembled.
struct LoadedDataset {
    DatasetManifest manifest;
    int imageSize = 0;
    std::vector<std::vector<std::uint8_t>> images;  // aligned with manifest.entries
    std::vector<std::size_t> splitIdx[3];

    const std::vector<std::size_t>& indices(Split s) const {
        return splitIdx[static_cast<int>(s)];
    }
    // [B,H,W,1] batch from entry indices idx[lo..hi)
    Tensor batchImages(const std::vector<std::size_t>& idx, std::size_t lo,
                       std::size_t hi) const;
    std::vector<const DatasetEntry*> batchEntries(const std::vector<std::size_t>& idx,
                                                  std::size_t lo, std::size_t hi) const;
};

LoadedDataset loadDataset(const std::string& dir);

// mean-pooled encoder features for every entry, [N,D]
Tensor computeFrozenFeatures(const LoadedDataset& data, const ParamStore& encoderParams,
                             const ModelConfig& config, std::size_t batchSize = 64);

struct TrainConfig {
    int epochs = 100;
    double lr = 0.01;
    std::size_t batchSize = 32;
    std::uint64_t seed = 1;
    std::string datasetDir;
    ModelVariant variant = ModelVariant::OneTaskEnd2End;
    TaskId task = TaskId::SetComp;  // one-task variants only
    ModelConfig model;
    std::string runDir;
    std::string encoderParamsPath;  // frozen variants only
    bool force = false;

    std::string describe() const;   // key = value lines, recorded verbatim
    std::string hash() const;       // fnv-1a over describe()
    std::string runLabel() const;   // e.g. one-task-end2end-setComp-s1
};

struct MetricsBundle {
    std::map<TaskId, double> accuracy;              // classification tasks
    std::optional<double> vagueQr;                  // mean per-datapoint Pearson r
    std::map<TaskId, std::vector<std::vector<int>>> confusion;
    std::map<std::string, double> baselines;
};

struct EpochLog {
    std::vector<double> trainLoss;  // per task
    std::vector<double> valLoss;
    double totalValLoss = 0.0;
};

struct ExperimentRecord {
    std::vector<EpochLog> epochs;
    int selectedEpoch = -1;  // argmin of total validation loss
    MetricsBundle testMetrics;
    double wallSeconds = 0.0;
    std::string configHash;
};

class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// training produced non-finite gradients; last good weights were archived
class TrainingDivergedError : public HarnessError {
public:
    using HarnessError::HarnessError;
};

// expected dataset/parameter files are absent
class MissingDataError : public HarnessError {
public:
    using HarnessError::HarnessError;
};

// Full training protocol: seeded init, per-epoch log flushed to log.csv,
// lowest-validation-loss selection, test metrics from the selected weights,
// artifacts (config.txt, epochNNN.params, metrics.csv and the exports) in
// the run directory. Throws HarnessError on divergence after archiving the
// last good weights.
ExperimentRecord train(const TrainConfig& config);

// same protocol over an already-loaded dataset; frozen variants take the
// pretrained encoder directly (suites share one copy across runs)
// sharedFrozenFeatures, when given, skips the per-run feature pass (suites
// compute the frozen features once per dataset)
ExperimentRecord train(const TrainConfig& config, const LoadedDataset& data,
                       const ParamStore* pretrainedEncoder,
                       const Tensor* sharedFrozenFeatures = nullptr);

// test metrics already present in the run dir (used for idempotent suites)
std::optional<MetricsBundle> loadMetricsCsv(const std::string& path);

MetricsBundle evaluate(const MultiTaskNet& net, const ParamStore& params,
                       const LoadedDataset& data, Split split,
                       const Tensor* frozenFeatures = nullptr);

// row-normalized heatmap PGM + count CSV; returns the fraction of errors
// that land on proportion-adjacent classes
double exportConfusionHeatmap(const std::vector<std::vector<int>>& confusion,
                              const std::vector<std::string>& classLabels,
                              const std::string& csvPath, const std::string& pgmPath);

struct PcaExport {
    double silhouette = 0.0;
    double meanWithinDistance = 0.0;
    double meanBetweenDistance = 0.0;
    double explained[2] = {0.0, 0.0};
};

// 2-d PCA of the pre-softmax reduction vectors of the propTarg head,
// tagged with true proportion; throws HarnessError if the model has no
// propTarg head
PcaExport exportPenultimatePCA(const MultiTaskNet& net, const ParamStore& params,
                               const LoadedDataset& data, Split split,
                               const std::string& csvPath,
                               const Tensor* frozenFeatures = nullptr);

// per-(quantifier, proportion) predicted vs ground-truth probabilities;
// returns the mean absolute gap between the curves
double exportQuantifierCurves(const MultiTaskNet& net, const ParamStore& params,
                              const LoadedDataset& data, Split split,
                              const std::string& csvPath,
                              const Tensor* frozenFeatures = nullptr);

struct SuiteConfig {
    std::string name;  // main | number | reversed | unseen
    std::string dataDir;
    std::string unseenDataDir;  // required for the unseen suite
    std::string runRoot;
    TrainConfig base;  // epochs, lr, batch, model widths; seed is the base seed
    int numSeeds = 3;
    int jobs = 1;
    bool force = false;
};

// trains every variant x seed of the named protocol (reusing completed run
// directories), writes <runRoot>/<name>/table.csv (median cells) plus
// table_runs.csv (raw per-seed values); returns the table path
std::string runSuite(const SuiteConfig& config);

}  // namespace vqlab
