#pragma once

#include <string>
#include <vector>

#include "vqlab/dataset.hpp"
#include "vqlab/layers.hpp"
#include "vqlab/loss.hpp"

namespace vqlab {

enum class TaskId { SetComp = 0, VagueQ = 1, PropTarg = 2, NTarg = 3 };

inline const char* taskName(TaskId t) {
    switch (t) {
        case TaskId::SetComp: return "setComp";
        case TaskId::VagueQ: return "vagueQ";
        case TaskId::PropTarg: return "propTarg";
        case TaskId::NTarg: return "nTarg";
    }
    return "?";
}

TaskId taskFromName(const std::string& name);
std::size_t taskClassCount(TaskId t);  // 3, 9, 17, 21

enum class ModelVariant {
    OneTaskFrozen,
    OneTaskEnd2End,
    MultiTaskProp,      // setComp -> vagueQ -> propTarg
    MultiTaskNumber,    // setComp -> vagueQ -> nTarg
    MultiTaskReversed,  // propTarg -> vagueQ -> setComp
};

ModelVariant variantFromName(const std::string& name);
const char* variantName(ModelVariant v);

struct ModelConfig {
    int imageSize = 100;
    std::size_t encoderDim = 64;   // D; encoder output is 5x5xD = 25 vectors
    std::size_t encoderC1 = 16;
    std::size_t encoderC2 = 32;
    std::size_t trunkW1 = 48;      // stage-1 widths D->W1->W2
    std::size_t trunkW2 = 32;      // later stages stay at W2
    std::size_t headReduce = 64;   // post-concat reduction width
    bool sequentialUpdates = false;  // one SGD pass per task instead of summed loss
};

struct ModelSpec {
    ModelVariant variant = ModelVariant::MultiTaskProp;
    std::vector<TaskId> taskOrder;  // one entry per trunk stage
    bool frozenEncoder = false;
    ModelConfig config;
};

ModelSpec buildModelSpec(ModelVariant variant, TaskId oneTask, const ModelConfig& config);

constexpr std::size_t kEncoderGrid = 5;  // output feature map is 5x5

// conv3x3(1->C1)+relu+pool2, conv3x3(C1->C2)+relu+pool2, conv3x3(C2->D)+relu+
// pool to 5x5. imageSize must be divisible by 20.
Sequential buildEncoder(int imageSize, const ModelConfig& config);

// The wired network: encoder (absent for frozen models, which consume
// mean-pooled features directly), one trunk stage per task, one exclusive
// head per task. Stage k feeds both head k and stage k+1, so gradients from
// task k reach trunk stages 0..k only.
class MultiTaskNet {
public:
    explicit MultiTaskNet(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }
    bool usesEncoder() const { return !spec_.frozenEncoder; }
    const Sequential& encoder() const { return encoder_; }
    const Sequential& stage(std::size_t k) const { return stages_[k]; }
    const Sequential& head(std::size_t k) const { return heads_[k]; }
    std::size_t numTasks() const { return spec_.taskOrder.size(); }

    void initParams(ParamStore& params, Rng& rng) const;
    std::vector<std::string> encoderParamPaths() const { return encoder_.paramPaths(); }

    struct ForwardCache {
        std::vector<Tensor> encoderActs;
        std::vector<std::vector<Tensor>> stageActs;
        std::vector<std::vector<Tensor>> headActs;
    };

    // input: [B,H,W,1] for end-to-end models, [B,D] features for frozen ones.
    // Returns one probability row tensor per task in taskOrder.
    std::vector<Tensor> forward(const ParamStore& params, const Tensor& input,
                                ForwardCache* cache = nullptr) const;

    // probGrads[k] = dL/d(task k probability rows); accumulates parameter
    // gradients. Encoder gradients are skipped for frozen models.
    void backward(ParamStore& params, const ForwardCache& cache,
                  const std::vector<Tensor>& probGrads) const;

private:
    ModelSpec spec_;
    Sequential encoder_;
    std::vector<Sequential> stages_;
    std::vector<Sequential> heads_;
};

struct MultiTaskLossResult {
    double total = 0.0;
    std::vector<double> perTask;
    std::vector<Tensor> probGrads;  // ready to feed MultiTaskNet::backward
};

// targets[k] must match outputs[k] row shape; vagueQ targets are full
// distributions, the rest one-hot
MultiTaskLossResult multiTaskLoss(const std::vector<Tensor>& outputs,
                                  const std::vector<Tensor>& targets,
                                  const std::vector<double>& weights);

// one-hot / soft target rows for a batch of entries
Tensor makeTargets(const std::vector<const DatasetEntry*>& batch, TaskId task);

struct PretrainResult {
    ParamStore params;       // encoder (+ classifier head) parameters
    double valAccuracy = 0.0;
    int epochsRun = 0;
};

class PretrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Trains encoder + linear head on single-sprite variant classification (245
// classes) until val accuracy >= 0.90 or maxEpochs; throws PretrainingError
// if the result stays under twice chance.
PretrainResult pretrainFrozenEncoder(const ModelConfig& config, std::uint64_t seed,
                                     int trainPerVariant = 12, int valPerVariant = 3,
                                     int maxEpochs = 50, double lr = 0.3,
                                     std::size_t batchSize = 32);

// mean over the 25 spatial vectors of the encoder output, one row per image
Tensor extractFrozenFeatures(const Sequential& encoder, const ParamStore& params,
                             const Tensor& images);

}  // namespace vqlab
