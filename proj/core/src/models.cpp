#include "vqlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>

namespace vqlab {

TaskId taskFromName(const std::string& name) {
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
    if (n == "setcomp") return TaskId::SetComp;
    if (n == "vagueq") return TaskId::VagueQ;
    if (n == "proptarg") return TaskId::PropTarg;
    if (n == "ntarg") return TaskId::NTarg;
    throw std::invalid_argument("unknown task '" + name + "'");
}

std::size_t taskClassCount(TaskId t) {
    switch (t) {
        case TaskId::SetComp: return 3;
        case TaskId::VagueQ: return kNumQuantifiers;
        case TaskId::PropTarg: return kNumRatios;
        case TaskId::NTarg: return static_cast<std::size_t>(kMaxObjects) + 1;
    }
    return 0;
}

const char* variantName(ModelVariant v) {
    switch (v) {
        case ModelVariant::OneTaskFrozen: return "one-task-frozen";
        case ModelVariant::OneTaskEnd2End: return "one-task-end2end";
        case ModelVariant::MultiTaskProp: return "multi-task-prop";
        case ModelVariant::MultiTaskNumber: return "multi-task-number";
        case ModelVariant::MultiTaskReversed: return "multi-task-reversed";
    }
    return "?";
}

ModelVariant variantFromName(const std::string& name) {
    for (ModelVariant v : {ModelVariant::OneTaskFrozen, ModelVariant::OneTaskEnd2End,
                           ModelVariant::MultiTaskProp, ModelVariant::MultiTaskNumber,
                           ModelVariant::MultiTaskReversed})
        if (name == variantName(v)) return v;
    throw std::invalid_argument("unknown model variant '" + name + "'");
}

ModelSpec buildModelSpec(ModelVariant variant, TaskId oneTask, const ModelConfig& config) {
    ModelSpec spec;
    spec.variant = variant;
    spec.config = config;
    switch (variant) {
        case ModelVariant::OneTaskFrozen:
            spec.taskOrder = {oneTask};
            spec.frozenEncoder = true;
            break;
        case ModelVariant::OneTaskEnd2End:
            spec.taskOrder = {oneTask};
            break;
        case ModelVariant::MultiTaskProp:
            spec.taskOrder = {TaskId::SetComp, TaskId::VagueQ, TaskId::PropTarg};
            break;
        case ModelVariant::MultiTaskNumber:
            spec.taskOrder = {TaskId::SetComp, TaskId::VagueQ, TaskId::NTarg};
            break;
        case ModelVariant::MultiTaskReversed:
            spec.taskOrder = {TaskId::PropTarg, TaskId::VagueQ, TaskId::SetComp};
            break;
    }
    return spec;
}

Sequential buildEncoder(int imageSize, const ModelConfig& config) {
    if (imageSize % 20 != 0)
        throw std::invalid_argument("image size " + std::to_string(imageSize) +
                                    " not divisible by 20");
    const std::size_t finalPool = static_cast<std::size_t>(imageSize / 4 / 5);
    return Sequential(
        "encoder",
        {LayerSpec::conv3x3("conv1", 1, config.encoderC1), LayerSpec::relu(),
         LayerSpec::maxpool2(2),
         LayerSpec::conv3x3("conv2", config.encoderC1, config.encoderC2), LayerSpec::relu(),
         LayerSpec::maxpool2(2),
         LayerSpec::conv3x3("conv3", config.encoderC2, config.encoderDim), LayerSpec::relu(),
         LayerSpec::maxpool2(finalPool)});
}

MultiTaskNet::MultiTaskNet(ModelSpec spec) : spec_(std::move(spec)) {
    const auto& cfg = spec_.config;
    if (!spec_.frozenEncoder) encoder_ = buildEncoder(cfg.imageSize, cfg);

    const std::size_t R = kEncoderGrid * kEncoderGrid;
    for (std::size_t k = 0; k < spec_.taskOrder.size(); ++k) {
        const std::string stageName = "stage" + std::to_string(k + 1);
        if (k == 0) {
            stages_.emplace_back(stageName,
                                 std::vector<LayerSpec>{
                                     LayerSpec::dense("fc1", cfg.encoderDim, cfg.trunkW1),
                                     LayerSpec::relu(),
                                     LayerSpec::dense("fc2", cfg.trunkW1, cfg.trunkW2),
                                     LayerSpec::relu()});
        } else {
            stages_.emplace_back(stageName,
                                 std::vector<LayerSpec>{
                                     LayerSpec::dense("fc1", cfg.trunkW2, cfg.trunkW2),
                                     LayerSpec::relu(),
                                     LayerSpec::dense("fc2", cfg.trunkW2, cfg.trunkW2),
                                     LayerSpec::relu()});
        }
        const TaskId task = spec_.taskOrder[k];
        const std::string headName = std::string("head_") + taskName(task);
        if (spec_.frozenEncoder) {
            // frozen models run on [B,D] features: the stage acts as the
            // 2-layer MLP and the head is a plain softmax classifier
            heads_.emplace_back(headName,
                                std::vector<LayerSpec>{
                                    LayerSpec::dense("out", cfg.trunkW2, taskClassCount(task)),
                                    LayerSpec::softmax()});
        } else {
            heads_.emplace_back(
                headName,
                std::vector<LayerSpec>{
                    LayerSpec::concat(),
                    LayerSpec::dense("reduce", R * cfg.trunkW2, cfg.headReduce),
                    LayerSpec::relu(),
                    LayerSpec::dense("out", cfg.headReduce, taskClassCount(task)),
                    LayerSpec::softmax()});
        }
    }
}

void MultiTaskNet::initParams(ParamStore& params, Rng& rng) const {
    if (usesEncoder()) encoder_.initParams(params, rng);
    for (const auto& s : stages_) s.initParams(params, rng);
    for (const auto& h : heads_) h.initParams(params, rng);
}

std::vector<Tensor> MultiTaskNet::forward(const ParamStore& params, const Tensor& input,
                                          ForwardCache* cache) const {
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.stageActs.clear();
    c.headActs.clear();

    Tensor stageInput;
    if (usesEncoder()) {
        c.encoderActs = encoder_.forward(params, input);
        const Tensor& feat = c.encoderActs.back();  // [B,5,5,D]
        stageInput = feat.reshaped(
            {feat.dim(0), kEncoderGrid * kEncoderGrid, feat.dim(3)});
    } else {
        stageInput = input;  // [B,D]
    }

    std::vector<Tensor> outputs;
    for (std::size_t k = 0; k < stages_.size(); ++k) {
        c.stageActs.push_back(stages_[k].forward(params, stageInput));
        const Tensor& stageOut = c.stageActs.back().back();
        c.headActs.push_back(heads_[k].forward(params, stageOut));
        outputs.push_back(c.headActs.back().back());
        stageInput = stageOut;
    }
    return outputs;
}

void MultiTaskNet::backward(ParamStore& params, const ForwardCache& cache,
                            const std::vector<Tensor>& probGrads) const {
    if (probGrads.size() != stages_.size())
        throw std::invalid_argument("expected one probability gradient per task");
    // gradient flowing into each stage's output: the head branch plus
    // whatever the later stages send back
    Tensor downstream;
    bool haveDownstream = false;
    for (std::size_t k = stages_.size(); k-- > 0;) {
        Tensor g = heads_[k].backward(params, cache.headActs[k], probGrads[k]);
        if (haveDownstream)
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += downstream[i];
        downstream = stages_[k].backward(params, cache.stageActs[k], g);
        haveDownstream = true;
    }
    if (usesEncoder()) {
        const Tensor& feat = cache.encoderActs.back();
        encoder_.backward(params, cache.encoderActs, downstream.reshaped(feat.shape()));
    }
}

MultiTaskLossResult multiTaskLoss(const std::vector<Tensor>& outputs,
                                  const std::vector<Tensor>& targets,
                                  const std::vector<double>& weights) {
    if (outputs.size() != targets.size() || outputs.size() != weights.size())
        throw std::invalid_argument("multi-task loss: task count mismatch");
    MultiTaskLossResult res;
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        const double ce = crossEntropy(outputs[k], targets[k]);
        res.perTask.push_back(ce);
        res.total += weights[k] * ce;
        Tensor g = crossEntropyGrad(outputs[k], targets[k]);
        if (weights[k] != 1.0)
            for (auto& v : g.values()) v *= weights[k];
        res.probGrads.push_back(std::move(g));
    }
    return res;
}

Tensor makeTargets(const std::vector<const DatasetEntry*>& batch, TaskId task) {
    const std::size_t C = taskClassCount(task);
    Tensor t({batch.size(), C});
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const TaskLabels& labels = batch[i]->labels;
        switch (task) {
            case TaskId::SetComp:
                t[i * C + static_cast<std::size_t>(labels.setComp)] = 1.0;
                break;
            case TaskId::VagueQ:
                for (std::size_t q = 0; q < kNumQuantifiers; ++q)
                    t[i * C + q] = labels.quantDist[q];
                break;
            case TaskId::PropTarg:
                t[i * C + static_cast<std::size_t>(labels.propClass)] = 1.0;
                break;
            case TaskId::NTarg:
                t[i * C + static_cast<std::size_t>(labels.nTarg)] = 1.0;
                break;
        }
    }
    return t;
}

Tensor extractFrozenFeatures(const Sequential& encoder, const ParamStore& params,
                             const Tensor& images) {
    const auto acts = encoder.forward(params, images);
    const Tensor& feat = acts.back();  // [B,5,5,D]
    const std::size_t B = feat.dim(0), D = feat.dim(3);
    const std::size_t R = kEncoderGrid * kEncoderGrid;
    Tensor out({B, D});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t d = 0; d < D; ++d)
                out[b * D + d] += feat[(b * R + r) * D + d] / static_cast<double>(R);
    return out;
}

PretrainResult pretrainFrozenEncoder(const ModelConfig& config, std::uint64_t seed,
                                     int trainPerVariant, int valPerVariant, int maxEpochs,
                                     double lr, std::size_t batchSize) {
    const int imageSize = config.imageSize;
    Rng rng(seed);

    // single-sprite scenes: one variant per image, random cell/size/flip
    auto renderSample = [&](int globalIdx, Rng& r) {
        SceneSpec spec;
        const SpriteVariant v = SpriteVariant::fromGlobalIndex(globalIdx);
        spec.ratio = v.family == Family::Target ? Ratio{1, 0} : Ratio{0, 1};
        Placement p;
        p.cell = static_cast<int>(r.below(kGridCells * kGridCells));
        p.variant = v;
        p.size = SpriteSize::Big;  // strongest signal for shape identification
        p.flipped = r.coin();
        spec.placements = {p};
        return rasterize(spec, imageSize, imageSize);
    };

    const std::size_t nTrain = static_cast<std::size_t>(kNumVariants * trainPerVariant);
    const std::size_t nVal = static_cast<std::size_t>(kNumVariants * valPerVariant);
    const std::size_t px = static_cast<std::size_t>(imageSize) * static_cast<std::size_t>(imageSize);

    std::vector<double> trainImages(nTrain * px), valImages(nVal * px);
    std::vector<int> trainLabels(nTrain), valLabels(nVal);
    std::size_t ti = 0, vi = 0;
    for (int v = 0; v < kNumVariants; ++v) {
        for (int i = 0; i < trainPerVariant + valPerVariant; ++i) {
            const SceneRaster raster = renderSample(v, rng);
            if (i < trainPerVariant) {
                std::copy(raster.pixels.begin(), raster.pixels.end(),
                          trainImages.begin() + static_cast<std::ptrdiff_t>(ti * px));
                trainLabels[ti++] = v;
            } else {
                std::copy(raster.pixels.begin(), raster.pixels.end(),
                          valImages.begin() + static_cast<std::ptrdiff_t>(vi * px));
                valLabels[vi++] = v;
            }
        }
    }

    const Sequential encoder = buildEncoder(imageSize, config);
    // position-invariant readout: the background encodes to exactly zero
    // (centered input, zero bias init), so a grid-wide max pool isolates the
    // sprite cell without the 25x dilution of a mean pool
    const Sequential pool("pretrain_pool", {LayerSpec::maxpool2(kEncoderGrid)});
    const Sequential head(
        "pretrain",
        {LayerSpec::dense("cls", config.encoderDim, static_cast<std::size_t>(kNumVariants)),
         LayerSpec::softmax()});
    ParamStore params;
    encoder.initParams(params, rng);
    head.initParams(params, rng);

    const std::size_t H = static_cast<std::size_t>(imageSize);

    auto forwardBatch = [&](const std::vector<double>& images,
                            const std::vector<std::size_t>& idx, std::size_t lo,
                            std::size_t hi, MultiTaskNet::ForwardCache* cacheEnc,
                            std::vector<Tensor>* poolActs, std::vector<Tensor>* headActs) {
        const std::size_t B = hi - lo;
        Tensor input({B, H, H, 1});
        for (std::size_t b = 0; b < B; ++b) {
            const double* src = images.data() + idx[lo + b] * px;
            double* dst = input.data() + b * px;
            // centered like the training batches: background maps to zero
            for (std::size_t i = 0; i < px; ++i) dst[i] = src[i] - 0.5;
        }
        auto encActs = encoder.forward(params, input);
        auto pActs = pool.forward(params, encActs.back());  // [B,1,1,D]
        auto hActs = head.forward(params, pActs.back().reshaped({B, config.encoderDim}));
        if (cacheEnc) cacheEnc->encoderActs = std::move(encActs);
        if (poolActs) *poolActs = std::move(pActs);
        if (headActs) *headActs = std::move(hActs);
    };

    std::vector<std::size_t> order(nTrain);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> valOrder(nVal);
    std::iota(valOrder.begin(), valOrder.end(), 0);

    PretrainResult result;
    for (int epoch = 0; epoch < maxEpochs; ++epoch) {
        rng.shuffle(order);
        double epochLoss = 0.0;
        std::size_t nBatches = 0;
        for (std::size_t lo = 0; lo < nTrain; lo += batchSize) {
            const std::size_t hi = std::min(lo + batchSize, nTrain);
            MultiTaskNet::ForwardCache cache;
            std::vector<Tensor> poolActs, headActs;
            forwardBatch(trainImages, order, lo, hi, &cache, &poolActs, &headActs);
            const Tensor& probs = headActs.back();
            Tensor target({hi - lo, static_cast<std::size_t>(kNumVariants)});
            for (std::size_t b = 0; b < hi - lo; ++b)
                target[b * kNumVariants +
                       static_cast<std::size_t>(trainLabels[order[lo + b]])] = 1.0;
            epochLoss += crossEntropy(probs, target);
            ++nBatches;
            Tensor g = crossEntropyGrad(probs, target);
            Tensor pooledGrad = head.backward(params, headActs, g);
            Tensor featGrad = pool.backward(params, poolActs,
                                            pooledGrad.reshaped(poolActs.back().shape()));
            encoder.backward(params, cache.encoderActs, featGrad);
            params.sgdStep(lr);
        }
        // validation accuracy
        std::size_t correct = 0;
        for (std::size_t lo = 0; lo < nVal; lo += batchSize) {
            const std::size_t hi = std::min(lo + batchSize, nVal);
            std::vector<Tensor> headActs;
            forwardBatch(valImages, valOrder, lo, hi, nullptr, nullptr, &headActs);
            const Tensor& probs = headActs.back();
            for (std::size_t b = 0; b < hi - lo; ++b) {
                std::size_t best = 0;
                for (std::size_t c2 = 1; c2 < static_cast<std::size_t>(kNumVariants); ++c2)
                    if (probs[b * kNumVariants + c2] > probs[b * kNumVariants + best])
                        best = c2;
                if (best == static_cast<std::size_t>(valLabels[valOrder[lo + b]])) ++correct;
            }
        }
        result.valAccuracy = static_cast<double>(correct) / static_cast<double>(nVal);
        result.epochsRun = epoch + 1;
        if (std::getenv("VQLAB_PRETRAIN_DEBUG"))
            std::fprintf(stderr, "pretrain epoch %d: train loss %.4f, val acc %.4f\n",
                         epoch + 1, epochLoss / static_cast<double>(nBatches),
                         result.valAccuracy);
        if (result.valAccuracy >= 0.90) break;
    }
    if (result.valAccuracy < 2.0 / static_cast<double>(kNumVariants))
        throw PretrainingError("sprite-classification pretraining stuck at accuracy " +
                               std::to_string(result.valAccuracy));
    // keep only the encoder; the classifier head is discarded
    for (const auto& [path, p] : params.entries())
        if (path.rfind("encoder.", 0) == 0)
            result.params.createZeros(path, p.value.shape()).values() = p.value.values();
    return result;
}

}  // namespace vqlab
