#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vqlab/ground_truth.hpp"
#include "vqlab/scene.hpp"

namespace vqlab {

enum class Split { Train = 0, Val = 1, Test = 2 };

inline const char* splitName(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

struct DatasetEntry {
    std::string sceneId;
    Split split;
    SceneSpec spec;
    TaskLabels labels;

    std::string imagePath() const {  // relative to the dataset directory
        return std::string(splitName(split)) + "/" + sceneId + ".pgm";
    }
};

struct DatasetConfig {
    int scenesPerRatio = 1000;
    int imageSize = 100;
    double splitTrain = 0.70;
    double splitVal = 0.10;
    double splitTest = 0.20;
    bool jitter = false;

    // unseen-combination protocol: one combination per ratio is held out for
    // val/test; train is balanced per ratio over the remaining combinations
    int unseenTrainPerRatio = 660;
    int unseenEvalPerCombination = 82;  // per held-out combination, per split
};

struct DatasetManifest {
    DatasetConfig config;
    std::uint64_t masterSeed = 0;
    bool unseen = false;
    QuantifierModel quantModel;
    std::vector<DatasetEntry> entries;

    std::vector<const DatasetEntry*> splitEntries(Split s) const;
};

// Scene plans and labels only; no rendering, pure in (config, masterSeed).
DatasetManifest generateStandardManifest(const DatasetConfig& config,
                                         std::uint64_t masterSeed,
                                         const QuantifierModel& model);
DatasetManifest generateUnseenManifest(const DatasetConfig& config,
                                       std::uint64_t masterSeed,
                                       const QuantifierModel& model);

// Renders every scene to <dir>/<split>/<sceneId>.pgm and writes
// manifest.jsonl plus quantifier_model.txt. Refuses to overwrite an
// existing manifest unless force is set.
void writeDataset(const std::string& dir, const DatasetManifest& manifest, bool force);

DatasetManifest loadManifest(const std::string& dir);

// one JSON object per line, schema stable across runs
std::string entryToJsonLine(const DatasetEntry& entry);
DatasetEntry entryFromJsonLine(const std::string& line);

}  // namespace vqlab
