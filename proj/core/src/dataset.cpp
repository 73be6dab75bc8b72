#include "vqlab/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "vqlab/rng.hpp"

namespace vqlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSplitSalt = 0x51c3a7b9d2e40f6ULL;
constexpr std::uint64_t kHoldoutSalt = 0x7d81f2c0934ab5eULL;
constexpr std::uint64_t kUnseenSceneSalt = 0x3b6e9dc154f072aULL;

std::string makeSceneId(std::size_t ratioIdx, std::size_t comboIdx, int rep) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "r%02zuc%02zun%04d", ratioIdx, comboIdx, rep);
    return buf;
}

const char* sizeName(SpriteSize s) {
    switch (s) {
        case SpriteSize::Small: return "small";
        case SpriteSize::Medium: return "medium";
        case SpriteSize::Big: return "big";
    }
    return "?";
}

SpriteSize sizeFromName(const std::string& s) {
    if (s == "small") return SpriteSize::Small;
    if (s == "medium") return SpriteSize::Medium;
    if (s == "big") return SpriteSize::Big;
    throw std::runtime_error("unknown sprite size '" + s + "'");
}

SetComp setCompFromName(const std::string& s) {
    if (s == "more") return SetComp::More;
    if (s == "same") return SetComp::Same;
    if (s == "less") return SetComp::Less;
    throw std::runtime_error("unknown setComp label '" + s + "'");
}

Split splitFromName(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw std::runtime_error("unknown split '" + s + "'");
}

Ratio ratioFromString(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw std::runtime_error("bad ratio string '" + s + "'");
    return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
}

// per-split counts for n scenes; train gets the rounding slack last
std::array<int, 3> splitCounts(int n, const DatasetConfig& cfg) {
    const int nTrain = static_cast<int>(std::lround(n * cfg.splitTrain));
    const int nVal = static_cast<int>(std::lround(n * cfg.splitVal));
    return {nTrain, nVal, n - nTrain - nVal};
}

// as-equal-as-integer-division-allows counts over k buckets
std::vector<int> equalCounts(int total, std::size_t k) {
    std::vector<int> counts(k, total / static_cast<int>(k));
    for (std::size_t i = 0; i < static_cast<std::size_t>(total) % k; ++i) ++counts[i];
    return counts;
}

}  // namespace

std::vector<const DatasetEntry*> DatasetManifest::splitEntries(Split s) const {
    std::vector<const DatasetEntry*> out;
    for (const auto& e : entries)
        if (e.split == s) out.push_back(&e);
    return out;
}

DatasetManifest generateStandardManifest(const DatasetConfig& config,
                                         std::uint64_t masterSeed,
                                         const QuantifierModel& model) {
    DatasetManifest manifest;
    manifest.config = config;
    manifest.masterSeed = masterSeed;
    manifest.unseen = false;
    manifest.quantModel = model;

    const auto& ratios = canonicalRatios();
    std::uint64_t sceneCounter = 0;
    for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
        const auto combos = enumerateCombinations(ratios[ri]);
        const auto counts = equalCounts(config.scenesPerRatio, combos.size());
        const std::size_t firstEntry = manifest.entries.size();
        for (std::size_t ci = 0; ci < combos.size(); ++ci)
            for (int rep = 0; rep < counts[ci]; ++rep) {
                DatasetEntry e;
                e.sceneId = makeSceneId(ri, ci, rep);
                e.spec = composeScene(ratios[ri], combos[ci],
                                      Rng::deriveSeed(masterSeed, sceneCounter++),
                                      config.jitter);
                e.labels = labelScene(combos[ci], model);
                e.split = Split::Train;  // assigned below
                manifest.entries.push_back(std::move(e));
            }
        // stratified split within the ratio
        const int n = config.scenesPerRatio;
        std::vector<std::size_t> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), firstEntry);
        Rng splitRng(Rng::deriveSeed(masterSeed ^ kSplitSalt, ri));
        splitRng.shuffle(order);
        const auto sc = splitCounts(n, config);
        for (int i = 0; i < n; ++i) {
            Split s = Split::Test;
            if (i < sc[0])
                s = Split::Train;
            else if (i < sc[0] + sc[1])
                s = Split::Val;
            manifest.entries[order[static_cast<std::size_t>(i)]].split = s;
        }
    }
    return manifest;
}

DatasetManifest generateUnseenManifest(const DatasetConfig& config,
                                       std::uint64_t masterSeed,
                                       const QuantifierModel& model) {
    DatasetManifest manifest;
    manifest.config = config;
    manifest.masterSeed = masterSeed;
    manifest.unseen = true;
    manifest.quantModel = model;

    const auto& ratios = canonicalRatios();
    std::uint64_t sceneCounter = 0;
    for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
        const auto combos = enumerateCombinations(ratios[ri]);
        if (combos.size() < 2)
            throw std::runtime_error("ratio " + ratios[ri].str() +
                                     " has fewer than 2 combinations; cannot hold one out");
        Rng holdRng(Rng::deriveSeed(masterSeed ^ kHoldoutSalt, ri));
        const std::size_t heldIdx = static_cast<std::size_t>(holdRng.below(combos.size()));

        std::vector<std::size_t> trainCombos;
        for (std::size_t ci = 0; ci < combos.size(); ++ci)
            if (ci != heldIdx) trainCombos.push_back(ci);
        const auto trainCounts = equalCounts(config.unseenTrainPerRatio, trainCombos.size());
        for (std::size_t t = 0; t < trainCombos.size(); ++t) {
            const std::size_t ci = trainCombos[t];
            for (int rep = 0; rep < trainCounts[t]; ++rep) {
                DatasetEntry e;
                e.sceneId = makeSceneId(ri, ci, rep);
                e.spec = composeScene(
                    ratios[ri], combos[ci],
                    Rng::deriveSeed(masterSeed ^ kUnseenSceneSalt, sceneCounter++),
                    config.jitter);
                e.labels = labelScene(combos[ci], model);
                e.split = Split::Train;
                manifest.entries.push_back(std::move(e));
            }
        }
        for (int rep = 0; rep < 2 * config.unseenEvalPerCombination; ++rep) {
            DatasetEntry e;
            e.sceneId = makeSceneId(ri, heldIdx, rep);
            e.spec = composeScene(
                ratios[ri], combos[heldIdx],
                Rng::deriveSeed(masterSeed ^ kUnseenSceneSalt, sceneCounter++),
                config.jitter);
            e.labels = labelScene(combos[heldIdx], model);
            e.split = rep < config.unseenEvalPerCombination ? Split::Val : Split::Test;
            manifest.entries.push_back(std::move(e));
        }
    }
    return manifest;
}

std::string entryToJsonLine(const DatasetEntry& entry) {
    json placements = json::array();
    for (const auto& p : entry.spec.placements) {
        json jp = {{"cell", p.cell},
                   {"family", p.variant.family == Family::Target ? "target" : "nonTarget"},
                   {"variantId", p.variant.variantId},
                   {"size", sizeName(p.size)},
                   {"flipped", p.flipped}};
        if (p.jitterX != 0.0 || p.jitterY != 0.0) {
            jp["jitterX"] = p.jitterX;
            jp["jitterY"] = p.jitterY;
        }
        placements.push_back(std::move(jp));
    }
    json labels = {{"setComp", setCompName(entry.labels.setComp)},
                   {"propClass", entry.labels.propClass},
                   {"nTarg", entry.labels.nTarg},
                   {"quantDist", entry.labels.quantDist}};
    json j = {{"sceneId", entry.sceneId},
              {"split", splitName(entry.split)},
              {"ratio", entry.spec.ratio.str()},
              {"nTargets", entry.spec.combination.nTargets},
              {"nNonTargets", entry.spec.combination.nNonTargets},
              {"placements", std::move(placements)},
              {"labels", std::move(labels)}};
    return j.dump();
}

DatasetEntry entryFromJsonLine(const std::string& line) {
    const json j = json::parse(line);
    DatasetEntry e;
    e.sceneId = j.at("sceneId").get<std::string>();
    e.split = splitFromName(j.at("split").get<std::string>());
    e.spec.ratio = ratioFromString(j.at("ratio").get<std::string>());
    e.spec.combination = {j.at("nTargets").get<int>(), j.at("nNonTargets").get<int>()};
    for (const auto& jp : j.at("placements")) {
        Placement p;
        p.cell = jp.at("cell").get<int>();
        const Family fam =
            jp.at("family").get<std::string>() == "target" ? Family::Target : Family::NonTarget;
        p.variant = SpriteVariant::make(fam, jp.at("variantId").get<int>());
        p.size = sizeFromName(jp.at("size").get<std::string>());
        p.flipped = jp.at("flipped").get<bool>();
        p.jitterX = jp.value("jitterX", 0.0);
        p.jitterY = jp.value("jitterY", 0.0);
        e.spec.placements.push_back(p);
    }
    const json& labels = j.at("labels");
    e.labels.setComp = setCompFromName(labels.at("setComp").get<std::string>());
    e.labels.propClass = labels.at("propClass").get<int>();
    e.labels.nTarg = labels.at("nTarg").get<int>();
    const auto qd = labels.at("quantDist").get<std::vector<double>>();
    if (qd.size() != kNumQuantifiers) throw std::runtime_error("bad quantDist length");
    std::copy(qd.begin(), qd.end(), e.labels.quantDist.begin());
    return e;
}

void writeDataset(const std::string& dir, const DatasetManifest& manifest, bool force) {
    const fs::path root(dir);
    const fs::path manifestPath = root / "manifest.jsonl";
    if (fs::exists(manifestPath) && !force)
        throw std::runtime_error("dataset already exists at " + dir +
                                 " (use force to overwrite)");
    std::error_code ec;
    fs::create_directories(root, ec);
    for (const char* s : {"train", "val", "test"}) fs::create_directories(root / s, ec);
    if (ec) throw std::runtime_error("cannot create dataset directories under " + dir);

    for (const auto& e : manifest.entries) {
        const SceneRaster raster =
            rasterize(e.spec, manifest.config.imageSize, manifest.config.imageSize);
        writePgm((root / e.imagePath()).string(), raster);
    }

    std::ofstream out(manifestPath);
    if (!out) throw std::runtime_error("cannot write " + manifestPath.string());
    for (const auto& e : manifest.entries) out << entryToJsonLine(e) << "\n";

    manifest.quantModel.save((root / "quantifier_model.txt").string());

    std::ofstream info(root / "dataset_info.txt");
    info << "unseen = " << (manifest.unseen ? 1 : 0) << "\n";
    info << "master_seed = " << manifest.masterSeed << "\n";
    info << "image_size = " << manifest.config.imageSize << "\n";
    info << "scenes_per_ratio = " << manifest.config.scenesPerRatio << "\n";
    info << "jitter = " << (manifest.config.jitter ? 1 : 0) << "\n";
}

DatasetManifest loadManifest(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream info(root / "dataset_info.txt");
    if (!info) throw std::runtime_error("no dataset at " + dir);
    DatasetManifest manifest;
    std::string line;
    while (std::getline(info, line)) {
        std::istringstream ss(line);
        std::string key, eq, value;
        if (!(ss >> key >> eq >> value) || eq != "=") continue;
        if (key == "unseen") manifest.unseen = value == "1";
        else if (key == "master_seed") manifest.masterSeed = std::stoull(value);
        else if (key == "image_size") manifest.config.imageSize = std::stoi(value);
        else if (key == "scenes_per_ratio") manifest.config.scenesPerRatio = std::stoi(value);
        else if (key == "jitter") manifest.config.jitter = value == "1";
    }
    manifest.quantModel = QuantifierModel::load((root / "quantifier_model.txt").string());

    std::ifstream in(root / "manifest.jsonl");
    if (!in) throw std::runtime_error("missing manifest.jsonl in " + dir);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        manifest.entries.push_back(entryFromJsonLine(line));
    }
    return manifest;
}

}  // namespace vqlab
