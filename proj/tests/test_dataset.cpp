#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "vqlab/dataset.hpp"

using namespace vqlab;
namespace fs = std::filesystem;

namespace {

QuantifierModel testModel() { return calibrateQuantifierModel(); }

}  // namespace

TEST_CASE("standard manifest at full scale matches the documented shape") {
    DatasetConfig dc;  // 1000 scenes per ratio, 70/10/20
    const auto m = generateStandardManifest(dc, 1, testModel());
    CHECK(m.entries.size() == 17000);

    std::map<Split, int> splitCounts;
    std::map<std::string, std::map<Split, int>> perRatio;
    std::map<std::string, int> perCombo14;
    for (const auto& e : m.entries) {
        ++splitCounts[e.split];
        ++perRatio[e.spec.ratio.str()][e.split];
        if (e.spec.ratio == Ratio{1, 4})
            ++perCombo14[std::to_string(e.spec.combination.nTargets) + "," +
                         std::to_string(e.spec.combination.nNonTargets)];
    }
    CHECK(splitCounts[Split::Train] == 11900);
    CHECK(splitCounts[Split::Val] == 1700);
    CHECK(splitCounts[Split::Test] == 3400);
    for (const auto& r : canonicalRatios()) {
        CHECK(perRatio[r.str()][Split::Train] == 700);
        CHECK(perRatio[r.str()][Split::Val] == 100);
        CHECK(perRatio[r.str()][Split::Test] == 200);
    }
    // 1000 scenes of ratio 1:4 spread evenly over its 4 combinations
    REQUIRE(perCombo14.size() == 4);
    for (const auto& [combo, count] : perCombo14) CHECK(count == 250);
}

TEST_CASE("standard manifest scales down and stays balanced") {
    DatasetConfig dc;
    dc.scenesPerRatio = 20;
    const auto m = generateStandardManifest(dc, 7, testModel());
    CHECK(m.entries.size() == 340);
    std::map<std::string, std::map<Split, int>> perRatio;
    for (const auto& e : m.entries) ++perRatio[e.spec.ratio.str()][e.split];
    for (const auto& r : canonicalRatios()) {
        CHECK(perRatio[r.str()][Split::Train] == 14);
        CHECK(perRatio[r.str()][Split::Val] == 2);
        CHECK(perRatio[r.str()][Split::Test] == 4);
    }
}

TEST_CASE("manifest generation is deterministic in the master seed") {
    DatasetConfig dc;
    dc.scenesPerRatio = 10;
    const auto model = testModel();
    const auto a = generateStandardManifest(dc, 42, model);
    const auto b = generateStandardManifest(dc, 42, model);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i)
        CHECK(entryToJsonLine(a.entries[i]) == entryToJsonLine(b.entries[i]));
    const auto c = generateStandardManifest(dc, 43, model);
    bool anyDiff = false;
    for (std::size_t i = 0; i < a.entries.size(); ++i)
        if (entryToJsonLine(a.entries[i]) != entryToJsonLine(c.entries[i])) anyDiff = true;
    CHECK(anyDiff);
}

TEST_CASE("unseen manifest holds one combination per ratio out of training") {
    DatasetConfig dc;
    dc.unseenTrainPerRatio = 66;
    dc.unseenEvalPerCombination = 8;
    const auto m = generateUnseenManifest(dc, 5, testModel());
    CHECK(m.unseen);

    std::set<std::pair<int, int>> trainCombos, evalCombos;
    std::map<std::size_t, std::set<std::pair<int, int>>> heldPerRatio;
    for (const auto& e : m.entries) {
        const std::pair<int, int> combo{e.spec.combination.nTargets,
                                        e.spec.combination.nNonTargets};
        if (e.split == Split::Train) {
            trainCombos.insert(combo);
        } else {
            evalCombos.insert(combo);
            heldPerRatio[ratioIndex(e.spec.ratio)].insert(combo);
        }
    }
    CHECK(evalCombos.size() == 17);  // one held-out combination per ratio
    CHECK(heldPerRatio.size() == 17);
    for (const auto& [ri, combos] : heldPerRatio) CHECK(combos.size() == 1);
    for (const auto& combo : evalCombos) CHECK(trainCombos.count(combo) == 0);

    // 66 train scenes per ratio plus 2x8 per held-out combination
    CHECK(m.entries.size() == 17u * 66u + 17u * 16u);
}

TEST_CASE("unseen manifest at full scale approximates 14K at 80/10/10") {
    DatasetConfig dc;  // 660 train per ratio, 82 eval per held-out combination
    const auto m = generateUnseenManifest(dc, 1, testModel());
    const double total = static_cast<double>(m.entries.size());
    CHECK(total > 13000);
    CHECK(total < 15000);
    std::map<Split, int> counts;
    for (const auto& e : m.entries) ++counts[e.split];
    CHECK(counts[Split::Train] / total == doctest::Approx(0.80).epsilon(0.02));
    CHECK(counts[Split::Val] / total == doctest::Approx(0.10).epsilon(0.02));
    CHECK(counts[Split::Test] / total == doctest::Approx(0.10).epsilon(0.02));
}

TEST_CASE("JSONL entries round-trip") {
    DatasetConfig dc;
    dc.scenesPerRatio = 5;
    const auto m = generateStandardManifest(dc, 11, testModel());
    for (const auto& e : m.entries) {
        const auto line = entryToJsonLine(e);
        const auto back = entryFromJsonLine(line);
        CHECK(back.sceneId == e.sceneId);
        CHECK(back.split == e.split);
        CHECK(back.spec.ratio == e.spec.ratio);
        CHECK(back.spec.combination == e.spec.combination);
        CHECK(back.labels == e.labels);
        REQUIRE(back.spec.placements.size() == e.spec.placements.size());
        for (std::size_t i = 0; i < e.spec.placements.size(); ++i) {
            CHECK(back.spec.placements[i].cell == e.spec.placements[i].cell);
            CHECK(back.spec.placements[i].variant.globalIndex() ==
                  e.spec.placements[i].variant.globalIndex());
            CHECK(back.spec.placements[i].size == e.spec.placements[i].size);
            CHECK(back.spec.placements[i].flipped == e.spec.placements[i].flipped);
        }
        CHECK(entryToJsonLine(back) == line);
    }
}

TEST_CASE("writeDataset renders, persists, and refuses accidental overwrite") {
    const std::string dir = (fs::temp_directory_path() / "vq_ds_test").string();
    fs::remove_all(dir);
    DatasetConfig dc;
    dc.scenesPerRatio = 2;
    dc.imageSize = 20;
    const auto m = generateStandardManifest(dc, 3, testModel());
    writeDataset(dir, m, false);

    CHECK(fs::exists(fs::path(dir) / "manifest.jsonl"));
    CHECK(fs::exists(fs::path(dir) / "quantifier_model.txt"));
    for (const auto& e : m.entries) CHECK(fs::exists(fs::path(dir) / e.imagePath()));

    const auto back = loadManifest(dir);
    CHECK(back.entries.size() == m.entries.size());
    CHECK(back.config.imageSize == 20);

    CHECK_THROWS(writeDataset(dir, m, false));
    CHECK_NOTHROW(writeDataset(dir, m, true));
    fs::remove_all(dir);
}
