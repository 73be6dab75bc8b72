#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqlab/ground_truth.hpp"
#include "vqlab/sprites.hpp"

namespace vqlab {

constexpr int kGridCells = 5;  // 5x5 virtual grid
constexpr double kBackgroundIntensity = 0.5;

struct Placement {
    int cell = 0;  // 0..24, row-major on the 5x5 grid
    SpriteVariant variant;
    SpriteSize size = SpriteSize::Medium;
    bool flipped = false;
    // in-cell offset as a fraction of the free space, 0 when jitter is off
    double jitterX = 0.0;
    double jitterY = 0.0;
};

// Symbolic placement plan of one scene.
struct SceneSpec {
    Ratio ratio;
    Combination combination;
    std::vector<Placement> placements;
    std::uint64_t sceneSeed = 0;
};

// Rendered grayscale image, intensities in [0,1] over a 0.5 background.
struct SceneRaster {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;  // row-major, width*height
};

class InconsistentSpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class RenderOverflowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Draws variants, sizes, flips and cells from a stream seeded only by
// sceneSeed. The combination must realize the ratio.
SceneSpec composeScene(const Ratio& ratio, const Combination& combination,
                       std::uint64_t sceneSeed, bool jitter = false);

// Each placement's patch is drawn centered in its cell (plus optional
// in-cell jitter recorded at compose time). Width and height must be
// divisible by 5.
SceneRaster rasterize(const SceneSpec& spec, int width, int height);

// binary PGM (P5, maxval 255)
void writePgm(const std::string& path, const SceneRaster& raster);
SceneRaster readPgm(const std::string& path);

// PGM from arbitrary [0,1] data, used for heatmap exports
void writePgm(const std::string& path, int width, int height,
              const std::vector<double>& pixels);

}  // namespace vqlab
