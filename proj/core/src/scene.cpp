#include "vqlab/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "vqlab/rng.hpp"

namespace vqlab {

SceneSpec composeScene(const Ratio& ratio, const Combination& combination,
                       std::uint64_t sceneSeed, bool jitter) {
    if (combination.total() < kMinObjects || combination.total() > kMaxObjects)
        throw InconsistentSpecError("combination total " +
                                    std::to_string(combination.total()) + " outside [" +
                                    std::to_string(kMinObjects) + "," +
                                    std::to_string(kMaxObjects) + "]");
    if (parentRatio(combination) != ratio)
        throw InconsistentSpecError("combination " + std::to_string(combination.nTargets) +
                                    "-" + std::to_string(combination.nNonTargets) +
                                    " does not realize ratio " + ratio.str());
    Rng rng(sceneSeed);
    SceneSpec spec;
    spec.ratio = ratio;
    spec.combination = combination;
    spec.sceneSeed = sceneSeed;

    std::vector<int> cells(kGridCells * kGridCells);
    std::iota(cells.begin(), cells.end(), 0);
    rng.shuffle(cells);

    const int total = combination.total();
    spec.placements.reserve(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) {
        const bool isTarget = i < combination.nTargets;
        Placement p;
        p.cell = cells[static_cast<std::size_t>(i)];
        p.variant = isTarget
                        ? SpriteVariant::make(Family::Target,
                                              static_cast<int>(rng.below(kNumTargetVariants)))
                        : SpriteVariant::make(Family::NonTarget,
                                              static_cast<int>(rng.below(kNumNonTargetVariants)));
        p.size = static_cast<SpriteSize>(rng.below(3));
        p.flipped = rng.coin();
        if (jitter) {
            p.jitterX = rng.uniform(-1.0, 1.0);
            p.jitterY = rng.uniform(-1.0, 1.0);
        }
        spec.placements.push_back(p);
    }
    return spec;
}

SceneRaster rasterize(const SceneSpec& spec, int width, int height) {
    if (width <= 0 || height <= 0 || width % kGridCells || height % kGridCells ||
        width != height)
        throw std::invalid_argument(
            "raster must be square with dimensions a positive multiple of 5");
    SceneRaster raster;
    raster.width = width;
    raster.height = height;
    raster.pixels.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                         kBackgroundIntensity);

    const int cellW = width / kGridCells;
    const int cellH = height / kGridCells;
    const int cellPixels = std::min(cellW, cellH);

    for (const auto& p : spec.placements) {
        const SpritePatch patch = renderSprite(p.variant, p.size, p.flipped, cellPixels);
        if (patch.side > cellW || patch.side > cellH)
            throw RenderOverflowError("sprite patch exceeds cell bounds");
        const int row = p.cell / kGridCells;
        const int col = p.cell % kGridCells;
        int x0 = col * cellW + (cellW - patch.side) / 2;
        int y0 = row * cellH + (cellH - patch.side) / 2;
        // optional in-cell jitter, bounded by the free space around the patch
        x0 += static_cast<int>(std::lround(p.jitterX * (cellW - patch.side) / 2.0));
        y0 += static_cast<int>(std::lround(p.jitterY * (cellH - patch.side) / 2.0));
        for (int y = 0; y < patch.side; ++y)
            for (int x = 0; x < patch.side; ++x) {
                const std::size_t src = static_cast<std::size_t>(y * patch.side + x);
                if (!patch.mask[src]) continue;
                raster.pixels[static_cast<std::size_t>(y0 + y) * width + (x0 + x)] =
                    patch.intensity[src];
            }
    }
    return raster;
}

void writePgm(const std::string& path, int width, int height,
              const std::vector<double>& pixels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> bytes(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i)
        bytes[i] = static_cast<unsigned char>(
            std::lround(std::clamp(pixels[i], 0.0, 1.0) * 255.0));
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

void writePgm(const std::string& path, const SceneRaster& raster) {
    writePgm(path, raster.width, raster.height, raster.pixels);
}

SceneRaster readPgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 255 || w <= 0 || h <= 0)
        throw std::runtime_error("unsupported PGM: " + path);
    in.get();  // single whitespace after header
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw std::runtime_error("truncated PGM: " + path);
    SceneRaster raster;
    raster.width = w;
    raster.height = h;
    raster.pixels.resize(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) raster.pixels[i] = bytes[i] / 255.0;
    return raster;
}

}  // namespace vqlab
