#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vqlab {

enum class Family { Target = 0, NonTarget = 1 };

constexpr int kNumTargetVariants = 100;
constexpr int kNumNonTargetVariants = 145;
constexpr int kNumVariants = kNumTargetVariants + kNumNonTargetVariants;

enum class SpriteSize { Small = 0, Medium = 1, Big = 2 };

// A deterministic procedural sprite. Targets are smooth radial-wobble blobs,
// non-targets are angular polygons; the outline families never overlap.
struct SpriteVariant {
    Family family;
    int variantId;
    std::uint64_t shapeSeed;

    static SpriteVariant make(Family family, int variantId);

    // 0..244 across both families (targets first)
    int globalIndex() const {
        return family == Family::Target ? variantId : kNumTargetVariants + variantId;
    }
    static SpriteVariant fromGlobalIndex(int idx);
};

class InvalidVariantError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Square intensity patch with a binary coverage mask.
struct SpritePatch {
    int side = 0;
    std::vector<double> intensity;   // side*side, meaningful where mask!=0
    std::vector<std::uint8_t> mask;  // 1 = sprite pixel

    // bounding box of set mask pixels; (0,0,0,0) if empty
    struct Box { int x0, y0, x1, y1; };
    Box boundingBox() const;
    long boundingBoxArea() const;
};

// Renders the variant at one of three sizes into a patch no larger than one
// grid cell. Deterministic in all arguments; flipped mirrors columns.
SpritePatch renderSprite(const SpriteVariant& variant, SpriteSize size, bool flipped,
                         int cellPixels = 20);

}  // namespace vqlab
