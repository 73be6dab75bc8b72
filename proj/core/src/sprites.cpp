#include "vqlab/sprites.hpp"

#include <algorithm>
#include <cmath>

#include "vqlab/rng.hpp"

namespace vqlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// distinct seed spaces per family so variants are pure functions of identity
constexpr std::uint64_t kTargetSeedBase = 0x5a17e5c0de11aULL;
constexpr std::uint64_t kNonTargetSeedBase = 0xa9f0b3d42e871ULL;

struct Outline {
    // radius as a function of angle, normalized so max radius == 1
    std::vector<double> radii;  // sampled at n equally spaced angles

    double radiusAt(double theta) const {
        const std::size_t n = radii.size();
        double t = theta / (2.0 * kPi) * static_cast<double>(n);
        t -= std::floor(t / static_cast<double>(n)) * static_cast<double>(n);
        const std::size_t i0 = static_cast<std::size_t>(t) % n;
        const std::size_t i1 = (i0 + 1) % n;
        const double frac = t - std::floor(t);
        return radii[i0] * (1.0 - frac) + radii[i1] * frac;
    }
};

// smooth blob: base radius plus low-order sinusoidal wobble
Outline makeBlobOutline(Rng& rng) {
    const int harmonics = 3 + static_cast<int>(rng.below(3));  // 3..5
    std::vector<double> amp(static_cast<std::size_t>(harmonics)),
        phase(static_cast<std::size_t>(harmonics));
    std::vector<int> freq(static_cast<std::size_t>(harmonics));
    for (int h = 0; h < harmonics; ++h) {
        freq[static_cast<std::size_t>(h)] = 2 + h;
        amp[static_cast<std::size_t>(h)] = rng.uniform(0.03, 0.14) / (1.0 + 0.5 * h);
        phase[static_cast<std::size_t>(h)] = rng.uniform(0.0, 2.0 * kPi);
    }
    constexpr std::size_t n = 512;
    Outline o;
    o.radii.resize(n);
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = 2.0 * kPi * static_cast<double>(i) / n;
        double r = 0.72;
        for (int h = 0; h < harmonics; ++h)
            r += amp[static_cast<std::size_t>(h)] *
                 std::sin(freq[static_cast<std::size_t>(h)] * theta +
                          phase[static_cast<std::size_t>(h)]);
        o.radii[i] = std::max(r, 0.35);
        mx = std::max(mx, o.radii[i]);
    }
    for (auto& r : o.radii) r /= mx;
    return o;
}

// angular polygon: piecewise-linear radius between jagged vertices
Outline makePolygonOutline(Rng& rng) {
    const int verts = 3 + static_cast<int>(rng.below(5));  // 3..7
    std::vector<double> angles(static_cast<std::size_t>(verts)),
        radii(static_cast<std::size_t>(verts));
    for (int v = 0; v < verts; ++v) {
        const double base = 2.0 * kPi * v / verts;
        angles[static_cast<std::size_t>(v)] = base + rng.uniform(-0.25, 0.25) * 2.0 * kPi / verts;
        radii[static_cast<std::size_t>(v)] = rng.uniform(0.45, 1.0);
    }
    const double mx = *std::max_element(radii.begin(), radii.end());
    for (auto& r : radii) r /= mx;

    // sample the polygon boundary in polar form; vertices are connected by
    // straight chords, so the radius between vertices follows the chord
    constexpr std::size_t n = 512;
    Outline o;
    o.radii.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = 2.0 * kPi * static_cast<double>(i) / n;
        // find the surrounding vertex pair
        int v0 = verts - 1, v1 = 0;
        for (int v = 0; v < verts; ++v) {
            const double a0 = angles[static_cast<std::size_t>(v)];
            const double a1 = angles[static_cast<std::size_t>((v + 1) % verts)] +
                              (v + 1 == verts ? 2.0 * kPi : 0.0);
            double t = theta;
            if (t < a0) t += 2.0 * kPi;
            if (t >= a0 && t <= a1) {
                v0 = v;
                v1 = (v + 1) % verts;
                break;
            }
        }
        const double a0 = angles[static_cast<std::size_t>(v0)];
        double a1 = angles[static_cast<std::size_t>(v1)];
        if (a1 <= a0) a1 += 2.0 * kPi;
        double t = theta;
        if (t < a0) t += 2.0 * kPi;
        const double r0 = radii[static_cast<std::size_t>(v0)];
        const double r1 = radii[static_cast<std::size_t>(v1)];
        // chord between (r0,a0) and (r1,a1) in polar coordinates
        const double x0 = r0 * std::cos(a0), y0 = r0 * std::sin(a0);
        const double x1 = r1 * std::cos(a1), y1 = r1 * std::sin(a1);
        const double dx = x1 - x0, dy = y1 - y0;
        const double ct = std::cos(t), st = std::sin(t);
        // intersect ray (ct,st)*s with the chord segment
        const double denom = ct * dy - st * dx;
        double r;
        if (std::abs(denom) < 1e-12) {
            r = 0.5 * (r0 + r1);
        } else {
            const double u = (st * x0 - ct * y0) / -denom;
            const double px = x0 + u * dx, py = y0 + u * dy;
            r = std::sqrt(px * px + py * py);
        }
        o.radii[i] = std::clamp(r, 0.05, 1.0);
    }
    return o;
}

struct Texture {
    bool striped;
    double angle, period, duty;
    double dark, bright;       // intensity bands away from the 0.5 background
    std::uint64_t speckleSeed;

    double at(double x, double y) const {  // unit coordinates
        if (striped) {
            const double t = (x * std::cos(angle) + y * std::sin(angle)) / period;
            const double f = t - std::floor(t);
            return f < duty ? dark : bright;
        }
        // speckle: hash the quantized position
        const std::int64_t qx = static_cast<std::int64_t>(std::floor(x * 9.0));
        const std::int64_t qy = static_cast<std::int64_t>(std::floor(y * 9.0));
        std::uint64_t h = speckleSeed ^ (static_cast<std::uint64_t>(qx) * 0x9e3779b97f4a7c15ULL) ^
                          (static_cast<std::uint64_t>(qy) * 0xc2b2ae3d27d4eb4fULL);
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        return (h & 1) ? bright : dark;
    }
};

Texture makeTexture(Rng& rng) {
    Texture t;
    t.striped = rng.coin();
    t.angle = rng.uniform(0.0, kPi);
    t.period = rng.uniform(0.25, 0.6);
    t.duty = rng.uniform(0.35, 0.65);
    t.dark = rng.uniform(0.02, 0.33);
    t.bright = rng.uniform(0.67, 0.98);
    t.speckleSeed = rng.nextU64();
    return t;
}

double sizeFraction(SpriteSize s) {
    switch (s) {
        case SpriteSize::Small: return 0.50;
        case SpriteSize::Medium: return 0.70;
        case SpriteSize::Big: return 0.90;
    }
    return 0.70;
}

}  // namespace

SpriteVariant SpriteVariant::make(Family family, int variantId) {
    const int limit = family == Family::Target ? kNumTargetVariants : kNumNonTargetVariants;
    if (variantId < 0 || variantId >= limit)
        throw InvalidVariantError("variantId " + std::to_string(variantId) +
                                  " out of range for family (limit " + std::to_string(limit) +
                                  ")");
    const std::uint64_t base = family == Family::Target ? kTargetSeedBase : kNonTargetSeedBase;
    return {family, variantId, Rng::deriveSeed(base, static_cast<std::uint64_t>(variantId))};
}

SpriteVariant SpriteVariant::fromGlobalIndex(int idx) {
    if (idx < 0 || idx >= kNumVariants) throw InvalidVariantError("global index out of range");
    return idx < kNumTargetVariants
               ? make(Family::Target, idx)
               : make(Family::NonTarget, idx - kNumTargetVariants);
}

SpritePatch::Box SpritePatch::boundingBox() const {
    Box b{side, side, -1, -1};
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            if (mask[static_cast<std::size_t>(y * side + x)]) {
                b.x0 = std::min(b.x0, x);
                b.y0 = std::min(b.y0, y);
                b.x1 = std::max(b.x1, x);
                b.y1 = std::max(b.y1, y);
            }
    if (b.x1 < 0) return {0, 0, 0, 0};
    return b;
}

long SpritePatch::boundingBoxArea() const {
    const Box b = boundingBox();
    if (b.x1 < b.x0) return 0;
    return static_cast<long>(b.x1 - b.x0 + 1) * static_cast<long>(b.y1 - b.y0 + 1);
}

SpritePatch renderSprite(const SpriteVariant& variant, SpriteSize size, bool flipped,
                         int cellPixels) {
    SpriteVariant::make(variant.family, variant.variantId);  // range check
    Rng rng(variant.shapeSeed);
    const Outline outline = variant.family == Family::Target ? makeBlobOutline(rng)
                                                             : makePolygonOutline(rng);
    const Texture texture = makeTexture(rng);

    const int side = std::max(3, static_cast<int>(std::lround(cellPixels * sizeFraction(size))));
    SpritePatch patch;
    patch.side = side;
    patch.intensity.assign(static_cast<std::size_t>(side * side), 0.0);
    patch.mask.assign(static_cast<std::size_t>(side * side), 0);

    const double half = side / 2.0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            // 3x3 supersampling of the inside test
            int hits = 0;
            for (int sy = 0; sy < 3; ++sy)
                for (int sx = 0; sx < 3; ++sx) {
                    const double px = (x + (sx + 0.5) / 3.0 - half) / half;
                    const double py = (y + (sy + 0.5) / 3.0 - half) / half;
                    const double r = std::sqrt(px * px + py * py);
                    if (r < 1e-9) {
                        ++hits;
                        continue;
                    }
                    const double theta = std::atan2(py, px);
                    if (r <= outline.radiusAt(theta < 0 ? theta + 2.0 * kPi : theta)) ++hits;
                }
            if (hits >= 5) {
                const std::size_t idx = static_cast<std::size_t>(y * side + x);
                patch.mask[idx] = 1;
                patch.intensity[idx] =
                    texture.at((x + 0.5 - half) / half, (y + 0.5 - half) / half);
            }
        }

    if (flipped) {
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side / 2; ++x) {
                const std::size_t a = static_cast<std::size_t>(y * side + x);
                const std::size_t b = static_cast<std::size_t>(y * side + side - 1 - x);
                std::swap(patch.intensity[a], patch.intensity[b]);
                std::swap(patch.mask[a], patch.mask[b]);
            }
    }
    return patch;
}

}  // namespace vqlab
