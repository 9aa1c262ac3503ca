#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <span>

#include "trirast/geom_codec.hpp"
#include "trirast/raster_pipe.hpp"
#include "trirast/scene_core.hpp"
#include "trirast/worker_pool.hpp"

namespace trirast {

enum class ShadingMode { Flat, VertexColor, Textured };
enum class MipFilter { Nearest, Trilinear };

struct ShadingConfig {
    /// Preferred attribute source; falls back textured -> vertex color -> flat
    /// when the mesh lacks the data.
    ShadingMode mode = ShadingMode::Textured;
    bool headlight = false;
    Rgba8 background{40, 40, 40, 255};
    MipFilter mipFilter = MipFilter::Nearest;

    bool operator==(const ShadingConfig&) const = default;
};

inline constexpr Rgba8 kInvalidIdColor{255, 0, 255, 255};

/// Largest m with prefixSums[m] <= id, by binary search. `probes`, when
/// given, receives the number of prefix-sum reads.
std::size_t findMeshForTriangle(std::span<const uint64_t> prefixSums, uint64_t globalTriangleId,
                                int* probes = nullptr);

struct SurfaceHit {
    Vec3d viewPoint;
    double depth = 0;  // linear view depth of the unclamped ray/plane hit
    double s = 0, t = 0, v = 0;  // clamped to the triangle and renormalized
};

/// Casts the ray through the sample of pixel (x, y) against the triangle's
/// plane. nullopt when the ray is parallel to the plane.
std::optional<SurfaceHit> reconstructHit(int x, int y, const ViewTriangle& tri, const RasterParams& params);

struct MipSampleFootprint {
    std::array<Vec2d, 4> uv{};  // texel-space uv at current, right, top, top-right samples
    double level = 0;           // log2 of the footprint, before clamping
    bool valid = false;
};

/// Footprint of pixel (x, y) in texel units from rays through the current,
/// right, top and top-right samples, intersected with the (unbounded) plane.
MipSampleFootprint mipFootprint(int x, int y, const ViewTriangle& tri, const std::array<Vec2, 3>& uvs, int texWidth,
                                int texHeight, const RasterParams& params);

/// Footprint level clamped to [0, levelCount - 1]; 0 when a ray misses the plane.
float estimateMipLevel(int x, int y, const ViewTriangle& tri, const std::array<Vec2, 3>& uvs, int texWidth,
                       int texHeight, int levelCount, const RasterParams& params);

/// Bilinear sample with repeat wrapping. v = 0 is the bottom row.
Rgba8 sampleBilinear(const Image& level, Vec2 uv);
Rgba8 sampleTexture(const MipChain& chain, Vec2 uv, float level, MipFilter filter);

struct ResolveStats {
    std::atomic<uint64_t> background{0};
    std::atomic<uint64_t> shaded{0};
    std::atomic<uint64_t> misses{0};
    std::atomic<uint64_t> invalidIds{0};
};

/// Shades every pixel of the visibility buffer at internal resolution.
Image resolveFrame(const Framebuffer& framebuffer, const DrawList& drawList, const Camera& camera,
                   const ShadingConfig& shading, ResolveStats* stats = nullptr, WorkerPool* pool = nullptr);

enum class DebugView { Depth, StageId, BboxSize, MeshId };

/// Stage that produced the winning fragment, recovered by re-running the
/// routing predicates on the winning triangle: 1, 2 or 3 (0 if culled).
int producingStage(const DrawItem& item, uint64_t localTriangle, const RasterParams& params);

Image debugView(const Framebuffer& framebuffer, const DrawList& drawList, const Camera& camera,
                const RasterConfig& raster, DebugView mode, Rgba8 background = ShadingConfig{}.background);

/// Box-filter downsample by an integer factor, floor-rounded per channel.
Image downsample(const Image& image, int factor);

}  // namespace trirast
