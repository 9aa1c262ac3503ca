#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trirast/errors.hpp"
#include "trirast/scene_core.hpp"
#include "trirast/worker_pool.hpp"

namespace trirast {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class Instancing { Auto, Off, On };

struct RasterConfig {
    uint32_t smallMaxPx = 128;    // stage 1 rasterizes bboxes below this pixel count
    uint32_t mediumMaxPx = 4096;  // stage 2 rasterizes clipped bboxes below this
    uint32_t tilePx = 64;
    uint32_t batchSize = 256;
    unsigned workers = 1;
    uint64_t stage2Capacity = 0;  // 0 selects the default from the draw list size
    uint64_t stage3Capacity = 0;
    bool tinyCull = true;
    int forceStage = 0;  // 0 = normal routing, else 1..3
    Instancing instancing = Instancing::Auto;

    bool operator==(const RasterConfig&) const = default;
};

/// Everything the per-triangle math needs about the render target.
struct RasterParams {
    int width = 0;
    int height = 0;
    Vec3 projection;
    float nearDistance = 0.1f;
    uint32_t smallMaxPx = 128;
    uint32_t mediumMaxPx = 4096;
    uint32_t tilePx = 64;
    bool tinyCull = true;
    int forceStage = 0;

    static RasterParams from(const Camera& camera, const RasterConfig& config);
};

// ---------------------------------------------------------------------------
// Per-triangle data
// ---------------------------------------------------------------------------

enum class CullReason : uint8_t { Frustum, Offscreen, Tiny, Backface, Degenerate, Count };
inline constexpr std::size_t kCullReasonCount = static_cast<std::size_t>(CullReason::Count);
const char* cullReasonName(CullReason reason);

/// Half-open integer pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return std::max(0, x1 - x0); }
    int height() const { return std::max(0, y1 - y0); }
    int64_t area() const { return int64_t(width()) * height(); }
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    bool operator==(const PixelRect&) const = default;
};

struct ProjectedVertex {
    Vec2 ndc;
    float depth = 0.0f;  // positive linear view distance; <= 0 behind the camera
};

/// Element-wise projection (x, y, z) * P; x and y are divided by the depth
/// when it is positive.
inline ProjectedVertex projectVertex(const Vec3& viewPos, const Vec3& projection) {
    ProjectedVertex out;
    float x = viewPos.x * projection.x;
    float y = viewPos.y * projection.y;
    out.depth = viewPos.z * projection.z;
    if (out.depth > 0.0f) out.ndc = {x / out.depth, y / out.depth};
    return out;
}

/// Viewport transform to y-down continuous pixel coordinates; pixel (i, j)
/// samples at (i + 0.5, j + 0.5).
inline Vec2 ndcToPixel(const Vec2& ndc, int width, int height) {
    return {(ndc.x + 1.0f) * 0.5f * float(width), (1.0f - ndc.y) * 0.5f * float(height)};
}

/// Continuous pixel position of a view-space point in front of the eye, in
/// double precision. Triangle setup works from these.
inline Vec2d pixelPosition(const Vec3& viewPos, const Vec3& projection, int width, int height) {
    double depth = double(viewPos.z) * projection.z;
    double ndcX = double(viewPos.x) * projection.x / depth;
    double ndcY = double(viewPos.y) * projection.y / depth;
    return {(ndcX + 1.0) * 0.5 * width, (1.0 - ndcY) * 0.5 * height};
}

/// Screen-clamped integer bbox [floor(min), ceil(max)) of a continuous box.
PixelRect pixelBounds(const Vec2d& lo, const Vec2d& hi, int width, int height);

/// Pixels whose sample point (i + 0.5, j + 0.5) lies inside [lo, hi].
PixelRect sampleBounds(const Vec2d& lo, const Vec2d& hi, int width, int height);

/// Counter-clockwise-on-screen area (twice the triangle area). Positive for
/// front faces; vertices are in y-down pixel space.
inline double frontArea(const std::array<Vec2d, 3>& p) {
    return (p[2].x - p[0].x) * (p[1].y - p[0].y) - (p[1].x - p[0].x) * (p[2].y - p[0].y);
}

struct TriangleSetup {
    std::array<Vec2d, 3> pixel;  // continuous pixel coordinates
    std::array<float, 3> depths{};
    std::array<double, 3> invDepths{};
    PixelRect bbox;     // integer bbox: stage routing and the raster loops
    PixelRect samples;  // sample points inside the continuous bbox; empty means tiny
    // Barycentrics (s, t) at the sample of bbox pixel (x0, y0) and their per-pixel steps; v = 1 - s - t.
    double s0 = 0, t0 = 0;
    double dsdx = 0, dsdy = 0, dtdx = 0, dtdy = 0;
    double area = 0;
    bool nearPlaneCrossing = false;
    bool backfacing = false;
    bool degenerate = false;
};

/// Screen-space setup for a triangle whose vertices all lie in front of the
/// near plane.
TriangleSetup setupFromPixels(const std::array<Vec2d, 3>& pixel, const std::array<float, 3>& depths, int width,
                              int height);

using ViewTriangle = std::array<Vec3, 3>;

inline std::array<Vec3, 3> fetchObjectTriangle(const Mesh& mesh, uint64_t localTriangle) {
    uint64_t base = 3 * localTriangle;
    return {mesh.position(mesh.index(base)), mesh.position(mesh.index(base + 1)), mesh.position(mesh.index(base + 2))};
}

inline ViewTriangle toView(const std::array<Vec3, 3>& object, const Mat4& objectToView) {
    return {objectToView.transformPoint(object[0]), objectToView.transformPoint(object[1]),
            objectToView.transformPoint(object[2])};
}

inline ViewTriangle fetchViewTriangle(const DrawItem& item, uint64_t localTriangle) {
    return toView(fetchObjectTriangle(*item.mesh, localTriangle), item.objectToView);
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

enum class Stage1Route : uint8_t { Cull, Small, Forward };

struct Stage1Decision {
    Stage1Route route = Stage1Route::Cull;
    CullReason reason = CullReason::Frustum;
    TriangleSetup setup;
};

/// Stage-1 classification: frustum cull, near-plane forward, offscreen cull,
/// tiny cull, backface cull, then small-vs-forward by bbox pixel count.
Stage1Decision setupTriangle(const ViewTriangle& tri, const RasterParams& params);

enum class Stage2Route : uint8_t { Cull, Direct, Tiles };

struct Stage2Decision {
    Stage2Route route = Stage2Route::Cull;
    CullReason reason = CullReason::Frustum;
    PixelRect clippedBounds;  // screen bbox of the part in front of the near plane
    TriangleSetup setup;      // valid for Direct
};

/// Sutherland-Hodgman clip against the view-space plane z = -nearDistance.
/// Returns 0, 3 or 4 vertices; generated vertices lie exactly on the plane.
struct ClippedPolygon {
    std::array<Vec3, 4> vertices{};
    int count = 0;
};
ClippedPolygon clipTriangleNearPlane(const ViewTriangle& tri, float nearDistance);

Stage2Decision classifyStage2(const ViewTriangle& tri, const RasterParams& params);

/// Tile coordinates (on the tilePx grid) overlapping a pixel rectangle, row-major.
struct TileCoord {
    uint32_t x = 0, y = 0;
    bool operator==(const TileCoord&) const = default;
};
std::vector<TileCoord> tilesForRect(const PixelRect& rect, uint32_t tilePx);

// ---------------------------------------------------------------------------
// Fragment kernels. `merge(pixelIndex, fragment)` is the framebuffer update.
// ---------------------------------------------------------------------------

/// Inclusive barycentric inside test plus perspective-correct depth.
inline bool sampleDepth(double s, double t, const TriangleSetup& setup, float& depth) {
    if (!(s >= 0.0 && t >= 0.0 && s + t <= 1.0)) return false;
    double v = 1.0 - s - t;
    double depthI = v * setup.invDepths[0] + s * setup.invDepths[1] + t * setup.invDepths[2];
    depth = float(1.0 / depthI);
    return depth > 0.0f && std::isfinite(depth);
}

/// Stage-1 loop: rows outer, columns inner, barycentrics stepped per pixel and
/// re-derived at each row start.
template <typename MergeFn>
uint64_t rasterizeSmall(const TriangleSetup& setup, uint64_t globalTriangleId, int targetWidth, MergeFn&& merge) {
    uint64_t fragments = 0;
    const PixelRect& r = setup.bbox;
    for (int y = r.y0; y < r.y1; ++y) {
        double dy = y - r.y0;
        double s = setup.s0 + dy * setup.dsdy;
        double t = setup.t0 + dy * setup.dtdy;
        for (int x = r.x0; x < r.x1; ++x) {
            float depth;
            if (sampleDepth(s, t, setup, depth)) {
                merge(std::size_t(y) * targetWidth + x, packFragment(depth, globalTriangleId));
                ++fragments;
            }
            s += setup.dsdx;
            t += setup.dtdx;
        }
    }
    return fragments;
}

/// Stage-2 loop: one flat index over the bbox, x = i mod width,
/// y = i / width.
template <typename MergeFn>
uint64_t rasterizeStrided(const TriangleSetup& setup, uint64_t globalTriangleId, int targetWidth, MergeFn&& merge) {
    uint64_t fragments = 0;
    const PixelRect& r = setup.bbox;
    const int64_t w = r.width();
    const int64_t count = r.area();
    for (int64_t i = 0; i < count; ++i) {
        int dx = int(i % w), dy = int(i / w);
        double s = setup.s0 + dx * setup.dsdx + dy * setup.dsdy;
        double t = setup.t0 + dx * setup.dtdx + dy * setup.dtdy;
        float depth;
        if (sampleDepth(s, t, setup, depth)) {
            merge(std::size_t(r.y0 + dy) * targetWidth + (r.x0 + dx), packFragment(depth, globalTriangleId));
            ++fragments;
        }
    }
    return fragments;
}

/// Ray/triangle hit in camera-centred space. The ray starts at the eye and
/// has direction (ndc.x / P.x, ndc.y / P.y, -1), so the hit parameter is the
/// linear view depth.
struct RayHit {
    double s = 0, t = 0, depth = 0;
};

struct RayTriangle {
    Vec3d v0, e1, e2;

    explicit RayTriangle(const ViewTriangle& tri)
        : v0(tri[0].as<double>()), e1(tri[1].as<double>() - v0), e2(tri[2].as<double>() - v0) {}

    /// Intersection with the triangle's plane. False when the ray is parallel.
    bool intersectPlane(const Vec3d& dir, RayHit& hit) const {
        Vec3d p = cross(dir, e2);
        double det = dot(e1, p);
        if (det == 0.0 || !std::isfinite(det)) return false;
        double inv = 1.0 / det;
        Vec3d origin = -v0;
        hit.s = dot(origin, p) * inv;
        Vec3d q = cross(origin, e1);
        hit.t = dot(dir, q) * inv;
        hit.depth = dot(e2, q) * inv;
        return true;
    }
};

inline Vec3d sampleRayDirection(double px, double py, const RasterParams& params) {
    double ndcX = px / params.width * 2.0 - 1.0;
    double ndcY = 1.0 - py / params.height * 2.0;
    return {ndcX / params.projection.x, ndcY / params.projection.y, -1.0};
}

/// Stage-3 kernel: ray cast every sample of `tile` (already clipped to the
/// screen), accepting hits inside the triangle that lie at or beyond the near plane.
template <typename MergeFn>
uint64_t rayCastTile(const ViewTriangle& tri, const PixelRect& tile, const RasterParams& params,
                     uint64_t globalTriangleId, MergeFn&& merge) {
    RayTriangle rt(tri);
    uint64_t fragments = 0;
    for (int y = tile.y0; y < tile.y1; ++y) {
        for (int x = tile.x0; x < tile.x1; ++x) {
            RayHit hit;
            if (!rt.intersectPlane(sampleRayDirection(x + 0.5, y + 0.5, params), hit)) continue;
            if (!(hit.s >= 0.0 && hit.t >= 0.0 && hit.s + hit.t <= 1.0)) continue;
            float depth = float(hit.depth);
            if (!(depth >= params.nearDistance) || !std::isfinite(depth)) continue;
            merge(std::size_t(y) * params.width + x, packFragment(depth, globalTriangleId));
            ++fragments;
        }
    }
    return fragments;
}

/// Pixel rectangle of a tile, clipped to the screen.
PixelRect tileRect(const TileCoord& tile, const RasterParams& params);

// ---------------------------------------------------------------------------
// Queues and counters
// ---------------------------------------------------------------------------

struct Stage2Entry {
    uint32_t drawItemIndex = 0;
    uint32_t localTriangleIndex = 0;
};

struct Stage3Entry {
    uint32_t drawItemIndex = 0;
    uint32_t localTriangleIndex = 0;
    uint32_t tileX = 0, tileY = 0;
};

/// Preallocated append-only queue. Pushes past capacity are counted but
/// dropped; the stage checks `overflowed()` at its barrier.
template <typename Entry>
class FragmentQueue {
public:
    explicit FragmentQueue(uint64_t capacity = 0) : entries_(static_cast<std::size_t>(capacity)), capacity_(capacity) {}

    bool push(const Entry& e) {
        uint64_t slot = count_.fetch_add(1, std::memory_order_relaxed);
        if (slot >= capacity_) return false;
        entries_[static_cast<std::size_t>(slot)] = e;
        return true;
    }

    uint64_t capacity() const { return capacity_; }
    /// Total pushes attempted, including dropped ones.
    uint64_t requested() const { return count_.load(std::memory_order_acquire); }
    uint64_t size() const { return std::min(requested(), capacity_); }
    bool overflowed() const { return requested() > capacity_; }
    const Entry& operator[](uint64_t i) const { return entries_[static_cast<std::size_t>(i)]; }
    std::span<const Entry> entries() const { return {entries_.data(), static_cast<std::size_t>(size())}; }

    void reset(uint64_t capacity) {
        if (capacity != capacity_) {
            entries_.assign(static_cast<std::size_t>(capacity), Entry{});
            capacity_ = capacity;
        }
        count_.store(0, std::memory_order_relaxed);
    }

private:
    std::vector<Entry> entries_;
    uint64_t capacity_;
    std::atomic<uint64_t> count_{0};
};

/// Global triangle counter claimed in fixed-size batches.
class WorkCounter {
public:
    uint64_t claim(uint64_t batch) { return next_.fetch_add(batch, std::memory_order_relaxed); }
    uint64_t value() const { return next_.load(std::memory_order_relaxed); }
    void reset() { next_.store(0, std::memory_order_relaxed); }

private:
    std::atomic<uint64_t> next_{0};
};

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct Stage1Stats {
    std::array<uint64_t, kCullReasonCount> culled{};
    uint64_t rasterized = 0;
    uint64_t forwarded = 0;
    uint64_t fragments = 0;
    uint64_t batches = 0;

    Stage1Stats& operator+=(const Stage1Stats& o);
    uint64_t totalCulled() const;
};

struct Stage2Stats {
    std::array<uint64_t, kCullReasonCount> culled{};
    uint64_t direct = 0;
    uint64_t tiled = 0;
    uint64_t tilesEmitted = 0;
    uint64_t fragments = 0;

    Stage2Stats& operator+=(const Stage2Stats& o);
};

struct Stage3Stats {
    uint64_t tiles = 0;
    uint64_t fragments = 0;

    Stage3Stats& operator+=(const Stage3Stats& o);
};

uint64_t defaultStage2Capacity(uint64_t totalTriangles);
uint64_t defaultStage3Capacity(uint64_t stage2Capacity);

Stage1Stats runStage1(const DrawList& drawList, const RasterParams& params, uint32_t batchSize, Framebuffer& framebuffer,
                      FragmentQueue<Stage2Entry>& stage2Queue, WorkCounter& counter, WorkerPool& pool);

/// Fetches each claimed triangle once per draw group and classifies/rasterizes
/// it for every instance in that group.
Stage1Stats runStage1Instanced(const DrawList& drawList, const RasterParams& params, uint32_t batchSize,
                               Framebuffer& framebuffer, FragmentQueue<Stage2Entry>& stage2Queue, WorkCounter& counter,
                               WorkerPool& pool);

Stage2Stats runStage2(const DrawList& drawList, const RasterParams& params, Framebuffer& framebuffer,
                      const FragmentQueue<Stage2Entry>& stage2Queue, FragmentQueue<Stage3Entry>& stage3Queue,
                      WorkerPool& pool);

Stage3Stats runStage3(const DrawList& drawList, const RasterParams& params, Framebuffer& framebuffer,
                      const FragmentQueue<Stage3Entry>& stage3Queue, WorkerPool& pool);

/// Single stage-3 work item.
uint64_t rayTriangleTile(const Stage3Entry& entry, const DrawList& drawList, const RasterParams& params,
                         Framebuffer& framebuffer);

struct FrameStats {
    Stage1Stats stage1;
    Stage2Stats stage2;
    Stage3Stats stage3;
    uint64_t drawItems = 0;
    uint64_t visibleTriangles = 0;
    uint64_t stage2Entries = 0;
    uint64_t stage3Entries = 0;
    bool instanced = false;
    double drawListMs = 0, clearMs = 0, stage1Ms = 0, stage2Ms = 0, stage3Ms = 0, totalMs = 0;

    uint64_t fragments() const { return stage1.fragments + stage2.fragments + stage3.fragments; }
    std::string summary() const;
};

struct FrameResult {
    Framebuffer framebuffer;
    DrawList drawList;
    FrameStats stats;
};

/// Renders one visibility-buffer frame: clear, draw list, stage 1, stage 2,
/// stage 3, with a barrier between stages. Throws CapacityError when the
/// triangle-ID space or a stage queue is exhausted.
class Renderer {
public:
    explicit Renderer(RasterConfig config = {});

    const RasterConfig& config() const { return config_; }
    WorkerPool& pool() { return pool_; }

    FrameResult renderFrame(std::span<const SceneNode> scene, const Camera& camera);
    /// Renders a prepared draw list into `framebuffer` (cleared first).
    FrameStats renderDrawList(const DrawList& drawList, const Camera& camera, Framebuffer& framebuffer);

private:
    RasterConfig config_;
    WorkerPool pool_;
    FragmentQueue<Stage2Entry> stage2Queue_;
    FragmentQueue<Stage3Entry> stage3Queue_;
};

/// One-shot convenience wrapper around Renderer.
FrameResult renderFrame(std::span<const SceneNode> scene, const Camera& camera, const RasterConfig& config);

}  // namespace trirast
