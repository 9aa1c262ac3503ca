#include "trirast/raster_pipe.hpp"

#include <chrono>
#include <mutex>
#include <sstream>

namespace trirast {

namespace {

using Clock = std::chrono::steady_clock;

double msSince(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct AtomicMerge {
    Framebuffer& fb;
    void operator()(std::size_t pixel, uint64_t fragment) const { fb.merge(pixel, fragment); }
};

}  // namespace

const char* cullReasonName(CullReason reason) {
    switch (reason) {
        case CullReason::Frustum: return "frustum";
        case CullReason::Offscreen: return "offscreen";
        case CullReason::Tiny: return "tiny";
        case CullReason::Backface: return "backface";
        case CullReason::Degenerate: return "degenerate";
        default: return "?";
    }
}

RasterParams RasterParams::from(const Camera& camera, const RasterConfig& config) {
    camera.validate();
    TRIRAST_EXPECTS(config.tilePx > 0 && config.batchSize > 0, "tile size and batch size must be positive");
    TRIRAST_EXPECTS(config.forceStage >= 0 && config.forceStage <= 3, "forceStage must be 0..3");
    RasterParams p;
    p.width = camera.renderWidth();
    p.height = camera.renderHeight();
    p.projection = projectionVector(camera);
    p.nearDistance = camera.nearDistance;
    p.smallMaxPx = config.smallMaxPx;
    p.mediumMaxPx = config.mediumMaxPx;
    p.tilePx = config.tilePx;
    p.tinyCull = config.tinyCull;
    p.forceStage = config.forceStage;
    return p;
}

PixelRect pixelBounds(const Vec2d& lo, const Vec2d& hi, int width, int height) {
    auto clampTo = [](double v, int limit) { return static_cast<int>(std::clamp(v, 0.0, double(limit))); };
    return {clampTo(std::floor(lo.x), width), clampTo(std::floor(lo.y), height), clampTo(std::ceil(hi.x), width),
            clampTo(std::ceil(hi.y), height)};
}

PixelRect sampleBounds(const Vec2d& lo, const Vec2d& hi, int width, int height) {
    auto clampTo = [](double v, int limit) { return static_cast<int>(std::clamp(v, 0.0, double(limit))); };
    return {clampTo(std::ceil(lo.x - 0.5), width), clampTo(std::ceil(lo.y - 0.5), height),
            clampTo(std::floor(hi.x - 0.5) + 1.0, width), clampTo(std::floor(hi.y - 0.5) + 1.0, height)};
}

TriangleSetup setupFromPixels(const std::array<Vec2d, 3>& pixel, const std::array<float, 3>& depths, int width,
                              int height) {
    TriangleSetup s;
    s.pixel = pixel;
    s.depths = depths;
    for (int i = 0; i < 3; ++i) s.invDepths[i] = 1.0 / double(depths[i]);

    Vec2d lo{std::min({pixel[0].x, pixel[1].x, pixel[2].x}), std::min({pixel[0].y, pixel[1].y, pixel[2].y})};
    Vec2d hi{std::max({pixel[0].x, pixel[1].x, pixel[2].x}), std::max({pixel[0].y, pixel[1].y, pixel[2].y})};
    s.bbox = pixelBounds(lo, hi, width, height);
    s.samples = sampleBounds(lo, hi, width, height);

    s.area = frontArea(pixel);
    s.degenerate = !(s.area != 0.0);
    s.backfacing = s.area < 0.0;
    if (s.degenerate) return s;

    // Edge-function barycentrics in y-down space; (s, t) weight vertices 1 and 2.
    const Vec2d &p0 = pixel[0], &p1 = pixel[1], &p2 = pixel[2];
    double area2 = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
    double inv = 1.0 / area2;
    Vec2d q{s.bbox.x0 + 0.5, s.bbox.y0 + 0.5};
    s.s0 = ((q.x - p0.x) * (p2.y - p0.y) - (q.y - p0.y) * (p2.x - p0.x)) * inv;
    s.t0 = ((p1.x - p0.x) * (q.y - p0.y) - (p1.y - p0.y) * (q.x - p0.x)) * inv;
    s.dsdx = (p2.y - p0.y) * inv;
    s.dsdy = -(p2.x - p0.x) * inv;
    s.dtdx = -(p1.y - p0.y) * inv;
    s.dtdy = (p1.x - p0.x) * inv;
    return s;
}

Stage1Decision setupTriangle(const ViewTriangle& tri, const RasterParams& params) {
    Stage1Decision d;
    const Vec3& P = params.projection;
    std::array<ProjectedVertex, 3> proj;
    for (int i = 0; i < 3; ++i) proj[i] = projectVertex(tri[i], P);

    // Frustum: all three vertices outside the same side plane, tested in clip
    // space so that vertices behind the camera classify correctly.
    auto allOutside = [&](auto outside) {
        return outside(tri[0], proj[0].depth) && outside(tri[1], proj[1].depth) && outside(tri[2], proj[2].depth);
    };
    bool frustumCulled =
        allOutside([&](const Vec3& v, float w) { return v.x * P.x > w; }) ||
        allOutside([&](const Vec3& v, float w) { return v.x * P.x < -w; }) ||
        allOutside([&](const Vec3& v, float w) { return v.y * P.y > w; }) ||
        allOutside([&](const Vec3& v, float w) { return v.y * P.y < -w; }) ||
        allOutside([&](const Vec3&, float w) { return w < params.nearDistance; });
    if (frustumCulled) {
        d.reason = CullReason::Frustum;
        return d;
    }

    if (proj[0].depth < params.nearDistance || proj[1].depth < params.nearDistance ||
        proj[2].depth < params.nearDistance) {
        d.route = Stage1Route::Forward;
        d.setup.nearPlaneCrossing = true;
        return d;
    }

    std::array<Vec2d, 3> pixel;
    for (int i = 0; i < 3; ++i) pixel[i] = pixelPosition(tri[i], P, params.width, params.height);
    d.setup = setupFromPixels(pixel, {proj[0].depth, proj[1].depth, proj[2].depth}, params.width, params.height);

    if (d.setup.bbox.empty()) {
        d.reason = CullReason::Offscreen;
        return d;
    }
    if (params.tinyCull && d.setup.samples.empty()) {
        d.reason = CullReason::Tiny;
        return d;
    }
    if (d.setup.degenerate) {
        d.reason = CullReason::Degenerate;
        return d;
    }
    if (d.setup.backfacing) {
        d.reason = CullReason::Backface;
        return d;
    }

    bool small = d.setup.bbox.area() < int64_t(params.smallMaxPx);
    if (params.forceStage == 1) small = true;
    if (params.forceStage == 2 || params.forceStage == 3) small = false;
    d.route = small ? Stage1Route::Small : Stage1Route::Forward;
    return d;
}

ClippedPolygon clipTriangleNearPlane(const ViewTriangle& tri, float nearDistance) {
    ClippedPolygon out;
    auto inside = [&](const Vec3& v) { return -v.z >= nearDistance; };
    auto intersect = [&](const Vec3& a, const Vec3& b) {
        double da = -double(a.z), db = -double(b.z);
        double t = (double(nearDistance) - da) / (db - da);
        Vec3 p{float(a.x + (double(b.x) - a.x) * t), float(a.y + (double(b.y) - a.y) * t), -nearDistance};
        return p;
    };
    for (int i = 0; i < 3; ++i) {
        const Vec3& prev = tri[(i + 2) % 3];
        const Vec3& cur = tri[i];
        if (inside(cur)) {
            if (!inside(prev)) out.vertices[out.count++] = intersect(prev, cur);
            out.vertices[out.count++] = cur;
        } else if (inside(prev)) {
            out.vertices[out.count++] = intersect(prev, cur);
        }
    }
    return out;
}

Stage2Decision classifyStage2(const ViewTriangle& tri, const RasterParams& params) {
    Stage2Decision d;
    ClippedPolygon poly = clipTriangleNearPlane(tri, params.nearDistance);
    if (poly.count == 0) {
        d.reason = CullReason::Frustum;
        return d;
    }

    Vec2d lo{INFINITY, INFINITY}, hi{-INFINITY, -INFINITY};
    for (int i = 0; i < poly.count; ++i) {
        Vec2d px = pixelPosition(poly.vertices[i], params.projection, params.width, params.height);
        lo = {std::fmin(lo.x, px.x), std::fmin(lo.y, px.y)};
        hi = {std::fmax(hi.x, px.x), std::fmax(hi.y, px.y)};
    }
    d.clippedBounds = pixelBounds(lo, hi, params.width, params.height);
    if (d.clippedBounds.empty()) {
        d.reason = CullReason::Offscreen;
        return d;
    }

    bool crossing = false;
    std::array<ProjectedVertex, 3> proj;
    for (int i = 0; i < 3; ++i) {
        proj[i] = projectVertex(tri[i], params.projection);
        crossing = crossing || proj[i].depth < params.nearDistance;
    }
    if (crossing) {
        d.route = Stage2Route::Tiles;
        return d;
    }

    std::array<Vec2d, 3> pixel;
    for (int i = 0; i < 3; ++i) pixel[i] = pixelPosition(tri[i], params.projection, params.width, params.height);
    d.setup = setupFromPixels(pixel, {proj[0].depth, proj[1].depth, proj[2].depth}, params.width, params.height);
    if (d.setup.degenerate || d.setup.backfacing) {
        d.reason = d.setup.degenerate ? CullReason::Degenerate : CullReason::Backface;
        return d;
    }

    bool direct = d.clippedBounds.area() < int64_t(params.mediumMaxPx);
    if (params.forceStage == 2) direct = true;
    if (params.forceStage == 3) direct = false;
    d.route = direct ? Stage2Route::Direct : Stage2Route::Tiles;
    return d;
}

std::vector<TileCoord> tilesForRect(const PixelRect& rect, uint32_t tilePx) {
    std::vector<TileCoord> tiles;
    if (rect.empty()) return tiles;
    uint32_t tx0 = uint32_t(rect.x0) / tilePx, tx1 = uint32_t(rect.x1 - 1) / tilePx;
    uint32_t ty0 = uint32_t(rect.y0) / tilePx, ty1 = uint32_t(rect.y1 - 1) / tilePx;
    tiles.reserve(std::size_t(tx1 - tx0 + 1) * (ty1 - ty0 + 1));
    for (uint32_t ty = ty0; ty <= ty1; ++ty) {
        for (uint32_t tx = tx0; tx <= tx1; ++tx) tiles.push_back({tx, ty});
    }
    return tiles;
}

PixelRect tileRect(const TileCoord& tile, const RasterParams& params) {
    int t = int(params.tilePx);
    return {int(tile.x) * t, int(tile.y) * t, std::min(params.width, int(tile.x + 1) * t),
            std::min(params.height, int(tile.y + 1) * t)};
}

Stage1Stats& Stage1Stats::operator+=(const Stage1Stats& o) {
    for (std::size_t i = 0; i < kCullReasonCount; ++i) culled[i] += o.culled[i];
    rasterized += o.rasterized;
    forwarded += o.forwarded;
    fragments += o.fragments;
    batches += o.batches;
    return *this;
}

uint64_t Stage1Stats::totalCulled() const {
    uint64_t n = 0;
    for (uint64_t c : culled) n += c;
    return n;
}

Stage2Stats& Stage2Stats::operator+=(const Stage2Stats& o) {
    for (std::size_t i = 0; i < kCullReasonCount; ++i) culled[i] += o.culled[i];
    direct += o.direct;
    tiled += o.tiled;
    tilesEmitted += o.tilesEmitted;
    fragments += o.fragments;
    return *this;
}

Stage3Stats& Stage3Stats::operator+=(const Stage3Stats& o) {
    tiles += o.tiles;
    fragments += o.fragments;
    return *this;
}

uint64_t defaultStage2Capacity(uint64_t totalTriangles) { return std::max<uint64_t>(4096, totalTriangles / 16); }
uint64_t defaultStage3Capacity(uint64_t stage2Capacity) { return std::max<uint64_t>(4096, 64 * stage2Capacity); }

namespace {

void handleStage1(const Stage1Decision& d, uint32_t itemIndex, uint64_t local, uint64_t globalId,
                  const RasterParams& params, Framebuffer& fb, FragmentQueue<Stage2Entry>& queue, Stage1Stats& stats) {
    switch (d.route) {
        case Stage1Route::Cull:
            ++stats.culled[static_cast<std::size_t>(d.reason)];
            break;
        case Stage1Route::Small:
            stats.fragments += rasterizeSmall(d.setup, globalId, params.width, AtomicMerge{fb});
            ++stats.rasterized;
            break;
        case Stage1Route::Forward:
            queue.push({itemIndex, static_cast<uint32_t>(local)});
            ++stats.forwarded;
            break;
    }
}

void checkQueue(uint64_t requested, uint64_t capacity, const char* name) {
    if (requested > capacity) {
        std::ostringstream msg;
        msg << name << " queue overflow: " << requested << " entries required, capacity " << capacity;
        throw CapacityError(msg.str());
    }
}

}  // namespace

Stage1Stats runStage1(const DrawList& drawList, const RasterParams& params, uint32_t batchSize, Framebuffer& framebuffer,
                      FragmentQueue<Stage2Entry>& stage2Queue, WorkCounter& counter, WorkerPool& pool) {
    const uint64_t total = drawList.totalTriangles;
    const auto& prefix = drawList.prefixSums;
    Stage1Stats stats;
    std::mutex statsMutex;
    counter.reset();
    pool.run([&](unsigned) {
        Stage1Stats local;
        std::size_t item = 0;
        for (;;) {
            uint64_t base = counter.claim(batchSize);
            if (base >= total) break;
            ++local.batches;
            uint64_t end = std::min<uint64_t>(base + batchSize, total);
            for (uint64_t id = base; id < end; ++id) {
                // Claims only grow, so each worker walks the item list forward.
                while (prefix[item + 1] <= id) ++item;
                const DrawItem& di = drawList.items[item];
                uint64_t localTri = id - prefix[item];
                Stage1Decision d = setupTriangle(fetchViewTriangle(di, localTri), params);
                handleStage1(d, uint32_t(item), localTri, id, params, framebuffer, stage2Queue, local);
            }
        }
        std::lock_guard lock(statsMutex);
        stats += local;
    });
    checkQueue(stage2Queue.requested(), stage2Queue.capacity(), "stage-2");
    return stats;
}

Stage1Stats runStage1Instanced(const DrawList& drawList, const RasterParams& params, uint32_t batchSize,
                               Framebuffer& framebuffer, FragmentQueue<Stage2Entry>& stage2Queue, WorkCounter& counter,
                               WorkerPool& pool) {
    // Work space: one entry per (group, triangle) rather than per (instance, triangle).
    std::vector<uint64_t> groupPrefix(drawList.groups.size() + 1, 0);
    for (std::size_t g = 0; g < drawList.groups.size(); ++g) {
        groupPrefix[g + 1] = groupPrefix[g] + drawList.items[drawList.groups[g].firstItem].triangleCount;
    }
    const uint64_t total = groupPrefix.back();
    Stage1Stats stats;
    std::mutex statsMutex;
    counter.reset();
    pool.run([&](unsigned) {
        Stage1Stats local;
        std::size_t group = 0;
        for (;;) {
            uint64_t base = counter.claim(batchSize);
            if (base >= total) break;
            ++local.batches;
            uint64_t end = std::min<uint64_t>(base + batchSize, total);
            for (uint64_t id = base; id < end; ++id) {
                while (groupPrefix[group + 1] <= id) ++group;
                const DrawGroup& g = drawList.groups[group];
                uint64_t localTri = id - groupPrefix[group];
                auto object = fetchObjectTriangle(*drawList.items[g.firstItem].mesh, localTri);
                for (uint32_t k = 0; k < g.itemCount; ++k) {
                    uint32_t itemIndex = g.firstItem + k;
                    const DrawItem& di = drawList.items[itemIndex];
                    Stage1Decision d = setupTriangle(toView(object, di.objectToView), params);
                    handleStage1(d, itemIndex, localTri, di.firstGlobalTriangle + localTri, params, framebuffer,
                                 stage2Queue, local);
                }
            }
        }
        std::lock_guard lock(statsMutex);
        stats += local;
    });
    checkQueue(stage2Queue.requested(), stage2Queue.capacity(), "stage-2");
    return stats;
}

Stage2Stats runStage2(const DrawList& drawList, const RasterParams& params, Framebuffer& framebuffer,
                      const FragmentQueue<Stage2Entry>& stage2Queue, FragmentQueue<Stage3Entry>& stage3Queue,
                      WorkerPool& pool) {
    std::span<const Stage2Entry> entries = stage2Queue.entries();
    std::atomic<uint64_t> next{0};
    Stage2Stats stats;
    std::mutex statsMutex;
    pool.run([&](unsigned) {
        Stage2Stats local;
        for (;;) {
            uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= entries.size()) break;
            const Stage2Entry& e = entries[i];
            const DrawItem& di = drawList.items[e.drawItemIndex];
            Stage2Decision d = classifyStage2(fetchViewTriangle(di, e.localTriangleIndex), params);
            switch (d.route) {
                case Stage2Route::Cull:
                    ++local.culled[static_cast<std::size_t>(d.reason)];
                    break;
                case Stage2Route::Direct:
                    local.fragments += rasterizeStrided(d.setup, di.firstGlobalTriangle + e.localTriangleIndex,
                                                        params.width, AtomicMerge{framebuffer});
                    ++local.direct;
                    break;
                case Stage2Route::Tiles: {
                    ++local.tiled;
                    for (const TileCoord& t : tilesForRect(d.clippedBounds, params.tilePx)) {
                        stage3Queue.push({e.drawItemIndex, e.localTriangleIndex, t.x, t.y});
                        ++local.tilesEmitted;
                    }
                    break;
                }
            }
        }
        std::lock_guard lock(statsMutex);
        stats += local;
    });
    checkQueue(stage3Queue.requested(), stage3Queue.capacity(), "stage-3");
    return stats;
}

uint64_t rayTriangleTile(const Stage3Entry& entry, const DrawList& drawList, const RasterParams& params,
                         Framebuffer& framebuffer) {
    const DrawItem& di = drawList.items[entry.drawItemIndex];
    return rayCastTile(fetchViewTriangle(di, entry.localTriangleIndex), tileRect({entry.tileX, entry.tileY}, params),
                       params, di.firstGlobalTriangle + entry.localTriangleIndex, AtomicMerge{framebuffer});
}

Stage3Stats runStage3(const DrawList& drawList, const RasterParams& params, Framebuffer& framebuffer,
                      const FragmentQueue<Stage3Entry>& stage3Queue, WorkerPool& pool) {
    std::span<const Stage3Entry> entries = stage3Queue.entries();
    std::atomic<uint64_t> next{0};
    Stage3Stats stats;
    std::mutex statsMutex;
    pool.run([&](unsigned) {
        Stage3Stats local;
        for (;;) {
            uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= entries.size()) break;
            local.fragments += rayTriangleTile(entries[i], drawList, params, framebuffer);
            ++local.tiles;
        }
        std::lock_guard lock(statsMutex);
        stats += local;
    });
    return stats;
}

std::string FrameStats::summary() const {
    std::ostringstream os;
    os << "draw items " << drawItems << ", visible triangles " << visibleTriangles
       << (instanced ? " (instanced stage 1)" : "") << "\n";
    os << "stage 1: rasterized " << stage1.rasterized << ", forwarded " << stage1.forwarded << ", culled";
    for (std::size_t i = 0; i < kCullReasonCount; ++i) {
        os << " " << cullReasonName(static_cast<CullReason>(i)) << "=" << stage1.culled[i];
    }
    os << "\nstage 2: direct " << stage2.direct << ", tiled " << stage2.tiled << " (" << stage2.tilesEmitted
       << " tiles), culled " << (stage2.culled[0] + stage2.culled[1] + stage2.culled[3] + stage2.culled[4]) << "\n";
    os << "stage 3: tiles " << stage3.tiles << "\n";
    os << "fragments: " << stage1.fragments << " / " << stage2.fragments << " / " << stage3.fragments << "\n";
    os.setf(std::ios::fixed);
    os.precision(3);
    os << "timings (ms): draw list " << drawListMs << ", clear " << clearMs << ", stage 1 " << stage1Ms
       << ", stage 2 " << stage2Ms << ", stage 3 " << stage3Ms << ", total " << totalMs;
    return os.str();
}

Renderer::Renderer(RasterConfig config) : config_(config), pool_(config.workers) {}

FrameStats Renderer::renderDrawList(const DrawList& drawList, const Camera& camera, Framebuffer& framebuffer) {
    RasterParams params = RasterParams::from(camera, config_);
    FrameStats stats;
    auto frameStart = Clock::now();

    auto t = Clock::now();
    if (framebuffer.width() != params.width || framebuffer.height() != params.height) {
        framebuffer = Framebuffer(params.width, params.height);
    } else {
        framebuffer.clear();
    }
    stats.clearMs = msSince(t);

    stats.drawItems = drawList.items.size();
    stats.visibleTriangles = drawList.totalTriangles;
    uint64_t cap2 = config_.stage2Capacity ? config_.stage2Capacity : defaultStage2Capacity(drawList.totalTriangles);
    uint64_t cap3 = config_.stage3Capacity ? config_.stage3Capacity : defaultStage3Capacity(cap2);
    stage2Queue_.reset(cap2);
    stage3Queue_.reset(cap3);
    stats.instanced = config_.instancing == Instancing::On ||
                      (config_.instancing == Instancing::Auto && drawList.hasMultiInstanceGroup());

    WorkCounter counter;
    t = Clock::now();
    stats.stage1 = stats.instanced
                       ? runStage1Instanced(drawList, params, config_.batchSize, framebuffer, stage2Queue_, counter, pool_)
                       : runStage1(drawList, params, config_.batchSize, framebuffer, stage2Queue_, counter, pool_);
    stats.stage1Ms = msSince(t);
    stats.stage2Entries = stage2Queue_.size();

    t = Clock::now();
    stats.stage2 = runStage2(drawList, params, framebuffer, stage2Queue_, stage3Queue_, pool_);
    stats.stage2Ms = msSince(t);
    stats.stage3Entries = stage3Queue_.size();

    t = Clock::now();
    stats.stage3 = runStage3(drawList, params, framebuffer, stage3Queue_, pool_);
    stats.stage3Ms = msSince(t);
    stats.totalMs = msSince(frameStart);
    return stats;
}

FrameResult Renderer::renderFrame(std::span<const SceneNode> scene, const Camera& camera) {
    auto start = Clock::now();
    FrameResult result;
    result.drawList = buildDrawList(scene, camera);
    double drawListMs = msSince(start);
    result.stats = renderDrawList(result.drawList, camera, result.framebuffer);
    result.stats.drawListMs = drawListMs;
    result.stats.totalMs += drawListMs;
    return result;
}

FrameResult renderFrame(std::span<const SceneNode> scene, const Camera& camera, const RasterConfig& config) {
    Renderer renderer(config);
    return renderer.renderFrame(scene, camera);
}

}  // namespace trirast
