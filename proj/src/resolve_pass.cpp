#include "trirast/resolve_pass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trirast {

std::size_t findMeshForTriangle(std::span<const uint64_t> prefixSums, uint64_t globalTriangleId, int* probes) {
    TRIRAST_EXPECTS(prefixSums.size() >= 2, "findMeshForTriangle: empty draw list");
    TRIRAST_EXPECTS(globalTriangleId < prefixSums.back(), "findMeshForTriangle: triangle ID out of range");
    // Invariant: prefixSums[lo] <= id < prefixSums[hi].
    std::size_t lo = 0, hi = prefixSums.size() - 1;
    int count = 0;
    while (hi - lo > 1) {
        std::size_t mid = lo + (hi - lo) / 2;
        ++count;
        if (prefixSums[mid] <= globalTriangleId) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (probes) *probes = count;
    return lo;
}

std::optional<SurfaceHit> reconstructHit(int x, int y, const ViewTriangle& tri, const RasterParams& params) {
    RayTriangle rt(tri);
    Vec3d dir = sampleRayDirection(x + 0.5, y + 0.5, params);
    RayHit hit;
    if (!rt.intersectPlane(dir, hit) || !std::isfinite(hit.depth)) return std::nullopt;
    SurfaceHit out;
    out.depth = hit.depth;
    out.viewPoint = dir * hit.depth;
    double s = std::max(0.0, hit.s), t = std::max(0.0, hit.t), v = std::max(0.0, 1.0 - hit.s - hit.t);
    double sum = s + t + v;
    out.s = s / sum;
    out.t = t / sum;
    out.v = v / sum;
    return out;
}

MipSampleFootprint mipFootprint(int x, int y, const ViewTriangle& tri, const std::array<Vec2, 3>& uvs, int texWidth,
                                int texHeight, const RasterParams& params) {
    MipSampleFootprint fp;
    RayTriangle rt(tri);
    // Current, right, top (one row up in y-down space), top-right.
    const double offsets[4][2] = {{0.5, 0.5}, {1.5, 0.5}, {0.5, -0.5}, {1.5, -0.5}};
    for (int k = 0; k < 4; ++k) {
        RayHit hit;
        if (!rt.intersectPlane(sampleRayDirection(x + offsets[k][0], y + offsets[k][1], params), hit)) return fp;
        double v = 1.0 - hit.s - hit.t;
        fp.uv[k] = {(v * uvs[0].x + hit.s * uvs[1].x + hit.t * uvs[2].x) * texWidth,
                    (v * uvs[0].y + hit.s * uvs[1].y + hit.t * uvs[2].y) * texHeight};
    }
    double extent = std::max({std::abs(fp.uv[1].x - fp.uv[0].x), std::abs(fp.uv[1].y - fp.uv[0].y),
                              std::abs(fp.uv[2].x - fp.uv[0].x), std::abs(fp.uv[2].y - fp.uv[0].y)});
    if (!(extent > 0.0) || !std::isfinite(extent)) return fp;
    fp.level = std::log2(extent);
    fp.valid = true;
    return fp;
}

float estimateMipLevel(int x, int y, const ViewTriangle& tri, const std::array<Vec2, 3>& uvs, int texWidth,
                       int texHeight, int levelCount, const RasterParams& params) {
    MipSampleFootprint fp = mipFootprint(x, y, tri, uvs, texWidth, texHeight, params);
    if (!fp.valid) return 0.0f;
    return static_cast<float>(std::clamp(fp.level, 0.0, double(std::max(0, levelCount - 1))));
}

namespace {

struct Rgbaf {
    float r = 0, g = 0, b = 0, a = 0;
};

Rgbaf toFloat(Rgba8 c) { return {float(c.r), float(c.g), float(c.b), float(c.a)}; }

Rgba8 toByte(Rgbaf c) {
    auto q = [](float v) { return static_cast<uint8_t>(std::clamp(std::floor(v + 0.5f), 0.0f, 255.0f)); };
    return {q(c.r), q(c.g), q(c.b), q(c.a)};
}

Rgbaf lerp(Rgbaf a, Rgbaf b, float t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t, a.a + (b.a - a.a) * t};
}

Rgbaf bilinear(const Image& img, Vec2 uv) {
    float fx = uv.x - std::floor(uv.x);
    float fy = uv.y - std::floor(uv.y);
    float px = fx * img.width - 0.5f;
    float py = (1.0f - fy) * img.height - 0.5f;
    int x0 = int(std::floor(px)), y0 = int(std::floor(py));
    float ax = px - x0, ay = py - y0;
    auto wrap = [](int v, int n) { return ((v % n) + n) % n; };
    auto at = [&](int x, int y) { return toFloat(img.at(wrap(x, img.width), wrap(y, img.height))); };
    return lerp(lerp(at(x0, y0), at(x0 + 1, y0), ax), lerp(at(x0, y0 + 1), at(x0 + 1, y0 + 1), ax), ay);
}

uint32_t hashColor(uint64_t v) {
    v ^= v >> 33;
    v *= 0xff51afd7ed558ccdull;
    v ^= v >> 33;
    v *= 0xc4ceb9fe1a85ec53ull;
    v ^= v >> 33;
    return static_cast<uint32_t>(v);
}

template <typename RowFn>
void forEachRow(int height, WorkerPool* pool, RowFn&& fn) {
    if (!pool || pool->size() == 1) {
        for (int y = 0; y < height; ++y) fn(y);
        return;
    }
    std::atomic<int> next{0};
    pool->run([&](unsigned) {
        for (int y = next.fetch_add(1); y < height; y = next.fetch_add(1)) fn(y);
    });
}

}  // namespace

Rgba8 sampleBilinear(const Image& level, Vec2 uv) { return toByte(bilinear(level, uv)); }

Rgba8 sampleTexture(const MipChain& chain, Vec2 uv, float level, MipFilter filter) {
    int last = chain.levelCount() - 1;
    if (filter == MipFilter::Trilinear) {
        float l = std::clamp(level, 0.0f, float(last));
        int l0 = int(std::floor(l));
        int l1 = std::min(l0 + 1, last);
        return toByte(lerp(bilinear(chain.levels[l0], uv), bilinear(chain.levels[l1], uv), l - float(l0)));
    }
    int l = std::clamp(int(std::lround(level)), 0, last);
    return toByte(bilinear(chain.levels[l], uv));
}

Image resolveFrame(const Framebuffer& framebuffer, const DrawList& drawList, const Camera& camera,
                   const ShadingConfig& shading, ResolveStats* stats, WorkerPool* pool) {
    RasterParams params = RasterParams::from(camera, RasterConfig{});
    Image out(framebuffer.width(), framebuffer.height(), shading.background);
    ResolveStats localStats;
    ResolveStats& st = stats ? *stats : localStats;

    forEachRow(framebuffer.height(), pool, [&](int y) {
        for (int x = 0; x < framebuffer.width(); ++x) {
            auto frag = unpackFragment(framebuffer.at(x, y));
            if (!frag) {
                st.background.fetch_add(1, std::memory_order_relaxed);
                continue;
            }
            if (frag->triangleId >= drawList.totalTriangles) {
                out.at(x, y) = kInvalidIdColor;
                st.invalidIds.fetch_add(1, std::memory_order_relaxed);
                continue;
            }
            std::size_t itemIndex = findMeshForTriangle(drawList.prefixSums, frag->triangleId);
            const DrawItem& item = drawList.items[itemIndex];
            const Mesh& mesh = *item.mesh;
            uint64_t local = frag->triangleId - drawList.prefixSums[itemIndex];
            ViewTriangle tri = fetchViewTriangle(item, local);

            auto hit = reconstructHit(x, y, tri, params);
            if (!hit) {
                out.at(x, y) = mesh.materialColor;
                st.misses.fetch_add(1, std::memory_order_relaxed);
                continue;
            }
            std::array<uint32_t, 3> vid{mesh.index(3 * local), mesh.index(3 * local + 1), mesh.index(3 * local + 2)};
            float w0 = float(hit->v), w1 = float(hit->s), w2 = float(hit->t);

            Rgbaf color = toFloat(mesh.materialColor);
            bool textured = shading.mode == ShadingMode::Textured && mesh.hasUvs() && mesh.texture &&
                            mesh.texture->levelCount() > 0;
            if (textured) {
                std::array<Vec2, 3> uvs{mesh.uvs[vid[0]], mesh.uvs[vid[1]], mesh.uvs[vid[2]]};
                Vec2 uv = uvs[0] * w0 + uvs[1] * w1 + uvs[2] * w2;
                const Image& base = mesh.texture->levels[0];
                float level = estimateMipLevel(x, y, tri, uvs, base.width, base.height, mesh.texture->levelCount(), params);
                color = toFloat(sampleTexture(*mesh.texture, uv, level, shading.mipFilter));
            } else if (shading.mode != ShadingMode::Flat && mesh.hasVertexColors()) {
                Rgbaf c0 = toFloat(mesh.vertexColors[vid[0]]), c1 = toFloat(mesh.vertexColors[vid[1]]),
                      c2 = toFloat(mesh.vertexColors[vid[2]]);
                color = {c0.r * w0 + c1.r * w1 + c2.r * w2, c0.g * w0 + c1.g * w1 + c2.g * w2,
                         c0.b * w0 + c1.b * w1 + c2.b * w2, c0.a * w0 + c1.a * w1 + c2.a * w2};
            }
            if (shading.headlight) {
                Vec3d n = normalize(cross((tri[1] - tri[0]).as<double>(), (tri[2] - tri[0]).as<double>()));
                Vec3d l = normalize(-hit->viewPoint);
                float k = 0.15f + 0.85f * float(std::abs(dot(n, l)));
                color = {color.r * k, color.g * k, color.b * k, color.a};
            }
            out.at(x, y) = toByte(color);
            st.shaded.fetch_add(1, std::memory_order_relaxed);
        }
    });
    return out;
}

int producingStage(const DrawItem& item, uint64_t localTriangle, const RasterParams& params) {
    ViewTriangle tri = fetchViewTriangle(item, localTriangle);
    Stage1Decision d1 = setupTriangle(tri, params);
    if (d1.route == Stage1Route::Small) return 1;
    if (d1.route == Stage1Route::Cull) return 0;
    Stage2Decision d2 = classifyStage2(tri, params);
    if (d2.route == Stage2Route::Direct) return 2;
    if (d2.route == Stage2Route::Tiles) return 3;
    return 0;
}

Image debugView(const Framebuffer& framebuffer, const DrawList& drawList, const Camera& camera,
                const RasterConfig& raster, DebugView mode, Rgba8 background) {
    RasterParams params = RasterParams::from(camera, raster);
    Image out(framebuffer.width(), framebuffer.height(), background);
    const Rgba8 green{40, 200, 60, 255}, yellow{240, 210, 40, 255}, red{220, 40, 40, 255}, gray{128, 128, 128, 255};

    float minDepth = std::numeric_limits<float>::infinity(), maxDepth = 0.0f;
    if (mode == DebugView::Depth) {
        for (uint64_t w : framebuffer.words()) {
            if (auto f = unpackFragment(w)) {
                minDepth = std::min(minDepth, f->truncatedDepth);
                maxDepth = std::max(maxDepth, f->truncatedDepth);
            }
        }
    }
    double logMin = std::log(double(minDepth)), logRange = std::log(double(maxDepth)) - logMin;

    for (int y = 0; y < framebuffer.height(); ++y) {
        for (int x = 0; x < framebuffer.width(); ++x) {
            auto frag = unpackFragment(framebuffer.at(x, y));
            if (!frag) continue;
            if (frag->triangleId >= drawList.totalTriangles) {
                out.at(x, y) = kInvalidIdColor;
                continue;
            }
            std::size_t itemIndex = findMeshForTriangle(drawList.prefixSums, frag->triangleId);
            uint64_t local = frag->triangleId - drawList.prefixSums[itemIndex];
            const DrawItem& item = drawList.items[itemIndex];
            switch (mode) {
                case DebugView::Depth: {
                    double f = logRange > 0 ? (std::log(double(frag->truncatedDepth)) - logMin) / logRange : 0.0;
                    auto g = static_cast<uint8_t>(std::clamp(255.0 * (1.0 - f), 0.0, 255.0));
                    out.at(x, y) = {g, g, g, 255};
                    break;
                }
                case DebugView::StageId: {
                    int stage = producingStage(item, local, params);
                    out.at(x, y) = stage == 1 ? green : stage == 2 ? yellow : stage == 3 ? red : gray;
                    break;
                }
                case DebugView::BboxSize: {
                    ViewTriangle tri = fetchViewTriangle(item, local);
                    Stage1Decision d1 = setupTriangle(tri, params);
                    int64_t area = d1.setup.nearPlaneCrossing ? classifyStage2(tri, params).clippedBounds.area()
                                                              : d1.setup.bbox.area();
                    out.at(x, y) = area < int64_t(params.smallMaxPx)    ? green
                                   : area < int64_t(params.mediumMaxPx) ? yellow
                                                                        : red;
                    break;
                }
                case DebugView::MeshId: {
                    uint32_t h = hashColor(itemIndex + 1);
                    out.at(x, y) = {uint8_t(64 + (h & 0xBF)), uint8_t(64 + ((h >> 8) & 0xBF)),
                                    uint8_t(64 + ((h >> 16) & 0xBF)), 255};
                    break;
                }
            }
        }
    }
    return out;
}

Image downsample(const Image& image, int factor) {
    TRIRAST_EXPECTS(factor >= 1, "downsample factor must be positive");
    TRIRAST_EXPECTS(image.width % factor == 0 && image.height % factor == 0,
                    "image size must be a multiple of the downsample factor");
    if (factor == 1) return image;
    Image out(image.width / factor, image.height / factor);
    unsigned n = unsigned(factor * factor);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            unsigned sum[4] = {0, 0, 0, 0};
            for (int j = 0; j < factor; ++j) {
                for (int i = 0; i < factor; ++i) {
                    const Rgba8& c = image.at(x * factor + i, y * factor + j);
                    sum[0] += c.r;
                    sum[1] += c.g;
                    sum[2] += c.b;
                    sum[3] += c.a;
                }
            }
            out.at(x, y) = {uint8_t(sum[0] / n), uint8_t(sum[1] / n), uint8_t(sum[2] / n), uint8_t(sum[3] / n)};
        }
    }
    return out;
}

}  // namespace trirast
