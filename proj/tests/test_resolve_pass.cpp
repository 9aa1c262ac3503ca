#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cstring>
#include <random>
#include <set>

#include "support.hpp"
#include "trirast/resolve_pass.hpp"

using namespace trirast;
using test::originCamera;
using test::pixelTriangle;

namespace {

std::size_t linearFind(const std::vector<uint64_t>& sums, uint64_t id) {
    for (std::size_t m = 0; m + 1 < sums.size(); ++m) {
        if (sums[m] <= id && id < sums[m + 1]) return m;
    }
    return ~std::size_t(0);
}

int32_t floatBits(float f) {
    int32_t u;
    std::memcpy(&u, &f, sizeof u);
    return u;
}

struct Rendered {
    std::vector<SceneNode> nodes;
    Camera camera;
    FrameResult frame;
};

Rendered renderMesh(std::shared_ptr<Mesh> mesh, const Camera& camera) {
    Rendered r{test::sceneOf(mesh), camera, {}};
    r.frame = renderFrame(r.nodes, camera, RasterConfig{});
    return r;
}

}  // namespace

TEST_CASE("findMeshForTriangle examples") {
    std::vector<uint64_t> sums{0, 100, 350, 400};
    CHECK(findMeshForTriangle(sums, 0) == 0);
    CHECK(findMeshForTriangle(sums, 99) == 0);
    CHECK(findMeshForTriangle(sums, 100) == 1);
    CHECK(findMeshForTriangle(sums, 349) == 1);
    CHECK(findMeshForTriangle(sums, 350) == 2);
    CHECK(findMeshForTriangle(sums, 399) == 2);
    CHECK_THROWS_AS(findMeshForTriangle(sums, 400), ContractViolation);
}

TEST_CASE("findMeshForTriangle matches a linear scan within the probe bound") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10000; ++trial) {
        std::size_t items = 1 + rng() % 300;
        std::vector<uint64_t> sums{0};
        for (std::size_t i = 0; i < items; ++i) sums.push_back(sums.back() + 1 + rng() % 1000);
        uint64_t id = rng() % sums.back();
        int probes = 0;
        REQUIRE(findMeshForTriangle(sums, id, &probes) == linearFind(sums, id));
        REQUIRE(probes <= int(std::bit_width(items)));  // ceil(log2(items + 1))
    }
}

TEST_CASE("reconstructHit at a vertex and at the centroid") {
    Camera camera = originCamera(64, 64);
    RasterParams params = RasterParams::from(camera, RasterConfig{});
    ViewTriangle tri = pixelTriangle(camera, {{{10.5f, 10.5f}, {10.5f, 40.5f}, {40.5f, 10.5f}}}, {2.0f, 3.0f, 5.0f});
    auto hit = reconstructHit(10, 10, tri, params);
    REQUIRE(hit);
    CHECK(hit->v == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(std::abs(hit->viewPoint.x - tri[0].x) < 1e-4);
    CHECK(std::abs(hit->viewPoint.y - tri[0].y) < 1e-4);
    CHECK(std::abs(hit->viewPoint.z - tri[0].z) < 1e-4);
    CHECK(hit->depth == doctest::Approx(2.0).epsilon(1e-5));

    ViewTriangle flat = pixelTriangle(camera, {{{5.5f, 5.5f}, {5.5f, 35.5f}, {35.5f, 5.5f}}}, 4.0f);
    auto c = reconstructHit(15, 15, flat, params);
    REQUIRE(c);
    CHECK(std::abs(c->s - 1.0 / 3) < 1e-3);
    CHECK(std::abs(c->t - 1.0 / 3) < 1e-3);
    CHECK(std::abs(c->v - 1.0 / 3) < 1e-3);
    CHECK(std::abs(c->s + c->t + c->v - 1.0) < 1e-12);
}

TEST_CASE("reconstructed depth agrees with the rasterized depth") {
    uint64_t checked = 0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        GeneratedScene g = genRandomScene(seed, 3000);
        auto nodes = g.nodes();
        Camera camera = g.camera();
        RasterParams params = RasterParams::from(camera, RasterConfig{});
        FrameResult r = renderFrame(nodes, camera, RasterConfig{});
        const DrawList& list = r.drawList;
        for (int y = 0; y < r.framebuffer.height(); y += 3) {
            for (int x = 0; x < r.framebuffer.width(); x += 3) {
                auto f = unpackFragment(r.framebuffer.at(x, y));
                if (!f) continue;
                std::size_t item = findMeshForTriangle(list.prefixSums, f->triangleId);
                ViewTriangle tri = fetchViewTriangle(list.items[item], f->triangleId - list.prefixSums[item]);
                auto hit = reconstructHit(x, y, tri, params);
                REQUIRE(hit);
                // Within one truncation step (8 ULPs) plus 4 ULPs.
                int32_t diff = floatBits(float(hit->depth)) - floatBits(f->truncatedDepth);
                REQUIRE(diff >= -4);
                REQUIRE(diff < 8 + 4);
                ++checked;
            }
        }
    }
    CHECK(checked > 10000);
}

namespace {

// Head-on quad of side 2 at distance d with UVs over [0, 1] and a square texture.
float quadMipLevel(float distance, int texSize, const Camera& camera) {
    RasterParams params = RasterParams::from(camera, RasterConfig{});
    ViewTriangle tri{{{-1, -1, -distance}, {1, -1, -distance}, {-1, 1, -distance}}};
    std::array<Vec2, 3> uvs{{{0, 0}, {1, 0}, {0, 1}}};
    int levels = std::bit_width(unsigned(texSize));
    return estimateMipLevel(camera.renderWidth() / 2 - 3, camera.renderHeight() / 2 - 3, tri, uvs, texSize, texSize,
                            levels, params);
}

}  // namespace

TEST_CASE("mip level from the texel footprint") {
    // 90-degree camera, 64 px: a pixel spans 2d/64 world units, the quad maps
    // 128 texels per unit, so texels per pixel = 4d.
    Camera camera = originCamera(64, 64);
    CHECK(std::abs(quadMipLevel(0.25f, 256, camera) - 0.0f) <= 0.5f);
    CHECK(std::abs(quadMipLevel(0.5f, 256, camera) - 1.0f) <= 0.5f);
    CHECK(std::abs(quadMipLevel(1.0f, 256, camera) - 2.0f) <= 0.5f);
    float previous = -1;
    for (int i = 0; i < 20; ++i) {
        float level = quadMipLevel(0.1f * std::pow(1.3f, float(i)), 256, camera);
        CHECK(level >= previous);
        previous = level;
    }
    CHECK(quadMipLevel(0.01f, 256, camera) == 0.0f);
    CHECK(quadMipLevel(1000.0f, 256, camera) == 8.0f);
}

TEST_CASE("empty framebuffer resolves to the background") {
    Camera camera = originCamera(16, 8);
    Framebuffer fb(16, 8);
    DrawList list = makeDrawList({});
    ShadingConfig shading;
    shading.background = {1, 2, 3, 255};
    Image img = resolveFrame(fb, list, camera, shading);
    CHECK(img == Image(16, 8, shading.background));
}

TEST_CASE("flat shading covers exactly the non-clear pixels") {
    Camera camera = originCamera(64, 64);
    auto mesh = test::meshOf({pixelTriangle(camera, {{{3, 4}, {10, 60}, {58, 20}}}, {2.0f, 4.0f, 3.0f})});
    mesh->materialColor = {10, 220, 30, 255};
    Rendered r = renderMesh(mesh, camera);
    ShadingConfig shading;
    shading.mode = ShadingMode::Flat;
    Image img = resolveFrame(r.frame.framebuffer, r.frame.drawList, camera, shading);
    std::size_t covered = 0;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            bool hit = r.frame.framebuffer.at(x, y) != kClearFragment;
            covered += hit;
            REQUIRE(img.at(x, y) == (hit ? mesh->materialColor : shading.background));
        }
    }
    CHECK(covered > 500);
}

TEST_CASE("vertex colors interpolate to the centroid") {
    Camera camera = originCamera(64, 64);
    // Sample (30.5, 30.5) is the centroid of the projected triangle.
    auto mesh = test::meshOf({pixelTriangle(camera, {{{10.5f, 10.5f}, {10.5f, 70.5f}, {70.5f, 10.5f}}}, 3.0f)});
    mesh->vertexColors = {{255, 0, 0, 255}, {0, 255, 0, 255}, {0, 0, 255, 255}};
    Rendered r = renderMesh(mesh, camera);
    ShadingConfig shading;
    shading.mode = ShadingMode::VertexColor;
    Image img = resolveFrame(r.frame.framebuffer, r.frame.drawList, camera, shading);
    Rgba8 c = img.at(30, 30);
    CHECK(std::abs(int(c.r) - 85) <= 2);
    CHECK(std::abs(int(c.g) - 85) <= 2);
    CHECK(std::abs(int(c.b) - 85) <= 2);
    CHECK(c.a == 255);
}

TEST_CASE("textured shading samples the mip chain") {
    Camera camera = originCamera(64, 64);
    GeneratedScene g = genTessellatedQuad(4, 64, 64);
    auto nodes = g.nodes();
    FrameResult r = renderFrame(nodes, g.camera(), RasterConfig{});
    Image img = resolveFrame(r.framebuffer, r.drawList, g.camera(), ShadingConfig{});
    std::set<std::array<uint8_t, 3>> colors;
    for (const Rgba8& p : img.pixels) colors.insert({p.r, p.g, p.b});
    CHECK(colors.size() >= 3);
}

TEST_CASE("stage-ID debug view") {
    SUBCASE("all-small scene is a single color over the background") {
        Camera camera = originCamera(64, 64);
        std::vector<ViewTriangle> tris;
        for (int k = 0; k < 6; ++k) {
            float x = 4.0f + 9.0f * k;
            tris.push_back(pixelTriangle(camera, {{{x, 10}, {x, 17}, {x + 7, 10}}}, 2.0f));
        }
        Rendered r = renderMesh(test::meshOf(tris), camera);
        Rgba8 bg{1, 1, 1, 255};
        Image img = debugView(r.frame.framebuffer, r.frame.drawList, camera, RasterConfig{}, DebugView::StageId, bg);
        std::set<std::array<uint8_t, 4>> colors;
        for (int y = 0; y < 64; ++y) {
            for (int x = 0; x < 64; ++x) {
                Rgba8 p = img.at(x, y);
                if (r.frame.framebuffer.at(x, y) == kClearFragment) {
                    REQUIRE(p == bg);
                } else {
                    colors.insert({p.r, p.g, p.b, p.a});
                }
            }
        }
        CHECK(colors.size() == 1);
    }
    SUBCASE("classifier scene shows three stage colors") {
        GeneratedScene g = genClassifierScene();
        auto nodes = g.nodes();
        FrameResult r = renderFrame(nodes, g.camera(), RasterConfig{});
        Rgba8 bg{1, 1, 1, 255};
        Image img = debugView(r.framebuffer, r.drawList, g.camera(), RasterConfig{}, DebugView::StageId, bg);
        std::set<std::array<uint8_t, 4>> colors;
        for (std::size_t p = 0; p < img.pixels.size(); ++p) {
            const Rgba8& c = img.pixels[p];
            if (r.framebuffer.words()[p] == kClearFragment) {
                REQUIRE(c == bg);
            } else {
                colors.insert({c.r, c.g, c.b, c.a});
            }
        }
        CHECK(colors.size() == 3);
    }
}

TEST_CASE("other debug views keep the background and are deterministic") {
    GeneratedScene g = genClassifierScene();
    auto nodes = g.nodes();
    FrameResult r = renderFrame(nodes, g.camera(), RasterConfig{});
    for (DebugView mode : {DebugView::Depth, DebugView::BboxSize, DebugView::MeshId}) {
        Rgba8 bg{7, 7, 7, 255};
        Image a = debugView(r.framebuffer, r.drawList, g.camera(), RasterConfig{}, mode, bg);
        Image b = debugView(r.framebuffer, r.drawList, g.camera(), RasterConfig{}, mode, bg);
        CHECK(a == b);
        for (std::size_t p = 0; p < a.pixels.size(); ++p) {
            if (r.framebuffer.words()[p] == kClearFragment) REQUIRE(a.pixels[p] == bg);
        }
    }
}

TEST_CASE("downsample box filter") {
    Image img(4, 4);
    std::mt19937_64 rng(1);
    for (Rgba8& p : img.pixels) p = {uint8_t(rng()), uint8_t(rng()), uint8_t(rng()), uint8_t(rng())};
    CHECK(downsample(img, 1) == img);

    Rgba8 c{9, 99, 199, 255};
    CHECK(downsample(Image(8, 8, c), 4) == Image(2, 2, c));

    Image block(2, 2);
    block.pixels = {{0, 0, 0, 0}, {0, 0, 0, 0}, {255, 255, 255, 255}, {255, 255, 255, 255}};
    CHECK(downsample(block, 2).at(0, 0) == Rgba8{127, 127, 127, 127});

    CHECK_THROWS_AS(downsample(Image(5, 4), 2), ContractViolation);
}

TEST_CASE("downsample output lies within each block's range") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        int factor = 1 << (rng() % 3);
        Image img(8, 8);
        for (Rgba8& p : img.pixels) p = {uint8_t(rng()), uint8_t(rng()), uint8_t(rng()), uint8_t(rng())};
        Image out = downsample(img, factor);
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                for (int ch = 0; ch < 4; ++ch) {
                    int lo = 255, hi = 0;
                    for (int j = 0; j < factor; ++j) {
                        for (int i = 0; i < factor; ++i) {
                            const Rgba8& p = img.at(x * factor + i, y * factor + j);
                            int v = ch == 0 ? p.r : ch == 1 ? p.g : ch == 2 ? p.b : p.a;
                            lo = std::min(lo, v);
                            hi = std::max(hi, v);
                        }
                    }
                    const Rgba8& q = out.at(x, y);
                    int v = ch == 0 ? q.r : ch == 1 ? q.g : ch == 2 ? q.b : q.a;
                    REQUIRE(v >= lo);
                    REQUIRE(v <= hi);
                }
            }
        }
    }
}

TEST_CASE("resolve is a pure function of its inputs") {
    GeneratedScene g = genLanternGrid(3, 2, 400, 96, 64);
    auto nodes = g.nodes();
    FrameResult r = renderFrame(nodes, g.camera(), RasterConfig{});
    const Framebuffer before = r.framebuffer;
    ShadingConfig shading;
    shading.headlight = true;
    shading.mipFilter = MipFilter::Trilinear;
    Image serial = resolveFrame(r.framebuffer, r.drawList, g.camera(), shading);
    WorkerPool pool(4);
    ResolveStats stats;
    Image parallel = resolveFrame(r.framebuffer, r.drawList, g.camera(), shading, &stats, &pool);
    CHECK(serial == parallel);
    CHECK(r.framebuffer == before);
    CHECK(stats.shaded + stats.background + stats.misses == uint64_t(r.framebuffer.size()));
    CHECK(stats.invalidIds == 0);
}

TEST_CASE("out-of-range IDs resolve to the diagnostic color") {
    Camera camera = originCamera(8, 8);
    auto mesh = test::meshOf({pixelTriangle(camera, {{{1, 1}, {1, 5}, {5, 1}}}, 2.0f)});
    Rendered r = renderMesh(mesh, camera);
    Framebuffer fb = r.frame.framebuffer;
    fb.mergeSerial(7 * 8 + 7, packFragment(1.0f, 999));
    Image img = resolveFrame(fb, r.frame.drawList, camera, ShadingConfig{});
    CHECK(img.at(7, 7) == kInvalidIdColor);
}
