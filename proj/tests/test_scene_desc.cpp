#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "support.hpp"
#include "trirast/errors.hpp"
#include "trirast/mesh_io.hpp"
#include "trirast/scene_desc.hpp"

using namespace trirast;

namespace {

SceneDescription randomDescription(std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(-10.0f, 10.0f);
    auto vec = [&] { return Vec3{u(rng), u(rng), u(rng)}; };
    SceneDescription d;
    int meshes = 1 + int(rng() % 3);
    for (int m = 0; m < meshes; ++m) {
        MeshDecl decl{"mesh" + std::to_string(m), "m" + std::to_string(m) + ".trimesh", "", std::nullopt};
        if (rng() % 2) decl.texture = "tex.png";
        if (rng() % 2) decl.color = Rgba8{uint8_t(rng()), uint8_t(rng()), uint8_t(rng()), uint8_t(rng())};
        d.meshes.push_back(decl);
    }
    int nodes = 1 + int(rng() % 4);
    for (int n = 0; n < nodes; ++n) {
        NodeDecl node;
        node.mesh = d.meshes[rng() % d.meshes.size()].name;
        int transforms = int(rng() % 3);
        for (int t = 0; t < transforms; ++t) {
            TransformSpec spec;
            if (rng() % 3 == 0) {
                Mat4 m;
                for (int i = 0; i < 16; ++i) m.m[i] = u(rng);
                spec.matrix = m;
            } else {
                spec.translate = vec();
                spec.rotateDegrees = vec();
                spec.scale = vec();
            }
            node.transforms.push_back(spec);
        }
        if (rng() % 2) node.grid = GridSpec{1 + rng() % 50, 1 + rng() % 60, u(rng)};
        d.nodes.push_back(node);
    }
    d.camera.position = vec();
    d.camera.lookAt = vec();
    d.camera.fovyDegrees = 10 + float(rng() % 150);
    d.camera.nearDistance = 0.01f + float(rng() % 100) / 100;
    d.camera.width = 1 + int(rng() % 4000);
    d.camera.height = 1 + int(rng() % 4000);
    d.camera.superSampling = 1 << (rng() % 3);
    d.raster.smallMaxPx = 1 + uint32_t(rng() % 1000);
    d.raster.tilePx = 1 + uint32_t(rng() % 128);
    d.raster.workers = unsigned(rng() % 9);
    d.raster.tinyCull = rng() % 2;
    d.raster.forceStage = int(rng() % 4);
    d.raster.instancing = Instancing(rng() % 3);
    d.raster.stage3Capacity = rng() % 100000;
    d.shading.mode = ShadingMode(rng() % 3);
    d.shading.headlight = rng() % 2;
    d.shading.mipFilter = MipFilter(rng() % 2);
    d.shading.background = {uint8_t(rng()), uint8_t(rng()), uint8_t(rng()), 255};
    return d;
}

std::string minimalScene(const std::string& extra = "", const std::string& camera = "") {
    return R"({"meshes": [{"name": "m", "path": "m.trimesh"}], "nodes": [{"mesh": "m")" + extra + R"(}])" +
           (camera.empty() ? "" : ", \"camera\": " + camera) + "}";
}

Vec3 rotateX(Vec3 p, double deg) {
    double r = deg * std::numbers::pi / 180, c = std::cos(r), s = std::sin(r);
    return {p.x, float(c * p.y - s * p.z), float(s * p.y + c * p.z)};
}
Vec3 rotateY(Vec3 p, double deg) {
    double r = deg * std::numbers::pi / 180, c = std::cos(r), s = std::sin(r);
    return {float(c * p.x + s * p.z), p.y, float(-s * p.x + c * p.z)};
}
Vec3 rotateZ(Vec3 p, double deg) {
    double r = deg * std::numbers::pi / 180, c = std::cos(r), s = std::sin(r);
    return {float(c * p.x - s * p.y), float(s * p.x + c * p.y), p.z};
}

}  // namespace

TEST_CASE("scene descriptions round-trip through JSON") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        SceneDescription d = randomDescription(rng);
        std::string text = serializeSceneDescription(d);
        SceneDescription back = parseSceneDescription(text);
        REQUIRE(back == d);
        REQUIRE(serializeSceneDescription(back) == text);
    }
}

TEST_CASE("defaults apply to omitted sections") {
    SceneDescription d = parseSceneDescription(minimalScene());
    CHECK(d.raster == RasterConfig{});
    CHECK(d.shading == ShadingConfig{});
    CHECK(d.camera == CameraDecl{});
    REQUIRE(d.nodes.size() == 1);
    CHECK(d.nodes[0].instanceCount() == 1);
    CHECK(d.nodes[0].expandTransforms() == std::vector<Mat4>{Mat4::identity()});
}

TEST_CASE("malformed scenes raise ParseError") {
    CHECK_THROWS_AS(parseSceneDescription("{"), ParseError);
    CHECK_THROWS_AS(parseSceneDescription("[]"), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(R"({"nodes": []})"), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(R"({"meshes": [{"name": "m", "path": "x"}], "nodes": [{"mesh": "q"}]})"),
                    ParseError);
    CHECK_THROWS_AS(parseSceneDescription(minimalScene(R"(, "grid": {"countX": 0, "countY": 3})")), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(minimalScene(R"(, "transforms": [{"matrix": [1, 2]}])")), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(minimalScene(R"(, "transforms": [{"translate": [1, 2]}])")), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(minimalScene("", R"({"superSampling": 3})")), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(minimalScene("", R"({"fovyDegrees": 180})")), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(minimalScene("", R"({"near": 0})")), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(minimalScene("", R"({"width": -4})")), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(minimalScene("", R"({"width": "wide"})")), ParseError);
    std::string base = minimalScene();
    base.pop_back();
    CHECK_THROWS_AS(parseSceneDescription(base + R"(, "raster": {"forceStage": 4}})"), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(base + R"(, "raster": {"instancing": "maybe"}})"), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(base + R"(, "shading": {"mode": "phong"}})"), ParseError);
    CHECK_THROWS_AS(parseSceneDescription(base + R"(, "shading": {"background": [1, 2, 300]}})"), ParseError);
}

TEST_CASE("TRS order is translate * Rz * Ry * Rx * scale") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> u(-3.0f, 3.0f);
    for (int trial = 0; trial < 100; ++trial) {
        TransformSpec spec;
        spec.translate = {u(rng), u(rng), u(rng)};
        spec.rotateDegrees = {u(rng) * 60, u(rng) * 60, u(rng) * 60};
        spec.scale = {u(rng), u(rng), u(rng)};
        Vec3 p{u(rng), u(rng), u(rng)};
        Vec3 expected = rotateZ(rotateY(rotateX(Vec3{p.x * spec.scale.x, p.y * spec.scale.y, p.z * spec.scale.z}, spec.rotateDegrees.x), spec.rotateDegrees.y),
                                spec.rotateDegrees.z) +
                        spec.translate;
        Vec3 got = spec.toMatrix().transformPoint(p);
        for (int a = 0; a < 3; ++a) REQUIRE(got[a] == doctest::Approx(expected[a]).epsilon(1e-4));
    }
}

TEST_CASE("grid replication") {
    NodeDecl node;
    TransformSpec a, b;
    a.translate = {0, 1, 0};
    b.scale = {2, 2, 2};
    node.transforms = {a, b};
    node.grid = GridSpec{3, 2, 5.0f};
    CHECK(node.instanceCount() == 12);
    auto transforms = node.expandTransforms();
    REQUIRE(transforms.size() == 12);
    std::set<std::array<float, 3>> origins;
    for (const Mat4& m : transforms) {
        Vec3 o = m.transformPoint({0, 0, 0});
        origins.insert({o.x, o.y, o.z});
        CHECK(std::fmod(o.x, 5.0f) == 0.0f);
        CHECK(std::fmod(o.z, 5.0f) == 0.0f);
    }
    CHECK(origins.size() == 12);
    // The offset applies after the base transform: scaling does not scale the offset.
    for (const Mat4& m : transforms) {
        Vec3 o = m.transformPoint({0, 0, 0});
        CHECK((o.y == 0.0f || o.y == 1.0f));
        CHECK(o.x <= 10.0f);
        CHECK(o.z <= 5.0f);
    }
}

TEST_CASE("declared instance counts are checked before expansion") {
    auto mesh = std::make_shared<Mesh>(makeMesh("m", {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}},
                                                std::vector<uint32_t>(3u << 20, 0u)));
    SceneDescription d = parseSceneDescription(minimalScene(R"(, "grid": {"countX": 4096, "countY": 4096})"));
    CHECK_THROWS_AS(instantiateNodes(d, {mesh}), CapacityError);
    d = parseSceneDescription(minimalScene(R"(, "grid": {"countX": 4294967296, "countY": 4294967296})"));
    CHECK_THROWS_AS(instantiateNodes(d, {mesh}), CapacityError);
    d = parseSceneDescription(minimalScene(R"(, "grid": {"countX": 4, "countY": 4})"));
    auto nodes = instantiateNodes(d, {mesh});
    REQUIRE(nodes.size() == 1);
    CHECK(nodes[0].transforms.size() == 16);
}

TEST_CASE("loadScene resolves paths relative to the scene file") {
    auto dir = std::filesystem::temp_directory_path() / "trirast_scene_desc_test";
    std::filesystem::remove_all(dir);
    GeneratedScene g = genTessellatedQuad(3, 32, 32);
    writeGeneratedScene(dir, g);
    auto cwd = std::filesystem::current_path();
    std::filesystem::current_path(std::filesystem::temp_directory_path());
    LoadedScene loaded = loadScene(dir / "scene.json");
    std::filesystem::current_path(cwd);
    REQUIRE(loaded.nodes.size() == 1);
    CHECK(loaded.nodes[0].mesh->triangleCount == 18);
    CHECK(loaded.nodes[0].mesh->texture);
    CHECK(loaded.loadMs >= 0.0);
    CHECK(renderFrame(loaded.nodes, loaded.camera, loaded.description.raster).framebuffer ==
          renderFrame(g.nodes(), g.camera(), g.description.raster).framebuffer);

    std::ofstream(dir / "broken.json") << minimalScene();
    CHECK_THROWS_AS(loadScene(dir / "broken.json"), IoError);
    CHECK_THROWS_AS(loadScene(dir / "absent.json"), IoError);
}
