#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "trirast/errors.hpp"
#include "trirast/mesh_io.hpp"
#include "trirast/procgen.hpp"

using namespace trirast;

namespace {

Mesh objFrom(const std::string& text) {
    std::istringstream in(text);
    return parseObj(in, "t");
}

std::string nativeBytes(const Mesh& mesh) {
    std::ostringstream out(std::ios::binary);
    writeNativeMesh(out, mesh);
    return out.str();
}

Mesh fromBytes(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    return readNativeMesh(in, "r");
}

std::filesystem::path tempDir() {
    auto dir = std::filesystem::temp_directory_path() / "trirast_mesh_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

Mesh randomMesh(std::mt19937_64& rng, bool uvs, bool colors) {
    std::uniform_real_distribution<float> u(-10.0f, 10.0f);
    std::size_t verts = 3 + rng() % 500;
    std::vector<Vec3> positions(verts);
    for (Vec3& p : positions) p = {u(rng), u(rng), u(rng)};
    std::vector<uint32_t> indices(3 * (1 + rng() % 700));
    for (uint32_t& i : indices) i = uint32_t(rng() % verts);
    Mesh mesh = makeMesh("r", positions, indices);
    if (uvs) {
        mesh.uvs.resize(verts);
        for (Vec2& t : mesh.uvs) t = {u(rng), u(rng)};
    }
    if (colors) {
        mesh.vertexColors.resize(verts);
        for (Rgba8& c : mesh.vertexColors) c = {uint8_t(rng()), uint8_t(rng()), uint8_t(rng()), uint8_t(rng())};
    }
    return mesh;
}

}  // namespace

TEST_CASE("minimal OBJ triangle") {
    Mesh m = objFrom("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    CHECK(m.triangleCount == 1);
    CHECK(m.indices == std::vector<uint32_t>{0, 1, 2});
    CHECK(m.positions.size() == 3);
    CHECK_FALSE(m.hasUvs());
    CHECK_FALSE(m.hasVertexColors());
}

TEST_CASE("OBJ quads are fan triangulated") {
    Mesh m = objFrom("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    CHECK(m.triangleCount == 2);
    CHECK(m.indices == std::vector<uint32_t>{0, 1, 2, 0, 2, 3});
    Mesh pent = objFrom("v 0 0 0\nv 1 0 0\nv 2 1 0\nv 1 2 0\nv 0 1 0\nf 1 2 3 4 5\n");
    CHECK(pent.triangleCount == 3);
}

TEST_CASE("OBJ face forms, negative references, comments and colors") {
    Mesh m = objFrom(
        "# comment\n"
        "o thing\n"
        "v 0 0 0 1 0 0\n"
        "v 1 0 0 0 1 0\n"
        "v 0 1 0 0 0 1\n"
        "vn 0 0 1\n"
        "f -3//1 -2//1 -1//1\n");
    CHECK(m.indices == std::vector<uint32_t>{0, 1, 2});
    REQUIRE(m.hasVertexColors());
    CHECK(m.vertexColors[0] == Rgba8{255, 0, 0, 255});
    CHECK(m.vertexColors[2] == Rgba8{0, 0, 255, 255});
}

TEST_CASE("OBJ texcoords split vertices per (v, vt) pair") {
    Mesh m = objFrom(
        "v 0 0 0\nv 1 0 0\nv 1 1 0\n"
        "vt 0 0\nvt 1 0\nvt 1 1\nvt 0.5 0.5\n"
        "f 1/1 2/2 3/3\n"
        "f 1/4 3/3 2/2\n");
    CHECK(m.triangleCount == 2);
    CHECK(m.positions.size() == 4);
    REQUIRE(m.uvs.size() == 4);
    CHECK(m.uvs[m.indices[3]] == Vec2{0.5f, 0.5f});
    CHECK(m.positions[m.indices[3]] == Vec3{0, 0, 0});
}

TEST_CASE("OBJ errors carry the line number") {
    auto lineOf = [](const std::string& text) {
        try {
            objFrom(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return std::size_t(0);
    };
    CHECK(lineOf("v 0 0 0\nv 1 0\n") == 2);
    CHECK(lineOf("v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1 2 4\n") == 5);
    CHECK(lineOf("v 0 0 x\n") == 1);
    CHECK(lineOf("v 0 0 0\nf 1 1\n") == 2);
    CHECK(lineOf("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/2 2 3\n") == 4);
}

TEST_CASE("native binary round-trip is byte exact") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 40; ++trial) {
        Mesh mesh = randomMesh(rng, trial % 2 == 0, trial % 3 == 0);
        if (trial % 4 == 1) mesh = compressMesh(mesh, {true, false});
        if (trial % 4 == 2) mesh = compressMesh(mesh, {false, true});
        if (trial % 4 == 3) mesh = compressMesh(mesh, {true, true});
        std::string bytes = nativeBytes(mesh);
        Mesh back = fromBytes(bytes);
        REQUIRE(nativeBytes(back) == bytes);
        CHECK(back.triangleCount == mesh.triangleCount);
        CHECK(back.vertexCount() == mesh.vertexCount());
        CHECK(back.packedIndices == mesh.packedIndices);
        CHECK(back.quantized == mesh.quantized);
        CHECK(back.positions == mesh.positions);
        CHECK(back.indices == mesh.indices);
        CHECK(back.uvs == mesh.uvs);
        CHECK(back.vertexColors == mesh.vertexColors);
        CHECK(bytes.size() == nativeMeshSize(mesh));
    }
}

TEST_CASE("native header layout") {
    Mesh m = makeMesh("x", {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {0, 1, 2});
    std::string b = nativeBytes(m);
    REQUIRE(b.size() == 8 + 8 + 8 + 4 + 4 + 3 * 12 + 3 * 4);
    CHECK(b.substr(0, 8) == "TRIMESH1");
    CHECK(uint8_t(b[8]) == 3);   // vertex count, little-endian
    CHECK(uint8_t(b[16]) == 1);  // triangle count
    CHECK(uint8_t(b[24]) == 0);  // flags
    CHECK(uint8_t(b[28]) == 32);  // bits per index when unpacked
}

TEST_CASE("corrupt native files are rejected with an offset") {
    Mesh m = makeMesh("x", {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {0, 1, 2});
    std::string b = nativeBytes(m);
    CHECK_THROWS_AS(fromBytes(b.substr(0, b.size() - 3)), ParseError);
    std::string badMagic = b;
    badMagic[0] = 'X';
    CHECK_THROWS_AS(fromBytes(badMagic), ParseError);
    std::string badIndex = b;
    badIndex[badIndex.size() - 4] = 9;
    try {
        fromBytes(badIndex);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() > 0);
    }
}

TEST_CASE("compression is idempotent and shrinks the payload") {
    Mesh quad = tessellatedQuad(40);
    Mesh once = compressMesh(quad, {true, true});
    Mesh twice = compressMesh(once, {true, true});
    CHECK(nativeBytes(once) == nativeBytes(twice));
    CHECK(nativeMeshSize(once) < nativeMeshSize(quad));
    REQUIRE(once.packedIndices);
    CHECK(once.packedIndices->bitsPerIndex == 11);  // 41 * 41 = 1681 vertices
    for (uint64_t i = 0; i < 3 * quad.triangleCount; ++i) REQUIRE(once.index(i) == quad.indices[i]);
    for (uint32_t v = 0; v < quad.vertexCount(); ++v) {
        Vec3 d = once.position(v) - quad.positions[v];
        REQUIRE(std::abs(d.x) <= 2.0f / 65536);
        REQUIRE(std::abs(d.y) <= 2.0f / 65536);
    }
}

TEST_CASE("indices in [2500, 3000] compress to 9 bits") {
    std::vector<Vec3> positions(3001, Vec3{0, 0, 0});
    std::vector<uint32_t> indices;
    for (uint32_t i = 2500; i <= 2998; i += 3) indices.insert(indices.end(), {i, i + 1, i + 2});
    indices.insert(indices.end(), {3000, 2500, 2750});
    Mesh m = compressMesh(makeMesh("r", positions, indices), {true, false});
    REQUIRE(m.packedIndices);
    CHECK(m.packedIndices->bitsPerIndex == 9);
    CHECK(m.packedIndices->minIndex == 2500);
}

TEST_CASE("files: load OBJ and native, missing files raise IoError") {
    auto dir = tempDir();
    {
        std::ofstream obj(dir / "tri.obj");
        obj << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
    }
    Mesh m = loadMeshAsset(dir / "tri.obj");
    CHECK(m.triangleCount == 1);
    saveNativeMesh(dir / "tri.bin", m);
    Mesh n = loadMeshAsset(dir / "tri.bin");
    CHECK(n.indices == m.indices);
    CHECK(n.positions == m.positions);
    CHECK_THROWS_AS(loadMeshAsset(dir / "missing.obj"), IoError);
}

TEST_CASE("PPM and PNG round trips") {
    auto dir = tempDir();
    Image img(7, 5);
    std::mt19937_64 rng(3);
    for (Rgba8& p : img.pixels) p = {uint8_t(rng()), uint8_t(rng()), uint8_t(rng()), 255};
    saveImage(dir / "a.ppm", img);
    CHECK(loadImage(dir / "a.ppm") == img);
    saveImage(dir / "a.png", img);
    CHECK(loadImage(dir / "a.png") == img);
    std::ostringstream ppm;
    writePpm(ppm, img);
    CHECK(ppm.str().rfind("P6\n7 5\n255\n", 0) == 0);
    CHECK_THROWS_AS(loadImage(dir / "nope.png"), IoError);
}
