#include "trirast/procgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "trirast/errors.hpp"
#include "trirast/mesh_io.hpp"
#include "trirast/raster_pipe.hpp"

namespace trirast {

namespace {

constexpr double kPi = std::numbers::pi;

Rgba8 colorFromNormal(const Vec3& n) {
    auto c = [](float v) { return static_cast<uint8_t>(std::clamp((v * 0.5f + 0.5f) * 255.0f + 0.5f, 0.0f, 255.0f)); };
    return {c(n.x), c(n.y), c(n.z), 255};
}

float signedPixelArea(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (c.x - a.x) * (b.y - a.y) - (b.x - a.x) * (c.y - a.y);
}

// Accumulates triangles given in pixel space or view space and emits world-space meshes.
class TriangleBuilder {
public:
    explicit TriangleBuilder(const Camera& camera) : camera_(camera), viewToWorld_(camera.viewTransform.affineInverse()) {}

    void addView(const Vec3& a, const Vec3& b, const Vec3& c) {
        for (const Vec3& v : {a, b, c}) {
            indices_.push_back(static_cast<uint32_t>(positions_.size()));
            positions_.push_back(viewToWorld_.transformPoint(v));
        }
    }

    void addPixel(Vec2 a, Vec2 b, Vec2 c, float da, float db, float dc, bool frontFacing) {
        if ((signedPixelArea(a, b, c) > 0) != frontFacing) {
            std::swap(b, c);
            std::swap(db, dc);
        }
        addView(unprojectPixel(camera_, a.x, a.y, da), unprojectPixel(camera_, b.x, b.y, db),
                unprojectPixel(camera_, c.x, c.y, dc));
    }

    uint64_t triangleCount() const { return indices_.size() / 3; }

    Mesh build(std::string name, const Mat4& worldToObject = Mat4::identity()) {
        std::vector<Vec3> positions = std::move(positions_);
        for (Vec3& p : positions) p = worldToObject.transformPoint(p);
        Mesh mesh = makeMesh(std::move(name), std::move(positions), std::move(indices_));
        positions_.clear();
        indices_.clear();
        return mesh;
    }

private:
    Camera camera_;
    Mat4 viewToWorld_;
    std::vector<Vec3> positions_;
    std::vector<uint32_t> indices_;
};

CameraDecl cameraDecl(Vec3 position, Vec3 lookAt, int width, int height, float fovyDegrees = 60.0f,
                      float nearDistance = 0.1f) {
    CameraDecl c;
    c.position = position;
    c.lookAt = lookAt;
    c.fovyDegrees = fovyDegrees;
    c.nearDistance = nearDistance;
    c.width = width;
    c.height = height;
    return c;
}

TransformSpec matrixSpec(const Mat4& m) {
    TransformSpec t;
    t.matrix = m;
    return t;
}

void addMesh(GeneratedScene& scene, Mesh mesh) {
    MeshDecl decl;
    decl.name = mesh.name;
    decl.color = mesh.materialColor;
    scene.description.meshes.push_back(decl);
    scene.meshes.push_back(std::make_shared<Mesh>(std::move(mesh)));
}

void colorByNormal(Mesh& mesh) {
    mesh.vertexColors.resize(mesh.positions.size());
    for (std::size_t i = 0; i < mesh.positions.size(); ++i) mesh.vertexColors[i] = colorFromNormal(normalize(mesh.positions[i]));
}

}  // namespace

Mesh tessellatedQuad(int n, float size) {
    TRIRAST_EXPECTS(n >= 1, "tessellatedQuad needs n >= 1");
    std::vector<Vec3> positions;
    std::vector<Vec2> uvs;
    std::vector<uint32_t> indices;
    positions.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            float u = float(i) / float(n), v = float(j) / float(n);
            positions.push_back({(u - 0.5f) * size, (v - 0.5f) * size, 0.0f});
            uvs.push_back({u, v});
        }
    }
    auto at = [n](int i, int j) { return static_cast<uint32_t>(j * (n + 1) + i); };
    indices.reserve(static_cast<std::size_t>(n) * n * 6);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            indices.insert(indices.end(), {at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            indices.insert(indices.end(), {at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    }
    Mesh mesh = makeMesh("quad", std::move(positions), std::move(indices));
    mesh.uvs = std::move(uvs);
    return mesh;
}

Mesh uvSphere(uint64_t targetTriangles, float radius) {
    // 2k(s - 1) triangles with k = 2s slices and s stacks.
    int stacks = std::max(3, static_cast<int>(std::lround(std::sqrt(double(targetTriangles) / 4.0) + 0.5)));
    int slices = 2 * stacks;
    std::vector<Vec3> positions;
    std::vector<Vec2> uvs;
    for (int i = 0; i <= stacks; ++i) {
        double theta = kPi * i / stacks;
        for (int j = 0; j <= slices; ++j) {
            double phi = 2 * kPi * j / slices;
            positions.push_back(Vec3d{std::sin(theta) * std::cos(phi), std::cos(theta), -std::sin(theta) * std::sin(phi)}
                                    .as<float>() *
                                radius);
            uvs.push_back({float(j) / float(slices), 1.0f - float(i) / float(stacks)});
        }
    }
    auto at = [slices](int i, int j) { return static_cast<uint32_t>(i * (slices + 1) + j); };
    std::vector<uint32_t> indices;
    auto emit = [&](uint32_t a, uint32_t b, uint32_t c) {
        Vec3 n = cross(positions[b] - positions[a], positions[c] - positions[a]);
        if (dot(n, positions[a] + positions[b] + positions[c]) < 0) std::swap(b, c);
        indices.insert(indices.end(), {a, b, c});
    };
    for (int i = 0; i < stacks; ++i) {
        for (int j = 0; j < slices; ++j) {
            if (i != 0) emit(at(i, j), at(i + 1, j), at(i, j + 1));
            if (i != stacks - 1) emit(at(i, j + 1), at(i + 1, j), at(i + 1, j + 1));
        }
    }
    Mesh mesh = makeMesh("sphere", std::move(positions), std::move(indices));
    mesh.uvs = std::move(uvs);
    colorByNormal(mesh);
    return mesh;
}

Image checkerTexture(int size, int cells, Rgba8 a, Rgba8 b) {
    Image image;
    image.width = size;
    image.height = size;
    image.pixels.resize(static_cast<std::size_t>(size) * size);
    int cell = std::max(1, size / std::max(1, cells));
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) image.at(x, y) = ((x / cell + y / cell) % 2) ? b : a;
    }
    return image;
}

Vec3 unprojectPixel(const Camera& camera, double px, double py, double depth) {
    Vec3 p = projectionVector(camera);
    double ndcX = 2.0 * px / camera.renderWidth() - 1.0;
    double ndcY = 1.0 - 2.0 * py / camera.renderHeight();
    return Vec3d{ndcX * depth / p.x, ndcY * depth / p.y, -depth}.as<float>();
}

uint64_t GeneratedScene::triangleCount() const {
    uint64_t total = 0;
    for (const SceneNode& node : nodes()) total += node.mesh->triangleCount * node.transforms.size();
    return total;
}

GeneratedScene genTessellatedQuad(int n, int width, int height) {
    GeneratedScene scene;
    scene.description.camera = cameraDecl({0, 0, 2.2f}, {0, 0, 0}, width, height);
    Mesh quad = tessellatedQuad(n);
    quad.texture = std::make_shared<MipChain>(buildMipChain(checkerTexture(256, 8)));
    addMesh(scene, std::move(quad));
    scene.description.nodes.push_back({"quad", {}, std::nullopt});
    return scene;
}

GeneratedScene genSpheres(int count, uint64_t trianglesPerSphere, uint64_t seed, int width, int height) {
    GeneratedScene scene;
    scene.description.camera = cameraDecl({0, 0, 0}, {0, 0, -1}, width, height);
    addMesh(scene, uvSphere(trianglesPerSphere));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    NodeDecl node{"sphere", {}, std::nullopt};
    for (int i = 0; i < count; ++i) {
        TransformSpec t;
        float depth = 4.0f + 20.0f * unit(rng);
        t.translate = {(unit(rng) - 0.5f) * depth, (unit(rng) - 0.5f) * depth * 0.75f, -depth};
        t.rotateDegrees = {360 * unit(rng), 360 * unit(rng), 360 * unit(rng)};
        float s = 0.3f + 1.2f * unit(rng);
        t.scale = {s, s, s};
        node.transforms.push_back(t);
    }
    scene.description.nodes.push_back(node);
    return scene;
}

GeneratedScene genClassifierScene(int width, int height) {
    GeneratedScene scene;
    scene.description.camera = cameraDecl({0, 0, 0}, {0, 0, -1}, width, height);
    scene.description.shading.mode = ShadingMode::VertexColor;
    Camera camera = scene.description.camera.toCamera();
    TriangleBuilder builder(camera);
    auto right = [&](float x, float y, float legs, float depth) {
        builder.addPixel({x, y}, {x, y + legs}, {x + legs, y + legs}, depth, depth, depth, true);
    };
    float w = float(width), h = float(height);
    for (int i = 0; i < 8; ++i) right(0.05f * w + 12.0f * i, 0.05f * h, 8.0f, 3.0f);         // stage 1
    for (int i = 0; i < 4; ++i) right(0.05f * w + 50.0f * i, 0.25f * h, 40.0f, 4.0f);         // stage 2
    right(0.55f * w, 0.1f * h, std::min(w, h) * 0.4f, 6.0f);                                  // stage 3
    right(0.1f * w, 0.55f * h, std::min(w, h) * 0.35f, 7.0f);
    Vec3 far0 = unprojectPixel(camera, 0.6f * w, 0.9f * h, 2.0);
    Vec3 far1 = unprojectPixel(camera, 0.95f * w, 0.7f * h, 2.0);
    Vec3 nearV{far0.x * 0.02f, far0.y * 0.02f, -0.5f * camera.nearDistance};
    builder.addView(nearV, far1, far0);  // crosses the near plane
    Mesh mesh = builder.build("classifier");
    mesh.vertexColors.resize(mesh.positions.size());
    for (std::size_t i = 0; i < mesh.vertexColors.size(); ++i) {
        static constexpr Rgba8 palette[3] = {{230, 60, 60, 255}, {60, 200, 60, 255}, {60, 90, 230, 255}};
        mesh.vertexColors[i] = palette[i % 3];
    }
    addMesh(scene, std::move(mesh));
    scene.description.nodes.push_back({"classifier", {}, std::nullopt});
    return scene;
}

GeneratedScene genLanternGrid(int countX, int countY, uint64_t trianglesPerLantern, int width, int height) {
    GeneratedScene scene;
    const float spacing = 2.0f;
    float extent = float(std::max(countX, countY)) * spacing;
    scene.description.camera = cameraDecl({0, extent * 0.45f, extent * 0.75f + 3.0f}, {0, 0, 0}, width, height);
    Mesh lantern = uvSphere(trianglesPerLantern, 1.0f);
    for (Vec3& p : lantern.positions) p = {p.x * 0.55f, p.y * 0.9f, p.z * 0.55f};
    lantern.computeBounds();
    lantern.name = "lantern";
    lantern.texture = std::make_shared<MipChain>(buildMipChain(checkerTexture(128, 16, {250, 200, 80, 255}, {160, 40, 20, 255})));
    addMesh(scene, std::move(lantern));
    TransformSpec center;
    center.translate = {-0.5f * spacing * float(countX - 1), 0.0f, -0.5f * spacing * float(countY - 1)};
    scene.description.nodes.push_back(
        {"lantern", {center}, GridSpec{uint64_t(countX), uint64_t(countY), spacing}});
    return scene;
}

GeneratedScene genDenseScene(uint64_t triangleCount, double tinyFraction, uint64_t seed, int width, int height) {
    GeneratedScene scene;
    scene.description.camera = cameraDecl({0, 0, 0}, {0, 0, -1}, width, height);
    scene.description.shading.mode = ShadingMode::VertexColor;
    Camera camera = scene.description.camera.toCamera();
    TriangleBuilder builder(camera);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    constexpr uint64_t kChunk = 1u << 18;
    int chunk = 0;
    auto flush = [&] {
        Mesh mesh = builder.build("dense" + std::to_string(chunk++));
        mesh.vertexColors.resize(mesh.positions.size());
        for (std::size_t i = 0; i < mesh.vertexColors.size(); ++i) {
            float d = -mesh.positions[i].z;
            uint8_t c = static_cast<uint8_t>(std::clamp(255.0f - d * 10.0f, 30.0f, 255.0f));
            mesh.vertexColors[i] = {c, uint8_t(c / 2), uint8_t(255 - c), 255};
        }
        scene.description.nodes.push_back({mesh.name, {}, std::nullopt});
        addMesh(scene, std::move(mesh));
    };
    for (uint64_t i = 0; i < triangleCount; ++i) {
        bool tiny = unit(rng) < tinyFraction;
        float size = tiny ? 0.05f + 0.3f * unit(rng) : 1.0f + 4.0f * unit(rng);
        Vec2 c{unit(rng) * float(width), unit(rng) * float(height)};
        Vec2 v[3];
        for (Vec2& p : v) p = {c.x + (unit(rng) - 0.5f) * size, c.y + (unit(rng) - 0.5f) * size};
        float depth = 2.0f + 18.0f * unit(rng);
        builder.addPixel(v[0], v[1], v[2], depth, depth * (1 + 0.01f * unit(rng)), depth * (1 + 0.01f * unit(rng)), true);
        if (builder.triangleCount() == kChunk) flush();
    }
    if (builder.triangleCount() > 0) flush();
    return scene;
}

GeneratedScene genRandomScene(uint64_t seed, uint64_t maxTriangles, int width, int height) {
    GeneratedScene scene;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

    CameraDecl& cd = scene.description.camera;
    cd.position = Vec3d{uniform(-5, 5), uniform(-5, 5), uniform(-5, 5)}.as<float>();
    cd.lookAt = cd.position + Vec3d{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)}.as<float>();
    if (length(cd.lookAt - cd.position) < 0.1f) cd.lookAt = cd.position + Vec3{0, 0, -1};
    cd.up = Vec3d{uniform(-0.3, 0.3), 1.0, uniform(-0.3, 0.3)}.as<float>();
    cd.fovyDegrees = float(uniform(35, 100));
    cd.nearDistance = float(uniform(0.05, 0.5));
    cd.width = static_cast<int>(uniform(0.4, 1.0) * width) + 1;
    cd.height = static_cast<int>(uniform(0.4, 1.0) * height) + 1;
    Camera camera = cd.toCamera();
    double near = camera.nearDistance;
    double w = camera.renderWidth(), h = camera.renderHeight();

    uint64_t total = 1 + static_cast<uint64_t>(std::exp(uniform(0, std::log(double(maxTriangles)))));
    total = std::min(total, maxTriangles);
    int meshCount = 1 + static_cast<int>(unit(rng) * 4);
    TriangleBuilder builder(camera);
    for (int m = 0; m < meshCount; ++m) {
        uint64_t budget = total / meshCount + (uint64_t(m) < total % meshCount ? 1 : 0);
        if (budget == 0) continue;
        // Instances count against the budget: triangles * instances <= budget.
        int extra = unit(rng) < 0.4 ? 1 + static_cast<int>(unit(rng) * 3) : 0;
        extra = static_cast<int>(std::min<uint64_t>(uint64_t(extra), budget - 1));
        uint64_t count = budget / uint64_t(1 + extra);
        for (uint64_t i = 0; i < count; ++i) {
            double r = unit(rng);
            bool front = unit(rng) < 0.6;
            if (r < 0.15) {  // near-plane crosser, possibly with vertices behind the eye
                Vec3 v[3];
                int nearCount = 1 + static_cast<int>(unit(rng) * 2);
                for (int k = 0; k < 3; ++k) {
                    double depth = k < nearCount ? uniform(-2.0, 0.99 * near) : uniform(near, 12.0);
                    double spread = std::max(std::abs(depth), 0.3) * 1.5;
                    v[k] = Vec3d{uniform(-spread, spread), uniform(-spread, spread), -depth}.as<float>();
                }
                if (front) std::swap(v[1], v[2]);
                builder.addView(v[0], v[1], v[2]);
                continue;
            }
            if (r < 0.2) {  // entirely behind the near plane
                Vec3 v[3];
                for (Vec3& p : v) p = Vec3d{uniform(-3, 3), uniform(-3, 3), -uniform(-3.0, 0.9 * near)}.as<float>();
                builder.addView(v[0], v[1], v[2]);
                continue;
            }
            if (r < 0.22) {  // degenerate
                Vec2 a{float(uniform(0, w)), float(uniform(0, h))};
                Vec2 d{float(uniform(-20, 20)), float(uniform(-20, 20))};
                float depth = float(uniform(1, 10));
                builder.addPixel(a, a + d, a + d * 2.0f, depth, depth, depth, front);
                continue;
            }
            double size;
            if (r < 0.4) {
                size = uniform(0.05, 1.0);
            } else if (r < 0.65) {
                size = uniform(1.0, 11.0);
            } else if (r < 0.87) {
                size = uniform(11.0, 64.0);
            } else {
                size = uniform(64.0, 700.0);
            }
            Vec2 c{float(uniform(-0.2 * w, 1.2 * w)), float(uniform(-0.2 * h, 1.2 * h))};
            Vec2 v[3];
            for (Vec2& p : v) p = c + Vec2d{uniform(-size, size), uniform(-size, size)}.as<float>();
            double base = uniform(1.5 * near, 40.0);
            float d[3];
            for (float& di : d) di = float(base * uniform(0.8, 1.25));
            builder.addPixel(v[0], v[1], v[2], d[0], d[1], d[2], front);
        }

        // Instance 0 reproduces the generated placement; extra instances are
        // random rigid moves of it.
        Mat4 base = Mat4::translation(Vec3d{uniform(-2, 2), uniform(-2, 2), uniform(-2, 2)}.as<float>()) *
                    Mat4::rotation({0, 1, 0}, float(uniform(0, 2 * kPi)));
        Mesh mesh = builder.build("m" + std::to_string(m), base.affineInverse());
        double c = unit(rng);
        if (c < 0.2) {
            mesh = compressMesh(mesh, {true, false});
        } else if (c < 0.35) {
            mesh = compressMesh(mesh, {true, true});
        }
        NodeDecl node{mesh.name, {matrixSpec(base)}, std::nullopt};
        for (int k = 0; k < extra; ++k) {
            Mat4 move = Mat4::translation(Vec3d{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)}.as<float>()) *
                        Mat4::rotation(normalize(Vec3d{uniform(-1, 1), uniform(-1, 1), 1.0}.as<float>()),
                                       float(uniform(-0.5, 0.5)));
            node.transforms.push_back(matrixSpec(move * base));
        }
        scene.description.nodes.push_back(node);
        addMesh(scene, std::move(mesh));
    }
    return scene;
}

std::filesystem::path writeGeneratedScene(const std::filesystem::path& dir, GeneratedScene scene) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    for (std::size_t i = 0; i < scene.meshes.size(); ++i) {
        const Mesh& mesh = *scene.meshes[i];
        MeshDecl& decl = scene.description.meshes[i];
        decl.path = mesh.name + ".trimesh";
        saveNativeMesh(dir / decl.path, mesh);
        if (mesh.texture && mesh.texture->levelCount() > 0) {
            decl.texture = mesh.name + ".png";
            saveImage(dir / decl.texture, mesh.texture->levels[0]);
        }
    }
    std::filesystem::path scenePath = dir / "scene.json";
    std::ofstream out(scenePath);
    out << serializeSceneDescription(scene.description) << "\n";
    if (!out) throw IoError("cannot write '" + scenePath.string() + "'");
    return scenePath;
}

}  // namespace trirast
