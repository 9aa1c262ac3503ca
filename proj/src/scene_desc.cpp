#include "trirast/scene_desc.hpp"

#include <limits>

#include <chrono>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "trirast/errors.hpp"
#include "trirast/mesh_io.hpp"

namespace trirast {

using nlohmann::json;

Mat4 TransformSpec::toMatrix() const {
    if (matrix) return *matrix;
    constexpr float kDeg = std::numbers::pi_v<float> / 180.0f;
    Mat4 r = Mat4::rotation({0, 0, 1}, rotateDegrees.z * kDeg) * Mat4::rotation({0, 1, 0}, rotateDegrees.y * kDeg) *
             Mat4::rotation({1, 0, 0}, rotateDegrees.x * kDeg);
    return Mat4::translation(translate) * r * Mat4::scaling(scale);
}

uint64_t NodeDecl::instanceCount() const {
    uint64_t base = transforms.empty() ? 1 : transforms.size();
    if (!grid) return base;
    unsigned __int128 n = static_cast<unsigned __int128>(base) * grid->countX * grid->countY;
    return n > std::numeric_limits<uint64_t>::max() ? std::numeric_limits<uint64_t>::max() : static_cast<uint64_t>(n);
}

std::vector<Mat4> NodeDecl::expandTransforms() const {
    std::vector<Mat4> base;
    if (transforms.empty()) base.push_back(Mat4::identity());
    for (const TransformSpec& t : transforms) base.push_back(t.toMatrix());
    if (!grid) return base;
    std::vector<Mat4> out;
    out.reserve(static_cast<std::size_t>(instanceCount()));
    for (uint64_t gy = 0; gy < grid->countY; ++gy) {
        for (uint64_t gx = 0; gx < grid->countX; ++gx) {
            Mat4 offset = Mat4::translation({float(gx) * grid->spacing, 0.0f, float(gy) * grid->spacing});
            for (const Mat4& b : base) out.push_back(offset * b);
        }
    }
    return out;
}

Camera CameraDecl::toCamera() const {
    return Camera::lookAt(position, lookAt, up, fovyDegrees * std::numbers::pi_v<float> / 180.0f, width, height,
                          nearDistance, superSampling);
}

namespace {

json vec3ToJson(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3FromJson(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + " must be an array of 3 numbers");
    return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

json colorToJson(const Rgba8& c) { return json::array({c.r, c.g, c.b, c.a}); }

Rgba8 colorFromJson(const json& j, const char* what) {
    if (!j.is_array() || (j.size() != 3 && j.size() != 4)) {
        throw ParseError(std::string(what) + " must be an array of 3 or 4 integers in 0..255");
    }
    auto channel = [&](std::size_t i) {
        int v = j[i].get<int>();
        if (v < 0 || v > 255) throw ParseError(std::string(what) + " channel out of range");
        return static_cast<uint8_t>(v);
    };
    return {channel(0), channel(1), channel(2), j.size() == 4 ? channel(3) : uint8_t(255)};
}

const char* instancingName(Instancing i) {
    switch (i) {
        case Instancing::Off: return "off";
        case Instancing::On: return "on";
        default: return "auto";
    }
}

Instancing instancingFromName(const std::string& s) {
    if (s == "auto") return Instancing::Auto;
    if (s == "on") return Instancing::On;
    if (s == "off") return Instancing::Off;
    throw ParseError("raster.instancing must be auto, on or off");
}

const char* shadingModeName(ShadingMode m) {
    switch (m) {
        case ShadingMode::Flat: return "flat";
        case ShadingMode::VertexColor: return "vertexColor";
        default: return "textured";
    }
}

ShadingMode shadingModeFromName(const std::string& s) {
    if (s == "flat") return ShadingMode::Flat;
    if (s == "vertexColor") return ShadingMode::VertexColor;
    if (s == "textured") return ShadingMode::Textured;
    throw ParseError("shading.mode must be flat, vertexColor or textured");
}

template <typename T>
void readOptional(const json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

}  // namespace

SceneDescription parseSceneDescription(const std::string& text) {
    SceneDescription scene;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scene JSON: ") + e.what(), 0, e.byte);
    }
    try {
        if (!root.is_object()) throw ParseError("scene root must be an object");
        for (const json& m : root.at("meshes")) {
            MeshDecl decl;
            decl.name = m.at("name").get<std::string>();
            decl.path = m.at("path").get<std::string>();
            readOptional(m, "texture", decl.texture);
            if (m.contains("color")) decl.color = colorFromJson(m["color"], "mesh color");
            scene.meshes.push_back(std::move(decl));
        }
        for (const json& n : root.at("nodes")) {
            NodeDecl node;
            node.mesh = n.at("mesh").get<std::string>();
            bool known = std::any_of(scene.meshes.begin(), scene.meshes.end(),
                                     [&](const MeshDecl& m) { return m.name == node.mesh; });
            if (!known) throw ParseError("node references undeclared mesh '" + node.mesh + "'");
            if (n.contains("transforms")) {
                for (const json& t : n["transforms"]) {
                    TransformSpec spec;
                    if (t.contains("matrix")) {
                        const json& m = t["matrix"];
                        if (!m.is_array() || m.size() != 16) throw ParseError("transform matrix needs 16 numbers");
                        Mat4 mat;
                        for (int i = 0; i < 16; ++i) mat.m[i] = m[i].get<float>();
                        spec.matrix = mat;
                    } else {
                        if (t.contains("translate")) spec.translate = vec3FromJson(t["translate"], "translate");
                        if (t.contains("rotateDegrees")) spec.rotateDegrees = vec3FromJson(t["rotateDegrees"], "rotateDegrees");
                        if (t.contains("scale")) spec.scale = vec3FromJson(t["scale"], "scale");
                    }
                    node.transforms.push_back(spec);
                }
            }
            if (n.contains("grid")) {
                const json& g = n["grid"];
                GridSpec grid;
                grid.countX = g.at("countX").get<uint64_t>();
                grid.countY = g.at("countY").get<uint64_t>();
                readOptional(g, "spacing", grid.spacing);
                if (grid.countX == 0 || grid.countY == 0) throw ParseError("grid counts must be positive");
                node.grid = grid;
            }
            scene.nodes.push_back(std::move(node));
        }
        if (root.contains("camera")) {
            const json& c = root["camera"];
            CameraDecl& cam = scene.camera;
            if (c.contains("position")) cam.position = vec3FromJson(c["position"], "camera.position");
            if (c.contains("lookAt")) cam.lookAt = vec3FromJson(c["lookAt"], "camera.lookAt");
            if (c.contains("up")) cam.up = vec3FromJson(c["up"], "camera.up");
            readOptional(c, "fovyDegrees", cam.fovyDegrees);
            readOptional(c, "near", cam.nearDistance);
            readOptional(c, "width", cam.width);
            readOptional(c, "height", cam.height);
            readOptional(c, "superSampling", cam.superSampling);
            if (cam.width <= 0 || cam.height <= 0) throw ParseError("camera width/height must be positive");
            if (cam.superSampling != 1 && cam.superSampling != 2 && cam.superSampling != 4) {
                throw ParseError("camera.superSampling must be 1, 2 or 4");
            }
            if (!(cam.fovyDegrees > 0 && cam.fovyDegrees < 180)) throw ParseError("camera.fovyDegrees must be in (0, 180)");
            if (!(cam.nearDistance > 0)) throw ParseError("camera.near must be positive");
        }
        if (root.contains("raster")) {
            const json& r = root["raster"];
            RasterConfig& rc = scene.raster;
            readOptional(r, "smallMaxPx", rc.smallMaxPx);
            readOptional(r, "mediumMaxPx", rc.mediumMaxPx);
            readOptional(r, "tilePx", rc.tilePx);
            readOptional(r, "batchSize", rc.batchSize);
            readOptional(r, "workers", rc.workers);
            readOptional(r, "stage2Capacity", rc.stage2Capacity);
            readOptional(r, "stage3Capacity", rc.stage3Capacity);
            readOptional(r, "tinyCull", rc.tinyCull);
            readOptional(r, "forceStage", rc.forceStage);
            if (r.contains("instancing")) rc.instancing = instancingFromName(r["instancing"].get<std::string>());
            if (rc.tilePx == 0 || rc.batchSize == 0) throw ParseError("raster.tilePx and raster.batchSize must be positive");
            if (rc.forceStage < 0 || rc.forceStage > 3) throw ParseError("raster.forceStage must be 0..3");
        }
        if (root.contains("shading")) {
            const json& s = root["shading"];
            ShadingConfig& sc = scene.shading;
            if (s.contains("mode")) sc.mode = shadingModeFromName(s["mode"].get<std::string>());
            readOptional(s, "headlight", sc.headlight);
            if (s.contains("background")) sc.background = colorFromJson(s["background"], "shading.background");
            if (s.contains("mipFilter")) {
                std::string f = s["mipFilter"].get<std::string>();
                if (f == "nearest") {
                    sc.mipFilter = MipFilter::Nearest;
                } else if (f == "trilinear") {
                    sc.mipFilter = MipFilter::Trilinear;
                } else {
                    throw ParseError("shading.mipFilter must be nearest or trilinear");
                }
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("scene JSON: ") + e.what());
    }
    return scene;
}

std::string serializeSceneDescription(const SceneDescription& scene) {
    json root;
    root["meshes"] = json::array();
    for (const MeshDecl& m : scene.meshes) {
        json j{{"name", m.name}, {"path", m.path}};
        if (!m.texture.empty()) j["texture"] = m.texture;
        if (m.color) j["color"] = colorToJson(*m.color);
        root["meshes"].push_back(j);
    }
    root["nodes"] = json::array();
    for (const NodeDecl& n : scene.nodes) {
        json j{{"mesh", n.mesh}, {"transforms", json::array()}};
        for (const TransformSpec& t : n.transforms) {
            if (t.matrix) {
                j["transforms"].push_back({{"matrix", t.matrix->m}});
            } else {
                j["transforms"].push_back({{"translate", vec3ToJson(t.translate)},
                                           {"rotateDegrees", vec3ToJson(t.rotateDegrees)},
                                           {"scale", vec3ToJson(t.scale)}});
            }
        }
        if (n.grid) j["grid"] = {{"countX", n.grid->countX}, {"countY", n.grid->countY}, {"spacing", n.grid->spacing}};
        root["nodes"].push_back(j);
    }
    const CameraDecl& c = scene.camera;
    root["camera"] = {{"position", vec3ToJson(c.position)}, {"lookAt", vec3ToJson(c.lookAt)},
                      {"up", vec3ToJson(c.up)},             {"fovyDegrees", c.fovyDegrees},
                      {"near", c.nearDistance},             {"width", c.width},
                      {"height", c.height},                 {"superSampling", c.superSampling}};
    const RasterConfig& r = scene.raster;
    root["raster"] = {{"smallMaxPx", r.smallMaxPx},         {"mediumMaxPx", r.mediumMaxPx},
                      {"tilePx", r.tilePx},                 {"batchSize", r.batchSize},
                      {"workers", r.workers},               {"stage2Capacity", r.stage2Capacity},
                      {"stage3Capacity", r.stage3Capacity}, {"tinyCull", r.tinyCull},
                      {"forceStage", r.forceStage},         {"instancing", instancingName(r.instancing)}};
    const ShadingConfig& s = scene.shading;
    root["shading"] = {{"mode", shadingModeName(s.mode)},
                       {"headlight", s.headlight},
                       {"background", colorToJson(s.background)},
                       {"mipFilter", s.mipFilter == MipFilter::Trilinear ? "trilinear" : "nearest"}};
    return root.dump(2);
}

std::vector<SceneNode> instantiateNodes(const SceneDescription& desc, const std::vector<std::shared_ptr<Mesh>>& meshes) {
    std::map<std::string, std::shared_ptr<Mesh>> byName;
    for (const auto& m : meshes) byName[m->name] = m;

    // Check the declared triangle total before materializing any grid.
    unsigned __int128 declared = 0;
    for (const NodeDecl& n : desc.nodes) {
        auto it = byName.find(n.mesh);
        if (it == byName.end()) throw ParseError("node references unknown mesh '" + n.mesh + "'");
        declared += static_cast<unsigned __int128>(it->second->triangleCount) * n.instanceCount();
    }
    if (declared >= kTriangleIdLimit) {
        std::ostringstream msg;
        msg << "scene declares " << static_cast<long double>(declared)
            << " triangles; the 36-bit triangle ID field addresses at most " << (kTriangleIdLimit - 1);
        throw CapacityError(msg.str());
    }

    std::vector<SceneNode> nodes;
    for (const NodeDecl& n : desc.nodes) {
        SceneNode node;
        node.mesh = byName.at(n.mesh);
        node.transforms = n.expandTransforms();
        nodes.push_back(std::move(node));
    }
    return nodes;
}

LoadedScene loadScene(const std::filesystem::path& path) {
    auto start = std::chrono::steady_clock::now();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scene '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();

    LoadedScene scene;
    scene.description = parseSceneDescription(buffer.str());
    std::filesystem::path dir = path.parent_path();
    for (const MeshDecl& decl : scene.description.meshes) {
        auto mesh = std::make_shared<Mesh>(loadMeshAsset(dir / decl.path));
        mesh->name = decl.name;
        if (decl.color) mesh->materialColor = *decl.color;
        if (!decl.texture.empty()) mesh->texture = std::make_shared<MipChain>(buildMipChain(loadImage(dir / decl.texture)));
        scene.meshes.push_back(std::move(mesh));
    }
    scene.nodes = instantiateNodes(scene.description, scene.meshes);
    scene.camera = scene.description.camera.toCamera();
    scene.loadMs = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return scene;
}

}  // namespace trirast
