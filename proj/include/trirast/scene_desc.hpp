#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trirast/raster_pipe.hpp"
#include "trirast/resolve_pass.hpp"
#include "trirast/scene_core.hpp"

namespace trirast {

/// Either an explicit row-major matrix or translate * rotate(xyz Euler, degrees) * scale.
struct TransformSpec {
    std::optional<Mat4> matrix;
    Vec3 translate;
    Vec3 rotateDegrees;
    Vec3 scale{1, 1, 1};

    Mat4 toMatrix() const;
    bool operator==(const TransformSpec&) const = default;
};

/// Replicates each base transform over a countX x countY grid on the XZ plane.
struct GridSpec {
    uint64_t countX = 1;
    uint64_t countY = 1;
    float spacing = 1.0f;
    bool operator==(const GridSpec&) const = default;
};

struct MeshDecl {
    std::string name;
    std::string path;
    std::string texture;  // optional PNG/PPM path
    std::optional<Rgba8> color;
    bool operator==(const MeshDecl&) const = default;
};

struct NodeDecl {
    std::string mesh;
    std::vector<TransformSpec> transforms;
    std::optional<GridSpec> grid;

    /// Saturates at UINT64_MAX.
    uint64_t instanceCount() const;
    std::vector<Mat4> expandTransforms() const;
    bool operator==(const NodeDecl&) const = default;
};

struct CameraDecl {
    Vec3 position{0, 0, 5};
    Vec3 lookAt{0, 0, 0};
    Vec3 up{0, 1, 0};
    float fovyDegrees = 60.0f;
    float nearDistance = 0.1f;
    int width = 640;
    int height = 480;
    int superSampling = 1;

    Camera toCamera() const;
    bool operator==(const CameraDecl&) const = default;
};

/// JSON scene file. Paths are relative to the scene file's directory.
///
///   {
///     "meshes": [{"name": "m", "path": "m.trimesh", "texture": "t.png", "color": [r, g, b, a]}],
///     "nodes": [{"mesh": "m",
///                "transforms": [{"translate": [x, y, z], "rotateDegrees": [x, y, z], "scale": [x, y, z]},
///                               {"matrix": [16 row-major floats]}],
///                "grid": {"countX": 50, "countY": 60, "spacing": 2.0}}],
///     "camera": {"position": [..], "lookAt": [..], "up": [..], "fovyDegrees": 60, "near": 0.1,
///                "width": 1920, "height": 1080, "superSampling": 1},
///     "raster": {"smallMaxPx": 128, "mediumMaxPx": 4096, "tilePx": 64, "batchSize": 256, "workers": 0,
///                "stage2Capacity": 0, "stage3Capacity": 0, "tinyCull": true, "forceStage": 0,
///                "instancing": "auto"},
///     "shading": {"mode": "textured", "headlight": false, "background": [40, 40, 40, 255],
///                 "mipFilter": "nearest"}
///   }
struct SceneDescription {
    std::vector<MeshDecl> meshes;
    std::vector<NodeDecl> nodes;
    CameraDecl camera;
    RasterConfig raster;
    ShadingConfig shading;

    bool operator==(const SceneDescription&) const = default;
};

/// Throws ParseError on malformed JSON, unknown mesh references or bad values.
SceneDescription parseSceneDescription(const std::string& text);
std::string serializeSceneDescription(const SceneDescription& scene);

struct LoadedScene {
    SceneDescription description;
    std::vector<std::shared_ptr<Mesh>> meshes;
    std::vector<SceneNode> nodes;
    Camera camera;
    double loadMs = 0;
};

/// Reads the scene file and every mesh/texture it references. Throws
/// CapacityError when the declared instances would exceed the triangle-ID
/// space before any transforms are expanded.
LoadedScene loadScene(const std::filesystem::path& path);

/// Builds scene nodes from a description and already-loaded meshes (by name).
std::vector<SceneNode> instantiateNodes(const SceneDescription& desc,
                                        const std::vector<std::shared_ptr<Mesh>>& meshes);

}  // namespace trirast
