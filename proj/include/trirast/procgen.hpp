#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "trirast/scene_core.hpp"
#include "trirast/scene_desc.hpp"

namespace trirast {

/// n x n grid of quads in the z = 0 plane spanning [-size/2, size/2], facing +z.
/// 2n^2 triangles, UVs from (0, 0) at the bottom-left to (1, 1) at the top-right.
Mesh tessellatedQuad(int n, float size = 2.0f);

/// Latitude/longitude sphere with roughly `targetTriangles` triangles and
/// normal-derived vertex colors. Outward faces are front faces.
Mesh uvSphere(uint64_t targetTriangles, float radius = 1.0f);

Image checkerTexture(int size, int cells, Rgba8 a = {230, 230, 230, 255}, Rgba8 b = {40, 90, 200, 255});

/// Point in view space that projects to pixel (px, py) at linear depth `depth`.
Vec3 unprojectPixel(const Camera& camera, double px, double py, double depth);

/// A generated scene kept in memory. Mesh names match the description's
/// mesh declarations; paths are filled in by writeGeneratedScene.
struct GeneratedScene {
    SceneDescription description;
    std::vector<std::shared_ptr<Mesh>> meshes;

    std::vector<SceneNode> nodes() const { return instantiateNodes(description, meshes); }
    Camera camera() const { return description.camera.toCamera(); }
    uint64_t triangleCount() const;
};

GeneratedScene genTessellatedQuad(int n, int width = 640, int height = 480);

/// `count` instances of one sphere scattered in front of the camera.
GeneratedScene genSpheres(int count, uint64_t trianglesPerSphere, uint64_t seed, int width = 640, int height = 480);

/// Triangles sized to land in each routing class for the scene's camera:
/// small (< 128 px bbox), medium (< 4096 px), large (tiled) and near-plane crossers.
GeneratedScene genClassifierScene(int width = 640, int height = 480);

/// A moderately detailed mesh replicated over a countX x countY grid.
GeneratedScene genLanternGrid(int countX, int countY, uint64_t trianglesPerLantern, int width = 640,
                              int height = 480);

/// Screen-filling soup of front-facing micro triangles. `tinyFraction` of them
/// are sub-pixel and mostly miss every sample; the rest span a few pixels.
GeneratedScene genDenseScene(uint64_t triangleCount, double tinyFraction, uint64_t seed, int width = 1920,
                             int height = 1080);

/// Randomized scene for equivalence testing: several meshes (some compressed,
/// some instanced) mixing tiny, small, medium, huge and near-crossing
/// triangles with random winding under a random camera.
GeneratedScene genRandomScene(uint64_t seed, uint64_t maxTriangles, int width = 320, int height = 240);

/// Writes meshes (<name>.trimesh), textures (<name>.png) and scene.json into
/// `dir`; returns the scene file path.
std::filesystem::path writeGeneratedScene(const std::filesystem::path& dir, GeneratedScene scene);

}  // namespace trirast
