#pragma once

#include <array>
#include <memory>
#include <numbers>
#include <vector>

#include "trirast/procgen.hpp"
#include "trirast/raster_pipe.hpp"
#include "trirast/scene_core.hpp"

namespace trirast::test {

/// Camera at the origin looking down -z, so view space equals world space.
inline Camera originCamera(int width, int height, float fovy = std::numbers::pi_v<float> / 2, float nearDistance = 0.1f,
                           int superSampling = 1) {
    return Camera::lookAt({0, 0, 0}, {0, 0, -1}, {0, 1, 0}, fovy, width, height, nearDistance, superSampling);
}

/// World-space triangle whose vertices project to the given pixels at the given depths.
inline ViewTriangle pixelTriangle(const Camera& camera, std::array<Vec2, 3> px, std::array<float, 3> depth) {
    return {unprojectPixel(camera, px[0].x, px[0].y, depth[0]), unprojectPixel(camera, px[1].x, px[1].y, depth[1]),
            unprojectPixel(camera, px[2].x, px[2].y, depth[2])};
}

inline ViewTriangle pixelTriangle(const Camera& camera, std::array<Vec2, 3> px, float depth) {
    return pixelTriangle(camera, px, {depth, depth, depth});
}

inline std::shared_ptr<Mesh> meshOf(const std::vector<ViewTriangle>& tris, const std::string& name = "m") {
    std::vector<Vec3> positions;
    std::vector<uint32_t> indices;
    for (const ViewTriangle& t : tris) {
        for (const Vec3& v : t) {
            indices.push_back(static_cast<uint32_t>(positions.size()));
            positions.push_back(v);
        }
    }
    return std::make_shared<Mesh>(makeMesh(name, std::move(positions), std::move(indices)));
}

inline std::vector<SceneNode> sceneOf(std::shared_ptr<const Mesh> mesh, std::vector<Mat4> transforms = {Mat4::identity()}) {
    return {SceneNode{std::move(mesh), std::move(transforms)}};
}

/// Pixel coordinates of every non-clear word.
inline std::vector<std::pair<int, int>> coveredPixels(const Framebuffer& fb) {
    std::vector<std::pair<int, int>> out;
    for (int y = 0; y < fb.height(); ++y) {
        for (int x = 0; x < fb.width(); ++x) {
            if (fb.at(x, y) != kClearFragment) out.emplace_back(x, y);
        }
    }
    return out;
}

}  // namespace trirast::test
