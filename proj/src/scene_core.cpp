#include "trirast/scene_core.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include "trirast/errors.hpp"

namespace trirast {

Camera Camera::lookAt(const Vec3& eye, const Vec3& target, const Vec3& up, float fovyRadians, int width, int height,
                      float nearDistance, int superSampling) {
    Camera c;
    c.position = eye;
    c.viewTransform = Mat4::lookAt(eye, target, up);
    c.fovy = fovyRadians;
    c.aspect = float(width) / float(height);
    c.nearDistance = nearDistance;
    c.imageWidth = width;
    c.imageHeight = height;
    c.superSampling = superSampling;
    return c;
}

void Camera::validate() const {
    TRIRAST_EXPECTS(fovy > 0.0f && fovy < std::numbers::pi_v<float>, "camera fovy must be in (0, pi)");
    TRIRAST_EXPECTS(aspect > 0.0f, "camera aspect must be positive");
    TRIRAST_EXPECTS(nearDistance > 0.0f, "camera near distance must be positive");
    TRIRAST_EXPECTS(imageWidth > 0 && imageHeight > 0, "camera image size must be positive");
    TRIRAST_EXPECTS(superSampling == 1 || superSampling == 2 || superSampling == 4, "superSampling must be 1, 2 or 4");
}

Vec3 projectionVector(const Camera& camera) {
    double f = 1.0 / std::tan(double(camera.fovy) / 2.0);
    return {float(f / camera.aspect), float(f), -1.0f};
}

void Mesh::computeBounds() {
    aabb = Aabb{};
    if (quantized) {
        for (const auto& q : quantized->coords) aabb.extend(dequantizePositionF(q, *quantized));
    } else {
        for (const Vec3& p : positions) aabb.extend(p);
    }
}

void Mesh::validate() const {
    uint64_t indexCount = packedIndices ? packedIndices->count : indices.size();
    TRIRAST_EXPECTS(indexCount == 3 * triangleCount, "mesh index count must be 3 * triangleCount");
    uint64_t vertices = vertexCount();
    for (uint64_t i = 0; i < indexCount; ++i) {
        TRIRAST_EXPECTS(index(i) < vertices, "mesh index out of range");
    }
    TRIRAST_EXPECTS(uvs.empty() || uvs.size() == vertices, "uv count must match vertex count");
    TRIRAST_EXPECTS(vertexColors.empty() || vertexColors.size() == vertices, "color count must match vertex count");
}

Mesh makeMesh(std::string name, std::vector<Vec3> positions, std::vector<uint32_t> indices) {
    Mesh m;
    m.name = std::move(name);
    m.positions = std::move(positions);
    m.triangleCount = indices.size() / 3;
    m.indices = std::move(indices);
    m.computeBounds();
    return m;
}

bool DrawList::hasMultiInstanceGroup() const {
    return std::any_of(groups.begin(), groups.end(), [](const DrawGroup& g) { return g.itemCount >= 2; });
}

bool aabbIntersectsFrustum(const Aabb& worldBox, const Camera& camera) {
    if (worldBox.empty()) return false;
    Vec3 p = projectionVector(camera);
    // View-space half-spaces (inside when value <= 0): near, left, right, bottom, top.
    const Vec3 normals[5] = {{0, 0, 1}, {-p.x, 0, 1}, {p.x, 0, 1}, {0, -p.y, 1}, {0, p.y, 1}};
    const float offsets[5] = {camera.nearDistance, 0, 0, 0, 0};
    std::array<Vec3, 8> corners = worldBox.corners();
    for (Vec3& c : corners) c = camera.viewTransform.transformPoint(c);
    for (int plane = 0; plane < 5; ++plane) {
        bool allOutside = std::all_of(corners.begin(), corners.end(), [&](const Vec3& c) {
            return dot(normals[plane], c) + offsets[plane] > 0.0f;
        });
        if (allOutside) return false;
    }
    return true;
}

namespace {

void assignRanges(DrawList& list) {
    list.prefixSums.assign(1, 0);
    list.groups.clear();
    uint64_t running = 0;
    for (std::size_t k = 0; k < list.items.size(); ++k) {
        DrawItem& item = list.items[k];
        item.firstGlobalTriangle = running;
        running += item.triangleCount;
        list.prefixSums.push_back(running);
        if (k > 0 && list.items[k - 1].nodeIndex == item.nodeIndex && list.items[k - 1].mesh == item.mesh) {
            ++list.groups.back().itemCount;
        } else {
            list.groups.push_back({static_cast<uint32_t>(k), 1});
        }
    }
    list.totalTriangles = running;
    if (running >= kTriangleIdLimit) {
        std::ostringstream msg;
        msg << "draw list holds " << running << " visible triangles; the 36-bit triangle ID field addresses at most "
            << (kTriangleIdLimit - 1);
        throw CapacityError(msg.str());
    }
}

}  // namespace

DrawList buildDrawList(std::span<const SceneNode> scene, const Camera& camera) {
    TRIRAST_EXPECTS(!scene.empty(), "buildDrawList: empty scene");
    camera.validate();
    DrawList list;
    for (std::size_t n = 0; n < scene.size(); ++n) {
        const SceneNode& node = scene[n];
        TRIRAST_EXPECTS(node.mesh != nullptr, "scene node without mesh");
        TRIRAST_EXPECTS(!node.transforms.empty(), "scene node without transforms");
        for (std::size_t i = 0; i < node.transforms.size(); ++i) {
            const Mat4& t = node.transforms[i];
            if (node.mesh->triangleCount == 0) continue;
            if (!aabbIntersectsFrustum(node.mesh->aabb.transformed(t), camera)) continue;
            DrawItem item;
            item.mesh = node.mesh.get();
            item.instanceTransform = t;
            item.objectToView = camera.viewTransform * t;
            item.triangleCount = node.mesh->triangleCount;
            item.nodeIndex = static_cast<uint32_t>(n);
            item.instanceIndex = static_cast<uint32_t>(i);
            list.items.push_back(item);
        }
    }
    assignRanges(list);
    return list;
}

DrawList makeDrawList(std::vector<DrawItem> items) {
    DrawList list;
    list.items = std::move(items);
    assignRanges(list);
    return list;
}

uint64_t Framebuffer::hash() const {
    uint64_t h = 1469598103934665603ull;
    for (uint64_t w : words_) {
        for (int b = 0; b < 8; ++b) {
            h ^= (w >> (8 * b)) & 0xFF;
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace trirast
