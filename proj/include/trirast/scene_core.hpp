#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trirast/geom_codec.hpp"
#include "trirast/math.hpp"

namespace trirast {

// ---------------------------------------------------------------------------
// Packed visibility fragments
// ---------------------------------------------------------------------------

inline constexpr int kTriangleIdBits = 36;
inline constexpr int kDepthBits = 28;
inline constexpr uint64_t kTriangleIdLimit = uint64_t(1) << kTriangleIdBits;
inline constexpr uint64_t kTriangleIdMask = kTriangleIdLimit - 1;
/// Framebuffer clear value. Every real fragment compares strictly less.
inline constexpr uint64_t kClearFragment = ~uint64_t(0);

/// Top 28 bits: positive float depth with the sign bit and the three lowest
/// mantissa bits dropped. Low 36 bits: global triangle ID. Comparing words as
/// unsigned integers orders by depth first, then by triangle ID.
inline uint64_t packFragment(float depth, uint64_t triangleId) {
    assert(depth > 0.0f && std::isfinite(depth));
    assert(triangleId < kTriangleIdLimit);
    uint64_t depth28 = std::bit_cast<uint32_t>(depth) >> 3;
    return (depth28 << kTriangleIdBits) | triangleId;
}

struct UnpackedFragment {
    uint32_t depth28 = 0;
    float truncatedDepth = 0.0f;
    uint64_t triangleId = 0;
};

/// Decodes a fragment word. Returns nullopt for the background (clear) value.
inline std::optional<UnpackedFragment> unpackFragment(uint64_t word) {
    if (word == kClearFragment) return std::nullopt;
    UnpackedFragment f;
    f.triangleId = word & kTriangleIdMask;
    f.depth28 = static_cast<uint32_t>(word >> kTriangleIdBits);
    f.truncatedDepth = std::bit_cast<float>(f.depth28 << 3);
    return f;
}

/// Depth as stored in a fragment: the low three mantissa bits cleared.
inline float truncateDepth(float depth) { return std::bit_cast<float>(std::bit_cast<uint32_t>(depth) & ~7u); }

// ---------------------------------------------------------------------------
// Camera
// ---------------------------------------------------------------------------

struct Camera {
    Vec3 position;
    Mat4 viewTransform;  // rigid world -> view
    float fovy = 1.0471976f;
    float aspect = 1.0f;
    float nearDistance = 0.1f;
    int imageWidth = 640;
    int imageHeight = 480;
    int superSampling = 1;

    int renderWidth() const { return imageWidth * superSampling; }
    int renderHeight() const { return imageHeight * superSampling; }

    /// Camera at `eye` looking at `target`; aspect taken from the image size.
    static Camera lookAt(const Vec3& eye, const Vec3& target, const Vec3& up, float fovyRadians, int width,
                         int height, float nearDistance = 0.1f, int superSampling = 1);

    /// Throws ContractViolation when fovy, aspect, near, size or superSampling are out of range.
    void validate() const;
};

/// Element-wise projection vector (f / aspect, f, -1) with f = 1 / tan(fovy / 2).
Vec3 projectionVector(const Camera& camera);

// ---------------------------------------------------------------------------
// Meshes and scene graph
// ---------------------------------------------------------------------------

struct Mesh {
    std::string name;

    // Exactly one of each pair is populated.
    std::vector<Vec3> positions;
    std::optional<QuantizedPositions> quantized;
    std::vector<uint32_t> indices;
    std::optional<PackedIndexBuffer> packedIndices;

    std::vector<Vec2> uvs;
    std::vector<Rgba8> vertexColors;
    std::shared_ptr<const MipChain> texture;
    Rgba8 materialColor{200, 200, 200, 255};

    Aabb aabb;
    uint64_t triangleCount = 0;

    uint64_t vertexCount() const { return quantized ? quantized->coords.size() : positions.size(); }
    bool hasUvs() const { return !uvs.empty(); }
    bool hasVertexColors() const { return !vertexColors.empty(); }

    uint32_t index(uint64_t i) const {
        return packedIndices ? decodeIndexUnchecked(*packedIndices, i) : indices[static_cast<std::size_t>(i)];
    }
    Vec3 position(uint32_t v) const { return quantized ? dequantizePositionF(quantized->coords[v], *quantized) : positions[v]; }

    /// Recomputes aabb from the (dequantized) positions.
    void computeBounds();
    /// Throws ContractViolation on an index/position count mismatch or out-of-range index.
    void validate() const;
};

/// Builds an uncompressed mesh and computes its bounds.
Mesh makeMesh(std::string name, std::vector<Vec3> positions, std::vector<uint32_t> indices);

struct SceneNode {
    std::shared_ptr<const Mesh> mesh;
    std::vector<Mat4> transforms;  // object -> world, one per instance
};

// ---------------------------------------------------------------------------
// Draw list
// ---------------------------------------------------------------------------

struct DrawItem {
    const Mesh* mesh = nullptr;
    Mat4 instanceTransform;
    Mat4 objectToView;  // camera.viewTransform * instanceTransform
    uint64_t firstGlobalTriangle = 0;
    uint64_t triangleCount = 0;
    uint32_t nodeIndex = 0;
    uint32_t instanceIndex = 0;
};

/// Consecutive draw items that came from one node and share its mesh.
struct DrawGroup {
    uint32_t firstItem = 0;
    uint32_t itemCount = 0;
};

struct DrawList {
    std::vector<DrawItem> items;
    std::vector<uint64_t> prefixSums{0};  // size items + 1
    uint64_t totalTriangles = 0;
    std::vector<DrawGroup> groups;

    bool hasMultiInstanceGroup() const;
};

/// Frustum-culls every (node, instance) pair against the camera and assigns
/// global triangle ranges by exclusive prefix sum. Throws CapacityError when
/// the visible triangle count does not fit the 36-bit ID field.
DrawList buildDrawList(std::span<const SceneNode> scene, const Camera& camera);

/// Builds a draw list without culling, in the given order. Used by tests and
/// the oracle when comparing against hand-assembled item lists.
DrawList makeDrawList(std::vector<DrawItem> items);

/// Conservative view-frustum test for a world-space box (infinite far plane).
bool aabbIntersectsFrustum(const Aabb& worldBox, const Camera& camera);

// ---------------------------------------------------------------------------
// Framebuffer
// ---------------------------------------------------------------------------

/// Visibility buffer of 64-bit packed fragments merged with atomic min.
class Framebuffer {
public:
    Framebuffer() = default;
    Framebuffer(int width, int height) : width_(width), height_(height), words_(std::size_t(width) * height, kClearFragment) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return words_.size(); }

    void clear() { std::fill(words_.begin(), words_.end(), kClearFragment); }

    /// Atomic fetch-min. Safe to call concurrently from any number of workers.
    void merge(std::size_t pixel, uint64_t fragment) {
        std::atomic_ref<uint64_t> slot(words_[pixel]);
        uint64_t current = slot.load(std::memory_order_relaxed);
        while (fragment < current && !slot.compare_exchange_weak(current, fragment, std::memory_order_relaxed)) {
        }
    }
    void merge(int x, int y, uint64_t fragment) { merge(std::size_t(y) * width_ + x, fragment); }

    /// Non-atomic min for single-threaded use.
    void mergeSerial(std::size_t pixel, uint64_t fragment) {
        if (fragment < words_[pixel]) words_[pixel] = fragment;
    }

    uint64_t at(int x, int y) const { return words_[std::size_t(y) * width_ + x]; }
    std::span<const uint64_t> words() const { return words_; }
    std::span<uint64_t> words() { return words_; }

    bool operator==(const Framebuffer& o) const {
        return width_ == o.width_ && height_ == o.height_ && words_ == o.words_;
    }

    /// FNV-1a over the packed words; used to compare frames in bench runs.
    uint64_t hash() const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<uint64_t> words_;
};

}  // namespace trirast
