#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trirast/math.hpp"

namespace trirast {

/// Index buffer stored as (index - minIndex) in bitsPerIndex-wide fields,
/// packed contiguously with little-endian bit order.
struct PackedIndexBuffer {
    uint32_t minIndex = 0;
    uint32_t bitsPerIndex = 1;
    uint64_t count = 0;
    /// ceil(count * bitsPerIndex / 8) payload bytes followed by 8 zero bytes of
    /// read padding (not serialized).
    std::vector<uint8_t> bytes;

    std::size_t payloadBytes() const { return static_cast<std::size_t>((count * bitsPerIndex + 7) / 8); }
    bool operator==(const PackedIndexBuffer&) const = default;
};

/// Bits needed for values in [0, span]: max(1, ceil(log2(span + 1))).
uint32_t bitsForSpan(uint32_t span);

PackedIndexBuffer compressIndices(std::span<const uint32_t> indices);

/// Builds a buffer from a raw payload (as read from disk); adds read padding.
PackedIndexBuffer makePackedIndexBuffer(uint32_t minIndex, uint32_t bitsPerIndex, uint64_t count,
                                        std::span<const uint8_t> payload);

inline uint32_t decodeIndexUnchecked(const PackedIndexBuffer& buffer, uint64_t i) {
    uint64_t bit = i * buffer.bitsPerIndex;
    const uint8_t* p = buffer.bytes.data() + (bit >> 3);
    uint64_t window = 0;
    for (int b = 0; b < 8; ++b) window |= uint64_t(p[b]) << (8 * b);
    uint64_t mask = (buffer.bitsPerIndex == 32) ? 0xFFFFFFFFull : ((1ull << buffer.bitsPerIndex) - 1);
    return buffer.minIndex + static_cast<uint32_t>((window >> (bit & 7)) & mask);
}

/// Element `i` of the packed buffer. Throws ContractViolation when i >= count.
uint32_t decodeIndex(const PackedIndexBuffer& buffer, uint64_t i);

std::vector<uint32_t> decodeAllIndices(const PackedIndexBuffer& buffer);

/// 16-bit fixed-point coordinates relative to an axis-aligned grid.
struct QuantizedPositions {
    Vec3 gridMin;
    Vec3 gridSize{1, 1, 1};
    std::vector<std::array<uint16_t, 3>> coords;

    bool operator==(const QuantizedPositions&) const = default;
};

/// Quantizes against `box`. A zero-extent axis is given size 1.
/// Throws ContractViolation if a position lies outside `box`.
QuantizedPositions quantizePositions(std::span<const Vec3> positions, const Aabb& box);

/// Cell-center reconstruction: gridMin + (q + 0.5) / 65536 * gridSize.
Vec3d dequantizePosition(const std::array<uint16_t, 3>& q, const QuantizedPositions& grid);

inline Vec3 dequantizePositionF(const std::array<uint16_t, 3>& q, const QuantizedPositions& grid) {
    return dequantizePosition(q, grid).as<float>();
}

struct Rgba8 {
    uint8_t r = 0, g = 0, b = 0, a = 255;
    bool operator==(const Rgba8&) const = default;
};

struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgba8> pixels;

    Image() = default;
    Image(int w, int h, Rgba8 fill = {}) : width(w), height(h), pixels(std::size_t(w) * h, fill) {}

    Rgba8& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
    const Rgba8& at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
    bool operator==(const Image&) const = default;
};

/// Level 0 is the source image; each level halves (floored, min 1) down to 1x1.
struct MipChain {
    std::vector<Image> levels;

    int levelCount() const { return static_cast<int>(levels.size()); }
};

MipChain buildMipChain(const Image& image);

}  // namespace trirast
