#include "trirast/geom_codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "trirast/errors.hpp"

namespace trirast {

namespace {
constexpr std::size_t kReadPadding = 8;
}

uint32_t bitsForSpan(uint32_t span) {
    // Values 0..span need bit_width(span) bits; span == 0 still takes one bit.
    return std::max<uint32_t>(1, static_cast<uint32_t>(std::bit_width(span)));
}

PackedIndexBuffer compressIndices(std::span<const uint32_t> indices) {
    TRIRAST_EXPECTS(!indices.empty(), "compressIndices: empty index array");
    auto [lo, hi] = std::minmax_element(indices.begin(), indices.end());

    PackedIndexBuffer out;
    out.minIndex = *lo;
    out.bitsPerIndex = bitsForSpan(*hi - *lo);
    out.count = indices.size();
    out.bytes.assign(out.payloadBytes() + kReadPadding, 0);

    uint64_t bit = 0;
    for (uint32_t value : indices) {
        uint64_t field = uint64_t(value - out.minIndex) << (bit & 7);
        std::size_t byte = static_cast<std::size_t>(bit >> 3);
        for (int b = 0; field != 0; ++b, field >>= 8) out.bytes[byte + b] |= static_cast<uint8_t>(field & 0xFF);
        bit += out.bitsPerIndex;
    }
    return out;
}

PackedIndexBuffer makePackedIndexBuffer(uint32_t minIndex, uint32_t bitsPerIndex, uint64_t count,
                                        std::span<const uint8_t> payload) {
    TRIRAST_EXPECTS(bitsPerIndex >= 1 && bitsPerIndex <= 32, "bitsPerIndex must be in 1..32");
    PackedIndexBuffer out;
    out.minIndex = minIndex;
    out.bitsPerIndex = bitsPerIndex;
    out.count = count;
    TRIRAST_EXPECTS(payload.size() == out.payloadBytes(), "packed index payload size mismatch");
    out.bytes.assign(payload.begin(), payload.end());
    out.bytes.resize(payload.size() + kReadPadding, 0);
    return out;
}

uint32_t decodeIndex(const PackedIndexBuffer& buffer, uint64_t i) {
    TRIRAST_EXPECTS(i < buffer.count, "decodeIndex: element index out of range");
    return decodeIndexUnchecked(buffer, i);
}

std::vector<uint32_t> decodeAllIndices(const PackedIndexBuffer& buffer) {
    std::vector<uint32_t> out(buffer.count);
    for (uint64_t i = 0; i < buffer.count; ++i) out[i] = decodeIndexUnchecked(buffer, i);
    return out;
}

QuantizedPositions quantizePositions(std::span<const Vec3> positions, const Aabb& box) {
    QuantizedPositions out;
    out.gridMin = box.min;
    for (int a = 0; a < 3; ++a) {
        float extent = box.max[a] - box.min[a];
        out.gridSize[a] = extent > 0.0f ? extent : 1.0f;
    }
    out.coords.reserve(positions.size());
    for (const Vec3& p : positions) {
        TRIRAST_EXPECTS(box.contains(p), "quantizePositions: position outside bounding box");
        std::array<uint16_t, 3> q{};
        for (int a = 0; a < 3; ++a) {
            double cell = std::floor(65536.0 * (double(p[a]) - double(out.gridMin[a])) / double(out.gridSize[a]));
            q[a] = static_cast<uint16_t>(std::clamp(cell, 0.0, 65535.0));
        }
        out.coords.push_back(q);
    }
    return out;
}

Vec3d dequantizePosition(const std::array<uint16_t, 3>& q, const QuantizedPositions& grid) {
    Vec3d p;
    for (int a = 0; a < 3; ++a) {
        p[a] = double(grid.gridMin[a]) + (double(q[a]) + 0.5) / 65536.0 * double(grid.gridSize[a]);
    }
    return p;
}

MipChain buildMipChain(const Image& image) {
    TRIRAST_EXPECTS(image.width >= 1 && image.height >= 1, "buildMipChain: empty image");
    MipChain chain;
    chain.levels.push_back(image);
    while (chain.levels.back().width > 1 || chain.levels.back().height > 1) {
        const Image& src = chain.levels.back();
        Image dst(std::max(1, src.width / 2), std::max(1, src.height / 2));
        for (int y = 0; y < dst.height; ++y) {
            int y0 = std::min(2 * y, src.height - 1), y1 = std::min(2 * y + 1, src.height - 1);
            for (int x = 0; x < dst.width; ++x) {
                int x0 = std::min(2 * x, src.width - 1), x1 = std::min(2 * x + 1, src.width - 1);
                int xs[2] = {x0, x1}, ys[2] = {y0, y1};
                int nx = (x1 != x0) ? 2 : 1, ny = (y1 != y0) ? 2 : 1;
                unsigned sum[4] = {0, 0, 0, 0};
                for (int j = 0; j < ny; ++j) {
                    for (int i = 0; i < nx; ++i) {
                        const Rgba8& c = src.at(xs[i], ys[j]);
                        sum[0] += c.r;
                        sum[1] += c.g;
                        sum[2] += c.b;
                        sum[3] += c.a;
                    }
                }
                // n is 1, 2 or 4 so the floor average is a shift.
                int shift = std::countr_zero(unsigned(nx * ny));
                dst.at(x, y) = {uint8_t(sum[0] >> shift), uint8_t(sum[1] >> shift), uint8_t(sum[2] >> shift),
                                uint8_t(sum[3] >> shift)};
            }
        }
        chain.levels.push_back(std::move(dst));
    }
    return chain;
}

}  // namespace trirast
