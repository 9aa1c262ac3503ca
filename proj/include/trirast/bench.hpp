#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "trirast/raster_pipe.hpp"
#include "trirast/resolve_pass.hpp"
#include "trirast/scene_core.hpp"

namespace trirast {

struct BenchConfig {
    std::string label;
    RasterConfig raster;
    int superSampling = 1;
    bool compressed = false;  // quantized positions + packed indices
};

struct BenchRow {
    std::string sceneName;
    std::string label;
    unsigned workers = 1;
    int superSampling = 1;
    bool compressed = false;
    uint64_t visibleTriangles = 0;
    double stage1Ms = 0, stage2Ms = 0, stage3Ms = 0, resolveMs = 0, totalMs = 0;  // means over the timed frames
    uint64_t fragments = 0;
    std::array<uint64_t, kCullReasonCount> cullCounts{};
    uint64_t frameHash = 0;  // visibility buffer hash of the last frame
    int frames = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    /// Rows whose framebuffer differs from an earlier row with the same
    /// compression and supersampling (timing-only flags must not change it).
    std::vector<std::string> hashMismatches;

    void writeTable(std::ostream& out) const;
    void writeCsv(std::ostream& out) const;
};

struct BenchScene {
    std::string name;
    std::vector<SceneNode> nodes;
    Camera camera;
    ShadingConfig shading;
};

/// Warms up `warmup` frames, then times `frames` frames (render + resolve +
/// downsample) for every configuration.
BenchReport runBench(const BenchScene& scene, const std::vector<BenchConfig>& configs, int frames = 60,
                     int warmup = 5);

/// Copies the scene with every mesh compressed (positions and indices).
std::vector<SceneNode> compressSceneNodes(const std::vector<SceneNode>& nodes);

}  // namespace trirast
