#include "trirast/bench.hpp"

#include <chrono>
#include <iomanip>
#include <map>
#include <ostream>

#include "trirast/mesh_io.hpp"

namespace trirast {

std::vector<SceneNode> compressSceneNodes(const std::vector<SceneNode>& nodes) {
    std::map<const Mesh*, std::shared_ptr<const Mesh>> compressed;
    std::vector<SceneNode> out = nodes;
    for (SceneNode& node : out) {
        auto [it, inserted] = compressed.try_emplace(node.mesh.get());
        if (inserted) it->second = std::make_shared<Mesh>(compressMesh(*node.mesh, {true, true}));
        node.mesh = it->second;
    }
    return out;
}

BenchReport runBench(const BenchScene& scene, const std::vector<BenchConfig>& configs, int frames, int warmup) {
    using Clock = std::chrono::steady_clock;
    BenchReport report;
    std::vector<SceneNode> compressedNodes;
    std::map<std::pair<bool, int>, std::pair<uint64_t, std::string>> firstHash;

    for (const BenchConfig& config : configs) {
        if (config.compressed && compressedNodes.empty()) compressedNodes = compressSceneNodes(scene.nodes);
        const std::vector<SceneNode>& nodes = config.compressed ? compressedNodes : scene.nodes;
        Camera camera = scene.camera;
        camera.superSampling = config.superSampling;
        Renderer renderer(config.raster);

        BenchRow row;
        row.sceneName = scene.name;
        row.label = config.label;
        row.workers = renderer.pool().size();
        row.superSampling = config.superSampling;
        row.compressed = config.compressed;
        row.frames = frames;
        for (int f = 0; f < warmup + frames; ++f) {
            FrameResult result = renderer.renderFrame(nodes, camera);
            auto t = Clock::now();
            Image image = resolveFrame(result.framebuffer, result.drawList, camera, scene.shading, nullptr,
                                       &renderer.pool());
            if (camera.superSampling > 1) image = downsample(image, camera.superSampling);
            double resolveMs = std::chrono::duration<double, std::milli>(Clock::now() - t).count();
            if (f < warmup) continue;
            const FrameStats& s = result.stats;
            row.stage1Ms += s.stage1Ms;
            row.stage2Ms += s.stage2Ms;
            row.stage3Ms += s.stage3Ms;
            row.resolveMs += resolveMs;
            row.totalMs += s.totalMs + resolveMs;
            if (f == warmup + frames - 1) {
                row.visibleTriangles = s.visibleTriangles;
                row.fragments = s.fragments();
                for (std::size_t r = 0; r < kCullReasonCount; ++r) row.cullCounts[r] = s.stage1.culled[r] + s.stage2.culled[r];
                row.frameHash = result.framebuffer.hash();
            }
        }
        if (frames > 0) {
            for (double* v : {&row.stage1Ms, &row.stage2Ms, &row.stage3Ms, &row.resolveMs, &row.totalMs}) *v /= frames;
        }
        auto [it, inserted] = firstHash.try_emplace({config.compressed, config.superSampling}, row.frameHash, row.label);
        if (!inserted && it->second.first != row.frameHash) {
            report.hashMismatches.push_back(row.label + " differs from " + it->second.second);
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void BenchReport::writeTable(std::ostream& out) const {
    std::size_t labelWidth = 6;
    for (const BenchRow& r : rows) labelWidth = std::max(labelWidth, r.label.size());
    out << std::left << std::setw(int(labelWidth)) << "config" << std::right << std::setw(12) << "triangles"
        << std::setw(10) << "stage1" << std::setw(10) << "stage2" << std::setw(10) << "stage3" << std::setw(10)
        << "resolve" << std::setw(10) << "total" << std::setw(14) << "fragments" << std::setw(12) << "culled" << "\n";
    out << std::fixed << std::setprecision(3);
    for (const BenchRow& r : rows) {
        uint64_t culled = 0;
        for (uint64_t c : r.cullCounts) culled += c;
        out << std::left << std::setw(int(labelWidth)) << r.label << std::right << std::setw(12) << r.visibleTriangles
            << std::setw(10) << r.stage1Ms << std::setw(10) << r.stage2Ms << std::setw(10) << r.stage3Ms
            << std::setw(10) << r.resolveMs << std::setw(10) << r.totalMs << std::setw(14) << r.fragments
            << std::setw(12) << culled << "\n";
    }
    out.unsetf(std::ios::floatfield);
    for (const std::string& m : hashMismatches) out << "HASH MISMATCH: " << m << "\n";
}

void BenchReport::writeCsv(std::ostream& out) const {
    out << "scene,config,workers,supersampling,compressed,visibleTriangles,stage1Ms,stage2Ms,stage3Ms,resolveMs,"
           "totalMs,fragments";
    for (std::size_t r = 0; r < kCullReasonCount; ++r) out << ",cull_" << cullReasonName(static_cast<CullReason>(r));
    out << ",frameHash,frames\n";
    out << std::setprecision(6);
    for (const BenchRow& r : rows) {
        out << r.sceneName << ",\"" << r.label << "\"," << r.workers << "," << r.superSampling << ","
            << (r.compressed ? 1 : 0) << "," << r.visibleTriangles << "," << r.stage1Ms << "," << r.stage2Ms << ","
            << r.stage3Ms << "," << r.resolveMs << "," << r.totalMs << "," << r.fragments;
        for (uint64_t c : r.cullCounts) out << "," << c;
        out << "," << std::hex << r.frameHash << std::dec << "," << r.frames << "\n";
    }
}

}  // namespace trirast
