#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "trirast/bench.hpp"
#include "trirast/errors.hpp"
#include "trirast/mesh_io.hpp"
#include "trirast/procgen.hpp"
#include "trirast/raster_pipe.hpp"
#include "trirast/resolve_pass.hpp"
#include "trirast/scene_desc.hpp"
#include "trirast/worker_pool.hpp"

namespace trirast {

namespace {

using Clock = std::chrono::steady_clock;

double msSince(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<int> parseIntList(const std::string& text, const char* flag) {
    std::vector<int> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ParseError(std::string(flag) + ": '" + item + "' is not an integer");
        }
    }
    if (values.empty()) throw ParseError(std::string(flag) + " needs at least one value");
    return values;
}

void checkSuperSampling(int ss) {
    if (ss != 1 && ss != 2 && ss != 4) throw ParseError("--supersampling must be 1, 2 or 4");
}

struct RenderFlags {
    std::optional<int> workers;
    std::optional<int> superSampling;
    std::string tinyCull;
    std::optional<int> forceStage;

    void apply(RasterConfig& raster, Camera& camera) const {
        if (workers) raster.workers = unsigned(*workers);
        if (raster.workers == 0) raster.workers = WorkerPool::defaultWorkerCount();
        if (superSampling) {
            checkSuperSampling(*superSampling);
            camera.superSampling = *superSampling;
        }
        if (!tinyCull.empty()) raster.tinyCull = tinyCull == "on";
        if (forceStage) raster.forceStage = *forceStage;
    }
};

void addRenderFlags(CLI::App* cmd, RenderFlags& flags, bool superSamplingFlag = true) {
    cmd->add_option("--workers", flags.workers, "Worker threads (default: TRIRAST_WORKERS or hardware)")
        ->check(CLI::Range(1, 1024));
    if (superSamplingFlag) cmd->add_option("--supersampling", flags.superSampling, "Supersampling factor {1,2,4}");
    cmd->add_option("--tiny-cull", flags.tinyCull, "Tiny-triangle culling")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--force-stage", flags.forceStage, "Route every triangle to one stage")->check(CLI::Range(1, 3));
}

std::optional<DebugView> parseDebugView(const std::string& name) {
    if (name.empty()) return std::nullopt;
    if (name == "depth") return DebugView::Depth;
    if (name == "stageID") return DebugView::StageId;
    if (name == "bboxSize") return DebugView::BboxSize;
    return DebugView::MeshId;
}

int cmdRender(const std::string& scenePath, const std::string& output, const RenderFlags& flags,
              const std::string& debugName, int frames, std::ostream& out) {
    LoadedScene scene = loadScene(scenePath);
    RasterConfig raster = scene.description.raster;
    Camera camera = scene.camera;
    flags.apply(raster, camera);
    Renderer renderer(raster);

    FrameResult result;
    for (int f = 0; f < std::max(1, frames); ++f) result = renderer.renderFrame(scene.nodes, camera);

    auto t = Clock::now();
    Image image;
    if (std::optional<DebugView> view = parseDebugView(debugName)) {
        image = debugView(result.framebuffer, result.drawList, camera, raster, *view, scene.description.shading.background);
    } else {
        ResolveStats stats;
        image = resolveFrame(result.framebuffer, result.drawList, camera, scene.description.shading, &stats,
                             &renderer.pool());
        if (camera.superSampling > 1) image = downsample(image, camera.superSampling);
    }
    double resolveMs = msSince(t);
    saveImage(output, image);

    out << "scene load+decode " << std::fixed << std::setprecision(3) << scene.loadMs << " ms, workers "
        << renderer.pool().size() << ", internal resolution " << camera.renderWidth() << "x" << camera.renderHeight()
        << "\n";
    out.unsetf(std::ios::floatfield);
    out << result.stats.summary() << "\n";
    out << "resolve " << resolveMs << " ms\n";
    out << "framebuffer hash " << std::hex << result.framebuffer.hash() << std::dec << "\n";
    out << "wrote " << output << " (" << image.width << "x" << image.height << ")\n";
    return 0;
}

struct BenchFlags {
    int frames = 60;
    int warmup = 5;
    std::string workers;
    std::string superSampling;
    std::vector<std::string> toggles;
    std::string tinyCull;
    std::optional<int> forceStage;
    std::string csv = "bench.csv";
};

int cmdBench(const std::string& scenePath, const BenchFlags& flags, std::ostream& out, std::ostream& err) {
    LoadedScene loaded = loadScene(scenePath);
    BenchScene scene{std::filesystem::path(scenePath).stem().string(), loaded.nodes, loaded.camera,
                     loaded.description.shading};

    RasterConfig base = loaded.description.raster;
    if (!flags.tinyCull.empty()) base.tinyCull = flags.tinyCull == "on";
    if (flags.forceStage) base.forceStage = *flags.forceStage;
    std::vector<int> workers = flags.workers.empty()
                                   ? std::vector<int>{int(base.workers > 0 ? base.workers : WorkerPool::defaultWorkerCount())}
                                   : parseIntList(flags.workers, "--workers");
    std::vector<int> factors = flags.superSampling.empty() ? std::vector<int>{loaded.camera.superSampling}
                                                           : parseIntList(flags.superSampling, "--supersampling");
    for (int ss : factors) checkSuperSampling(ss);
    for (int w : workers) {
        if (w < 1) throw ParseError("--workers values must be positive");
    }
    bool toggleTiny = false, toggleCompressed = false, toggleInstanced = false;
    for (const std::string& t : flags.toggles) {
        if (t == "tinyCull") {
            toggleTiny = true;
        } else if (t == "compressed") {
            toggleCompressed = true;
        } else if (t == "instanced") {
            toggleInstanced = true;
        } else {
            throw ParseError("--toggle must be tinyCull, compressed or instanced");
        }
    }

    std::vector<BenchConfig> configs;
    for (int compressed : toggleCompressed ? std::vector<int>{0, 1} : std::vector<int>{0}) {
        for (int ss : factors) {
            for (int tiny : toggleTiny ? std::vector<int>{1, 0} : std::vector<int>{base.tinyCull ? 1 : 0}) {
                for (int inst : toggleInstanced ? std::vector<int>{1, 0} : std::vector<int>{-1}) {
                    for (int w : workers) {
                        BenchConfig c;
                        c.raster = base;
                        c.raster.workers = unsigned(w);
                        c.raster.tinyCull = tiny != 0;
                        if (inst >= 0) c.raster.instancing = inst ? Instancing::On : Instancing::Off;
                        c.superSampling = ss;
                        c.compressed = compressed != 0;
                        std::ostringstream label;
                        label << "workers=" << w << " ss=" << ss << " tinyCull=" << (tiny ? "on" : "off");
                        if (inst >= 0) label << " instanced=" << (inst ? "on" : "off");
                        if (toggleCompressed) label << " compressed=" << (compressed ? "on" : "off");
                        c.label = label.str();
                        configs.push_back(c);
                    }
                }
            }
        }
    }

    BenchReport report = runBench(scene, configs, flags.frames, flags.warmup);
    out << "scene " << scene.name << ": load+decode " << loaded.loadMs << " ms, " << flags.frames
        << " timed frames after " << flags.warmup << " warm-up frames (times in ms)\n";
    report.writeTable(out);

    if (workers.size() > 1) {
        const BenchRow* reference = nullptr;
        for (const BenchRow& row : report.rows) {
            double stages = row.stage1Ms + row.stage2Ms + row.stage3Ms;
            if (row.workers == unsigned(workers.front())) {
                reference = &row;
                continue;
            }
            if (!reference) continue;
            double refStages = reference->stage1Ms + reference->stage2Ms + reference->stage3Ms;
            out << "speedup stages 1-3, " << row.label << " vs workers=" << reference->workers << ": "
                << (stages > 0 ? refStages / stages : 0.0) << "x ("
                << (stages > 0 ? double(row.visibleTriangles) / stages / 1000.0 : 0.0) << " Mtri/s)\n";
        }
    }

    if (!flags.csv.empty()) {
        std::ofstream csv(flags.csv);
        report.writeCsv(csv);
        if (!csv) throw IoError("cannot write '" + flags.csv + "'");
        out << "wrote " << flags.csv << "\n";
    }
    if (!report.hashMismatches.empty()) {
        err << "error: timing-only flags changed the rendered image\n";
        return 4;
    }
    return 0;
}

struct GenFlags {
    std::string kind;
    std::string output;
    int n = 64;
    int count = 100;
    uint64_t triangles = 0;
    int gridX = 50;
    int gridY = 60;
    uint64_t seed = 1;
    int width = 0;
    int height = 0;
    double tinyFraction = 0.4;
};

int cmdGen(const GenFlags& f, std::ostream& out) {
    auto size = [&](int w, int h) { return std::pair{f.width > 0 ? f.width : w, f.height > 0 ? f.height : h}; };
    GeneratedScene scene;
    if (f.kind == "tessellatedQuad") {
        auto [w, h] = size(640, 480);
        scene = genTessellatedQuad(f.n, w, h);
    } else if (f.kind == "spheres") {
        auto [w, h] = size(1280, 720);
        scene = genSpheres(f.count, f.triangles ? f.triangles : 20000, f.seed, w, h);
    } else if (f.kind == "classifierScene") {
        auto [w, h] = size(640, 480);
        scene = genClassifierScene(w, h);
    } else if (f.kind == "lanternGrid") {
        auto [w, h] = size(1280, 720);
        scene = genLanternGrid(f.gridX, f.gridY, f.triangles ? f.triangles : 2000, w, h);
    } else if (f.kind == "dense") {
        auto [w, h] = size(1920, 1080);
        scene = genDenseScene(f.triangles ? f.triangles : 1000000, f.tinyFraction, f.seed, w, h);
    } else {
        auto [w, h] = size(320, 240);
        scene = genRandomScene(f.seed, f.triangles ? f.triangles : 10000, w, h);
    }
    uint64_t triangles = scene.triangleCount();
    std::filesystem::path path = writeGeneratedScene(f.output.empty() ? "gen_" + f.kind : f.output, std::move(scene));
    out << "wrote " << path.string() << " (" << triangles << " triangles)\n";
    return 0;
}

int cmdCompress(const std::string& in, const std::string& outPath, const std::string& indices,
                const std::string& positions, std::ostream& out) {
    Mesh mesh = loadMeshAsset(in);
    uint64_t before = nativeMeshSize(mesh);
    Mesh compressed = compressMesh(mesh, {indices == "on", positions == "on"});
    saveNativeMesh(outPath, compressed);
    uint64_t after = nativeMeshSize(compressed);
    out << "triangles " << compressed.triangleCount << ", vertices " << compressed.vertexCount() << "\n";
    out << "size before " << before << " bytes, after " << after << " bytes (" << std::fixed << std::setprecision(1)
        << (before ? 100.0 * double(after) / double(before) : 0.0) << "%)\n";
    out.unsetf(std::ios::floatfield);
    if (compressed.packedIndices) {
        out << "bitsPerIndex=" << int(compressed.packedIndices->bitsPerIndex)
            << " minIndex=" << compressed.packedIndices->minIndex << "\n";
    } else {
        out << "bitsPerIndex=32 (uncompressed)\n";
    }
    if (compressed.quantized) {
        const QuantizedPositions& q = *compressed.quantized;
        out << "positions quantized to 16 bits, grid size " << q.gridSize.x << " x " << q.gridSize.y << " x "
            << q.gridSize.z << ", max error per axis " << q.gridSize.x / 131072.0f << " / " << q.gridSize.y / 131072.0f
            << " / " << q.gridSize.z / 131072.0f << "\n";
    }
    return 0;
}

int cmdInspect(const std::string& path, std::ostream& out) {
    if (std::filesystem::path(path).extension() == ".json") {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open '" + path + "'");
        std::stringstream text;
        text << in.rdbuf();
        SceneDescription desc = parseSceneDescription(text.str());
        out << "meshes " << desc.meshes.size() << ", nodes " << desc.nodes.size() << "\n";
        for (const MeshDecl& m : desc.meshes) out << "  mesh " << m.name << ": " << m.path << "\n";
        for (const NodeDecl& n : desc.nodes) out << "  node " << n.mesh << ": " << n.instanceCount() << " instances\n";
        const CameraDecl& c = desc.camera;
        out << "camera " << c.width << "x" << c.height << " fovy " << c.fovyDegrees << " near " << c.nearDistance
            << " supersampling " << c.superSampling << "\n";
        return 0;
    }
    auto start = Clock::now();
    Mesh mesh = loadMeshAsset(path);
    double loadMs = msSince(start);
    out << "mesh " << path << "\n";
    out << "vertices " << mesh.vertexCount() << ", triangles " << mesh.triangleCount << "\n";
    out << "positions " << (mesh.quantized ? "quantized 16-bit" : "float32") << ", indices ";
    if (mesh.packedIndices) {
        out << "packed " << int(mesh.packedIndices->bitsPerIndex) << " bits (min " << mesh.packedIndices->minIndex << ")\n";
    } else {
        out << "uint32\n";
    }
    out << "uvs " << (mesh.hasUvs() ? "yes" : "no") << ", vertex colors " << (mesh.hasVertexColors() ? "yes" : "no")
        << "\n";
    out << "bounds [" << mesh.aabb.min.x << ", " << mesh.aabb.min.y << ", " << mesh.aabb.min.z << "] - ["
        << mesh.aabb.max.x << ", " << mesh.aabb.max.y << ", " << mesh.aabb.max.z << "]\n";
    out << "payload " << nativeMeshSize(mesh) << " bytes, load+decode " << loadMs << " ms\n";
    return 0;
}

}  // namespace

int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Software visibility-buffer rasterizer"};
    app.require_subcommand(1);

    std::string scenePath, output, debugName;
    int frames = 1;
    uint64_t seed = 0;
    RenderFlags renderFlags;
    CLI::App* render = app.add_subcommand("render", "Render one frame to PNG/PPM");
    render->add_option("scene", scenePath, "Scene file")->required();
    render->add_option("--output", output, "Output image (.png or .ppm)")->default_val("render.png");
    render->add_option("--debug-view", debugName, "Debug visualization")
        ->check(CLI::IsMember({"depth", "stageID", "bboxSize", "meshID"}));
    render->add_option("--frames", frames, "Frames to render (the last one is written)")->check(CLI::Range(1, 100000));
    render->add_option("--seed", seed, "Accepted for symmetry with gen; rendering is deterministic");
    addRenderFlags(render, renderFlags);

    BenchFlags benchFlags;
    CLI::App* bench = app.add_subcommand("bench", "Time per-stage means over N frames");
    bench->add_option("scene", scenePath, "Scene file")->required();
    bench->add_option("--frames", benchFlags.frames, "Timed frames")->check(CLI::Range(1, 100000));
    bench->add_option("--warmup", benchFlags.warmup, "Warm-up frames")->check(CLI::Range(0, 100000));
    bench->add_option("--workers", benchFlags.workers, "Worker counts, comma separated");
    bench->add_option("--supersampling", benchFlags.superSampling, "Supersampling factors, comma separated");
    bench->add_option("--toggle", benchFlags.toggles, "Run both settings of tinyCull, compressed or instanced");
    bench->add_option("--tiny-cull", benchFlags.tinyCull, "Tiny-triangle culling")->check(CLI::IsMember({"on", "off"}));
    bench->add_option("--force-stage", benchFlags.forceStage, "Route every triangle to one stage")->check(CLI::Range(1, 3));
    bench->add_option("--output", benchFlags.csv, "CSV report path (empty to skip)");
    bench->add_option("--seed", seed, "Accepted for symmetry with gen");

    GenFlags genFlags;
    CLI::App* gen = app.add_subcommand("gen", "Generate a procedural scene");
    gen->add_option("kind", genFlags.kind, "Scene kind")
        ->required()
        ->check(CLI::IsMember({"spheres", "tessellatedQuad", "classifierScene", "lanternGrid", "dense", "random"}));
    gen->add_option("--output", genFlags.output, "Output directory");
    gen->add_option("--n", genFlags.n, "tessellatedQuad subdivisions")->check(CLI::Range(1, 1 << 14));
    gen->add_option("--count", genFlags.count, "Sphere count")->check(CLI::Range(1, 1 << 24));
    gen->add_option("--triangles", genFlags.triangles, "Triangles per sphere/lantern, or total for dense/random");
    gen->add_option("--grid-x", genFlags.gridX, "Lantern grid columns")->check(CLI::Range(1, 1 << 20));
    gen->add_option("--grid-y", genFlags.gridY, "Lantern grid rows")->check(CLI::Range(1, 1 << 20));
    gen->add_option("--seed", genFlags.seed, "Random seed");
    gen->add_option("--width", genFlags.width, "Image width")->check(CLI::Range(1, 16384));
    gen->add_option("--height", genFlags.height, "Image height")->check(CLI::Range(1, 16384));
    gen->add_option("--tiny-fraction", genFlags.tinyFraction, "Share of sub-pixel triangles (dense)")
        ->check(CLI::Range(0.0, 1.0));

    std::string meshIn, meshOut, indices = "on", positions = "on";
    CLI::App* compress = app.add_subcommand("compress", "Write a mesh with compressed payloads");
    compress->add_option("input", meshIn, "Input mesh (.obj or native)")->required();
    compress->add_option("output", meshOut, "Output native mesh")->required();
    compress->add_option("--indices", indices, "Pack indices")->check(CLI::IsMember({"on", "off"}));
    compress->add_option("--positions", positions, "Quantize positions")->check(CLI::IsMember({"on", "off"}));

    std::string inspectPath;
    CLI::App* inspect = app.add_subcommand("inspect", "Print mesh or scene header and stats");
    inspect->add_option("path", inspectPath, "Mesh or scene file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*render) return cmdRender(scenePath, output, renderFlags, debugName, frames, out);
        if (*bench) return cmdBench(scenePath, benchFlags, out, err);
        if (*gen) return cmdGen(genFlags, out);
        if (*compress) return cmdCompress(meshIn, meshOut, indices, positions, out);
        if (*inspect) return cmdInspect(inspectPath, out);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const CapacityError& e) {
        err << "capacity error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const ContractViolation& e) {
        err << "invalid input: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace trirast
