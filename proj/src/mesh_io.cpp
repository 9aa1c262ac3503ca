#include "trirast/mesh_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "trirast/errors.hpp"

namespace trirast {

// ---------------------------------------------------------------------------
// OBJ
// ---------------------------------------------------------------------------

namespace {

bool parseFloat(std::string_view tok, float& out) {
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

bool parseInt(std::string_view tok, long long& out) {
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

std::vector<std::string_view> splitWhitespace(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

uint8_t unitToByte(float v) { return static_cast<uint8_t>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f); }

}  // namespace

Mesh parseObj(std::istream& in, const std::string& name) {
    std::vector<Vec3> positions;
    std::vector<Rgba8> colors;
    std::vector<Vec2> texcoords;
    struct Corner {
        uint32_t v;
        int64_t vt;  // -1 when absent
    };
    std::vector<std::array<Corner, 3>> faces;
    bool anyColor = false, anyTexcoord = false;

    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        auto hash = line.find('#');
        std::string_view body(line.data(), hash == std::string::npos ? line.size() : hash);
        auto tok = splitWhitespace(body);
        if (tok.empty()) continue;
        auto fail = [&](const std::string& what) -> ParseError {
            return ParseError("OBJ line " + std::to_string(lineNo) + ": " + what, lineNo);
        };

        if (tok[0] == "v") {
            if (tok.size() != 4 && tok.size() != 7) throw fail("vertex needs 3 coordinates (optionally + r g b)");
            Vec3 p;
            for (int a = 0; a < 3; ++a) {
                if (!parseFloat(tok[1 + a], p[a])) throw fail("bad vertex coordinate '" + std::string(tok[1 + a]) + "'");
            }
            positions.push_back(p);
            Rgba8 c{255, 255, 255, 255};
            if (tok.size() == 7) {
                float rgb[3];
                for (int a = 0; a < 3; ++a) {
                    if (!parseFloat(tok[4 + a], rgb[a])) throw fail("bad vertex color");
                }
                c = {unitToByte(rgb[0]), unitToByte(rgb[1]), unitToByte(rgb[2]), 255};
                anyColor = true;
            }
            colors.push_back(c);
        } else if (tok[0] == "vt") {
            if (tok.size() < 3) throw fail("texture coordinate needs u v");
            Vec2 uv;
            if (!parseFloat(tok[1], uv.x) || !parseFloat(tok[2], uv.y)) throw fail("bad texture coordinate");
            texcoords.push_back(uv);
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw fail("face needs at least 3 vertices");
            std::vector<Corner> poly;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                std::string_view ref = tok[k];
                std::string_view parts[3];
                int nparts = 0;
                std::size_t start = 0;
                for (std::size_t c = 0; c <= ref.size() && nparts < 3; ++c) {
                    if (c == ref.size() || ref[c] == '/') {
                        parts[nparts++] = ref.substr(start, c - start);
                        start = c + 1;
                    }
                }
                long long vi = 0;
                if (!parseInt(parts[0], vi) || vi == 0) throw fail("bad face vertex reference '" + std::string(ref) + "'");
                long long resolved = vi > 0 ? vi - 1 : static_cast<long long>(positions.size()) + vi;
                if (resolved < 0 || resolved >= static_cast<long long>(positions.size())) {
                    throw fail("face references undefined vertex " + std::to_string(vi));
                }
                Corner corner{static_cast<uint32_t>(resolved), -1};
                if (nparts >= 2 && !parts[1].empty()) {
                    long long ti = 0;
                    if (!parseInt(parts[1], ti) || ti == 0) throw fail("bad texture reference '" + std::string(ref) + "'");
                    long long tr = ti > 0 ? ti - 1 : static_cast<long long>(texcoords.size()) + ti;
                    if (tr < 0 || tr >= static_cast<long long>(texcoords.size())) {
                        throw fail("face references undefined texture coordinate " + std::to_string(ti));
                    }
                    corner.vt = tr;
                    anyTexcoord = true;
                }
                poly.push_back(corner);
            }
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
        }
        // vn, o, g, s, usemtl, mtllib and unknown records are ignored.
    }

    Mesh mesh;
    mesh.name = name;
    if (!anyTexcoord) {
        mesh.positions = std::move(positions);
        if (anyColor) mesh.vertexColors = std::move(colors);
        mesh.indices.reserve(faces.size() * 3);
        for (const auto& f : faces) {
            for (const Corner& c : f) mesh.indices.push_back(c.v);
        }
    } else {
        // Split vertices so that each (position, texcoord) pair gets its own index.
        std::map<std::pair<uint32_t, int64_t>, uint32_t> remap;
        for (const auto& f : faces) {
            for (const Corner& c : f) {
                auto [it, inserted] = remap.try_emplace({c.v, c.vt}, static_cast<uint32_t>(mesh.positions.size()));
                if (inserted) {
                    mesh.positions.push_back(positions[c.v]);
                    mesh.uvs.push_back(c.vt >= 0 ? texcoords[static_cast<std::size_t>(c.vt)] : Vec2{});
                    if (anyColor) mesh.vertexColors.push_back(colors[c.v]);
                }
                mesh.indices.push_back(it->second);
            }
        }
    }
    mesh.triangleCount = faces.size();
    mesh.computeBounds();
    return mesh;
}

// ---------------------------------------------------------------------------
// Native binary
// ---------------------------------------------------------------------------

namespace {

class LeWriter {
public:
    explicit LeWriter(std::ostream& out) : out_(out) {}
    template <typename T>
    void put(T v) {
        using U = std::conditional_t<sizeof(T) == 8, uint64_t,
                                     std::conditional_t<sizeof(T) == 4, uint32_t,
                                                         std::conditional_t<sizeof(T) == 2, uint16_t, uint8_t>>>;
        U bits = std::bit_cast<U>(v);
        char buf[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((uint64_t(bits) >> (8 * i)) & 0xFF);
        out_.write(buf, sizeof(T));
    }
    void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), std::streamsize(n)); }

private:
    std::ostream& out_;
};

class LeReader {
public:
    explicit LeReader(std::istream& in) : in_(in) {}
    template <typename T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 8, uint64_t,
                                     std::conditional_t<sizeof(T) == 4, uint32_t,
                                                         std::conditional_t<sizeof(T) == 2, uint16_t, uint8_t>>>;
        unsigned char buf[sizeof(T)];
        read(buf, sizeof(T));
        uint64_t bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) bits |= uint64_t(buf[i]) << (8 * i);
        return std::bit_cast<T>(static_cast<U>(bits));
    }
    void read(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), std::streamsize(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw ParseError("native mesh truncated at byte " + std::to_string(offset_ + in_.gcount()), 0,
                             offset_ + static_cast<std::size_t>(in_.gcount()));
        }
        offset_ += n;
    }
    std::size_t offset() const { return offset_; }

private:
    std::istream& in_;
    std::size_t offset_ = 0;
};

// Guards allocation sizes read from untrusted headers.
constexpr uint64_t kMaxElements = uint64_t(1) << 34;

}  // namespace

void writeNativeMesh(std::ostream& out, const Mesh& mesh) {
    LeWriter w(out);
    uint32_t flags = 0;
    if (mesh.quantized) flags |= kFlagQuantizedPositions;
    if (mesh.packedIndices) flags |= kFlagPackedIndices;
    if (mesh.hasUvs()) flags |= kFlagUvs;
    if (mesh.hasVertexColors()) flags |= kFlagVertexColors;

    w.bytes(kNativeMeshMagic, 8);
    w.put<uint64_t>(mesh.vertexCount());
    w.put<uint64_t>(mesh.triangleCount);
    w.put<uint32_t>(flags);
    w.put<uint8_t>(static_cast<uint8_t>(mesh.packedIndices ? mesh.packedIndices->bitsPerIndex : 32));
    w.put<uint8_t>(0);
    w.put<uint8_t>(0);
    w.put<uint8_t>(0);

    if (mesh.quantized) {
        for (int a = 0; a < 3; ++a) w.put<float>(mesh.quantized->gridMin[a]);
        for (int a = 0; a < 3; ++a) w.put<float>(mesh.quantized->gridSize[a]);
        for (const auto& q : mesh.quantized->coords) {
            for (uint16_t c : q) w.put<uint16_t>(c);
        }
    } else {
        for (const Vec3& p : mesh.positions) {
            w.put<float>(p.x);
            w.put<float>(p.y);
            w.put<float>(p.z);
        }
    }
    if (mesh.packedIndices) {
        w.put<uint32_t>(mesh.packedIndices->minIndex);
        w.bytes(mesh.packedIndices->bytes.data(), mesh.packedIndices->payloadBytes());
    } else {
        for (uint32_t i : mesh.indices) w.put<uint32_t>(i);
    }
    for (const Vec2& uv : mesh.uvs) {
        w.put<float>(uv.x);
        w.put<float>(uv.y);
    }
    for (const Rgba8& c : mesh.vertexColors) {
        w.put<uint8_t>(c.r);
        w.put<uint8_t>(c.g);
        w.put<uint8_t>(c.b);
        w.put<uint8_t>(c.a);
    }
    if (!out) throw IoError("failed writing native mesh");
}

Mesh readNativeMesh(std::istream& in, const std::string& name) {
    LeReader r(in);
    char magic[8];
    r.read(magic, 8);
    if (std::memcmp(magic, kNativeMeshMagic, 8) != 0) throw ParseError("not a TRIMESH1 file (bad magic)", 0, 0);
    uint64_t vertexCount = r.get<uint64_t>();
    uint64_t triangleCount = r.get<uint64_t>();
    uint32_t flags = r.get<uint32_t>();
    uint32_t bits = r.get<uint8_t>();
    r.get<uint8_t>();
    r.get<uint8_t>();
    r.get<uint8_t>();
    if (vertexCount > kMaxElements || triangleCount > kMaxElements) {
        throw ParseError("native mesh header declares an implausible size", 0, 8);
    }
    if (flags & ~uint32_t(0xF)) throw ParseError("native mesh header has unknown flags", 0, 24);

    Mesh mesh;
    mesh.name = name;
    mesh.triangleCount = triangleCount;
    if (flags & kFlagQuantizedPositions) {
        QuantizedPositions q;
        for (int a = 0; a < 3; ++a) q.gridMin[a] = r.get<float>();
        for (int a = 0; a < 3; ++a) q.gridSize[a] = r.get<float>();
        q.coords.resize(vertexCount);
        for (auto& c : q.coords) {
            for (uint16_t& v : c) v = r.get<uint16_t>();
        }
        mesh.quantized = std::move(q);
    } else {
        mesh.positions.resize(vertexCount);
        for (Vec3& p : mesh.positions) {
            p.x = r.get<float>();
            p.y = r.get<float>();
            p.z = r.get<float>();
        }
    }
    if (flags & kFlagPackedIndices) {
        if (bits < 1 || bits > 32) throw ParseError("native mesh bitsPerIndex out of range", 0, 28);
        uint32_t minIndex = r.get<uint32_t>();
        uint64_t count = 3 * triangleCount;
        std::vector<uint8_t> payload(static_cast<std::size_t>((count * bits + 7) / 8));
        r.read(payload.data(), payload.size());
        mesh.packedIndices = makePackedIndexBuffer(minIndex, bits, count, payload);
    } else {
        mesh.indices.resize(3 * triangleCount);
        for (uint32_t& i : mesh.indices) i = r.get<uint32_t>();
    }
    if (flags & kFlagUvs) {
        mesh.uvs.resize(vertexCount);
        for (Vec2& uv : mesh.uvs) {
            uv.x = r.get<float>();
            uv.y = r.get<float>();
        }
    }
    if (flags & kFlagVertexColors) {
        mesh.vertexColors.resize(vertexCount);
        for (Rgba8& c : mesh.vertexColors) {
            c.r = r.get<uint8_t>();
            c.g = r.get<uint8_t>();
            c.b = r.get<uint8_t>();
            c.a = r.get<uint8_t>();
        }
    }
    uint64_t indexCount = mesh.packedIndices ? mesh.packedIndices->count : mesh.indices.size();
    for (uint64_t i = 0; i < indexCount; ++i) {
        if (mesh.index(i) >= vertexCount) {
            throw ParseError("native mesh index " + std::to_string(i) + " out of range", 0, r.offset());
        }
    }
    if (mesh.quantized) {
        mesh.aabb = Aabb{mesh.quantized->gridMin, mesh.quantized->gridMin + mesh.quantized->gridSize};
    } else {
        mesh.computeBounds();
    }
    return mesh;
}

void saveNativeMesh(const std::filesystem::path& path, const Mesh& mesh) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    writeNativeMesh(out, mesh);
}

Mesh loadMeshAsset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open mesh '" + path.string() + "'");
    char magic[8] = {};
    in.read(magic, 8);
    bool native = in.gcount() == 8 && std::memcmp(magic, kNativeMeshMagic, 8) == 0;
    in.clear();
    in.seekg(0);
    std::string name = path.stem().string();
    try {
        return native ? readNativeMesh(in, name) : parseObj(in, name);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line(), e.offset());
    }
}

Mesh compressMesh(const Mesh& mesh, const CompressionOptions& options) {
    Mesh out = mesh;
    if (options.indices && !out.packedIndices && !out.indices.empty()) {
        out.packedIndices = compressIndices(out.indices);
        out.indices.clear();
        out.indices.shrink_to_fit();
    }
    if (options.positions && !out.quantized && !out.positions.empty()) {
        out.quantized = quantizePositions(out.positions, out.aabb);
        out.positions.clear();
        out.positions.shrink_to_fit();
        out.aabb = Aabb{out.quantized->gridMin, out.quantized->gridMin + out.quantized->gridSize};
    }
    return out;
}

uint64_t nativeMeshSize(const Mesh& mesh) {
    std::ostringstream os;
    writeNativeMesh(os, mesh);
    return os.str().size();
}

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

namespace {

void skipPpmSpace(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string dummy;
            std::getline(in, dummy);
        } else if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
            in.get();
        } else {
            return;
        }
    }
}

int readPpmInt(std::istream& in) {
    skipPpmSpace(in);
    int v = -1;
    if (!(in >> v)) throw ParseError("PPM header: expected integer");
    return v;
}

}  // namespace

Image readPpm(std::istream& in) {
    char p = 0, six = 0;
    in.get(p);
    in.get(six);
    if (p != 'P' || six != '6') throw ParseError("not a binary PPM (P6) image");
    int w = readPpmInt(in), h = readPpmInt(in), maxval = readPpmInt(in);
    if (w <= 0 || h <= 0 || maxval != 255) throw ParseError("PPM: unsupported size or maxval");
    in.get();  // single whitespace before raster
    Image img(w, h);
    std::vector<unsigned char> raw(std::size_t(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw ParseError("PPM: truncated raster");
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = {raw[3 * i], raw[3 * i + 1], raw[3 * i + 2], 255};
    return img;
}

void writePpm(std::ostream& out, const Image& image) {
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> raw;
    raw.reserve(image.pixels.size() * 3);
    for (const Rgba8& c : image.pixels) {
        raw.push_back(c.r);
        raw.push_back(c.g);
        raw.push_back(c.b);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
}

Image loadImage(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (ext == ".ppm") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open image '" + path.string() + "'");
        return readPpm(in);
    }
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
        std::string msg = png.message;
        png_image_free(&png);
        if (!std::filesystem::exists(path)) throw IoError("cannot open image '" + path.string() + "'");
        throw ParseError(path.string() + ": " + msg);
    }
    png.format = PNG_FORMAT_RGBA;
    Image img(int(png.width), int(png.height));
    if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw ParseError(path.string() + ": " + msg);
    }
    return img;
}

void saveImage(const std::filesystem::path& path, const Image& image) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (ext == ".png") {
        png_image png{};
        png.version = PNG_IMAGE_VERSION;
        png.width = png_uint_32(image.width);
        png.height = png_uint_32(image.height);
        png.format = PNG_FORMAT_RGBA;
        if (!png_image_write_to_file(&png, path.string().c_str(), 0, image.pixels.data(), 0, nullptr)) {
            std::string msg = png.message;
            png_image_free(&png);
            throw IoError("cannot write PNG '" + path.string() + "': " + msg);
        }
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    writePpm(out, image);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace trirast
