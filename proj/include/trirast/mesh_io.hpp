#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>

#include "trirast/geom_codec.hpp"
#include "trirast/scene_core.hpp"

namespace trirast {

/// Native mesh header flags.
enum NativeMeshFlags : uint32_t {
    kFlagQuantizedPositions = 1u << 0,
    kFlagPackedIndices = 1u << 1,
    kFlagUvs = 1u << 2,
    kFlagVertexColors = 1u << 3,
};

inline constexpr char kNativeMeshMagic[8] = {'T', 'R', 'I', 'M', 'E', 'S', 'H', '1'};

/// Wavefront OBJ subset: v (optionally followed by r g b in [0, 1]), vt, vn
/// (ignored) and f in the v, v/vt, v//vn and v/vt/vn forms. Polygons are fan
/// triangulated. Throws ParseError with the offending line number.
Mesh parseObj(std::istream& in, const std::string& name = "obj");

/// Native binary layout, all little-endian:
///   "TRIMESH1", vertexCount u64, triangleCount u64, flags u32, bitsPerIndex u8, 3 pad bytes,
///   [gridMin 3xf32, gridSize 3xf32]            if quantized
///   positions: 3xu16 (quantized) or 3xf32 per vertex,
///   indices: minIndex u32 + packed bitstream (packed) or 3xu32 per triangle,
///   [2xf32 per vertex]                         if uvs
///   [4xu8 per vertex]                          if vertex colors
void writeNativeMesh(std::ostream& out, const Mesh& mesh);
Mesh readNativeMesh(std::istream& in, const std::string& name = "mesh");

void saveNativeMesh(const std::filesystem::path& path, const Mesh& mesh);

/// Loads .obj or native (.trimesh, or any file starting with the magic).
/// Throws IoError when the file cannot be opened, ParseError on bad content.
Mesh loadMeshAsset(const std::filesystem::path& path);

struct CompressionOptions {
    bool indices = true;
    bool positions = true;
};

/// Returns a copy with the requested payloads compressed. Already-compressed
/// payloads are kept as they are, so compression is idempotent.
Mesh compressMesh(const Mesh& mesh, const CompressionOptions& options);

/// Geometry payload size in bytes as stored by writeNativeMesh.
uint64_t nativeMeshSize(const Mesh& mesh);

// Images ---------------------------------------------------------------------

Image readPpm(std::istream& in);
void writePpm(std::ostream& out, const Image& image);

/// PNG (via libpng) or PPM chosen by extension.
Image loadImage(const std::filesystem::path& path);
void saveImage(const std::filesystem::path& path, const Image& image);

}  // namespace trirast
