#pragma once

// Triangle meshes: OBJ ingestion, normalization, orthographic silhouettes for the
// projected frontal area, flat-shaded previews and topology heuristics.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace predo::geometry {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string provenance;  // prompt hash + generator id, informational
};

struct ObjLoadResult {
  TriMesh mesh;
  std::size_t dropped_faces = 0;  // repeated-vertex or zero-area triangles
};

inline constexpr double kDegenerateArea = 1e-12;
inline constexpr double kWeldTolerance = 1e-6;

/// Wavefront OBJ (v/f records, 1-based or negative indices, '#' comments).
/// Polygons are fan-triangulated. Throws parse_error (line-addressed) or empty_mesh.
ObjLoadResult load_obj(std::string_view text);

/// Deterministic OBJ serialization (9 significant digits).
std::string write_obj(const TriMesh& mesh);

/// Center of the bounding box to the origin, longest axis scaled to 1.
TriMesh normalize(const TriMesh& mesh);

TriMesh transformed(const TriMesh& mesh, const Eigen::Affine3d& transform);

struct BoundingBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Vec3 extent() const { return max - min; }
};

BoundingBox bounding_box(const TriMesh& mesh);

enum class Axis { x, y, z };

Axis axis_from_string(std::string_view text);
char to_char(Axis axis) noexcept;

/// Boolean coverage grid of an orthographic projection. Row 0 is the top row
/// (largest v); column 0 is the smallest u.
struct SilhouetteImage {
  int width = 0;
  int height = 0;
  double pixel_size = 0.0;
  Axis axis = Axis::x;
  double origin_u = 0.0;  // u coordinate of the left image edge
  double origin_v = 0.0;  // v coordinate of the top image edge
  std::vector<std::uint8_t> bits;

  bool at(int col, int row) const { return bits[static_cast<std::size_t>(row) * width + col] != 0; }
  std::size_t covered() const;
  /// Binary PGM (P5), covered pixels black on white.
  std::string to_pgm() const;
};

/// Projects onto the plane perpendicular to `axis`; `resolution` pixels span the
/// longer projected side plus a one-pixel margin on each side.
SilhouetteImage silhouette(const TriMesh& mesh, Axis axis, int resolution);

/// Covered pixel count times pixel area.
double frontal_area(const SilhouetteImage& image);

struct ViewParams {
  double azimuth_deg = 30.0;
  double elevation_deg = 20.0;
  int resolution = 256;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, row 0 at the top
};

GrayImage render_gray(const TriMesh& mesh, const ViewParams& view);
std::vector<std::uint8_t> encode_png(const GrayImage& image);
/// Flat-shaded, depth-buffered orthographic render on white, as 8-bit grayscale PNG.
std::vector<std::uint8_t> render_preview(const TriMesh& mesh, const ViewParams& view);

struct MeshStats {
  BoundingBox bbox;
  int connected_components = 0;
  bool watertight = false;
  double thin_fraction = 0.0;
};

inline constexpr double kThinThreshold = 0.02;  // fraction of the longest bbox side
inline constexpr int kStatsResolution = 128;

/// Weld-based component count, edge-manifold watertightness and the thin-line
/// fraction of the x silhouette.
MeshStats mesh_stats(const TriMesh& mesh);

/// Union-find over welded vertices; returns the representative index per vertex.
std::vector<std::uint32_t> weld_vertices(std::span<const Vec3> vertices, double tolerance);

// Primitive builders.
TriMesh make_box(const Vec3& min, const Vec3& max);
/// Unit-diameter icosphere centered at the origin.
TriMesh make_icosphere(int subdivisions);
void append(TriMesh& into, const TriMesh& other);

}  // namespace predo::geometry
