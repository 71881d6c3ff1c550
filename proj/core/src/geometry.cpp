#include "predo/geometry.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "predo/error.hpp"

namespace predo::geometry {

namespace {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

[[noreturn]] void obj_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::parse_error, "obj:" + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> tokens_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t s = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > s) out.push_back(line.substr(s, i - s));
  }
  return out;
}

double parse_coordinate(std::string_view token, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v))
    obj_fail(line, "bad coordinate '" + std::string(token) + "'");
  return v;
}

std::uint32_t parse_index(std::string_view token, std::size_t vertex_count, std::size_t line) {
  const auto slash = token.find('/');
  const std::string_view head = token.substr(0, slash);
  long long idx = 0;
  const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
  if (ec != std::errc{} || ptr != head.data() + head.size())
    obj_fail(line, "bad face index '" + std::string(token) + "'");
  if (idx == 0) obj_fail(line, "face index 0 (OBJ indices are 1-based)");
  const long long resolved = idx > 0 ? idx - 1 : static_cast<long long>(vertex_count) + idx;
  if (resolved < 0 || resolved >= static_cast<long long>(vertex_count))
    obj_fail(line, "face index " + std::to_string(idx) + " out of range");
  return static_cast<std::uint32_t>(resolved);
}

// Projected (u, v) coordinates for the plane perpendicular to `axis`.
Eigen::Vector2d project(const Vec3& p, Axis axis) {
  switch (axis) {
    case Axis::x: return {p.y(), p.z()};
    case Axis::y: return {p.x(), p.z()};
    case Axis::z: return {p.x(), p.y()};
  }
  return {};
}

double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

}  // namespace

ObjLoadResult load_obj(std::string_view text) {
  ObjLoadResult result;
  auto& mesh = result.mesh;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::vector<std::uint32_t> polygon;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = tokens_of(line);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() < 4) obj_fail(line_no, "vertex needs three coordinates");
      mesh.vertices.emplace_back(parse_coordinate(tok[1], line_no), parse_coordinate(tok[2], line_no),
                                 parse_coordinate(tok[3], line_no));
    } else if (tok[0] == "f") {
      if (tok.size() < 4) obj_fail(line_no, "face needs at least three vertices");
      polygon.clear();
      for (std::size_t i = 1; i < tok.size(); ++i)
        polygon.push_back(parse_index(tok[i], mesh.vertices.size(), line_no));
      for (std::size_t i = 1; i + 1 < polygon.size(); ++i) {
        const Face f{polygon[0], polygon[i], polygon[i + 1]};
        const bool repeated = f[0] == f[1] || f[1] == f[2] || f[0] == f[2];
        if (repeated ||
            triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]) < kDegenerateArea) {
          ++result.dropped_faces;
          continue;
        }
        mesh.faces.push_back(f);
      }
    }
    // vn, vt, g, o, s, usemtl, mtllib, l: not needed
  }
  if (mesh.vertices.empty() || mesh.faces.empty())
    throw Error(ErrorCode::empty_mesh, "no usable triangles");
  return result;
}

std::string write_obj(const TriMesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 40 + mesh.faces.size() * 24);
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const auto& f : mesh.faces) {
    std::snprintf(buf, sizeof buf, "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out += buf;
  }
  return out;
}

BoundingBox bounding_box(const TriMesh& mesh) {
  if (mesh.vertices.empty()) throw Error(ErrorCode::empty_mesh, "mesh has no vertices");
  BoundingBox box{mesh.vertices.front(), mesh.vertices.front()};
  for (const auto& v : mesh.vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  return box;
}

TriMesh normalize(const TriMesh& mesh) {
  const BoundingBox box = bounding_box(mesh);
  const double longest = box.extent().maxCoeff();
  if (!(longest > 0.0)) throw Error(ErrorCode::degenerate_extent, "all vertices coincide");
  const Vec3 center = 0.5 * (box.min + box.max);
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = (v - center) / longest;
  return out;
}

TriMesh transformed(const TriMesh& mesh, const Eigen::Affine3d& transform) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = transform * v;
  return out;
}

Axis axis_from_string(std::string_view text) {
  if (text == "x") return Axis::x;
  if (text == "y") return Axis::y;
  if (text == "z") return Axis::z;
  throw Error(ErrorCode::invalid_config, "axis must be x, y or z");
}

char to_char(Axis axis) noexcept {
  return axis == Axis::x ? 'x' : axis == Axis::y ? 'y' : 'z';
}

std::size_t SilhouetteImage::covered() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::string SilhouetteImage::to_pgm() const {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.reserve(out.size() + bits.size());
  for (auto b : bits) out.push_back(static_cast<char>(b ? 0 : 255));
  return out;
}

SilhouetteImage silhouette(const TriMesh& mesh, Axis axis, int resolution) {
  if (resolution < 16) throw Error(ErrorCode::invalid_config, "silhouette resolution must be >= 16");
  if (mesh.vertices.empty()) throw Error(ErrorCode::empty_mesh, "mesh has no vertices");
  std::vector<Eigen::Vector2d> uv;
  uv.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) uv.push_back(project(v, axis));
  Eigen::Vector2d lo = uv.front();
  Eigen::Vector2d hi = uv.front();
  for (const auto& p : uv) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector2d extent = hi - lo;
  const double longest = extent.maxCoeff();
  if (!(longest > 0.0)) throw Error(ErrorCode::degenerate_extent, "projection collapses to a point");

  SilhouetteImage img;
  img.axis = axis;
  img.pixel_size = longest / (resolution - 2);
  const auto cells = [&](double e) { return static_cast<int>(std::ceil(e / img.pixel_size - 1e-9)); };
  img.width = cells(extent.x()) + 2;
  img.height = cells(extent.y()) + 2;
  img.origin_u = lo.x() - img.pixel_size;
  img.origin_v = hi.y() + img.pixel_size;
  img.bits.assign(static_cast<std::size_t>(img.width) * img.height, 0);

  const double ps = img.pixel_size;
  for (const auto& f : mesh.faces) {
    const Eigen::Vector2d& a = uv[f[0]];
    const Eigen::Vector2d& b = uv[f[1]];
    const Eigen::Vector2d& c = uv[f[2]];
    const double area2 = edge(a, b, c);
    const double scale = (b - a).norm() * (c - a).norm();
    if (std::abs(area2) <= 1e-14 * scale) continue;  // edge-on triangle covers nothing
    const double sign = area2 > 0 ? 1.0 : -1.0;
    const double tol = -1e-12 * scale;
    const double umin = std::min({a.x(), b.x(), c.x()});
    const double umax = std::max({a.x(), b.x(), c.x()});
    const double vmin = std::min({a.y(), b.y(), c.y()});
    const double vmax = std::max({a.y(), b.y(), c.y()});
    const int c0 = std::max(0, static_cast<int>(std::floor((umin - img.origin_u) / ps - 0.5)));
    const int c1 = std::min(img.width - 1, static_cast<int>(std::ceil((umax - img.origin_u) / ps - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::floor((img.origin_v - vmax) / ps - 0.5)));
    const int r1 = std::min(img.height - 1, static_cast<int>(std::ceil((img.origin_v - vmin) / ps - 0.5)));
    for (int row = r0; row <= r1; ++row) {
      const double v = img.origin_v - (row + 0.5) * ps;
      for (int col = c0; col <= c1; ++col) {
        const Eigen::Vector2d p(img.origin_u + (col + 0.5) * ps, v);
        if (sign * edge(a, b, p) >= tol && sign * edge(b, c, p) >= tol && sign * edge(c, a, p) >= tol)
          img.bits[static_cast<std::size_t>(row) * img.width + col] = 1;
      }
    }
  }
  return img;
}

double frontal_area(const SilhouetteImage& image) {
  return static_cast<double>(image.covered()) * image.pixel_size * image.pixel_size;
}

GrayImage render_gray(const TriMesh& mesh, const ViewParams& view) {
  if (mesh.vertices.empty() || mesh.faces.empty()) throw Error(ErrorCode::empty_mesh, "nothing to render");
  if (view.resolution < 16) throw Error(ErrorCode::invalid_config, "render resolution must be >= 16");
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  const double az = view.azimuth_deg * kDeg;
  const double el = view.elevation_deg * kDeg;
  const Vec3 toward_camera(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
  Vec3 up_hint(0, 0, 1);
  if (std::abs(toward_camera.dot(up_hint)) > 0.999) up_hint = Vec3(0, 1, 0);
  const Vec3 right = up_hint.cross(toward_camera).normalized();
  const Vec3 up = toward_camera.cross(right);
  const Vec3 light = (0.4 * right + 0.6 * up + toward_camera).normalized();

  std::vector<Vec3> screen;  // (x, y, depth); larger depth is closer
  screen.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) screen.emplace_back(v.dot(right), v.dot(up), v.dot(toward_camera));
  Eigen::Vector2d lo(screen.front().x(), screen.front().y());
  Eigen::Vector2d hi = lo;
  for (const auto& s : screen) {
    lo = lo.cwiseMin(s.head<2>());
    hi = hi.cwiseMax(s.head<2>());
  }
  const int res = view.resolution;
  const double span = std::max((hi - lo).maxCoeff(), 1e-12);
  const double scale = 0.9 * res / span;
  const Eigen::Vector2d center = 0.5 * (lo + hi);

  GrayImage img{res, res, std::vector<std::uint8_t>(static_cast<std::size_t>(res) * res, 255)};
  std::vector<double> depth(img.pixels.size(), -std::numeric_limits<double>::infinity());
  for (const auto& f : mesh.faces) {
    Eigen::Vector2d p[3];
    double z[3];
    for (int k = 0; k < 3; ++k) {
      const Vec3& s = screen[f[k]];
      p[k] = Eigen::Vector2d(0.5 * res + (s.x() - center.x()) * scale, 0.5 * res - (s.y() - center.y()) * scale);
      z[k] = s.z();
    }
    const double area2 = edge(p[0], p[1], p[2]);
    if (std::abs(area2) < 1e-12) continue;
    const Vec3 normal =
        (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]).normalized();
    const double intensity = 0.25 + 0.7 * std::abs(normal.dot(light));
    const auto shade = static_cast<std::uint8_t>(std::lround(std::clamp(intensity, 0.0, 1.0) * 230.0));
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({p[0].x(), p[1].x(), p[2].x()}))));
    const int x1 = std::min(res - 1, static_cast<int>(std::ceil(std::max({p[0].x(), p[1].x(), p[2].x()}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({p[0].y(), p[1].y(), p[2].y()}))));
    const int y1 = std::min(res - 1, static_cast<int>(std::ceil(std::max({p[0].y(), p[1].y(), p[2].y()}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d q(x + 0.5, y + 0.5);
        const double w0 = edge(p[1], p[2], q) / area2;
        const double w1 = edge(p[2], p[0], q) / area2;
        const double w2 = edge(p[0], p[1], q) / area2;
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        const double d = w0 * z[0] + w1 * z[1] + w2 * z[2];
        const std::size_t idx = static_cast<std::size_t>(y) * res + x;
        if (d > depth[idx]) {
          depth[idx] = d;
          img.pixels[idx] = shade;
        }
      }
    }
  }
  return img;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(image.height) * (image.width + 1));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);  // filter: none
    const auto* row = image.pixels.data() + static_cast<std::size_t>(y) * image.width;
    raw.insert(raw.end(), row, row + image.width);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw Error(ErrorCode::numeric_degeneracy, "png compression failed");
  packed.resize(packed_size);

  std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> header;
  put_u32(header, static_cast<std::uint32_t>(image.width));
  put_u32(header, static_cast<std::uint32_t>(image.height));
  header.insert(header.end(), {8, 0, 0, 0, 0});  // 8-bit grayscale
  put_chunk(png, "IHDR", header);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", {});
  return png;
}

std::vector<std::uint8_t> render_preview(const TriMesh& mesh, const ViewParams& view) {
  return encode_png(render_gray(mesh, view));
}

std::vector<std::uint32_t> weld_vertices(std::span<const Vec3> vertices, double tolerance) {
  std::vector<std::uint32_t> parent(vertices.size());
  std::iota(parent.begin(), parent.end(), 0u);
  const auto find = [&](std::uint32_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  struct CellHash {
    std::size_t operator()(const std::array<long long, 3>& c) const noexcept {
      return static_cast<std::size_t>(c[0] * 73856093LL ^ c[1] * 19349663LL ^ c[2] * 83492791LL);
    }
  };
  std::unordered_map<std::array<long long, 3>, std::vector<std::uint32_t>, CellHash> grid;
  const double tol2 = tolerance * tolerance;
  for (std::uint32_t i = 0; i < vertices.size(); ++i) {
    const Vec3& p = vertices[i];
    const std::array<long long, 3> cell{static_cast<long long>(std::floor(p.x() / tolerance)),
                                        static_cast<long long>(std::floor(p.y() / tolerance)),
                                        static_cast<long long>(std::floor(p.z() / tolerance))};
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find({cell[0] + dx, cell[1] + dy, cell[2] + dz});
          if (it == grid.end()) continue;
          for (auto j : it->second)
            if ((vertices[j] - p).squaredNorm() <= tol2) {
              const auto a = find(i);
              const auto b = find(j);
              if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
        }
    grid[cell].push_back(i);
  }
  for (std::uint32_t i = 0; i < parent.size(); ++i) parent[i] = find(i);
  return parent;
}

MeshStats mesh_stats(const TriMesh& mesh) {
  MeshStats stats;
  stats.bbox = bounding_box(mesh);
  const auto welded = weld_vertices(mesh.vertices, kWeldTolerance);

  std::vector<std::uint32_t> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0u);
  const auto find = [&](std::uint32_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  const auto unite = [&](std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  for (const auto& f : mesh.faces) {
    const std::uint32_t w[3] = {welded[f[0]], welded[f[1]], welded[f[2]]};
    unite(w[0], w[1]);
    unite(w[1], w[2]);
    for (int k = 0; k < 3; ++k) {
      const auto a = w[k];
      const auto b = w[(k + 1) % 3];
      if (a != b) ++edges[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& f : mesh.faces)
    for (auto v : f) used[welded[v]] = true;
  std::vector<bool> root_seen(mesh.vertices.size(), false);
  for (std::uint32_t i = 0; i < used.size(); ++i) {
    if (!used[i]) continue;
    const auto r = find(i);
    if (!root_seen[r]) {
      root_seen[r] = true;
      ++stats.connected_components;
    }
  }
  stats.watertight = !edges.empty() &&
                     std::all_of(edges.begin(), edges.end(), [](const auto& e) { return e.second == 2; });

  const double longest = stats.bbox.extent().maxCoeff();
  const auto projected = stats.bbox.extent();
  if (longest > 0.0 && std::max(projected.y(), projected.z()) > 0.0) {
    const SilhouetteImage sil = silhouette(mesh, Axis::x, kStatsResolution);
    const double threshold = kThinThreshold * longest;
    auto thin_share = [&](bool by_row) {
      const int lines = by_row ? sil.height : sil.width;
      const int cells = by_row ? sil.width : sil.height;
      int occupied = 0;
      int thin = 0;
      for (int l = 0; l < lines; ++l) {
        int count = 0;
        for (int c = 0; c < cells; ++c) count += by_row ? sil.at(c, l) : sil.at(l, c);
        if (count == 0) continue;
        ++occupied;
        if (count * sil.pixel_size < threshold) ++thin;
      }
      return occupied == 0 ? 1.0 : static_cast<double>(thin) / occupied;
    };
    stats.thin_fraction = std::max(thin_share(true), thin_share(false));
  } else {
    stats.thin_fraction = 1.0;
  }
  return stats;
}

TriMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriMesh box;
  for (int i = 0; i < 8; ++i)
    box.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  box.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
               {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return box;
}

TriMesh make_icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& v : m.vertices) v = v.normalized() * 0.5;
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    const auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      m.vertices.push_back((0.5 * (m.vertices[a] + m.vertices[b])).normalized() * 0.5);
      const auto idx = static_cast<std::uint32_t>(m.vertices.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(m.faces.size() * 4);
    for (const auto& f : m.faces) {
      const auto ab = mid(f[0], f[1]);
      const auto bc = mid(f[1], f[2]);
      const auto ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  return m;
}

void append(TriMesh& into, const TriMesh& other) {
  const auto base = static_cast<std::uint32_t>(into.vertices.size());
  into.vertices.insert(into.vertices.end(), other.vertices.begin(), other.vertices.end());
  for (const auto& f : other.faces) into.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
}

}  // namespace predo::geometry
