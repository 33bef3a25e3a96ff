#include "ldsim/radiomics/shape.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>
#include <utility>

#include "ldsim/core/error.hpp"
#include "ldsim/volume/preprocess.hpp"

namespace ldsim::radiomics {
namespace {

using Vec3 = std::array<double, 3>;

Vec3 sub(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Kuhn split: each tetrahedron follows a monotone path from corner 0 to
// corner 7, so faces shared between neighbouring cells are split identically.
constexpr std::array<std::array<int, 4>, 6> kTets = {{
    {0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7},
    {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7},
}};

struct EdgeHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& e) const {
    return std::hash<std::uint64_t>{}(e.first * 0x9E3779B97F4A7C15ull ^ e.second);
  }
};

class TetMesher {
 public:
  TetMesher(const ImageGrid& f, double iso) : f_(f), iso_(iso) {
    px_ = static_cast<long>(f.dims.nx) + 2;
    py_ = static_cast<long>(f.dims.ny) + 2;
  }

  TriangleMesh run() {
    const long nx = static_cast<long>(f_.dims.nx);
    const long ny = static_cast<long>(f_.dims.ny);
    const long nz = static_cast<long>(f_.dims.nz);
    for (long z = -1; z < nz; ++z)
      for (long y = -1; y < ny; ++y)
        for (long x = -1; x < nx; ++x) cell(x, y, z);
    return std::move(mesh_);
  }

 private:
  struct Corner {
    long x, y, z;
    double v;
  };

  double value(long x, long y, long z) const {
    if (!f_.contains(x, y, z)) return 0.0;
    return f_(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
              static_cast<std::size_t>(z));
  }
  std::uint64_t id(const Corner& c) const {
    return static_cast<std::uint64_t>((c.x + 1) + px_ * ((c.y + 1) + py_ * (c.z + 1)));
  }
  Vec3 position(const Corner& c) const {
    return {c.x * f_.spacing.x, c.y * f_.spacing.y, c.z * f_.spacing.z};
  }

  std::uint32_t edge_vertex(const Corner& a, const Corner& b) {
    const bool ordered = id(a) < id(b);
    const Corner& lo = ordered ? a : b;
    const Corner& hi = ordered ? b : a;
    auto [it, fresh] = lookup_.try_emplace({id(lo), id(hi)}, 0u);
    if (!fresh) return it->second;
    const double t = (iso_ - lo.v) / (hi.v - lo.v);
    const Vec3 pa = position(lo), pb = position(hi);
    mesh_.vertices.push_back({pa[0] + t * (pb[0] - pa[0]),
                              pa[1] + t * (pb[1] - pa[1]),
                              pa[2] + t * (pb[2] - pa[2])});
    it->second = static_cast<std::uint32_t>(mesh_.vertices.size() - 1);
    return it->second;
  }

  void emit(std::uint32_t a, std::uint32_t b, std::uint32_t c,
            const Vec3& outward) {
    const auto& v = mesh_.vertices;
    const Vec3 n = cross(sub(v[b], v[a]), sub(v[c], v[a]));
    if (dot(n, outward) < 0) std::swap(b, c);
    mesh_.triangles.push_back({a, b, c});
  }

  void cell(long x, long y, long z) {
    std::array<Corner, 8> c;
    int inside = 0;
    for (int k = 0; k < 8; ++k) {
      const long cx = x + (k & 1), cy = y + ((k >> 1) & 1), cz = z + ((k >> 2) & 1);
      c[k] = {cx, cy, cz, value(cx, cy, cz)};
      inside += c[k].v > iso_;
    }
    if (inside == 0 || inside == 8) return;
    for (const auto& t : kTets) tet({c[t[0]], c[t[1]], c[t[2]], c[t[3]]});
  }

  void tet(const std::array<Corner, 4>& c) {
    std::array<int, 4> in{}, out{};
    int ni = 0, no = 0;
    for (int k = 0; k < 4; ++k) {
      if (c[k].v > iso_)
        in[ni++] = k;
      else
        out[no++] = k;
    }
    if (ni == 0 || ni == 4) return;
    Vec3 cin{0, 0, 0}, cout{0, 0, 0};
    for (int k = 0; k < ni; ++k)
      for (int a = 0; a < 3; ++a) cin[a] += position(c[in[k]])[a] / ni;
    for (int k = 0; k < no; ++k)
      for (int a = 0; a < 3; ++a) cout[a] += position(c[out[k]])[a] / no;
    const Vec3 outward = sub(cout, cin);
    if (ni == 1 || ni == 3) {
      const int apex = ni == 1 ? in[0] : out[0];
      const auto& others = ni == 1 ? out : in;
      const std::uint32_t a = edge_vertex(c[apex], c[others[0]]);
      const std::uint32_t b = edge_vertex(c[apex], c[others[1]]);
      const std::uint32_t d = edge_vertex(c[apex], c[others[2]]);
      emit(a, b, d, outward);
      return;
    }
    const std::uint32_t q0 = edge_vertex(c[in[0]], c[out[0]]);
    const std::uint32_t q1 = edge_vertex(c[in[0]], c[out[1]]);
    const std::uint32_t q2 = edge_vertex(c[in[1]], c[out[1]]);
    const std::uint32_t q3 = edge_vertex(c[in[1]], c[out[0]]);
    emit(q0, q1, q2, outward);
    emit(q0, q2, q3, outward);
  }

  const ImageGrid& f_;
  double iso_;
  long px_, py_;
  TriangleMesh mesh_;
  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::uint32_t,
                     EdgeHash>
      lookup_;
};

// Convex hull (monotone chain) of 2-D points.
std::vector<std::array<double, 2>> hull2d(std::vector<std::array<double, 2>> p) {
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) return p;
  auto turn = [](const auto& o, const auto& a, const auto& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<double, 2>> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && turn(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && turn(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

double max_pairwise_2d(const std::vector<std::array<double, 2>>& pts) {
  const auto h = hull2d(pts);
  double best = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = i + 1; j < h.size(); ++j) {
      const double dx = h[i][0] - h[j][0], dy = h[i][1] - h[j][1];
      best = std::max(best, dx * dx + dy * dy);
    }
  return std::sqrt(best);
}

// Largest in-plane extent over slices perpendicular to `axis`, measured
// between corners of foreground voxels.
double max_2d_diameter(const MaskGrid& m, int axis) {
  const std::array<std::size_t, 3> n{m.dims.nx, m.dims.ny, m.dims.nz};
  const std::array<double, 3> s{m.spacing.x, m.spacing.y, m.spacing.z};
  const int u = axis == 0 ? 1 : 0, v = axis == 2 ? 1 : 2;
  double best = 0.0;
  for (std::size_t k = 0; k < n[axis]; ++k) {
    std::vector<std::array<double, 2>> pts;
    for (std::size_t j = 0; j < n[v]; ++j)
      for (std::size_t i = 0; i < n[u]; ++i) {
        std::array<std::size_t, 3> p{};
        p[axis] = k;
        p[u] = i;
        p[v] = j;
        if (!m(p[0], p[1], p[2])) continue;
        for (int du = 0; du < 2; ++du)
          for (int dv = 0; dv < 2; ++dv)
            pts.push_back({(i + du) * s[u], (j + dv) * s[v]});
      }
    if (!pts.empty()) best = std::max(best, max_pairwise_2d(pts));
  }
  return best;
}

double max_3d_diameter(const TriangleMesh& mesh) {
  const auto& v = mesh.vertices;
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      const double dx = v[i][0] - v[j][0], dy = v[i][1] - v[j][1],
                   dz = v[i][2] - v[j][2];
      best = std::max(best, dx * dx + dy * dy + dz * dz);
    }
  return std::sqrt(best);
}

}  // namespace

double TriangleMesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles)
    a += 0.5 * norm(cross(sub(vertices[t[1]], vertices[t[0]]),
                          sub(vertices[t[2]], vertices[t[0]])));
  return a;
}

double TriangleMesh::volume() const {
  double v = 0.0;
  for (const auto& t : triangles)
    v += dot(vertices[t[0]], cross(vertices[t[1]], vertices[t[2]])) / 6.0;
  return v;
}

void MeshConfig::validate() const {
  if (!(sigma >= 0.0)) throw ConfigError("mesh: sigma must be >= 0");
  if (sigma > 0.0 && (kernel < 1 || kernel % 2 == 0))
    throw ConfigError("mesh: kernel must be a positive odd size");
}

TriangleMesh marching_tetrahedra(const ImageGrid& field, double iso) {
  if (!(iso > 0.0))
    throw ConfigError("marching_tetrahedra: iso must be > 0 (outside is 0)");
  return TetMesher(field, iso).run();
}

TriangleMesh voxel_face_mesh(const MaskGrid& mask) {
  TriangleMesh mesh;
  const Spacing& s = mask.spacing;
  std::unordered_map<std::uint64_t, std::uint32_t> ids;
  const std::uint64_t px = mask.dims.nx + 1, py = mask.dims.ny + 1;
  auto corner = [&](std::size_t x, std::size_t y, std::size_t z) {
    const std::uint64_t key = x + px * (y + py * z);
    auto [it, fresh] = ids.try_emplace(key, 0u);
    if (fresh) {
      mesh.vertices.push_back({(x - 0.5) * s.x, (y - 0.5) * s.y, (z - 0.5) * s.z});
      it->second = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
    }
    return it->second;
  };
  const long nx = static_cast<long>(mask.dims.nx), ny = static_cast<long>(mask.dims.ny),
             nz = static_cast<long>(mask.dims.nz);
  auto on = [&](long x, long y, long z) {
    return mask.contains(x, y, z) && mask(x, y, z) != 0;
  };
  for (long z = 0; z < nz; ++z)
    for (long y = 0; y < ny; ++y)
      for (long x = 0; x < nx; ++x) {
        if (!on(x, y, z)) continue;
        for (int axis = 0; axis < 3; ++axis)
          for (int side = 0; side < 2; ++side) {
            std::array<long, 3> q{x, y, z};
            q[axis] += side ? 1 : -1;
            if (on(q[0], q[1], q[2])) continue;
            // Face corners in the plane at offset `side` along `axis`.
            const int u = (axis + 1) % 3, w = (axis + 2) % 3;
            std::array<std::uint32_t, 4> c{};
            const std::array<std::array<int, 2>, 4> uv = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
            for (int k = 0; k < 4; ++k) {
              std::array<std::size_t, 3> p{static_cast<std::size_t>(x),
                                           static_cast<std::size_t>(y),
                                           static_cast<std::size_t>(z)};
              p[axis] += side;
              p[u] += uv[k][0];
              p[w] += uv[k][1];
              c[k] = corner(p[0], p[1], p[2]);
            }
            // (u, w, axis) is right handed, so counter-clockwise in (u, w)
            // faces +axis.
            if (side)
              mesh.triangles.insert(mesh.triangles.end(), {{c[0], c[1], c[2]}, {c[0], c[2], c[3]}});
            else
              mesh.triangles.insert(mesh.triangles.end(), {{c[0], c[2], c[1]}, {c[0], c[3], c[2]}});
          }
      }
  return mesh;
}

TriangleMesh mask_surface(const MaskGrid& mask, const MeshConfig& cfg) {
  cfg.validate();
  ImageGrid field(mask.dims, mask.spacing);
  for (std::size_t i = 0; i < mask.data.size(); ++i)
    field.data[i] = mask.data[i] ? 1.0 : 0.0;
  if (cfg.sigma > 0.0) {
    // Pad so the smoothing tail is not clipped by edge replication.
    const std::size_t pad = static_cast<std::size_t>(cfg.kernel / 2) + 1;
    Dims d{mask.dims.nx + 2 * pad, mask.dims.ny + 2 * pad, mask.dims.nz + 2 * pad};
    ImageGrid padded(d, mask.spacing, 0.0);
    for (std::size_t z = 0; z < mask.dims.nz; ++z)
      for (std::size_t y = 0; y < mask.dims.ny; ++y)
        for (std::size_t x = 0; x < mask.dims.nx; ++x)
          padded(x + pad, y + pad, z + pad) = field(x, y, z);
    field = volume::gaussian_smooth_3d(padded, cfg.kernel, cfg.sigma);
  }
  TriangleMesh mesh = marching_tetrahedra(field, 0.5);
  if (mesh.triangles.empty()) return voxel_face_mesh(mask);
  return mesh;
}

const std::vector<std::string>& shape_feature_names() {
  static const std::vector<std::string> names = {
      "MeshVolume",          "VoxelVolume",
      "SurfaceArea",         "SurfaceVolumeRatio",
      "Sphericity",          "Maximum3DDiameter",
      "Maximum2DDiameterSlice", "Maximum2DDiameterColumn",
      "Maximum2DDiameterRow",   "MajorAxisLength",
      "MinorAxisLength",     "LeastAxisLength",
      "Elongation",          "Flatness"};
  return names;
}

FeatureVector shape_features(const MaskGrid& mask, const MeshConfig& cfg) {
  const std::size_t count = mask_count(mask);
  if (count == 0) throw DataError("shape: empty mask");
  const TriangleMesh mesh = mask_surface(mask, cfg);
  const double mesh_volume = mesh.volume();
  const double area = mesh.area();
  const double voxel_volume = count * mask.spacing.voxel_volume();

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d second = Eigen::Matrix3d::Zero();
  for (std::size_t z = 0; z < mask.dims.nz; ++z)
    for (std::size_t y = 0; y < mask.dims.ny; ++y)
      for (std::size_t x = 0; x < mask.dims.nx; ++x) {
        if (!mask(x, y, z)) continue;
        const Eigen::Vector3d p(x * mask.spacing.x, y * mask.spacing.y,
                                z * mask.spacing.z);
        mean += p;
        second += p * p.transpose();
      }
  mean /= static_cast<double>(count);
  const Eigen::Matrix3d cov = second / static_cast<double>(count) - mean * mean.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov, Eigen::EigenvaluesOnly);
  Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0);  // ascending
  const double major = ev[2], minor = ev[1], least = ev[0];

  FeatureVector f;
  f.add("MeshVolume", mesh_volume);
  f.add("VoxelVolume", voxel_volume);
  f.add("SurfaceArea", area);
  f.add("SurfaceVolumeRatio", mesh_volume > 0 ? area / mesh_volume : 0.0);
  f.add("Sphericity", area > 0 ? std::cbrt(36.0 * std::numbers::pi * mesh_volume * mesh_volume) / area : 0.0);
  f.add("Maximum3DDiameter", max_3d_diameter(mesh));
  f.add("Maximum2DDiameterSlice", max_2d_diameter(mask, 2));
  f.add("Maximum2DDiameterColumn", max_2d_diameter(mask, 1));
  f.add("Maximum2DDiameterRow", max_2d_diameter(mask, 0));
  f.add("MajorAxisLength", 4.0 * std::sqrt(major));
  f.add("MinorAxisLength", 4.0 * std::sqrt(minor));
  f.add("LeastAxisLength", 4.0 * std::sqrt(least));
  f.add("Elongation", major > 0 ? std::sqrt(minor / major) : 1.0);
  f.add("Flatness", major > 0 ? std::sqrt(least / major) : 1.0);
  return f;
}

}  // namespace ldsim::radiomics
