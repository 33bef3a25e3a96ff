#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ldsim/radiomics/features.hpp"
#include "ldsim/radiomics/roi.hpp"

namespace ldsim::radiomics {

struct TriangleMesh {
  std::vector<std::array<double, 3>> vertices;  // mm
  std::vector<std::array<std::uint32_t, 3>> triangles;  // outward orientation

  double area() const;
  // Signed volume via the divergence theorem; positive for a closed,
  // outward-oriented mesh.
  double volume() const;
};

struct MeshConfig {
  // The isosurface is taken at 0.5 of the mask indicator after Gaussian
  // smoothing with this sigma (voxels). sigma = 0 meshes the binary mask.
  double sigma = 0.8;
  int kernel = 5;

  void validate() const;
};

// Marching tetrahedra (Kuhn 6-tetrahedron split of each cell) over a scalar
// field at `iso`. Values above iso are inside. The field is implicitly
// surrounded by outside values, so the mesh is closed.
TriangleMesh marching_tetrahedra(const ImageGrid& field, double iso);

// Exposed faces of foreground voxels, two triangles per face.
TriangleMesh voxel_face_mesh(const MaskGrid& mask);

// Mesh of the smoothed indicator; falls back to the voxel-face mesh when the
// smoothed field never crosses the iso level (single voxels, thin slivers).
TriangleMesh mask_surface(const MaskGrid& mask, const MeshConfig& cfg);

// 14 features: MeshVolume, VoxelVolume, SurfaceArea, SurfaceVolumeRatio,
// Sphericity, Maximum3DDiameter, Maximum2DDiameter{Slice,Column,Row},
// {Major,Minor,Least}AxisLength, Elongation, Flatness.
FeatureVector shape_features(const MaskGrid& mask,
                             const MeshConfig& cfg = MeshConfig{});

const std::vector<std::string>& shape_feature_names();

}  // namespace ldsim::radiomics
