#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldsim/core/rng.hpp"
#include "ldsim/metrics/image_quality.hpp"
#include "ldsim/volume/ct_volume.hpp"

namespace ldsim::metrics {

struct PatchTag {
  std::string subject;
  std::size_t slice = 0;
};

struct PatchSet {
  std::size_t size = 128;
  std::vector<Image2D> patches;
  std::vector<PatchTag> tags;

  void append(const PatchSet& other);
};

// One centred size x size patch per axial slice; the offset along each axis
// is floor((n - size) / 2). Requires a Normalized volume.
PatchSet center_crop_patches(const volume::CtVolume& v, std::size_t size,
                             const std::string& subject = {});

// Maps a square patch to a fixed-length feature vector.
class PatchEmbedder {
 public:
  virtual ~PatchEmbedder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> embed(const Image2D& patch) const = 0;
};

// 8x8 block means (64) + 32-bin intensity histogram on [0, 1] (fractions) +
// 32-bin radial spectrum profile (RMS Fourier amplitude per radius bin,
// normalized so the DC bin of a constant patch equals its value).
class HandcraftedEmbedder : public PatchEmbedder {
 public:
  std::string id() const override { return "handcrafted-v1"; }
  std::size_t dim() const override { return 128; }
  std::vector<double> embed(const Image2D& patch) const override;
};

// n x d matrix, one row per patch in set order.
Eigen::MatrixXd embed_patches(const PatchSet& set, const PatchEmbedder& e,
                              unsigned workers = 1);

struct EmbeddingStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  std::size_t n = 0;
  std::size_t d() const { return static_cast<std::size_t>(mu.size()); }
};

// Sample mean and unbiased covariance (divisor n - 1).
EmbeddingStats gaussian_stats(const Eigen::MatrixXd& emb);

// Principal square root of a symmetric PSD matrix via symmetric
// eigendecomposition; negative eigenvalues are clamped to zero.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m);

// Frechet distance between Gaussians. The cross term uses
// tr sqrt(A S2 A) with A = sqrt(S1 + eps I), which equals tr sqrt(S1 S2).
double fid(const EmbeddingStats& s1, const EmbeddingStats& s2,
           double eps = 1e-10);

// Unbiased MMD^2 with kernel k(x, y) = (x.y / d + 1)^3.
double mmd2_unbiased(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

struct KidResult {
  double mean = 0.0;
  double std = 0.0;  // population std across subsets
  std::size_t subset_size = 0;
  std::size_t n_subsets = 0;
};

// Averages mmd2_unbiased over n_subsets random equal-size subsets drawn
// without replacement from each set. subset_size is shrunk (with a warning)
// to min(n1, n2).
KidResult kid(const Eigen::MatrixXd& e1, const Eigen::MatrixXd& e2,
              std::size_t subset_size, std::size_t n_subsets, RngStream& rng);

}  // namespace ldsim::metrics
