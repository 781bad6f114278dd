#pragma once

#include "linpred/types.hpp"

#include <optional>
#include <vector>

namespace linpred {

/// Width (along k_x) and height (along k_y) of a centered calibration block.
struct AcrSize {
  Index width = 0;
  Index height = 0;
};

/// First k_x / k_y index of a centered block of the given size on an n-sample axis.
inline Index centered_block_start(Index n, Index extent) { return n / 2 - extent / 2; }

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Cartesian acquisition pattern with an optional fully sampled centered ACR.
class SamplingMask {
 public:
  SamplingMask(BoolMatrix acquired, std::optional<AcrSize> acr = std::nullopt);

  static SamplingMask full(Index n_kx, Index n_ky);

  const BoolMatrix& acquired() const { return acquired_; }
  bool acquired(Index i, Index j) const { return acquired_(i, j); }
  const std::optional<AcrSize>& acr() const { return acr_; }
  Index n_kx() const { return acquired_.rows(); }
  Index n_ky() const { return acquired_.cols(); }
  Index count() const { return acquired_.count(); }
  bool fully_sampled() const { return acquired_.all(); }

  /// True when every sample of the centered block is acquired.
  bool block_acquired(AcrSize block) const;

 private:
  BoolMatrix acquired_;
  std::optional<AcrSize> acr_;
};

/// Sample (i, j) is acquired iff (i - o_x) mod R_x == 0 and (j - o_y) mod R_y == 0,
/// united with the centered ACR.
SamplingMask uniform_mask(Index n_kx, Index n_ky, int rx, int ry, std::optional<AcrSize> acr, Offset offset);

/// Same lattice with the offset chosen so the lines through DC are acquired.
SamplingMask uniform_mask(Index n_kx, Index n_ky, int rx, int ry, std::optional<AcrSize> acr = std::nullopt);

/// Infinity-norm neighbourhood half-widths.
struct Threshold {
  int tx = 1;
  int ty = 1;
};

/// One GRAPPA kernel: the displacements from an uncollected location to the
/// collected samples within the threshold, plus every location sharing them.
struct KernelPattern {
  std::vector<Offset> displacements;
  std::vector<GridIndex> targets;

  bool interpolatable() const { return !displacements.empty(); }
  Index size() const { return static_cast<Index>(displacements.size()); }
};

/// Acquired-neighbour displacement set of one location, scanned u-major from
/// (-t_x, -t_y) to (t_x, t_y).
std::vector<Offset> neighbour_displacements(const SamplingMask& mask, GridIndex at, Threshold threshold,
                                            Boundary boundary = Boundary::periodic);

/// Partitions every unacquired location by its neighbour displacement set.
/// Kernels come back in order of first appearance (column-major scan); classes
/// with an empty displacement set are kept and report !interpolatable().
std::vector<KernelPattern> enumerate_kernels(const SamplingMask& mask, Threshold threshold,
                                             Boundary boundary = Boundary::periodic);

/// Copies the centered w x h block of each coil; throws if the mask does not
/// cover it.
CoilStack acr_extract(const CoilStack& kspace, const SamplingMask& mask, AcrSize acr);

/// Same, for data known to be fully sampled.
CoilStack acr_extract(const CoilStack& kspace, AcrSize acr);

}  // namespace linpred
