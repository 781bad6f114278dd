#pragma once

#include "linpred/sampling.hpp"
#include "linpred/types.hpp"

namespace linpred {

/// Multi-coil Cartesian k-space with its acquisition mask. Unacquired entries
/// are exactly zero.
class KSpaceData {
 public:
  KSpaceData(CoilStack samples, SamplingMask mask);

  static KSpaceData fully_sampled(CoilStack samples);

  /// Applies `mask` to fully sampled data, zeroing everything it skips.
  static KSpaceData retrospective(const CoilStack& full, SamplingMask mask);

  const CoilStack& samples() const { return samples_; }
  const SamplingMask& mask() const { return mask_; }
  Index coil_count() const { return static_cast<Index>(samples_.size()); }
  Index n_kx() const { return mask_.n_kx(); }
  Index n_ky() const { return mask_.n_ky(); }

 private:
  CoilStack samples_;
  SamplingMask mask_;
};

/// Checks that every coil is n_kx x n_ky; throws std::invalid_argument otherwise.
void require_shape(const CoilStack& stack, Index n_kx, Index n_ky, const char* what);

}  // namespace linpred
