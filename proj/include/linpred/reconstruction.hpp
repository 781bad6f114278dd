#pragma once

#include "linpred/calibration.hpp"
#include "linpred/kspace.hpp"
#include "linpred/sampling.hpp"
#include "linpred/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace linpred {

struct ReconResult {
  CoilStack kspace_full;
  CoilStack coil_images;
  RMatrix image;  ///< root-sum-of-squares combination of coil_images
  int iterations = 0;
  std::vector<double> objective_trace;  ///< entry 0 is the starting point
  Index uninterpolatable = 0;           ///< locations left at zero
  bool converged = true;
  std::string warning;
};

/// Single-pass GRAPPA fill: every missing sample of coil l becomes
/// sum_d sum_j S_j(k + d) N(d * J + j, l) with its kernel's weights. Acquired
/// samples are copied through. Throws if a kernel class has no weights.
ReconResult grappa_reconstruct(const KSpaceData& data, const std::vector<CalibrationWeights>& weights,
                               Boundary boundary = Boundary::periodic);

struct GrappaOptions {
  AcrSize acr{31, 31};
  Threshold threshold{1, 1};
  std::optional<double> lambda;
  Boundary boundary = Boundary::periodic;
};

/// Kernel enumeration, calibration from the ACR and interpolation in one call.
ReconResult grappa(const KSpaceData& data, const GrappaOptions& options = {});

/// Flat multi-coil vector layout used by the SPIRiT solver:
/// value(coil, i, j) = v[coil * n_kx * n_ky + j * n_kx + i].
using FlatKSpace = std::vector<Complex>;

FlatKSpace flatten(const CoilStack& stack);
CoilStack unflatten(const FlatKSpace& flat, Index coils, Index n_kx, Index n_ky);

/// The SPIRiT residual operator (G - I) and its adjoint on a fixed grid.
class SpiritOperator {
 public:
  SpiritOperator(const SpiritKernel& kernel, Index n_kx, Index n_ky, Boundary boundary = Boundary::periodic);

  Index size() const { return kernel_.coils() * nx_ * ny_; }

  /// out = (G - I) in
  void residual(const FlatKSpace& in, FlatKSpace& out) const;
  /// out = (G - I)^H in
  void residual_adjoint(const FlatKSpace& in, FlatKSpace& out) const;

  /// Largest eigenvalue of (G - I)^H (G - I) by power iteration.
  double lipschitz_estimate(int iterations = 20) const;

 private:
  SpiritKernel kernel_;
  Index nx_;
  Index ny_;
  Boundary boundary_;
};

struct SpiritOptions {
  double epsilon = 0.0;  ///< bound on ||D theta - y||^2
  int max_iter = 0;      ///< 0 selects 200 (epsilon = 0) or 500 (epsilon > 0)
  double tol = 1e-9;     ///< relative objective change / gradient reduction
  Boundary boundary = Boundary::periodic;
};

/// Minimizes 1/2 ||G theta - theta||^2. With epsilon = 0 the acquired samples
/// are held fixed and the missing ones are found by CGLS; with epsilon > 0
/// monotone FISTA projects onto ||D theta - y||^2 <= epsilon. Hitting max_iter
/// leaves converged = false with a warning and returns the best iterate.
ReconResult spirit_reconstruct(const KSpaceData& data, const SpiritKernel& kernel, const SpiritOptions& options = {});

struct SpiritSetup {
  AcrSize acr{31, 31};
  Index kernel_width = 3;
  Index kernel_height = 3;
  std::optional<double> lambda;
};

/// Calibrates from the ACR and solves.
ReconResult spirit(const KSpaceData& data, const SpiritSetup& setup = {}, const SpiritOptions& options = {});

/// Composite k-space: collected lines combined with n^(0); each missing line
/// k_y is taken from the nearest collected line k_y + m (m = 1 .. M-1) as
/// sum_j n_j^(m) S_j. Lines wrap periodically.
CMatrix autosmash_reconstruct(const KSpaceData& data, const AutoSmashWeights& weights);

CoilStack coil_images(const CoilStack& kspace);

/// Pixelwise sqrt(sum_j |I_j|^2).
RMatrix rsos_combine(const CoilStack& images);

/// ||recon - reference||_2 / ||reference||_2
double nrmse(const RMatrix& recon, const RMatrix& reference);

}  // namespace linpred
