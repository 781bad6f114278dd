#pragma once

#include "linpred/kspace.hpp"
#include "linpred/sampling.hpp"
#include "linpred/types.hpp"

#include <map>
#include <optional>
#include <vector>

namespace linpred {

/// Calibration system of one kernel. Row r is one placement of the kernel
/// target inside the ACR (x fastest). Column d * J + j of `source` holds coil
/// j at displacement d; column j of `target` holds coil j at the target.
struct GrappaSystem {
  CMatrix source;  ///< [eta_x * eta_y x J * D_k]
  CMatrix target;  ///< [eta_x * eta_y x J]
  Index eta_x = 0;
  Index eta_y = 0;
};

GrappaSystem assemble_grappa_system(const CoilStack& acr, const KernelPattern& kernel);

struct CalibrationWeights {
  KernelPattern kernel;
  CMatrix weights;  ///< [J * D_k x J], row d * J + j, column = target coil
  double residual_rel = 0.0;
};

/// 1e-4 * ||S||_F / sqrt(columns).
double default_lambda(const CMatrix& source);

struct LeastSquaresFit {
  CMatrix solution;
  double residual_rel = 0.0;  ///< ||A X - B||_F / ||B||_F (0 when B = 0)
};

/// Minimizes ||A X - B||_F^2 + lambda^2 ||X||_F^2 by QR of the stacked system.
/// With lambda = 0 a rank-revealing factorization returns the minimum-norm
/// solution, so rank-deficient systems never fail.
LeastSquaresFit solve_regularized(const CMatrix& a, const CMatrix& b, double lambda);

/// GRAPPA weights for one system; throws on an empty system.
CalibrationWeights solve_weights(const CMatrix& source, const CMatrix& target, double lambda);

/// Weights for every kernel class. Classes that cannot be interpolated carry an
/// empty weight matrix. `lambda` defaults to default_lambda per kernel.
std::vector<CalibrationWeights> calibrate_grappa(const CoilStack& acr, const std::vector<KernelPattern>& kernels,
                                                 std::optional<double> lambda = std::nullopt);

/// SPIRiT interpolation kernel. weight(target, source, du, dv) multiplies source
/// coil data at k + (du, dv); the self tap at (0, 0) is always 0.
class SpiritKernel {
 public:
  SpiritKernel(Index coils, Index kernel_width, Index kernel_height);

  Index coils() const { return coils_; }
  Index width() const { return width_; }
  Index height() const { return height_; }
  Index half_width() const { return width_ / 2; }
  Index half_height() const { return height_ / 2; }

  Complex& weight(Index target, Index source, int du, int dv) { return data_[offset(target, source, du, dv)]; }
  Complex weight(Index target, Index source, int du, int dv) const { return data_[offset(target, source, du, dv)]; }

  /// Relative training residual per target coil.
  std::vector<double> residual_rel;

 private:
  std::size_t offset(Index target, Index source, int du, int dv) const {
    const Index tap = (du + width_ / 2) + (dv + height_ / 2) * width_;
    return static_cast<std::size_t>((target * coils_ + source) * width_ * height_ + tap);
  }

  Index coils_;
  Index width_;
  Index height_;
  std::vector<Complex> data_;
};

/// Fits, for each target coil, the centre sample from every other tap of every
/// coil over all placements inside the ACR.
SpiritKernel spirit_calibrate(const CoilStack& acr, Index kernel_width, Index kernel_height,
                              std::optional<double> lambda = std::nullopt);

struct AutoSmashSystem {
  CMatrix sigma;  ///< [n_x x J]: S_j(k_x, source_line)
  CVector b;      ///< [n_x]: sum_j n0_j S_j(k_x, source_line - shift)
};

/// Builds the line system that fits n^(m) so that sum_j n_j^(m) S_j(k_x, k_y)
/// reproduces the composite at k_y - m dk_y. Both lines must be fully acquired.
AutoSmashSystem assemble_autosmash_system(const KSpaceData& data, Index source_line, int shift,
                                          const CVector& composite_weights);

struct AutoSmashWeights {
  CVector n0;
  std::map<int, CVector> nm;
  std::map<int, double> residual_rel;
};

/// Fits n^(m) for m = 1 .. M-1 from the ACS line pairs (source_line,
/// source_line - m). Default n^(0) is all ones, default source line is DC.
AutoSmashWeights autosmash_calibrate(const KSpaceData& data, int reduction, std::optional<CVector> n0 = std::nullopt,
                                     std::optional<Index> source_line = std::nullopt);

/// Test kernels of the directional metric: a row (horizontal) and a column
/// (vertical) of ones with a zero in the middle.
struct TestKernels {
  std::vector<int> horizontal;
  std::vector<int> vertical;

  KernelPattern horizontal_pattern() const;
  KernelPattern vertical_pattern() const;
};

TestKernels metric_test_kernels(Index kernel_width, Index kernel_height);

}  // namespace linpred
