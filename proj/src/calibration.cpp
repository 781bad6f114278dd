#include "linpred/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace linpred {

namespace {

struct Extent {
  int lo = 0;
  int hi = 0;
};

// Bounding box of a kernel including its target (0, 0).
std::pair<Extent, Extent> kernel_extent(const KernelPattern& kernel) {
  Extent ex, ey;
  for (const auto& d : kernel.displacements) {
    ex.lo = std::min(ex.lo, d.u);
    ex.hi = std::max(ex.hi, d.u);
    ey.lo = std::min(ey.lo, d.v);
    ey.hi = std::max(ey.hi, d.v);
  }
  return {ex, ey};
}

void require_acr(const CoilStack& acr, const char* what) {
  if (acr.empty()) throw std::invalid_argument(std::string(what) + ": no coils");
  require_shape(acr, acr.front().rows(), acr.front().cols(), what);
}

}  // namespace

GrappaSystem assemble_grappa_system(const CoilStack& acr, const KernelPattern& kernel) {
  require_acr(acr, "assemble_grappa_system");
  if (!kernel.interpolatable()) throw std::invalid_argument("assemble_grappa_system: kernel has no displacements");
  const Index w = acr.front().rows();
  const Index h = acr.front().cols();
  const auto [ex, ey] = kernel_extent(kernel);
  GrappaSystem sys;
  sys.eta_x = w - (ex.hi - ex.lo);
  sys.eta_y = h - (ey.hi - ey.lo);
  if (sys.eta_x < 1 || sys.eta_y < 1) throw std::invalid_argument("assemble_grappa_system: kernel larger than ACR");

  const Index coils = static_cast<Index>(acr.size());
  const Index nd = kernel.size();
  sys.source.resize(sys.eta_x * sys.eta_y, coils * nd);
  sys.target.resize(sys.eta_x * sys.eta_y, coils);
  for (Index py = 0; py < sys.eta_y; ++py) {
    const Index ty = py - ey.lo;
    for (Index px = 0; px < sys.eta_x; ++px) {
      const Index tx = px - ex.lo;
      const Index row = py * sys.eta_x + px;
      for (Index j = 0; j < coils; ++j) {
        const auto& c = acr[static_cast<std::size_t>(j)];
        sys.target(row, j) = c(tx, ty);
        for (Index d = 0; d < nd; ++d) {
          const auto& off = kernel.displacements[static_cast<std::size_t>(d)];
          sys.source(row, d * coils + j) = c(tx + off.u, ty + off.v);
        }
      }
    }
  }
  return sys;
}

double default_lambda(const CMatrix& source) {
  if (source.cols() == 0) return 0.0;
  return 1e-4 * source.norm() / std::sqrt(static_cast<double>(source.cols()));
}

LeastSquaresFit solve_regularized(const CMatrix& a, const CMatrix& b, double lambda) {
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("solve_regularized: empty system");
  if (a.rows() != b.rows()) throw std::invalid_argument("solve_regularized: row count mismatch");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("solve_regularized: lambda must be >= 0");
  LeastSquaresFit fit;
  if (lambda > 0.0) {
    const Index n = a.cols();
    CMatrix stacked(a.rows() + n, n);
    stacked << a, CMatrix::Identity(n, n) * lambda;
    CMatrix rhs(a.rows() + n, b.cols());
    rhs << b, CMatrix::Zero(n, b.cols());
    fit.solution = stacked.householderQr().solve(rhs);
  } else {
    fit.solution = a.completeOrthogonalDecomposition().solve(b);
  }
  const double bn = b.norm();
  fit.residual_rel = bn > 0.0 ? (a * fit.solution - b).norm() / bn : 0.0;
  return fit;
}

CalibrationWeights solve_weights(const CMatrix& source, const CMatrix& target, double lambda) {
  if (source.rows() == 0) throw std::invalid_argument("solve_weights: calibration system has no rows");
  auto fit = solve_regularized(source, target, lambda);
  CalibrationWeights w;
  w.weights = std::move(fit.solution);
  w.residual_rel = fit.residual_rel;
  return w;
}

std::vector<CalibrationWeights> calibrate_grappa(const CoilStack& acr, const std::vector<KernelPattern>& kernels,
                                                 std::optional<double> lambda) {
  std::vector<CalibrationWeights> out;
  out.reserve(kernels.size());
  for (const auto& k : kernels) {
    if (!k.interpolatable()) {
      out.push_back(CalibrationWeights{k, CMatrix(), 0.0});
      continue;
    }
    const auto sys = assemble_grappa_system(acr, k);
    auto w = solve_weights(sys.source, sys.target, lambda.value_or(default_lambda(sys.source)));
    w.kernel = k;
    out.push_back(std::move(w));
  }
  return out;
}

SpiritKernel::SpiritKernel(Index coils, Index kernel_width, Index kernel_height)
    : coils_(coils), width_(kernel_width), height_(kernel_height) {
  if (coils < 1) throw std::invalid_argument("SpiritKernel: need at least one coil");
  if (kernel_width < 1 || kernel_height < 1 || kernel_width % 2 == 0 || kernel_height % 2 == 0) {
    throw std::invalid_argument("SpiritKernel: kernel dimensions must be odd");
  }
  data_.assign(static_cast<std::size_t>(coils * coils * kernel_width * kernel_height), Complex{});
}

SpiritKernel spirit_calibrate(const CoilStack& acr, Index kernel_width, Index kernel_height,
                              std::optional<double> lambda) {
  require_acr(acr, "spirit_calibrate");
  const Index coils = static_cast<Index>(acr.size());
  SpiritKernel kernel(coils, kernel_width, kernel_height);
  const Index w = acr.front().rows();
  const Index h = acr.front().cols();
  const Index rw = kernel_width / 2;
  const Index rh = kernel_height / 2;
  const Index eta_x = w - kernel_width + 1;
  const Index eta_y = h - kernel_height + 1;
  if (eta_x < 1 || eta_y < 1) throw std::invalid_argument("spirit_calibrate: kernel larger than ACR");

  const Index taps = kernel_width * kernel_height;
  CMatrix a(eta_x * eta_y, taps * coils);
  CMatrix b(eta_x * eta_y, coils);
  for (Index py = 0; py < eta_y; ++py) {
    for (Index px = 0; px < eta_x; ++px) {
      const Index row = py * eta_x + px;
      const Index tx = px + rw;
      const Index ty = py + rh;
      for (Index j = 0; j < coils; ++j) {
        const auto& c = acr[static_cast<std::size_t>(j)];
        b(row, j) = c(tx, ty);
        for (Index dv = -rh; dv <= rh; ++dv) {
          for (Index du = -rw; du <= rw; ++du) {
            const Index tap = (du + rw) + (dv + rh) * kernel_width;
            a(row, tap * coils + j) = c(tx + du, ty + dv);
          }
        }
      }
    }
  }

  const double lam = lambda.value_or(default_lambda(a));
  const Index centre = rw + rh * kernel_width;
  kernel.residual_rel.resize(static_cast<std::size_t>(coils));
  CMatrix reduced(a.rows(), a.cols() - 1);
  for (Index t = 0; t < coils; ++t) {
    const Index skip = centre * coils + t;
    reduced.leftCols(skip) = a.leftCols(skip);
    reduced.rightCols(a.cols() - skip - 1) = a.rightCols(a.cols() - skip - 1);
    const auto fit = solve_regularized(reduced, b.col(t), lam);
    kernel.residual_rel[static_cast<std::size_t>(t)] = fit.residual_rel;
    for (Index col = 0; col < a.cols(); ++col) {
      if (col == skip) continue;
      const Index tap = col / coils;
      const Index src = col % coils;
      const int du = static_cast<int>(tap % kernel_width - rw);
      const int dv = static_cast<int>(tap / kernel_width - rh);
      kernel.weight(t, src, du, dv) = fit.solution(col < skip ? col : col - 1, 0);
    }
  }
  return kernel;
}

AutoSmashSystem assemble_autosmash_system(const KSpaceData& data, Index source_line, int shift,
                                          const CVector& composite_weights) {
  const Index coils = data.coil_count();
  if (composite_weights.size() != coils) throw std::invalid_argument("assemble_autosmash_system: n0 size mismatch");
  const Index target_line = source_line - shift;
  const auto& mask = data.mask();
  for (Index line : {source_line, target_line}) {
    if (line < 0 || line >= data.n_ky() || !mask.acquired().col(line).all()) {
      throw std::invalid_argument("assemble_autosmash_system: ACS line missing");
    }
  }
  AutoSmashSystem sys;
  sys.sigma.resize(data.n_kx(), coils);
  sys.b = CVector::Zero(data.n_kx());
  for (Index j = 0; j < coils; ++j) {
    const auto& c = data.samples()[static_cast<std::size_t>(j)];
    sys.sigma.col(j) = c.col(source_line);
    sys.b += composite_weights(j) * c.col(target_line);
  }
  return sys;
}

AutoSmashWeights autosmash_calibrate(const KSpaceData& data, int reduction, std::optional<CVector> n0,
                                     std::optional<Index> source_line) {
  if (reduction < 1) throw std::invalid_argument("autosmash_calibrate: reduction factor must be >= 1");
  AutoSmashWeights w;
  w.n0 = n0.value_or(CVector::Ones(data.coil_count()));
  const Index src = source_line.value_or(data.n_ky() / 2);
  for (int m = 1; m < reduction; ++m) {
    const auto sys = assemble_autosmash_system(data, src, m, w.n0);
    const auto fit = solve_regularized(sys.sigma, sys.b, 0.0);
    w.nm[m] = fit.solution.col(0);
    w.residual_rel[m] = fit.residual_rel;
  }
  return w;
}

KernelPattern TestKernels::horizontal_pattern() const {
  KernelPattern k;
  const int r = static_cast<int>(horizontal.size()) / 2;
  for (int u = -r; u <= r; ++u) {
    if (horizontal[static_cast<std::size_t>(u + r)] != 0) k.displacements.push_back({u, 0});
  }
  return k;
}

KernelPattern TestKernels::vertical_pattern() const {
  KernelPattern k;
  const int r = static_cast<int>(vertical.size()) / 2;
  for (int v = -r; v <= r; ++v) {
    if (vertical[static_cast<std::size_t>(v + r)] != 0) k.displacements.push_back({0, v});
  }
  return k;
}

TestKernels metric_test_kernels(Index kernel_width, Index kernel_height) {
  if (kernel_width < 3 || kernel_height < 3 || kernel_width % 2 == 0 || kernel_height % 2 == 0) {
    throw std::invalid_argument("metric_test_kernels: kernel dimensions must be odd and >= 3");
  }
  TestKernels k;
  k.horizontal.assign(static_cast<std::size_t>(kernel_width), 1);
  k.horizontal[static_cast<std::size_t>(kernel_width / 2)] = 0;
  k.vertical.assign(static_cast<std::size_t>(kernel_height), 1);
  k.vertical[static_cast<std::size_t>(kernel_height / 2)] = 0;
  return k;
}

}  // namespace linpred
