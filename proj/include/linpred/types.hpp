#pragma once

#include <Eigen/Dense>

#include <compare>
#include <complex>
#include <vector>

namespace linpred {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;

/// One plane per receive coil, all sharing a grid. Element (i, j) of a plane
/// is x (or k_x) index i and y (or k_y) index j.
using CoilStack = std::vector<CMatrix>;

/// Integer displacement on the sampling grid, in units of (dk_x, dk_y).
struct Offset {
  int u = 0;
  int v = 0;

  friend auto operator<=>(const Offset&, const Offset&) = default;
};

struct GridIndex {
  Index x = 0;
  Index y = 0;

  friend auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

/// How a kernel tap that leaves the grid is resolved. The DFT of a pixel grid
/// is periodic in k, so `periodic` wraps the tap; `zero` drops it.
enum class Boundary { periodic, zero };

/// Resolves index `i` on an axis of length `n`; returns -1 when the tap is
/// dropped under `Boundary::zero`.
inline Index resolve_index(Index i, Index n, Boundary boundary) {
  if (i >= 0 && i < n) return i;
  if (boundary == Boundary::zero) return -1;
  Index r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace linpred
