#pragma once

#include "linpred/types.hpp"

#include <vector>

namespace linpred {

struct PixelSpacing {
  double dx = 1.0;
  double dy = 1.0;
};

/// Complex-valued pixel grid (spin density or a coil image). Always non-empty
/// with finite entries.
class ComplexImage {
 public:
  explicit ComplexImage(CMatrix data, PixelSpacing spacing = {});

  const CMatrix& data() const { return data_; }
  PixelSpacing spacing() const { return spacing_; }
  Index nx() const { return data_.rows(); }
  Index ny() const { return data_.cols(); }

 private:
  CMatrix data_;
  PixelSpacing spacing_;
};

/// Cartesian k-space grid matching an image; DC sits at (n_kx/2, n_ky/2).
struct KSpaceGrid {
  Index n_kx = 0;
  Index n_ky = 0;
  double dkx = 0.0;
  double dky = 0.0;

  static KSpaceGrid for_image(Index nx, Index ny, PixelSpacing spacing = {});

  Index center_x() const { return n_kx / 2; }
  Index center_y() const { return n_ky / 2; }
};

enum class TransformDirection { forward, inverse };

/// Centered unitary 1-D DFT in place: index n/2 is the origin on both sides.
/// Radix-2 FFT for power-of-two lengths, direct summation otherwise.
void centered_dft1(std::vector<Complex>& line, TransformDirection direction);

/// Centered unitary 2-D DFT. Throws std::invalid_argument on non-finite input.
CMatrix dft2(const CMatrix& image);
CMatrix dft2(const ComplexImage& image);

/// Inverse of dft2.
CMatrix idft2_matrix(const CMatrix& kspace);
ComplexImage idft2(const CMatrix& kspace, PixelSpacing spacing = {});

/// k-space of the image multiplied by exp(i(m_x dk_x x + m_y dk_y y)), which on
/// the discrete grid is a circular shift of the array by (m_x, m_y).
CMatrix fourier_shift(const CMatrix& kspace, Offset shift);

/// Dense 3-D complex array, x fastest: value(x, y, z) = data[(z * ny + y) * nx + x].
struct ComplexVolume {
  Index nx = 0;
  Index ny = 0;
  Index nz = 0;
  std::vector<Complex> data;

  ComplexVolume() = default;
  ComplexVolume(Index nx_, Index ny_, Index nz_);

  Complex& operator()(Index x, Index y, Index z) { return data[static_cast<std::size_t>((z * ny + y) * nx + x)]; }
  const Complex& operator()(Index x, Index y, Index z) const {
    return data[static_cast<std::size_t>((z * ny + y) * nx + x)];
  }
};

/// Inverse-transforms a fully sampled 3-D k-space along `readout_axis` (0, 1 or
/// 2) and returns one independent 2-D k-space slice per readout position. Each
/// slice keeps the two remaining axes in their original order.
std::vector<CMatrix> readout_hybrid(const ComplexVolume& kspace, int readout_axis);

}  // namespace linpred
