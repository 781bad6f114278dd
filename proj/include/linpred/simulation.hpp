#pragma once

#include "linpred/fourier.hpp"
#include "linpred/kspace.hpp"
#include "linpred/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace linpred {

/// Receive sensitivities C_j over an image grid, one map per coil.
class CoilSensitivities {
 public:
  explicit CoilSensitivities(CoilStack maps);

  const CoilStack& maps() const { return maps_; }
  const CMatrix& map(Index coil) const { return maps_[static_cast<std::size_t>(coil)]; }
  Index coil_count() const { return static_cast<Index>(maps_.size()); }
  Index nx() const { return maps_.front().rows(); }
  Index ny() const { return maps_.front().cols(); }

 private:
  CoilStack maps_;
};

/// Ellipse in normalized coordinates ([-1, 1] across the field of view).
struct Ellipse {
  double x0, y0;
  double a, b;       ///< semi-axes along x and y before rotation
  double angle_deg;  ///< counter-clockwise rotation
  double intensity;  ///< additive contribution inside the ellipse
};

/// The ten-ellipse head phantom with the high-contrast intensity table, so
/// values fall in [0, 1].
const std::array<Ellipse, 10>& shepp_logan_ellipses();

/// Real nonnegative phantom sampled at pixel centres x_i = (i - n/2) / (n/2).
/// Requires n_x, n_y >= 16.
ComplexImage shepp_logan(Index nx, Index ny);

enum class Plane { axial, sagittal };

/// Birdcage receive array: J rectangular loops on a cylinder of radius
/// `coil_radius` whose axis is z. Each loop runs `element_length` along z and
/// spans `element_arc_fraction * 2 pi / J` of arc. The axial plane is z = 0;
/// the sagittal plane is y = 0 with image y along the coil axis.
struct BirdcageSpec {
  int elements = 8;
  double coil_radius = 1.0;
  double element_length = 2.0;
  double element_arc_fraction = 0.8;
  Plane plane = Plane::axial;
  double fov_width = 1.6;
  double fov_height = 1.6;
  Index nx = 64;
  Index ny = 64;
  int segments_per_element = 64;

  void validate() const;
};

using Vec3 = Eigen::Vector3d;

struct WireSegment {
  Vec3 start;
  Vec3 end;
};

/// Closed current path of one element, discretized into straight segments.
std::vector<WireSegment> birdcage_element_path(const BirdcageSpec& spec, int element);

/// Field of a unit current along a straight segment (units with mu_0 / 4 pi = 1).
Vec3 segment_field(const WireSegment& segment, const Vec3& point);

/// Receive sensitivity B_x - i B_y of one element at a point in space.
Complex birdcage_sensitivity_at(const BirdcageSpec& spec, int element, const Vec3& point);

/// Position of pixel (i, j) of the imaging plane.
Vec3 plane_point(const BirdcageSpec& spec, Index i, Index j);

/// Sensitivity maps of every element over the imaging plane, scaled so the
/// largest magnitude over all coils is 1.
CoilSensitivities birdcage_sensitivities(const BirdcageSpec& spec);

/// Coils built as a_j exp(i (u_j dk_x x + v_j dk_y y)). Every tap whose mode sum
/// lands in the set is an exact GRAPPA predictor.
struct DesignedCoilSpec {
  std::vector<Offset> modes;
  std::vector<Complex> amplitudes;  ///< empty means all ones

  void validate() const;
  Complex amplitude(std::size_t coil) const { return amplitudes.empty() ? Complex{1.0} : amplitudes[coil]; }

  /// Modes {-r..r}^2, u-major. With seed != 0 the amplitudes are random with
  /// magnitudes in [0.5, 1.5].
  static DesignedCoilSpec square_grid(int radius, std::uint64_t seed = 0);
};

CoilSensitivities designed_sensitivities(const DesignedCoilSpec& spec, Index nx, Index ny);

/// S_j = dft2(C_j * rho) for each coil, returned fully sampled.
KSpaceData forward_signal(const ComplexImage& rho, const CoilSensitivities& sens);

/// Adds circularly symmetric complex Gaussian noise of standard deviation
/// `sigma` per complex sample (sigma^2 / 2 per component) to acquired samples.
KSpaceData add_noise(const KSpaceData& kspace, double sigma, std::uint64_t seed);

enum class LineOrientation { horizontal, vertical };

/// Condition number of the [n x J] matrix whose columns are each coil's
/// sensitivity along the line. Horizontal lines run along x at y = index;
/// vertical lines run along y at x = index. Rank-deficient (including
/// all-zero) lines report +infinity.
double line_condition_number(const CoilSensitivities& sens, LineOrientation line, Index index);

/// The same quantity for an explicit matrix.
double condition_number(const CMatrix& columns);

}  // namespace linpred
