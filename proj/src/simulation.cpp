#include "linpred/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

namespace linpred {

CoilSensitivities::CoilSensitivities(CoilStack maps) : maps_(std::move(maps)) {
  if (maps_.empty()) throw std::invalid_argument("CoilSensitivities: no coils");
  require_shape(maps_, maps_.front().rows(), maps_.front().cols(), "CoilSensitivities");
  if (maps_.front().size() == 0) throw std::invalid_argument("CoilSensitivities: empty grid");
  const bool any_nonzero =
      std::any_of(maps_.begin(), maps_.end(), [](const CMatrix& m) { return m.cwiseAbs().maxCoeff() > 0.0; });
  if (!any_nonzero) throw std::invalid_argument("CoilSensitivities: every map is zero");
}

const std::array<Ellipse, 10>& shepp_logan_ellipses() {
  static const std::array<Ellipse, 10> table{{
      {0.0, 0.0, 0.69, 0.92, 0.0, 1.0},
      {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8},
      {0.22, 0.0, 0.11, 0.31, -18.0, -0.2},
      {-0.22, 0.0, 0.16, 0.41, 18.0, -0.2},
      {0.0, 0.35, 0.21, 0.25, 0.0, 0.1},
      {0.0, 0.1, 0.046, 0.046, 0.0, 0.1},
      {0.0, -0.1, 0.046, 0.046, 0.0, 0.1},
      {-0.08, -0.605, 0.046, 0.023, 0.0, 0.1},
      {0.0, -0.606, 0.023, 0.023, 0.0, 0.1},
      {0.06, -0.605, 0.023, 0.046, 0.0, 0.1},
  }};
  return table;
}

ComplexImage shepp_logan(Index nx, Index ny) {
  if (nx < 16 || ny < 16) throw std::invalid_argument("shepp_logan: grid must be at least 16 x 16");
  CMatrix img = CMatrix::Zero(nx, ny);
  const double hx = static_cast<double>(nx) / 2.0;
  const double hy = static_cast<double>(ny) / 2.0;
  for (const auto& e : shepp_logan_ellipses()) {
    const double th = e.angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(th);
    const double s = std::sin(th);
    for (Index j = 0; j < ny; ++j) {
      const double y = (static_cast<double>(j) - std::floor(hy)) / hy - e.y0;
      for (Index i = 0; i < nx; ++i) {
        const double x = (static_cast<double>(i) - std::floor(hx)) / hx - e.x0;
        const double xr = x * c + y * s;
        const double yr = -x * s + y * c;
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) img(i, j) += e.intensity;
      }
    }
  }
  // Overlapping ellipses that cancel to zero can leave -1e-17 residue.
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) img(i, j) = std::clamp(img(i, j).real(), 0.0, 1.0);
  }
  return ComplexImage(std::move(img));
}

void BirdcageSpec::validate() const {
  if (elements < 1) throw std::invalid_argument("BirdcageSpec: need at least one element");
  if (!(coil_radius > 0.0)) throw std::invalid_argument("BirdcageSpec: coil radius must be positive");
  if (!(element_length > 0.0)) throw std::invalid_argument("BirdcageSpec: element length must be positive");
  if (!(element_arc_fraction > 0.0) || element_arc_fraction > 1.0) {
    throw std::invalid_argument("BirdcageSpec: element arc fraction must be in (0, 1]");
  }
  if (!(fov_width > 0.0) || !(fov_height > 0.0)) throw std::invalid_argument("BirdcageSpec: FOV must be positive");
  if (nx < 1 || ny < 1) throw std::invalid_argument("BirdcageSpec: empty grid");
  if (segments_per_element < 8) throw std::invalid_argument("BirdcageSpec: need at least 8 segments per element");
}

std::vector<WireSegment> birdcage_element_path(const BirdcageSpec& spec, int element) {
  spec.validate();
  if (element < 0 || element >= spec.elements) throw std::out_of_range("birdcage_element_path: element index");
  const double phi = 2.0 * std::numbers::pi * element / spec.elements;
  const double half_arc = spec.element_arc_fraction * std::numbers::pi / spec.elements;
  const double r = spec.coil_radius;
  const double hz = spec.element_length / 2.0;
  const int per_rung = spec.segments_per_element / 4;
  const int per_arc = (spec.segments_per_element - 2 * per_rung) / 2;

  auto on_cylinder = [r](double angle, double z) { return Vec3(r * std::cos(angle), r * std::sin(angle), z); };
  std::vector<WireSegment> path;
  path.reserve(static_cast<std::size_t>(2 * (per_rung + per_arc)));
  auto rung = [&](double angle, double z0, double z1) {
    for (int k = 0; k < per_rung; ++k) {
      const double a = z0 + (z1 - z0) * k / per_rung;
      const double b = z0 + (z1 - z0) * (k + 1) / per_rung;
      path.push_back({on_cylinder(angle, a), on_cylinder(angle, b)});
    }
  };
  auto arc = [&](double a0, double a1, double z) {
    for (int k = 0; k < per_arc; ++k) {
      path.push_back({on_cylinder(a0 + (a1 - a0) * k / per_arc, z), on_cylinder(a0 + (a1 - a0) * (k + 1) / per_arc, z)});
    }
  };
  rung(phi - half_arc, -hz, hz);
  arc(phi - half_arc, phi + half_arc, hz);
  rung(phi + half_arc, hz, -hz);
  arc(phi + half_arc, phi - half_arc, -hz);
  return path;
}

Vec3 segment_field(const WireSegment& segment, const Vec3& point) {
  const Vec3 r1 = point - segment.start;
  const Vec3 r2 = point - segment.end;
  const double n1 = r1.norm();
  const double n2 = r2.norm();
  const double denom = n1 * n2 * (n1 * n2 + r1.dot(r2));
  // On the wire (or its extension through the segment) the field is singular.
  if (denom <= 1e-300 * std::max(1.0, n1 * n1 * n2 * n2)) return Vec3::Zero();
  const Vec3 cross = r1.cross(r2);
  return cross * ((n1 + n2) / denom);
}

Complex birdcage_sensitivity_at(const BirdcageSpec& spec, int element, const Vec3& point) {
  Vec3 b = Vec3::Zero();
  for (const auto& seg : birdcage_element_path(spec, element)) b += segment_field(seg, point);
  return {b.x(), -b.y()};
}

Vec3 plane_point(const BirdcageSpec& spec, Index i, Index j) {
  const double u = (static_cast<double>(i) - static_cast<double>(spec.nx / 2)) * spec.fov_width / spec.nx;
  const double v = (static_cast<double>(j) - static_cast<double>(spec.ny / 2)) * spec.fov_height / spec.ny;
  return spec.plane == Plane::axial ? Vec3(u, v, 0.0) : Vec3(u, 0.0, v);
}

CoilSensitivities birdcage_sensitivities(const BirdcageSpec& spec) {
  spec.validate();
  CoilStack maps;
  maps.reserve(static_cast<std::size_t>(spec.elements));
  double peak = 0.0;
  for (int e = 0; e < spec.elements; ++e) {
    const auto path = birdcage_element_path(spec, e);
    CMatrix m(spec.nx, spec.ny);
    for (Index j = 0; j < spec.ny; ++j) {
      for (Index i = 0; i < spec.nx; ++i) {
        const Vec3 p = plane_point(spec, i, j);
        Vec3 b = Vec3::Zero();
        for (const auto& seg : path) b += segment_field(seg, p);
        m(i, j) = Complex(b.x(), -b.y());
      }
    }
    if (!m.allFinite()) throw std::runtime_error("birdcage_sensitivities: non-finite field (pixel on a conductor?)");
    peak = std::max(peak, m.cwiseAbs().maxCoeff());
    maps.push_back(std::move(m));
  }
  if (peak > 0.0) {
    for (auto& m : maps) m /= peak;
  }
  return CoilSensitivities(std::move(maps));
}

void DesignedCoilSpec::validate() const {
  if (modes.empty()) throw std::invalid_argument("DesignedCoilSpec: no modes");
  const std::set<Offset> unique(modes.begin(), modes.end());
  if (unique.size() != modes.size()) throw std::invalid_argument("DesignedCoilSpec: duplicate modes");
  if (!amplitudes.empty()) {
    if (amplitudes.size() != modes.size()) throw std::invalid_argument("DesignedCoilSpec: amplitude count mismatch");
    for (const auto& a : amplitudes) {
      if (a == Complex{} || !std::isfinite(a.real()) || !std::isfinite(a.imag())) {
        throw std::invalid_argument("DesignedCoilSpec: amplitudes must be finite and nonzero");
      }
    }
  }
}

DesignedCoilSpec DesignedCoilSpec::square_grid(int radius, std::uint64_t seed) {
  if (radius < 0) throw std::invalid_argument("DesignedCoilSpec::square_grid: negative radius");
  DesignedCoilSpec spec;
  for (int u = -radius; u <= radius; ++u) {
    for (int v = -radius; v <= radius; ++v) spec.modes.push_back({u, v});
  }
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (std::size_t k = 0; k < spec.modes.size(); ++k) {
      const double m = mag(rng);
      spec.amplitudes.push_back(std::polar(m, phase(rng)));
    }
  }
  return spec;
}

CoilSensitivities designed_sensitivities(const DesignedCoilSpec& spec, Index nx, Index ny) {
  spec.validate();
  if (nx < 1 || ny < 1) throw std::invalid_argument("designed_sensitivities: empty grid");
  CoilStack maps;
  maps.reserve(spec.modes.size());
  for (std::size_t c = 0; c < spec.modes.size(); ++c) {
    const Offset m = spec.modes[c];
    const Complex a = spec.amplitude(c);
    CMatrix map(nx, ny);
    for (Index j = 0; j < ny; ++j) {
      for (Index i = 0; i < nx; ++i) {
        // Reduce the integer phase numerator first so large grids stay exact.
        const Index px = resolve_index(m.u * (i - nx / 2), nx, Boundary::periodic);
        const Index py = resolve_index(m.v * (j - ny / 2), ny, Boundary::periodic);
        const double phase = 2.0 * std::numbers::pi *
                             (static_cast<double>(px) / static_cast<double>(nx) +
                              static_cast<double>(py) / static_cast<double>(ny));
        map(i, j) = a * std::polar(1.0, phase);
      }
    }
    maps.push_back(std::move(map));
  }
  return CoilSensitivities(std::move(maps));
}

KSpaceData forward_signal(const ComplexImage& rho, const CoilSensitivities& sens) {
  if (rho.nx() != sens.nx() || rho.ny() != sens.ny()) {
    throw std::invalid_argument("forward_signal: phantom and sensitivity grids differ");
  }
  CoilStack ksp;
  ksp.reserve(static_cast<std::size_t>(sens.coil_count()));
  for (const auto& c : sens.maps()) ksp.push_back(dft2(CMatrix(c.cwiseProduct(rho.data()))));
  return KSpaceData::fully_sampled(std::move(ksp));
}

KSpaceData add_noise(const KSpaceData& kspace, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("add_noise: sigma must be >= 0");
  if (sigma == 0.0) return kspace;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma / std::numbers::sqrt2);
  CoilStack out = kspace.samples();
  const auto& mask = kspace.mask();
  for (auto& coil : out) {
    for (Index j = 0; j < coil.cols(); ++j) {
      for (Index i = 0; i < coil.rows(); ++i) {
        if (!mask.acquired(i, j)) continue;
        const double re = gauss(rng);
        const double im = gauss(rng);
        coil(i, j) += Complex(re, im);
      }
    }
  }
  return KSpaceData(std::move(out), mask);
}

double condition_number(const CMatrix& columns) {
  if (columns.size() == 0) throw std::invalid_argument("condition_number: empty matrix");
  const Eigen::JacobiSVD<CMatrix> svd(columns);
  const auto& s = svd.singularValues();
  const double smax = s.maxCoeff();
  const double smin = s.minCoeff();
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(columns.rows(), columns.cols()));
  if (columns.cols() > columns.rows() || smax == 0.0 || smin <= tol * smax) {
    return std::numeric_limits<double>::infinity();
  }
  return smax / smin;
}

double line_condition_number(const CoilSensitivities& sens, LineOrientation line, Index index) {
  const Index n = line == LineOrientation::horizontal ? sens.nx() : sens.ny();
  const Index limit = line == LineOrientation::horizontal ? sens.ny() : sens.nx();
  if (index < 0 || index >= limit) throw std::out_of_range("line_condition_number: line index out of range");
  CMatrix cols(n, sens.coil_count());
  for (Index c = 0; c < sens.coil_count(); ++c) {
    cols.col(c) = line == LineOrientation::horizontal ? CVector(sens.map(c).col(index))
                                                      : CVector(sens.map(c).row(index).transpose());
  }
  return condition_number(cols);
}

}  // namespace linpred
