#include "linpred/simulation.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace linpred;

namespace {

bool inside(const Ellipse& e, double x, double y) {
  const double t = e.angle_deg * std::numbers::pi / 180.0;
  const double dx = x - e.x0, dy = y - e.y0;
  const double p = (dx * std::cos(t) + dy * std::sin(t)) / e.a;
  const double q = (-dx * std::sin(t) + dy * std::cos(t)) / e.b;
  return p * p + q * q <= 1.0;
}

}  // namespace

TEST(SheppLogan, RangeAndSupport) {
  for (auto [nx, ny] : {std::pair<Index, Index>{16, 16}, {64, 48}, {127, 128}}) {
    const auto img = shepp_logan(nx, ny).data();
    EXPECT_EQ(img.imag().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(img.real().minCoeff(), 0.0);
    EXPECT_LE(img.real().maxCoeff(), 1.0);
    EXPECT_EQ(img(0, 0), Complex{});
    EXPECT_EQ(img(nx - 1, 0), Complex{});
    EXPECT_EQ(img(0, ny - 1), Complex{});
    EXPECT_EQ(img(nx - 1, ny - 1), Complex{});
  }
}

TEST(SheppLogan, RejectsSmallGrids) {
  EXPECT_THROW(shepp_logan(15, 64), std::invalid_argument);
  EXPECT_THROW(shepp_logan(64, 8), std::invalid_argument);
}

TEST(SheppLogan, MatchesEllipseSum) {
  const Index n = 64;
  const auto img = shepp_logan(n, n).data();
  const auto& table = shepp_logan_ellipses();
  int outer_only = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double x = static_cast<double>(i - n / 2) / (n / 2.0);
      const double y = static_cast<double>(j - n / 2) / (n / 2.0);
      double v = 0.0;
      int hits = 0;
      for (const auto& e : table)
        if (inside(e, x, y)) {
          v += e.intensity;
          ++hits;
        }
      EXPECT_NEAR(img(i, j).real(), std::clamp(v, 0.0, 1.0), 1e-12);
      if (hits == 1 && inside(table[0], x, y)) {
        EXPECT_DOUBLE_EQ(img(i, j).real(), table[0].intensity);
        ++outer_only;
      }
    }
  EXPECT_GT(outer_only, 0);
}

TEST(Birdcage, SegmentFieldMatchesQuadrature) {
  const auto pts = oracle::random_matrix(6, 3, 17).real();
  for (Index k = 0; k < 5; ++k) {
    const Vec3 a = pts.row(k).transpose(), b = pts.row(k + 1).transpose();
    const Vec3 p(0.3 * k - 0.7, 0.9, -0.4 + 0.1 * k);
    const Vec3 ref = oracle::biot_savart_quadrature(a, b, p);
    EXPECT_LT((segment_field({a, b}, p) - ref).norm(), 1e-9 * ref.norm());
  }
}

TEST(Birdcage, ElementSensitivityMatchesQuadrature) {
  BirdcageSpec spec;
  spec.segments_per_element = 16;
  for (const Vec3& p : {Vec3(0.1, 0.2, 0.0), Vec3(-0.5, 0.3, 0.4), Vec3(0.0, 0.0, 0.7)}) {
    for (int e : {0, 3}) {
      Vec3 b = Vec3::Zero();
      for (const auto& seg : birdcage_element_path(spec, e)) b += oracle::biot_savart_quadrature(seg.start, seg.end, p);
      const Complex ref(b.x(), -b.y());
      EXPECT_LT(std::abs(birdcage_sensitivity_at(spec, e, p) - ref), 1e-9 * std::abs(ref));
    }
  }
}

TEST(Birdcage, ElementPathIsClosedOnCylinder) {
  BirdcageSpec spec;
  for (int e = 0; e < spec.elements; ++e) {
    const auto path = birdcage_element_path(spec, e);
    ASSERT_EQ(static_cast<int>(path.size()), spec.segments_per_element);
    EXPECT_LT((path.back().end - path.front().start).norm(), 1e-12);
    for (std::size_t s = 0; s + 1 < path.size(); ++s) EXPECT_LT((path[s].end - path[s + 1].start).norm(), 1e-12);
    for (const auto& seg : path) EXPECT_NEAR(seg.start.head<2>().norm(), spec.coil_radius, 1e-12);
  }
}

TEST(Birdcage, RotationalSymmetry) {
  BirdcageSpec spec;
  const double phi = 2.0 * std::numbers::pi / spec.elements;
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(phi, Vec3::UnitZ()).toRotationMatrix();
  for (const Vec3& p : {Vec3(0.2, -0.1, 0.0), Vec3(0.5, 0.4, 0.0), Vec3(-0.3, 0.6, 0.2)}) {
    const Complex s0 = birdcage_sensitivity_at(spec, 0, p);
    const Complex s1 = birdcage_sensitivity_at(spec, 1, rot * p);
    EXPECT_LT(std::abs(s1 - std::polar(1.0, -phi) * s0), 1e-10 * std::abs(s0));
  }

  // Grid version: coil 2 is coil 0 turned by a quarter turn.
  spec.nx = spec.ny = 32;
  const auto sens = birdcage_sensitivities(spec);
  double num = 0.0, den = 0.0;
  const Index c = 16;
  for (Index i = 1; i < 32; ++i)
    for (Index j = 1; j < 32; ++j) {
      const Index ri = c - (j - c), rj = i;
      if (ri < 0 || ri >= 32) continue;
      const Complex expected = Complex(0.0, -1.0) * sens.map(0)(i, j);
      num += std::norm(sens.map(2)(ri, rj) - expected);
      den += std::norm(expected);
    }
  EXPECT_LT(std::sqrt(num / den), 0.01);
}

TEST(Birdcage, LineConditionNumbers) {
  BirdcageSpec axial;
  axial.nx = axial.ny = 128;
  const auto a = birdcage_sensitivities(axial);
  const double h = line_condition_number(a, LineOrientation::horizontal, 64);
  EXPECT_GT(std::log10(h), 3.0 - 1.5);
  EXPECT_LT(std::log10(h), 3.0 + 1.5);

  BirdcageSpec sag = axial;
  sag.plane = Plane::sagittal;
  const auto s = birdcage_sensitivities(sag);
  EXPECT_GE(line_condition_number(s, LineOrientation::vertical, 64), 1e3 * h);
  EXPECT_LT(line_condition_number(s, LineOrientation::horizontal, 64), 1e3 * h);
}

TEST(Birdcage, RejectsDegenerateGeometry) {
  BirdcageSpec spec;
  spec.coil_radius = 0.0;
  EXPECT_THROW(birdcage_sensitivities(spec), std::invalid_argument);
  spec = {};
  spec.segments_per_element = 4;
  EXPECT_THROW(birdcage_sensitivities(spec), std::invalid_argument);
  spec = {};
  spec.elements = 0;
  EXPECT_THROW(birdcage_sensitivities(spec), std::invalid_argument);
}

TEST(Designed, SingleModeIsConstant) {
  DesignedCoilSpec spec;
  spec.modes = {{0, 0}};
  const auto s = designed_sensitivities(spec, 12, 10);
  EXPECT_LT((s.map(0) - CMatrix::Ones(12, 10)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Designed, ModulationEqualsNeighbourCoil) {
  DesignedCoilSpec spec;
  spec.modes = {{0, 0}, {0, 1}};
  spec.amplitudes = {Complex(0.7, 0.2), Complex(-1.1, 0.4)};
  const Index n = 32;
  const auto s = designed_sensitivities(spec, n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const Complex e = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j - n / 2) / n);
      EXPECT_LT(std::abs(e * s.map(0)(i, j) - spec.amplitudes[0] / spec.amplitudes[1] * s.map(1)(i, j)), 1e-12);
    }
}

TEST(Designed, OneHotCombinationsAreExact) {
  const auto spec = DesignedCoilSpec::square_grid(1, 5);
  const Index nx = 24, ny = 20;
  const auto s = designed_sensitivities(spec, nx, ny);
  for (const Offset d : {Offset{0, 1}, Offset{1, 0}, Offset{-1, 1}, Offset{1, -1}}) {
    for (std::size_t l = 0; l < spec.modes.size(); ++l) {
      const Offset target{spec.modes[l].u + d.u, spec.modes[l].v + d.v};
      const auto it = std::find(spec.modes.begin(), spec.modes.end(), target);
      if (it == spec.modes.end()) continue;
      const auto jp = static_cast<std::size_t>(it - spec.modes.begin());
      double worst = 0.0;
      for (Index i = 0; i < nx; ++i)
        for (Index j = 0; j < ny; ++j) {
          const double ph = 2.0 * std::numbers::pi *
                            (d.u * static_cast<double>(i - nx / 2) / nx + d.v * static_cast<double>(j - ny / 2) / ny);
          const Complex lhs = std::polar(1.0, ph) * s.map(static_cast<Index>(l))(i, j);
          const Complex rhs = spec.amplitudes[l] / spec.amplitudes[jp] * s.map(static_cast<Index>(jp))(i, j);
          worst = std::max(worst, std::abs(lhs - rhs));
        }
      EXPECT_LT(worst, 1e-12);
    }
  }
}

TEST(Designed, RejectsDuplicateModes) {
  DesignedCoilSpec spec;
  spec.modes = {{1, 0}, {1, 0}};
  EXPECT_THROW(designed_sensitivities(spec, 8, 8), std::invalid_argument);
}

TEST(Forward, ZeroPhantomGivesZeroKSpace) {
  const auto s = designed_sensitivities(DesignedCoilSpec::square_grid(1), 16, 16);
  const auto k = forward_signal(ComplexImage(CMatrix::Zero(16, 16)), s);
  for (const auto& c : k.samples()) EXPECT_EQ(c.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, UnitCoilIsPlainTransform) {
  const CMatrix rho = oracle::random_matrix(16, 12, 21);
  const auto k = forward_signal(ComplexImage(rho), CoilSensitivities({CMatrix::Ones(16, 12)}));
  EXPECT_LT((k.samples()[0] - oracle::dft2(rho)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, DesignedCoilsAreShiftedCopies) {
  const auto spec = DesignedCoilSpec::square_grid(1, 9);
  const CMatrix rho = oracle::random_matrix(16, 16, 22);
  const auto k = forward_signal(ComplexImage(rho), designed_sensitivities(spec, 16, 16));
  for (std::size_t j = 1; j < spec.modes.size(); ++j) {
    const Offset diff{spec.modes[j].u - spec.modes[0].u, spec.modes[j].v - spec.modes[0].v};
    const CMatrix ref = spec.amplitudes[j] / spec.amplitudes[0] * fourier_shift(k.samples()[0], diff);
    EXPECT_LT((k.samples()[j] - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, LinearInPhantom) {
  const auto s = birdcage_sensitivities(BirdcageSpec{.elements = 4, .nx = 16, .ny = 16});
  const CMatrix r1 = oracle::random_matrix(16, 16, 23), r2 = oracle::random_matrix(16, 16, 24);
  const Complex a(1.5, -0.5), b(-0.25, 2.0);
  const auto lhs = forward_signal(ComplexImage(CMatrix(a * r1 + b * r2)), s);
  const auto k1 = forward_signal(ComplexImage(r1), s), k2 = forward_signal(ComplexImage(r2), s);
  CoilStack rhs;
  for (std::size_t c = 0; c < 4; ++c) rhs.push_back(a * k1.samples()[c] + b * k2.samples()[c]);
  EXPECT_LT(oracle::rel_error(lhs.samples(), rhs), 1e-12);
}

TEST(Forward, RejectsGridMismatch) {
  const auto s = designed_sensitivities(DesignedCoilSpec::square_grid(0), 16, 16);
  EXPECT_THROW(forward_signal(shepp_logan(16, 32), s), std::invalid_argument);
}

TEST(Noise, ZeroSigmaIsIdentity) {
  const auto k = KSpaceData::fully_sampled(oracle::random_stack(2, 8, 8, 30));
  EXPECT_EQ(oracle::rel_error(add_noise(k, 0.0, 1).samples(), k.samples()), 0.0);
}

TEST(Noise, DeterministicPerSeed) {
  const auto k = KSpaceData::fully_sampled(oracle::random_stack(2, 8, 8, 31));
  const auto a = add_noise(k, 0.5, 77), b = add_noise(k, 0.5, 77), c = add_noise(k, 0.5, 78);
  EXPECT_EQ(oracle::rel_error(a.samples(), b.samples()), 0.0);
  EXPECT_GT(oracle::rel_error(a.samples(), c.samples()), 0.0);
}

TEST(Noise, PerComponentVariance) {
  const auto k = KSpaceData::fully_sampled({CMatrix::Zero(100, 100)});
  const CMatrix n = add_noise(k, 1.0, 5).samples()[0];
  const double n_samples = 1e4;
  const double vr = n.real().squaredNorm() / n_samples, vi = n.imag().squaredNorm() / n_samples;
  EXPECT_NEAR(vr, 0.5, 0.025);
  EXPECT_NEAR(vi, 0.5, 0.025);
}

TEST(Noise, OnlyAcquiredSamples) {
  const auto full = oracle::random_stack(1, 16, 16, 32);
  const auto k = KSpaceData::retrospective(full, uniform_mask(16, 16, 2, 1));
  const auto n = add_noise(k, 1.0, 3);
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j)
      if (!k.mask().acquired(i, j)) EXPECT_EQ(n.samples()[0](i, j), Complex{});
}

TEST(Noise, RejectsNegativeSigma) {
  const auto k = KSpaceData::fully_sampled({CMatrix::Zero(4, 4)});
  EXPECT_THROW(add_noise(k, -1.0, 1), std::invalid_argument);
}

TEST(ConditionNumber, SingleColumnIsOne) {
  const auto s = CoilSensitivities({oracle::random_matrix(16, 8, 40)});
  EXPECT_NEAR(line_condition_number(s, LineOrientation::horizontal, 3), 1.0, 1e-12);
}

TEST(ConditionNumber, CollinearIsInfinite) {
  const CMatrix m = oracle::random_matrix(16, 8, 41);
  const auto s = CoilSensitivities({m, CMatrix(2.0 * m)});
  EXPECT_TRUE(std::isinf(line_condition_number(s, LineOrientation::vertical, 5)));
  CMatrix a = CMatrix::Ones(16, 8), b = CMatrix::Ones(16, 8);
  a.col(2).setZero();
  b.col(2).setZero();
  const auto z = CoilSensitivities({a, b});
  EXPECT_TRUE(std::isinf(line_condition_number(z, LineOrientation::horizontal, 2)));
  EXPECT_TRUE(std::isinf(condition_number(CMatrix::Zero(8, 2))));
}

TEST(ConditionNumber, MatchesGramOracle) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const CMatrix m = oracle::random_matrix(32, 4, seed);
    EXPECT_NEAR(condition_number(m) / oracle::gram_condition(m), 1.0, 1e-10);
  }
}

TEST(ConditionNumber, RejectsBadIndex) {
  const auto s = CoilSensitivities({CMatrix::Ones(4, 6)});
  EXPECT_THROW(line_condition_number(s, LineOrientation::horizontal, 6), std::out_of_range);
  EXPECT_THROW(line_condition_number(s, LineOrientation::vertical, -1), std::out_of_range);
}
