#include "linpred/fourier.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace linpred;

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Dft2, CenterImpulseIsFlat) {
  CMatrix img = CMatrix::Zero(8, 8);
  img(4, 4) = 1.0;
  const CMatrix k = dft2(img);
  EXPECT_LT(max_abs(k - CMatrix::Constant(8, 8, 1.0 / 8.0)), 1e-15);
}

TEST(Dft2, ConstantImageIsCenterSpike) {
  CMatrix k = dft2(CMatrix(CMatrix::Ones(8, 8)));
  EXPECT_NEAR(std::abs(k(4, 4) - Complex(8.0)), 0.0, 1e-14);
  k(4, 4) = 0.0;
  EXPECT_LT(max_abs(k), 1e-14);
}

TEST(Dft2, MatchesDirectSummation) {
  for (auto [nx, ny] : {std::pair<Index, Index>{16, 16}, {12, 10}, {7, 9}, {1, 5}, {32, 3}}) {
    const CMatrix img = oracle::random_matrix(nx, ny, 11 + nx * ny);
    const CMatrix ref = oracle::dft2(img);
    EXPECT_LT(max_abs(dft2(img) - ref), 1e-12 * std::max(1.0, max_abs(ref))) << nx << "x" << ny;
    EXPECT_LT(max_abs(idft2_matrix(ref) - img), 1e-12) << nx << "x" << ny;
  }
}

TEST(Dft2, RoundTrip) {
  for (Index n : {16, 32, 24}) {
    const CMatrix img = oracle::random_matrix(n, n, 3 + n);
    EXPECT_LT(max_abs(idft2(dft2(img)).data() - img), 1e-12);
  }
}

TEST(Dft2, ImpulseRecovered) {
  CMatrix img = CMatrix::Zero(8, 8);
  img(2, 5) = 1.0;
  EXPECT_LT(max_abs(idft2_matrix(dft2(img)) - img), 1e-12);
}

TEST(Dft2, ZeroMapsToZero) { EXPECT_EQ(max_abs(idft2_matrix(CMatrix::Zero(6, 4))), 0.0); }

TEST(Dft2, Parseval) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Index nx = 4 + static_cast<Index>(seed) * 5, ny = 64 / static_cast<Index>(seed);
    const CMatrix img = oracle::random_matrix(nx, ny, seed);
    EXPECT_NEAR(dft2(img).norm() / img.norm(), 1.0, 1e-12);
  }
}

TEST(Dft2, Linearity) {
  const CMatrix x = oracle::random_matrix(16, 20, 5), y = oracle::random_matrix(16, 20, 6);
  const Complex a(0.3, -1.2), b(2.0, 0.5);
  const CMatrix lhs = dft2(CMatrix(a * x + b * y));
  const CMatrix rhs = a * dft2(x) + b * dft2(y);
  EXPECT_LT((lhs - rhs).norm() / rhs.norm(), 1e-12);
}

TEST(Dft2, RejectsNonFinite) {
  CMatrix img = CMatrix::Ones(4, 4);
  img(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(dft2(img), std::invalid_argument);
  img(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(idft2_matrix(img), std::invalid_argument);
}

TEST(Dft1, OddAndPowerOfTwoLengthsMatchOracle) {
  for (Index n : {1, 2, 3, 5, 8, 15, 64}) {
    const CMatrix v = oracle::random_matrix(n, 1, 100 + n);
    std::vector<Complex> line(v.data(), v.data() + n);
    const auto ref = oracle::dft1(line, false);
    auto fwd = line;
    centered_dft1(fwd, TransformDirection::forward);
    for (Index i = 0; i < n; ++i) EXPECT_LT(std::abs(fwd[i] - ref[i]), 1e-12) << n;
    centered_dft1(fwd, TransformDirection::inverse);
    for (Index i = 0; i < n; ++i) EXPECT_LT(std::abs(fwd[i] - line[i]), 1e-12) << n;
  }
}

TEST(ComplexImage, Validates) {
  EXPECT_THROW(ComplexImage(CMatrix(0, 3)), std::invalid_argument);
  CMatrix bad = CMatrix::Ones(2, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(ComplexImage{bad}, std::invalid_argument);
  EXPECT_THROW(ComplexImage(CMatrix::Ones(2, 2), PixelSpacing{0.0, 1.0}), std::invalid_argument);
}

TEST(KSpaceGrid, SpacingAndCenter) {
  const auto g = KSpaceGrid::for_image(64, 31, PixelSpacing{0.5, 2.0});
  EXPECT_DOUBLE_EQ(g.dkx, 2.0 * std::numbers::pi / (64 * 0.5));
  EXPECT_DOUBLE_EQ(g.dky, 2.0 * std::numbers::pi / (31 * 2.0));
  EXPECT_EQ(g.center_x(), 32);
  EXPECT_EQ(g.center_y(), 15);
}

TEST(FourierShift, ZeroIsIdentity) {
  const CMatrix k = oracle::random_matrix(9, 7, 1);
  EXPECT_EQ(max_abs(fourier_shift(k, {0, 0}) - k), 0.0);
}

TEST(FourierShift, MovesImpulse) {
  CMatrix k = CMatrix::Zero(8, 8);
  k(4, 4) = 1.0;
  const CMatrix s = fourier_shift(k, {1, 0});
  EXPECT_EQ(s(5, 4), Complex(1.0));
  EXPECT_EQ(s.cwiseAbs().sum(), 1.0);
}

TEST(FourierShift, MatchesCircularShift) {
  const CMatrix k = oracle::random_matrix(16, 16, 2);
  EXPECT_EQ(max_abs(fourier_shift(k, {3, -2}) - oracle::circular_shift(k, 3, -2)), 0.0);
  EXPECT_EQ(max_abs(fourier_shift(k, {-35, 17}) - oracle::circular_shift(k, -35, 17)), 0.0);
}

TEST(FourierShift, ComposesExactly) {
  const CMatrix k = oracle::random_matrix(12, 10, 3);
  for (auto [a, b] : {std::pair<Offset, Offset>{{1, 2}, {3, -4}}, {{-7, 0}, {7, 11}}, {{5, 5}, {-2, -9}}}) {
    EXPECT_EQ(max_abs(fourier_shift(fourier_shift(k, a), b) - fourier_shift(k, {a.u + b.u, a.v + b.v})), 0.0);
  }
}

TEST(FourierShift, IsImageModulation) {
  const Index nx = 16, ny = 12;
  const CMatrix img = oracle::random_matrix(nx, ny, 4);
  const int mx = 2, my = -3;
  CMatrix mod(nx, ny);
  for (Index i = 0; i < nx; ++i)
    for (Index j = 0; j < ny; ++j) {
      const double ph = 2.0 * std::numbers::pi *
                        (mx * static_cast<double>(i - nx / 2) / nx + my * static_cast<double>(j - ny / 2) / ny);
      mod(i, j) = img(i, j) * std::polar(1.0, ph);
    }
  EXPECT_LT(max_abs(dft2(mod) - fourier_shift(dft2(img), {mx, my})), 1e-12);
}

TEST(ReadoutHybrid, ConstantAlongReadoutGivesCenterSlice) {
  ComplexVolume v(4, 6, 8);
  const CMatrix f = oracle::random_matrix(4, 6, 9);
  for (Index z = 0; z < 8; ++z)
    for (Index y = 0; y < 6; ++y)
      for (Index x = 0; x < 4; ++x) v(x, y, z) = f(x, y);
  const auto slices = readout_hybrid(v, 2);
  ASSERT_EQ(slices.size(), 8u);
  for (Index z = 0; z < 8; ++z) {
    if (z == 4) {
      EXPECT_LT(max_abs(slices[4] - std::sqrt(8.0) * f), 1e-12);
    } else {
      EXPECT_LT(max_abs(slices[static_cast<std::size_t>(z)]), 1e-12);
    }
  }
}

TEST(ReadoutHybrid, SeparableSlicesAreProportional) {
  ComplexVolume v(5, 4, 6);
  const CMatrix f = oracle::random_matrix(5, 4, 10);
  const CMatrix g = oracle::random_matrix(6, 1, 11);
  for (Index z = 0; z < 6; ++z)
    for (Index y = 0; y < 4; ++y)
      for (Index x = 0; x < 5; ++x) v(x, y, z) = f(x, y) * g(z);
  for (const auto& s : readout_hybrid(v, 2)) {
    const Complex ratio = s(0, 0) / f(0, 0);
    EXPECT_LT(max_abs(s - ratio * f), 1e-12);
  }
}

TEST(ReadoutHybrid, MatchesFiberwiseOracle) {
  ComplexVolume v(8, 8, 8);
  const CMatrix r = oracle::random_matrix(512, 1, 12);
  for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = r(static_cast<Index>(i));
  for (int axis = 0; axis < 3; ++axis) {
    const auto slices = readout_hybrid(v, axis);
    ASSERT_EQ(slices.size(), 8u);
    for (Index a = 0; a < 8; ++a)
      for (Index b = 0; b < 8; ++b) {
        std::vector<Complex> fiber(8);
        for (Index t = 0; t < 8; ++t) {
          fiber[t] = axis == 0 ? v(t, a, b) : axis == 1 ? v(a, t, b) : v(a, b, t);
        }
        const auto ref = oracle::dft1(fiber, true);
        for (Index t = 0; t < 8; ++t) EXPECT_LT(std::abs(slices[t](a, b) - ref[t]), 1e-12);
      }
  }
}

TEST(ReadoutHybrid, RejectsBadAxis) {
  ComplexVolume v(2, 2, 2);
  EXPECT_THROW(readout_hybrid(v, 3), std::out_of_range);
  EXPECT_THROW(readout_hybrid(v, -1), std::out_of_range);
}
