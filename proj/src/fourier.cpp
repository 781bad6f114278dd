#include "linpred/fourier.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace linpred {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Uncentered, unnormalized transform of one length. Twiddles are tabulated once
// per plan so a 2-D transform reuses them across lines.
class Plan {
 public:
  explicit Plan(std::size_t n) : n_(n), roots_(n) {
    for (std::size_t k = 0; k < n; ++k) {
      roots_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
    if (is_power_of_two(n)) {
      bitrev_.resize(n);
      std::size_t bits = 0;
      while ((std::size_t{1} << bits) < n) ++bits;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < bits; ++b) {
          if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
        }
        bitrev_[i] = r;
      }
    }
  }

  std::size_t size() const { return n_; }

  void run(std::vector<Complex>& a, TransformDirection dir, std::vector<Complex>& scratch) const {
    if (n_ <= 1) return;
    if (!bitrev_.empty()) {
      radix2(a, dir);
    } else {
      direct(a, dir, scratch);
    }
  }

 private:
  Complex root(std::size_t k, TransformDirection dir) const {
    return dir == TransformDirection::forward ? roots_[k] : std::conj(roots_[k]);
  }

  void radix2(std::vector<Complex>& a, TransformDirection dir) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const Complex w = root(k * step, dir);
          const Complex t = w * a[start + k + half];
          a[start + k + half] = a[start + k] - t;
          a[start + k] += t;
        }
      }
    }
  }

  void direct(std::vector<Complex>& a, TransformDirection dir, std::vector<Complex>& out) const {
    out.assign(n_, Complex{});
    for (std::size_t p = 0; p < n_; ++p) {
      Complex acc{};
      std::size_t k = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        acc += a[i] * root(k, dir);
        k += p;
        if (k >= n_) k -= n_;
      }
      out[p] = acc;
    }
    a.swap(out);
  }

  std::size_t n_;
  std::vector<Complex> roots_;
  std::vector<std::size_t> bitrev_;
};

// Centered, unitary transform built on the plain one: rotate the origin to
// index 0, transform, rotate back.
void centered(const Plan& plan, std::vector<Complex>& line, TransformDirection dir, std::vector<Complex>& tmp,
              std::vector<Complex>& scratch) {
  const std::size_t n = plan.size();
  const std::size_t c = n / 2;
  tmp.resize(n);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = line[(i + c) % n];
  plan.run(tmp, dir, scratch);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t p = 0; p < n; ++p) line[(p + c) % n] = tmp[p] * scale;
}

void require_finite(const CMatrix& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": input contains non-finite values");
}

CMatrix transform2(const CMatrix& in, TransformDirection dir) {
  const auto nx = static_cast<std::size_t>(in.rows());
  const auto ny = static_cast<std::size_t>(in.cols());
  CMatrix out = in;
  std::vector<Complex> line, tmp, scratch;
  const Plan px(nx);
  line.resize(nx);
  for (Index j = 0; j < in.cols(); ++j) {
    for (std::size_t i = 0; i < nx; ++i) line[i] = out(static_cast<Index>(i), j);
    centered(px, line, dir, tmp, scratch);
    for (std::size_t i = 0; i < nx; ++i) out(static_cast<Index>(i), j) = line[i];
  }
  const Plan py(ny);
  line.resize(ny);
  for (Index i = 0; i < in.rows(); ++i) {
    for (std::size_t j = 0; j < ny; ++j) line[j] = out(i, static_cast<Index>(j));
    centered(py, line, dir, tmp, scratch);
    for (std::size_t j = 0; j < ny; ++j) out(i, static_cast<Index>(j)) = line[j];
  }
  return out;
}

}  // namespace

ComplexImage::ComplexImage(CMatrix data, PixelSpacing spacing) : data_(std::move(data)), spacing_(spacing) {
  if (data_.rows() < 1 || data_.cols() < 1) throw std::invalid_argument("ComplexImage: empty grid");
  if (!data_.allFinite()) throw std::invalid_argument("ComplexImage: non-finite pixel");
  if (!(spacing_.dx > 0.0) || !(spacing_.dy > 0.0)) throw std::invalid_argument("ComplexImage: spacing must be positive");
}

KSpaceGrid KSpaceGrid::for_image(Index nx, Index ny, PixelSpacing spacing) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("KSpaceGrid: empty grid");
  if (!(spacing.dx > 0.0) || !(spacing.dy > 0.0)) throw std::invalid_argument("KSpaceGrid: spacing must be positive");
  KSpaceGrid g;
  g.n_kx = nx;
  g.n_ky = ny;
  g.dkx = 2.0 * std::numbers::pi / (static_cast<double>(nx) * spacing.dx);
  g.dky = 2.0 * std::numbers::pi / (static_cast<double>(ny) * spacing.dy);
  return g;
}

void centered_dft1(std::vector<Complex>& line, TransformDirection direction) {
  if (line.empty()) return;
  const Plan plan(line.size());
  std::vector<Complex> tmp, scratch;
  centered(plan, line, direction, tmp, scratch);
}

CMatrix dft2(const CMatrix& image) {
  require_finite(image, "dft2");
  if (image.size() == 0) throw std::invalid_argument("dft2: empty input");
  return transform2(image, TransformDirection::forward);
}

CMatrix dft2(const ComplexImage& image) { return transform2(image.data(), TransformDirection::forward); }

CMatrix idft2_matrix(const CMatrix& kspace) {
  require_finite(kspace, "idft2");
  if (kspace.size() == 0) throw std::invalid_argument("idft2: empty input");
  return transform2(kspace, TransformDirection::inverse);
}

ComplexImage idft2(const CMatrix& kspace, PixelSpacing spacing) { return ComplexImage(idft2_matrix(kspace), spacing); }

CMatrix fourier_shift(const CMatrix& kspace, Offset shift) {
  const Index nx = kspace.rows();
  const Index ny = kspace.cols();
  CMatrix out(nx, ny);
  for (Index j = 0; j < ny; ++j) {
    const Index sj = resolve_index(j - shift.v, ny, Boundary::periodic);
    for (Index i = 0; i < nx; ++i) {
      out(i, j) = kspace(resolve_index(i - shift.u, nx, Boundary::periodic), sj);
    }
  }
  return out;
}

ComplexVolume::ComplexVolume(Index nx_, Index ny_, Index nz_)
    : nx(nx_), ny(ny_), nz(nz_), data(static_cast<std::size_t>(nx_ * ny_ * nz_)) {}

std::vector<CMatrix> readout_hybrid(const ComplexVolume& kspace, int readout_axis) {
  if (readout_axis < 0 || readout_axis > 2) {
    throw std::out_of_range("readout_hybrid: readout axis must be 0, 1 or 2");
  }
  if (kspace.data.size() != static_cast<std::size_t>(kspace.nx * kspace.ny * kspace.nz) || kspace.data.empty()) {
    throw std::invalid_argument("readout_hybrid: volume dimensions do not match its data");
  }
  const Index dims[3] = {kspace.nx, kspace.ny, kspace.nz};
  const int a = readout_axis == 0 ? 1 : 0;
  const int b = readout_axis == 2 ? 1 : 2;
  const Index n_read = dims[readout_axis];

  std::vector<CMatrix> slices(static_cast<std::size_t>(n_read), CMatrix(dims[a], dims[b]));
  const Plan plan(static_cast<std::size_t>(n_read));
  std::vector<Complex> fiber(static_cast<std::size_t>(n_read)), tmp, scratch;
  Index idx[3];
  for (Index p = 0; p < dims[a]; ++p) {
    for (Index q = 0; q < dims[b]; ++q) {
      idx[a] = p;
      idx[b] = q;
      for (Index r = 0; r < n_read; ++r) {
        idx[readout_axis] = r;
        fiber[static_cast<std::size_t>(r)] = kspace(idx[0], idx[1], idx[2]);
      }
      centered(plan, fiber, TransformDirection::inverse, tmp, scratch);
      for (Index r = 0; r < n_read; ++r) slices[static_cast<std::size_t>(r)](p, q) = fiber[static_cast<std::size_t>(r)];
    }
  }
  return slices;
}

}  // namespace linpred
