#include "linpred/reconstruction.hpp"

#include "linpred/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace linpred {

namespace {

double squared_norm(const FlatKSpace& v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

void finish(ReconResult& r) {
  r.coil_images = coil_images(r.kspace_full);
  r.image = rsos_combine(r.coil_images);
}

// dst[i] += w * src[i + du] along one line of length n.
// dst[i] += w * src[i + offset] for i in [begin, end), without the NaN-recovery
// path of std::complex multiplication.
void axpy_range(Complex w, const Complex* src, Complex* dst, Index begin, Index end, Index offset) {
  const double wr = w.real(), wi = w.imag();
  const double* s = reinterpret_cast<const double*>(src);
  double* d = reinterpret_cast<double*>(dst);
  for (Index i = begin; i < end; ++i) {
    const double sr = s[2 * (i + offset)], si = s[2 * (i + offset) + 1];
    d[2 * i] += wr * sr - wi * si;
    d[2 * i + 1] += wr * si + wi * sr;
  }
}

void axpy_shifted(Complex w, const Complex* src, Complex* dst, Index n, Index du, Boundary boundary) {
  const Index lo = std::max<Index>(0, -du);
  const Index hi = std::min<Index>(n, n - du);
  axpy_range(w, src, dst, lo, hi, du);
  if (boundary != Boundary::periodic) return;
  axpy_range(w, src, dst, 0, lo, du + n);
  axpy_range(w, src, dst, std::max(hi, lo), n, du - n);
}

}  // namespace

ReconResult grappa_reconstruct(const KSpaceData& data, const std::vector<CalibrationWeights>& weights,
                               Boundary boundary) {
  const Index coils = data.coil_count();
  const Index nx = data.n_kx();
  const Index ny = data.n_ky();
  const auto& src = data.samples();
  ReconResult result;
  result.kspace_full = src;
  BoolMatrix covered = data.mask().acquired();

  for (const auto& w : weights) {
    const auto& k = w.kernel;
    if (!k.interpolatable()) {
      for (const auto& t : k.targets) {
        if (!covered(t.x, t.y)) ++result.uninterpolatable;
        covered(t.x, t.y) = true;
      }
      continue;
    }
    if (w.weights.rows() != coils * k.size() || w.weights.cols() != coils) {
      throw std::invalid_argument("grappa_reconstruct: weight matrix shape does not match kernel");
    }
    for (const auto& t : k.targets) {
      if (t.x < 0 || t.x >= nx || t.y < 0 || t.y >= ny) {
        throw std::invalid_argument("grappa_reconstruct: kernel target outside grid");
      }
      if (data.mask().acquired(t.x, t.y)) continue;
      for (Index l = 0; l < coils; ++l) {
        Complex acc{};
        for (Index d = 0; d < k.size(); ++d) {
          const auto& off = k.displacements[static_cast<std::size_t>(d)];
          const Index x = resolve_index(t.x + off.u, nx, boundary);
          const Index y = resolve_index(t.y + off.v, ny, boundary);
          if (x < 0 || y < 0) continue;
          for (Index j = 0; j < coils; ++j) acc += src[static_cast<std::size_t>(j)](x, y) * w.weights(d * coils + j, l);
        }
        result.kspace_full[static_cast<std::size_t>(l)](t.x, t.y) = acc;
      }
      covered(t.x, t.y) = true;
    }
  }
  if (!covered.all()) throw std::invalid_argument("grappa_reconstruct: missing weights for a kernel class");
  if (result.uninterpolatable > 0) {
    result.warning = std::to_string(result.uninterpolatable) + " locations have no acquired neighbours";
  }
  finish(result);
  return result;
}

ReconResult grappa(const KSpaceData& data, const GrappaOptions& options) {
  const auto acr = acr_extract(data.samples(), data.mask(), options.acr);
  const auto kernels = enumerate_kernels(data.mask(), options.threshold, options.boundary);
  const auto weights = calibrate_grappa(acr, kernels, options.lambda);
  return grappa_reconstruct(data, weights, options.boundary);
}

FlatKSpace flatten(const CoilStack& stack) {
  FlatKSpace flat;
  if (stack.empty()) return flat;
  const Index per = stack.front().size();
  flat.resize(static_cast<std::size_t>(per) * stack.size());
  for (std::size_t c = 0; c < stack.size(); ++c) {
    std::copy(stack[c].data(), stack[c].data() + per, flat.begin() + static_cast<std::ptrdiff_t>(c * per));
  }
  return flat;
}

CoilStack unflatten(const FlatKSpace& flat, Index coils, Index n_kx, Index n_ky) {
  if (static_cast<Index>(flat.size()) != coils * n_kx * n_ky) throw std::invalid_argument("unflatten: size mismatch");
  CoilStack out(static_cast<std::size_t>(coils), CMatrix(n_kx, n_ky));
  for (Index c = 0; c < coils; ++c) {
    std::copy(flat.begin() + c * n_kx * n_ky, flat.begin() + (c + 1) * n_kx * n_ky, out[static_cast<std::size_t>(c)].data());
  }
  return out;
}

SpiritOperator::SpiritOperator(const SpiritKernel& kernel, Index n_kx, Index n_ky, Boundary boundary)
    : kernel_(kernel), nx_(n_kx), ny_(n_ky), boundary_(boundary) {
  if (n_kx < 1 || n_ky < 1) throw std::invalid_argument("SpiritOperator: empty grid");
}

void SpiritOperator::residual(const FlatKSpace& in, FlatKSpace& out) const {
  if (static_cast<Index>(in.size()) != size()) throw std::invalid_argument("SpiritOperator: input size mismatch");
  out.resize(in.size());
  const Index plane = nx_ * ny_;
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = -in[k];
  const int rw = static_cast<int>(kernel_.half_width());
  const int rh = static_cast<int>(kernel_.half_height());
  for (Index t = 0; t < kernel_.coils(); ++t) {
    Complex* dst_plane = out.data() + t * plane;
    for (Index s = 0; s < kernel_.coils(); ++s) {
      const Complex* src_plane = in.data() + s * plane;
      for (int dv = -rh; dv <= rh; ++dv) {
        for (int du = -rw; du <= rw; ++du) {
          const Complex w = kernel_.weight(t, s, du, dv);
          if (w == Complex{}) continue;
          for (Index j = 0; j < ny_; ++j) {
            const Index js = resolve_index(j + dv, ny_, boundary_);
            if (js < 0) continue;
            axpy_shifted(w, src_plane + js * nx_, dst_plane + j * nx_, nx_, du, boundary_);
          }
        }
      }
    }
  }
}

void SpiritOperator::residual_adjoint(const FlatKSpace& in, FlatKSpace& out) const {
  if (static_cast<Index>(in.size()) != size()) throw std::invalid_argument("SpiritOperator: input size mismatch");
  out.resize(in.size());
  const Index plane = nx_ * ny_;
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = -in[k];
  const int rw = static_cast<int>(kernel_.half_width());
  const int rh = static_cast<int>(kernel_.half_height());
  // Forward: out_t(i, j) += w in_s(i + du, j + dv). Adjoint scatters the
  // conjugate back: out_s(i', j') += conj(w) in_t(i' - du, j' - dv).
  for (Index s = 0; s < kernel_.coils(); ++s) {
    Complex* dst_plane = out.data() + s * plane;
    for (Index t = 0; t < kernel_.coils(); ++t) {
      const Complex* src_plane = in.data() + t * plane;
      for (int dv = -rh; dv <= rh; ++dv) {
        for (int du = -rw; du <= rw; ++du) {
          const Complex w = std::conj(kernel_.weight(t, s, du, dv));
          if (w == Complex{}) continue;
          for (Index j = 0; j < ny_; ++j) {
            const Index js = resolve_index(j - dv, ny_, boundary_);
            if (js < 0) continue;
            axpy_shifted(w, src_plane + js * nx_, dst_plane + j * nx_, nx_, -du, boundary_);
          }
        }
      }
    }
  }
}

double SpiritOperator::lipschitz_estimate(int iterations) const {
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> g(0.0, 1.0);
  FlatKSpace v(static_cast<std::size_t>(size())), av, ahav;
  for (auto& z : v) z = Complex(g(rng), g(rng));
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double n = std::sqrt(squared_norm(v));
    if (n == 0.0) return 0.0;
    for (auto& z : v) z /= n;
    residual(v, av);
    residual_adjoint(av, ahav);
    lambda = squared_norm(av);
    v.swap(ahav);
  }
  return lambda;
}

namespace {

ReconResult spirit_cgls(const KSpaceData& data, const SpiritOperator& op, const SpiritOptions& options) {
  const Index coils = data.coil_count();
  const Index nx = data.n_kx();
  const Index ny = data.n_ky();
  const int max_iter = options.max_iter > 0 ? options.max_iter : 200;
  const auto& mask = data.mask().acquired();

  std::vector<char> free(static_cast<std::size_t>(op.size()));
  for (Index c = 0; c < coils; ++c) {
    for (Index j = 0; j < ny; ++j) {
      for (Index i = 0; i < nx; ++i) free[static_cast<std::size_t>(c * nx * ny + j * nx + i)] = !mask(i, j);
    }
  }
  auto project_free = [&free](FlatKSpace& v) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!free[k]) v[k] = Complex{};
    }
  };

  FlatKSpace theta = flatten(data.samples());
  FlatKSpace r, s, q;
  op.residual(theta, r);
  for (auto& z : r) z = -z;  // r = b - A x with b = -(G - I) theta_0, x = 0
  ReconResult result;
  result.objective_trace.push_back(0.5 * squared_norm(r));

  op.residual_adjoint(r, s);  // s = A^H r
  project_free(s);
  FlatKSpace p = s;
  double gamma = squared_norm(s);
  const double gamma0 = gamma;
  result.converged = gamma0 == 0.0;

  // theta = theta_0 + x, with r = b - A x = -(G - I) theta throughout.
  for (int it = 1; it <= max_iter && !result.converged; ++it) {
    op.residual(p, q);
    const double delta = squared_norm(q);
    if (delta == 0.0) {
      result.converged = true;
      break;
    }
    const double alpha = gamma / delta;
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += alpha * p[k];
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= alpha * q[k];
    const double prev = result.objective_trace.back();
    const double obj = 0.5 * squared_norm(r);
    result.objective_trace.push_back(obj);
    result.iterations = it;

    op.residual_adjoint(r, s);
    project_free(s);
    const double gamma_new = squared_norm(s);
    if (std::sqrt(gamma_new) <= options.tol * std::sqrt(gamma0) || prev - obj <= options.tol * prev) {
      result.converged = true;
      break;
    }
    const double beta = gamma_new / gamma;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = s[k] + beta * p[k];
    gamma = gamma_new;
  }
  if (!result.converged) result.warning = "SPIRiT CG reached the iteration limit before converging";
  result.kspace_full = unflatten(theta, coils, nx, ny);
  finish(result);
  return result;
}

ReconResult spirit_fista(const KSpaceData& data, const SpiritOperator& op, const SpiritOptions& options) {
  const Index coils = data.coil_count();
  const Index nx = data.n_kx();
  const Index ny = data.n_ky();
  const int max_iter = options.max_iter > 0 ? options.max_iter : 500;
  const auto& mask = data.mask().acquired();
  const FlatKSpace y = flatten(data.samples());

  std::vector<std::size_t> acquired_idx;
  for (Index c = 0; c < coils; ++c) {
    for (Index j = 0; j < ny; ++j) {
      for (Index i = 0; i < nx; ++i) {
        if (mask(i, j)) acquired_idx.push_back(static_cast<std::size_t>(c * nx * ny + j * nx + i));
      }
    }
  }
  auto project = [&](FlatKSpace& v) {
    double dist = 0.0;
    for (auto k : acquired_idx) dist += std::norm(v[k] - y[k]);
    if (dist <= options.epsilon) return;
    const double scale = std::sqrt(options.epsilon / dist);
    for (auto k : acquired_idx) v[k] = y[k] + (v[k] - y[k]) * scale;
  };
  FlatKSpace tmp;
  auto objective = [&](const FlatKSpace& v) {
    op.residual(v, tmp);
    return 0.5 * squared_norm(tmp);
  };

  const double lip = op.lipschitz_estimate(20) / 0.95;
  ReconResult result;
  FlatKSpace x = y;
  double fx = objective(x);
  result.objective_trace.push_back(fx);
  if (lip == 0.0) {
    result.kspace_full = unflatten(x, coils, nx, ny);
    finish(result);
    return result;
  }
  FlatKSpace x_prev = x, yk = x, z, ry, grad;
  double t = 1.0;
  result.converged = false;
  for (int it = 1; it <= max_iter; ++it) {
    op.residual(yk, ry);
    op.residual_adjoint(ry, grad);
    z.resize(yk.size());
    double step_norm = 0.0, y_norm = 0.0;
    for (std::size_t k = 0; k < yk.size(); ++k) z[k] = yk[k] - grad[k] / lip;
    project(z);
    for (std::size_t k = 0; k < yk.size(); ++k) {
      step_norm += std::norm(z[k] - yk[k]);
      y_norm += std::norm(yk[k]);
    }
    const double fz = objective(z);
    const double f_prev = fx;
    x_prev = x;
    if (fz <= fx) {
      x = z;
      fx = fz;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t k = 0; k < yk.size(); ++k) {
      yk[k] = x[k] + (t / t_next) * (z[k] - x[k]) + ((t - 1.0) / t_next) * (x[k] - x_prev[k]);
    }
    t = t_next;
    result.objective_trace.push_back(fx);
    result.iterations = it;
    const bool accepted = fz <= f_prev;
    if ((accepted && f_prev - fx <= options.tol * f_prev) ||
        std::sqrt(step_norm) <= options.tol * std::max(std::sqrt(y_norm), 1e-300)) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged) result.warning = "SPIRiT FISTA reached the iteration limit before converging";
  result.kspace_full = unflatten(x, coils, nx, ny);
  finish(result);
  return result;
}

}  // namespace

ReconResult spirit_reconstruct(const KSpaceData& data, const SpiritKernel& kernel, const SpiritOptions& options) {
  if (kernel.coils() != data.coil_count()) throw std::invalid_argument("spirit_reconstruct: coil count mismatch");
  if (!(options.epsilon >= 0.0)) throw std::invalid_argument("spirit_reconstruct: epsilon must be >= 0");
  if (!(options.tol >= 0.0)) throw std::invalid_argument("spirit_reconstruct: tol must be >= 0");
  const SpiritOperator op(kernel, data.n_kx(), data.n_ky(), options.boundary);
  return options.epsilon == 0.0 ? spirit_cgls(data, op, options) : spirit_fista(data, op, options);
}

ReconResult spirit(const KSpaceData& data, const SpiritSetup& setup, const SpiritOptions& options) {
  const auto acr = acr_extract(data.samples(), data.mask(), setup.acr);
  const auto kernel = spirit_calibrate(acr, setup.kernel_width, setup.kernel_height, setup.lambda);
  return spirit_reconstruct(data, kernel, options);
}

CMatrix autosmash_reconstruct(const KSpaceData& data, const AutoSmashWeights& weights) {
  const Index coils = data.coil_count();
  if (weights.n0.size() != coils) throw std::invalid_argument("autosmash_reconstruct: n0 size mismatch");
  const Index nx = data.n_kx();
  const Index ny = data.n_ky();
  const auto& acq = data.mask().acquired();
  std::vector<char> collected(static_cast<std::size_t>(ny));
  for (Index j = 0; j < ny; ++j) collected[static_cast<std::size_t>(j)] = acq.col(j).all();

  auto combine = [&](const CVector& n, Index line) {
    CVector out = CVector::Zero(nx);
    for (Index c = 0; c < coils; ++c) out += n(c) * data.samples()[static_cast<std::size_t>(c)].col(line);
    return out;
  };

  CMatrix composite(nx, ny);
  for (Index j = 0; j < ny; ++j) {
    if (collected[static_cast<std::size_t>(j)]) {
      composite.col(j) = combine(weights.n0, j);
      continue;
    }
    int m = 1;
    while (m < ny && !collected[static_cast<std::size_t>(resolve_index(j + m, ny, Boundary::periodic))]) ++m;
    const auto it = weights.nm.find(m);
    if (m >= ny || it == weights.nm.end()) {
      throw std::invalid_argument("autosmash_reconstruct: missing weights for shift " + std::to_string(m));
    }
    if (it->second.size() != coils) throw std::invalid_argument("autosmash_reconstruct: weight size mismatch");
    composite.col(j) = combine(it->second, resolve_index(j + m, ny, Boundary::periodic));
  }
  return composite;
}

CoilStack coil_images(const CoilStack& kspace) {
  CoilStack out;
  out.reserve(kspace.size());
  for (const auto& k : kspace) out.push_back(idft2_matrix(k));
  return out;
}

RMatrix rsos_combine(const CoilStack& images) {
  if (images.empty()) throw std::invalid_argument("rsos_combine: no coils");
  RMatrix acc = RMatrix::Zero(images.front().rows(), images.front().cols());
  for (const auto& img : images) {
    if (img.rows() != acc.rows() || img.cols() != acc.cols()) throw std::invalid_argument("rsos_combine: grid mismatch");
    acc += img.cwiseAbs2();
  }
  return acc.cwiseSqrt();
}

double nrmse(const RMatrix& recon, const RMatrix& reference) {
  if (recon.rows() != reference.rows() || recon.cols() != reference.cols()) {
    throw std::invalid_argument("nrmse: dimension mismatch");
  }
  const double ref = reference.norm();
  if (!(ref > 0.0)) throw std::invalid_argument("nrmse: reference has zero norm");
  return (recon - reference).norm() / ref;
}

}  // namespace linpred
