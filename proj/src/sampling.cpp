#include "linpred/sampling.hpp"

#include <map>
#include <stdexcept>

namespace linpred {

namespace {

void check_acr_fits(Index n_kx, Index n_ky, AcrSize acr) {
  if (acr.width < 1 || acr.height < 1) throw std::invalid_argument("ACR dimensions must be positive");
  if (acr.width > n_kx || acr.height > n_ky) throw std::invalid_argument("ACR larger than the k-space grid");
}

}  // namespace

SamplingMask::SamplingMask(BoolMatrix acquired, std::optional<AcrSize> acr)
    : acquired_(std::move(acquired)), acr_(acr) {
  if (acquired_.size() == 0) throw std::invalid_argument("SamplingMask: empty grid");
  if (!acquired_.any()) throw std::invalid_argument("SamplingMask: no acquired samples");
  if (acr_) {
    check_acr_fits(n_kx(), n_ky(), *acr_);
    if (!block_acquired(*acr_)) throw std::invalid_argument("SamplingMask: ACR is not fully acquired");
  }
}

SamplingMask SamplingMask::full(Index n_kx, Index n_ky) {
  return SamplingMask(BoolMatrix::Constant(n_kx, n_ky, true));
}

bool SamplingMask::block_acquired(AcrSize block) const {
  if (block.width > n_kx() || block.height > n_ky()) return false;
  const Index x0 = centered_block_start(n_kx(), block.width);
  const Index y0 = centered_block_start(n_ky(), block.height);
  return acquired_.block(x0, y0, block.width, block.height).all();
}

SamplingMask uniform_mask(Index n_kx, Index n_ky, int rx, int ry, std::optional<AcrSize> acr, Offset offset) {
  if (n_kx < 1 || n_ky < 1) throw std::invalid_argument("uniform_mask: empty grid");
  if (rx < 1 || ry < 1) throw std::invalid_argument("uniform_mask: reduction factors must be >= 1");
  BoolMatrix acq(n_kx, n_ky);
  for (Index j = 0; j < n_ky; ++j) {
    const bool row_on = resolve_index(j - offset.v, ry, Boundary::periodic) == 0;
    for (Index i = 0; i < n_kx; ++i) {
      acq(i, j) = row_on && resolve_index(i - offset.u, rx, Boundary::periodic) == 0;
    }
  }
  if (acr) {
    check_acr_fits(n_kx, n_ky, *acr);
    acq.block(centered_block_start(n_kx, acr->width), centered_block_start(n_ky, acr->height), acr->width,
              acr->height) = true;
  }
  return SamplingMask(std::move(acq), acr);
}

SamplingMask uniform_mask(Index n_kx, Index n_ky, int rx, int ry, std::optional<AcrSize> acr) {
  if (rx < 1 || ry < 1) throw std::invalid_argument("uniform_mask: reduction factors must be >= 1");
  const Offset dc{static_cast<int>((n_kx / 2) % rx), static_cast<int>((n_ky / 2) % ry)};
  return uniform_mask(n_kx, n_ky, rx, ry, acr, dc);
}

std::vector<Offset> neighbour_displacements(const SamplingMask& mask, GridIndex at, Threshold threshold,
                                            Boundary boundary) {
  std::vector<Offset> out;
  for (int u = -threshold.tx; u <= threshold.tx; ++u) {
    const Index x = resolve_index(at.x + u, mask.n_kx(), boundary);
    if (x < 0) continue;
    for (int v = -threshold.ty; v <= threshold.ty; ++v) {
      if (u == 0 && v == 0) continue;
      const Index y = resolve_index(at.y + v, mask.n_ky(), boundary);
      if (y < 0) continue;
      if (mask.acquired(x, y)) out.push_back({u, v});
    }
  }
  return out;
}

std::vector<KernelPattern> enumerate_kernels(const SamplingMask& mask, Threshold threshold, Boundary boundary) {
  if (threshold.tx < 0 || threshold.ty < 0) throw std::invalid_argument("enumerate_kernels: negative threshold");
  std::vector<KernelPattern> kernels;
  std::map<std::vector<Offset>, std::size_t> index_of;
  for (Index j = 0; j < mask.n_ky(); ++j) {
    for (Index i = 0; i < mask.n_kx(); ++i) {
      if (mask.acquired(i, j)) continue;
      auto disp = neighbour_displacements(mask, {i, j}, threshold, boundary);
      auto [it, inserted] = index_of.try_emplace(disp, kernels.size());
      if (inserted) kernels.push_back(KernelPattern{std::move(disp), {}});
      kernels[it->second].targets.push_back({i, j});
    }
  }
  return kernels;
}

CoilStack acr_extract(const CoilStack& kspace, const SamplingMask& mask, AcrSize acr) {
  if (kspace.empty()) throw std::invalid_argument("acr_extract: no coils");
  if (kspace.front().rows() != mask.n_kx() || kspace.front().cols() != mask.n_ky()) {
    throw std::invalid_argument("acr_extract: mask does not match k-space grid");
  }
  check_acr_fits(mask.n_kx(), mask.n_ky(), acr);
  if (!mask.block_acquired(acr)) throw std::invalid_argument("acr_extract: ACR not fully acquired");
  return acr_extract(kspace, acr);
}

CoilStack acr_extract(const CoilStack& kspace, AcrSize acr) {
  if (kspace.empty()) throw std::invalid_argument("acr_extract: no coils");
  const Index nx = kspace.front().rows();
  const Index ny = kspace.front().cols();
  check_acr_fits(nx, ny, acr);
  const Index x0 = centered_block_start(nx, acr.width);
  const Index y0 = centered_block_start(ny, acr.height);
  CoilStack out;
  out.reserve(kspace.size());
  for (const auto& coil : kspace) {
    if (coil.rows() != nx || coil.cols() != ny) throw std::invalid_argument("acr_extract: coils differ in shape");
    out.emplace_back(coil.block(x0, y0, acr.width, acr.height));
  }
  return out;
}

}  // namespace linpred
