#include "linpred/kspace.hpp"

#include <stdexcept>
#include <string>

namespace linpred {

void require_shape(const CoilStack& stack, Index n_kx, Index n_ky, const char* what) {
  if (stack.empty()) throw std::invalid_argument(std::string(what) + ": no coils");
  for (const auto& c : stack) {
    if (c.rows() != n_kx || c.cols() != n_ky) throw std::invalid_argument(std::string(what) + ": grid mismatch");
  }
}

KSpaceData::KSpaceData(CoilStack samples, SamplingMask mask) : samples_(std::move(samples)), mask_(std::move(mask)) {
  require_shape(samples_, mask_.n_kx(), mask_.n_ky(), "KSpaceData");
  for (const auto& c : samples_) {
    for (Index j = 0; j < c.cols(); ++j) {
      for (Index i = 0; i < c.rows(); ++i) {
        if (!mask_.acquired(i, j) && c(i, j) != Complex{}) {
          throw std::invalid_argument("KSpaceData: unacquired sample is nonzero");
        }
      }
    }
  }
}

KSpaceData KSpaceData::fully_sampled(CoilStack samples) {
  if (samples.empty()) throw std::invalid_argument("KSpaceData: no coils");
  auto mask = SamplingMask::full(samples.front().rows(), samples.front().cols());
  return KSpaceData(std::move(samples), std::move(mask));
}

KSpaceData KSpaceData::retrospective(const CoilStack& full, SamplingMask mask) {
  require_shape(full, mask.n_kx(), mask.n_ky(), "KSpaceData::retrospective");
  CoilStack out = full;
  for (auto& c : out) c = mask.acquired().select(c.array(), Complex{}).matrix();
  return KSpaceData(std::move(out), std::move(mask));
}

}  // namespace linpred
