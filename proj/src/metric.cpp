#include "linpred/metric.hpp"

#include "linpred/calibration.hpp"
#include "linpred/kspace.hpp"
#include "linpred/reconstruction.hpp"

#include <cmath>
#include <stdexcept>

namespace linpred {

const char* to_string(ErrorLabel label) { return label == ErrorLabel::large ? "large" : "small"; }

ErrorLabel classify_error(double error, double threshold) {
  return error > threshold ? ErrorLabel::large : ErrorLabel::small;
}

AccuracyReport classify_direction(AccuracyReport report, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("classify_direction: threshold must be positive");
  report.threshold = threshold;
  report.label_horizontal = classify_error(report.err_horizontal, threshold);
  report.label_vertical = classify_error(report.err_vertical, threshold);
  return report;
}

AccuracyReport directional_metric(const CoilStack& acr, Index kernel_width, Index kernel_height, double threshold) {
  if (acr.empty()) throw std::invalid_argument("directional_metric: no coils");
  const auto kernels = metric_test_kernels(kernel_width, kernel_height);
  if (acr.front().rows() < kernel_width || acr.front().cols() < kernel_height) {
    throw std::invalid_argument("directional_metric: ACR too small for the kernel");
  }
  AccuracyReport report;
  report.kernel_width = kernel_width;
  report.kernel_height = kernel_height;
  const auto h = assemble_grappa_system(acr, kernels.horizontal_pattern());
  const auto v = assemble_grappa_system(acr, kernels.vertical_pattern());
  report.err_horizontal = solve_weights(h.source, h.target, 0.0).residual_rel;
  report.err_vertical = solve_weights(v.source, v.target, 0.0).residual_rel;
  return classify_direction(report, threshold);
}

bool metric_consistent(const AccuracyReport& report, double nrmse_horizontal, double nrmse_vertical,
                       double tie_tolerance, double quality_cutoff) {
  const bool tie = std::abs(report.err_vertical - report.err_horizontal) <= tie_tolerance;
  if (!tie && (report.err_vertical > report.err_horizontal) == (nrmse_vertical > nrmse_horizontal)) return true;
  if (report.label_horizontal != report.label_vertical) return false;
  const bool poor = report.label_horizontal == ErrorLabel::large;
  return (nrmse_horizontal > quality_cutoff) == poor && (nrmse_vertical > quality_cutoff) == poor;
}

ConsistencyRecord metric_predicts_quality(const CoilStack& full_kspace, const QualityCheckOptions& options) {
  if (full_kspace.empty()) throw std::invalid_argument("metric_predicts_quality: no coils");
  if (options.reduction < 2) throw std::invalid_argument("metric_predicts_quality: reduction factor must be >= 2");
  const Index nx = full_kspace.front().rows();
  const Index ny = full_kspace.front().cols();
  ConsistencyRecord rec;
  rec.report = directional_metric(acr_extract(full_kspace, options.acr), options.kernel_width, options.kernel_height,
                                  options.threshold);

  const RMatrix reference = rsos_combine(coil_images(full_kspace));
  GrappaOptions g;
  g.acr = options.acr;
  g.threshold = {static_cast<int>(options.kernel_width / 2), static_cast<int>(options.kernel_height / 2)};
  g.lambda = options.lambda;
  const auto horizontal = KSpaceData::retrospective(full_kspace, uniform_mask(nx, ny, options.reduction, 1, options.acr));
  const auto vertical = KSpaceData::retrospective(full_kspace, uniform_mask(nx, ny, 1, options.reduction, options.acr));
  rec.nrmse_horizontal = nrmse(grappa(horizontal, g).image, reference);
  rec.nrmse_vertical = nrmse(grappa(vertical, g).image, reference);
  rec.consistent = metric_consistent(rec.report, rec.nrmse_horizontal, rec.nrmse_vertical, options.tie_tolerance,
                                     options.quality_cutoff);
  return rec;
}

}  // namespace linpred
