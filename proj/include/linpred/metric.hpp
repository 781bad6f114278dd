#pragma once

#include "linpred/sampling.hpp"
#include "linpred/types.hpp"

#include <optional>

namespace linpred {

enum class ErrorLabel { small, large };

/// Relative-error level above which an undersampling direction is unsafe.
inline constexpr double kDefaultErrorThreshold = 0.4;

const char* to_string(ErrorLabel label);

struct AccuracyReport {
  Index kernel_width = 0;
  Index kernel_height = 0;
  double err_horizontal = 0.0;  ///< residual of the 1 x k_w test kernel (predicts along k_x)
  double err_vertical = 0.0;    ///< residual of the k_h x 1 test kernel (predicts along k_y)
  ErrorLabel label_horizontal = ErrorLabel::small;
  ErrorLabel label_vertical = ErrorLabel::small;
  double threshold = kDefaultErrorThreshold;
};

/// large iff error > threshold.
ErrorLabel classify_error(double error, double threshold);

/// Relabels both directions against `threshold` (> 0).
AccuracyReport classify_direction(AccuracyReport report, double threshold = kDefaultErrorThreshold);

/// Solves the unregularized calibration problem for the horizontal and
/// vertical test kernels on a fully sampled ACR and reports
/// ||S N* - s_acr||_F / ||s_acr||_F for each.
AccuracyReport directional_metric(const CoilStack& acr, Index kernel_width, Index kernel_height,
                                  double threshold = kDefaultErrorThreshold);

struct QualityCheckOptions {
  Index kernel_width = 3;
  Index kernel_height = 3;
  int reduction = 2;
  AcrSize acr{31, 31};
  double threshold = kDefaultErrorThreshold;
  /// Metric errors closer than this are a tie: neither direction is preferred.
  double tie_tolerance = 1e-6;
  /// Image NRMSE separating good (small error) from poor (large error)
  /// reconstructions.
  double quality_cutoff = 0.05;
  std::optional<double> lambda;
};

struct ConsistencyRecord {
  AccuracyReport report;
  double nrmse_horizontal = 0.0;  ///< GRAPPA with R along k_x
  double nrmse_vertical = 0.0;    ///< GRAPPA with R along k_y
  bool consistent = false;
};

/// Agreement between metric and reconstruction quality. Either the metric
/// ranking (not a tie) matches the NRMSE ranking, or both labels are equal and
/// each NRMSE sits on the side of `quality_cutoff` the label predicts.
bool metric_consistent(const AccuracyReport& report, double nrmse_horizontal, double nrmse_vertical,
                       double tie_tolerance, double quality_cutoff);

/// Runs the metric on the fully sampled data's ACR, reconstructs with
/// horizontal-only and vertical-only undersampling, and compares.
ConsistencyRecord metric_predicts_quality(const CoilStack& full_kspace, const QualityCheckOptions& options = {});

}  // namespace linpred
