#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "svkit/backend.hpp"

namespace svkit {

/// One operating point of a detection-error tradeoff sweep. A trial is
/// accepted when its score is at or above the threshold, so p_miss is the
/// fraction of targets strictly below it and p_fa the fraction of
/// nontargets at or above it.
struct DetPoint {
  double threshold = 0.0;
  double p_miss = 0.0;
  double p_fa = 0.0;
};

/// Sweep over every distinct score, ascending, plus one sentinel above the
/// maximum so the curve always runs from (p_miss, p_fa) = (0, 1) to (1, 0).
struct DetCurve {
  std::vector<DetPoint> points;
  size_t targets = 0;
  size_t nontargets = 0;
};

/// Requires a fully keyed set with at least one trial of each class.
DetCurve det_curve(const ScoreSet& scores);

/// Equal error rate in percent, linearly interpolated between the two
/// adjacent curve points that bracket the p_miss == p_fa crossing.
double eer(const DetCurve& curve);

/// Mean over P_target in {0.01, 0.005} of the minimum normalized detection
/// cost min_t (p_miss * pt + p_fa * (1 - pt)) / min(pt, 1 - pt). A useless
/// system scores 1, a separable one 0.
double min_dcf16(const DetCurve& curve);

/// Per-class score histograms over equal-width bins spanning the pooled
/// [min, max]. The maximum falls in the last bin; a zero-width range puts
/// everything in the first.
struct ScoreHistogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<size_t> target_counts;
  std::vector<size_t> nontarget_counts;
};
ScoreHistogram score_histogram(const ScoreSet& scores, size_t bins);

/// Inverse standard normal CDF (Acklam's rational approximation, absolute
/// error below 1.2e-9). Domain (0, 1).
double probit(double p);

/// CSV with a "# targets N nontargets M" comment, a header line, then one
/// "threshold,p_miss,p_fa" row per curve point at 17 significant digits.
void export_det_csv(const DetCurve& curve, const std::string& path);
DetCurve import_det_csv(const std::string& path);

/// Standalone SVG of the curve on probit-scaled axes, clamped to the
/// [0.1%, 50%] plotting range.
void export_det_svg(const DetCurve& curve, const std::string& path);

/// One report row per system and condition. Conditions are "pool" plus each
/// language tag present among the trial enrollment ids; sub-conditions
/// missing either trial class are omitted.
struct ReportRow {
  std::string system;
  std::string condition;
  double eer_percent = 0.0;
  double dcf16 = 0.0;
  size_t targets = 0;
  size_t nontargets = 0;
};
std::vector<ReportRow> compute_report(const std::vector<ScoreSet>& systems);

/// Fixed-width text table, EER to two decimals and DCF16 to three.
std::string format_report(const std::vector<ReportRow>& rows);

/// CSV "system,condition,eer_percent,dcf16,targets,nontargets".
void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);

}  // namespace svkit
