#include "svkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "svkit/corpus.hpp"
#include "svkit/errors.hpp"

namespace svkit {

namespace {

using E = ErrorCategory;

void require_keyed(const ScoreSet& scores, const char* op) {
  if (scores.trials.empty())
    throw Error(E::kMetric, std::string(op) + ": empty score set");
  for (const auto& t : scores.trials)
    if (!t.keyed)
      throw Error(E::kMetric, std::string(op) + ": trial " + t.enroll + " " + t.test +
                                  " has no target/nontarget key");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

DetCurve det_curve(const ScoreSet& scores) {
  require_keyed(scores, "det_curve");
  std::vector<std::pair<double, bool>> ranked;  // (score, is_target)
  ranked.reserve(scores.trials.size());
  size_t targets = 0, nontargets = 0;
  for (const auto& t : scores.trials) {
    if (!std::isfinite(t.score))
      throw Error(E::kMetric, "det_curve: non-finite score for trial " + t.enroll + " " + t.test);
    ranked.emplace_back(t.score, t.target);
    (t.target ? targets : nontargets) += 1;
  }
  if (targets == 0 || nontargets == 0)
    throw Error(E::kMetric, "det_curve: need at least one target and one nontarget trial");
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  DetCurve curve;
  curve.targets = targets;
  curve.nontargets = nontargets;
  const double nt = static_cast<double>(targets);
  const double nn = static_cast<double>(nontargets);
  size_t targets_below = 0, nontargets_below = 0;
  size_t i = 0;
  while (i < ranked.size()) {
    const double threshold = ranked[i].first;
    curve.points.push_back({threshold, static_cast<double>(targets_below) / nt,
                            static_cast<double>(nontargets - nontargets_below) / nn});
    while (i < ranked.size() && ranked[i].first == threshold) {
      (ranked[i].second ? targets_below : nontargets_below) += 1;
      ++i;
    }
  }
  curve.points.push_back({ranked.back().first + 1.0, 1.0, 0.0});
  return curve;
}

double eer(const DetCurve& curve) {
  if (curve.points.size() < 2)
    throw Error(E::kMetric, "eer: curve must hold at least two points");
  const auto& p = curve.points;
  for (size_t i = 0; i < p.size(); ++i) {
    const double f = p[i].p_miss - p[i].p_fa;
    if (f < 0.0) continue;
    if (f == 0.0) return 100.0 * p[i].p_miss;
    // first sign change; interpolate along the previous segment
    const double f0 = p[i - 1].p_miss - p[i - 1].p_fa;
    const double alpha = -f0 / (f - f0);
    return 100.0 * (p[i - 1].p_miss + alpha * (p[i].p_miss - p[i - 1].p_miss));
  }
  throw Error(E::kMetric, "eer: curve never crosses p_miss == p_fa");
}

double min_dcf16(const DetCurve& curve) {
  if (curve.points.empty()) throw Error(E::kMetric, "min_dcf16: empty curve");
  double sum = 0.0;
  for (const double pt : {0.01, 0.005}) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : curve.points) {
      const double cost = (p.p_miss * pt + p.p_fa * (1.0 - pt)) / std::min(pt, 1.0 - pt);
      best = std::min(best, cost);
    }
    sum += best;
  }
  return sum / 2.0;
}

ScoreHistogram score_histogram(const ScoreSet& scores, size_t bins) {
  require_keyed(scores, "score_histogram");
  if (bins == 0) throw Error(E::kContract, "score_histogram: bins must be positive");
  ScoreHistogram h;
  h.lo = scores.trials.front().score;
  h.hi = h.lo;
  for (const auto& t : scores.trials) {
    h.lo = std::min(h.lo, t.score);
    h.hi = std::max(h.hi, t.score);
  }
  h.target_counts.assign(bins, 0);
  h.nontarget_counts.assign(bins, 0);
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  for (const auto& t : scores.trials) {
    size_t idx = 0;
    if (width > 0.0)
      idx = std::min(bins - 1, static_cast<size_t>((t.score - h.lo) / width));
    (t.target ? h.target_counts : h.nontarget_counts)[idx] += 1;
  }
  return h;
}

double probit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(E::kDomain, "probit: p must lie in (0, 1)");
  // Acklam's rational approximation with the standard tail split.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

void export_det_csv(const DetCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(E::kIo, "cannot open " + path + " for writing");
  out << "# targets " << curve.targets << " nontargets " << curve.nontargets << "\n";
  out << "threshold,p_miss,p_fa\n";
  for (const auto& p : curve.points)
    out << format_double(p.threshold) << ',' << format_double(p.p_miss) << ','
        << format_double(p.p_fa) << "\n";
  if (!out.flush()) throw Error(E::kIo, "failed to write " + path);
}

DetCurve import_det_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(E::kIo, "cannot open " + path);
  DetCurve curve;
  std::string line;
  size_t lineno = 0;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# targets %zu nontargets %zu", &curve.targets,
                  &curve.nontargets) != 2)
    throw Error(E::kIo, path + ":1: expected the targets/nontargets comment");
  ++lineno;
  if (!std::getline(in, line) || line != "threshold,p_miss,p_fa")
    throw Error(E::kIo, path + ":2: expected the DET CSV header");
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    DetPoint p;
    char trailing;
    const int got = std::sscanf(line.c_str(), "%lf,%lf,%lf %c", &p.threshold, &p.p_miss, &p.p_fa,
                                &trailing);
    if (got != 3)
      throw Error(E::kIo, path + ":" + std::to_string(lineno) + ": malformed DET row");
    curve.points.push_back(p);
  }
  if (curve.points.empty())
    throw Error(E::kIo, path + ": DET file holds no curve points");
  return curve;
}

void export_det_svg(const DetCurve& curve, const std::string& path) {
  if (curve.points.empty()) throw Error(E::kMetric, "export_det_svg: empty curve");
  const double lo = 0.001, hi = 0.5;  // plotting range on both axes
  const double glo = probit(lo), ghi = probit(hi);
  const double size = 640.0, margin = 80.0;
  const double span = size - 2.0 * margin;
  const auto xpos = [&](double p) {
    const double g = probit(std::clamp(p, lo, hi));
    return margin + span * (g - glo) / (ghi - glo);
  };
  const auto ypos = [&](double p) {
    const double g = probit(std::clamp(p, lo, hi));
    return size - margin - span * (g - glo) / (ghi - glo);
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
         "viewBox=\"0 0 640 640\">\n";
  svg << "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"640\" fill=\"white\"/>\n";
  svg << "  <rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << span
      << "\" height=\"" << span << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double ticks[] = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4};
  char label[32];
  for (const double t : ticks) {
    std::snprintf(label, sizeof(label), "%g", 100.0 * t);
    const double x = xpos(t), y = ypos(t);
    svg << "  <line x1=\"" << x << "\" y1=\"" << margin << "\" x2=\"" << x << "\" y2=\""
        << size - margin << "\" stroke=\"#dddddd\"/>\n";
    svg << "  <line x1=\"" << margin << "\" y1=\"" << y << "\" x2=\"" << size - margin
        << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
    svg << "  <text x=\"" << x << "\" y=\"" << size - margin + 20
        << "\" font-size=\"12\" text-anchor=\"middle\">" << label << "</text>\n";
    svg << "  <text x=\"" << margin - 8 << "\" y=\"" << y + 4
        << "\" font-size=\"12\" text-anchor=\"end\">" << label << "</text>\n";
  }
  svg << "  <text x=\"" << size / 2 << "\" y=\"" << size - 24
      << "\" font-size=\"14\" text-anchor=\"middle\">false alarm probability (%)</text>\n";
  svg << "  <text x=\"20\" y=\"" << size / 2
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << size / 2
      << ")\">miss probability (%)</text>\n";
  svg << "  <polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i < curve.points.size(); ++i) {
    if (i) svg << ' ';
    svg << xpos(curve.points[i].p_fa) << ',' << ypos(curve.points[i].p_miss);
  }
  svg << "\"/>\n</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(E::kIo, "cannot open " + path + " for writing");
  out << svg.str();
  if (!out.flush()) throw Error(E::kIo, "failed to write " + path);
}

std::vector<ReportRow> compute_report(const std::vector<ScoreSet>& systems) {
  std::vector<ReportRow> rows;
  for (const auto& set : systems) {
    require_keyed(set, "compute_report");
    std::vector<std::string> conditions = {"pool"};
    for (const auto& t : set.trials) {
      const std::string lang = language_of(t.enroll);
      if (lang != "pool" &&
          std::find(conditions.begin(), conditions.end(), lang) == conditions.end())
        conditions.push_back(lang);
    }
    std::sort(conditions.begin() + 1, conditions.end());
    for (const auto& cond : conditions) {
      ScoreSet subset;
      subset.system = set.system;
      for (const auto& t : set.trials)
        if (cond == "pool" || language_of(t.enroll) == cond) subset.trials.push_back(t);
      size_t targets = 0, nontargets = 0;
      for (const auto& t : subset.trials) (t.target ? targets : nontargets) += 1;
      if (cond != "pool" && (targets == 0 || nontargets == 0)) continue;
      const auto curve = det_curve(subset);
      rows.push_back(
          {set.system, cond, eer(curve), min_dcf16(curve), curve.targets, curve.nontargets});
    }
  }
  return rows;
}

std::string format_report(const std::vector<ReportRow>& rows) {
  size_t system_width = 6;
  size_t cond_width = 9;
  for (const auto& r : rows) {
    system_width = std::max(system_width, r.system.size());
    cond_width = std::max(cond_width, r.condition.size());
  }
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-*s  %-*s  %8s  %8s  %7s  %10s\n",
                static_cast<int>(system_width), "system", static_cast<int>(cond_width),
                "condition", "eer_pct", "dcf16", "targets", "nontargets");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-*s  %-*s  %8.2f  %8.3f  %7zu  %10zu\n",
                  static_cast<int>(system_width), r.system.c_str(), static_cast<int>(cond_width),
                  r.condition.c_str(), r.eer_percent, r.dcf16, r.targets, r.nontargets);
    out << buf;
  }
  return out.str();
}

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(E::kIo, "cannot open " + path + " for writing");
  out << "system,condition,eer_percent,dcf16,targets,nontargets\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", r.eer_percent, r.dcf16);
    out << r.system << ',' << r.condition << ',' << buf << ',' << r.targets << ','
        << r.nontargets << "\n";
  }
  if (!out.flush()) throw Error(E::kIo, "failed to write " + path);
}

}  // namespace svkit
