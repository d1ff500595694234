#include "lacnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lacnet {
namespace {

void require_same(const Bitmap& a, const Bitmap& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": mask sizes differ");
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

void add_to(PRF& sum, const PRF& x) {
  sum.p += x.p;
  sum.r += x.r;
  sum.f += x.f;
}

PRF mean_of(const PRF& sum, std::size_t n) {
  const double d = static_cast<double>(n);
  return {sum.p / d, sum.r / d, sum.f / d};
}

// Pixels of `from` that have a pixel of `to` within the tolerance disc.
std::size_t count_within(const Bitmap& from, const Bitmap& to, double tolerance) {
  const int rad = static_cast<int>(std::floor(tolerance));
  const double t2 = tolerance * tolerance;
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -rad; dy <= rad; ++dy)
    for (int dx = -rad; dx <= rad; ++dx)
      if (dx * dx + dy * dy <= t2) offsets.emplace_back(dx, dy);
  std::size_t hits = 0;
  for (int y = 0; y < from.height; ++y)
    for (int x = 0; x < from.width; ++x) {
      if (!from.get(x, y)) continue;
      for (const auto& [dx, dy] : offsets)
        if (to.in_bounds(x + dx, y + dy) && to.get(x + dx, y + dy)) {
          ++hits;
          break;
        }
    }
  return hits;
}

}  // namespace

double iou(const Bitmap& a, const Bitmap& b) {
  require_same(a, b, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += a.data[i] & b.data[i];
    uni += a.data[i] | b.data[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

PRF overlap_prf(const Bitmap& pred, const Bitmap& gt) {
  require_same(pred, gt, "overlap_prf");
  const std::size_t inter = intersection_count(pred, gt);
  PRF out{ratio(inter, pred.count()), ratio(inter, gt.count()), 0};
  out.f = harmonic(out.p, out.r);
  return out;
}

Bitmap boundary_pixels(const Bitmap& mask) {
  Bitmap out(mask.width, mask.height);
  auto unset = [&](int x, int y) { return !mask.in_bounds(x, y) || !mask.get(x, y); };
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.get(x, y) && (unset(x - 1, y) || unset(x + 1, y) || unset(x, y - 1) || unset(x, y + 1)))
        out.set(x, y);
  return out;
}

PRF boundary_prf(const Bitmap& pred, const Bitmap& gt, double tolerance) {
  require_same(pred, gt, "boundary_prf");
  if (tolerance < 0) throw std::invalid_argument("boundary_prf: negative tolerance");
  const Bitmap bp = boundary_pixels(pred), bg = boundary_pixels(gt);
  PRF out{ratio(count_within(bp, bg, tolerance), bp.count()), ratio(count_within(bg, bp, tolerance), bg.count()), 0};
  out.f = harmonic(out.p, out.r);
  return out;
}

double default_boundary_tolerance(int width, int height) {
  return std::max(2.0, 0.005 * std::hypot(static_cast<double>(width), static_cast<double>(height)));
}

MatchResult max_score_assignment(const std::vector<std::vector<double>>& scores) {
  const int rows = static_cast<int>(scores.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(scores.front().size());
  for (const auto& r : scores)
    if (static_cast<int>(r.size()) != cols) throw std::invalid_argument("max_score_assignment: ragged matrix");
  MatchResult out;
  const int n = std::max(rows, cols);
  if (n > 0 && cols > 0 && rows > 0) {
    // Square min-cost assignment on cost = -score with zero padding (Kuhn-Munkres, potentials form).
    auto cost = [&](int i, int j) { return (i < rows && j < cols) ? -scores[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] : 0.0; };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1), v(static_cast<std::size_t>(n) + 1);
    std::vector<int> p(static_cast<std::size_t>(n) + 1), way(static_cast<std::size_t>(n) + 1);
    for (int i = 1; i <= n; ++i) {
      p[0] = i;
      int j0 = 0;
      std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
      std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
      do {
        used[static_cast<std::size_t>(j0)] = 1;
        const int i0 = p[static_cast<std::size_t>(j0)];
        double delta = inf;
        int j1 = 0;
        for (int j = 1; j <= n; ++j) {
          if (used[static_cast<std::size_t>(j)]) continue;
          const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
          if (cur < minv[static_cast<std::size_t>(j)]) {
            minv[static_cast<std::size_t>(j)] = cur;
            way[static_cast<std::size_t>(j)] = j0;
          }
          if (minv[static_cast<std::size_t>(j)] < delta) {
            delta = minv[static_cast<std::size_t>(j)];
            j1 = j;
          }
        }
        for (int j = 0; j <= n; ++j) {
          if (used[static_cast<std::size_t>(j)]) {
            u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
            v[static_cast<std::size_t>(j)] -= delta;
          } else {
            minv[static_cast<std::size_t>(j)] -= delta;
          }
        }
        j0 = j1;
      } while (p[static_cast<std::size_t>(j0)] != 0);
      do {
        const int j1 = way[static_cast<std::size_t>(j0)];
        p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
        j0 = j1;
      } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    for (int i = 0; i < rows; ++i) {
      const int j = row_to_col[static_cast<std::size_t>(i)];
      if (j >= 0 && j < cols && scores[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0) out.pairs.emplace_back(i, j);
    }
  }
  std::vector<char> pm(static_cast<std::size_t>(rows), 0), gm(static_cast<std::size_t>(cols), 0);
  for (const auto& [i, j] : out.pairs) {
    pm[static_cast<std::size_t>(i)] = 1;
    gm[static_cast<std::size_t>(j)] = 1;
  }
  for (int i = 0; i < rows; ++i)
    if (!pm[static_cast<std::size_t>(i)]) out.unmatched_preds.push_back(i);
  for (int j = 0; j < cols; ++j)
    if (!gm[static_cast<std::size_t>(j)]) out.unmatched_gts.push_back(j);
  return out;
}

MatchResult hungarian_match(const std::vector<Bitmap>& preds, const std::vector<Bitmap>& gts) {
  std::vector<std::vector<double>> scores(preds.size(), std::vector<double>(gts.size()));
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t j = 0; j < gts.size(); ++j) scores[i][j] = overlap_prf(preds[i], gts[j]).f;
  if (preds.empty() || gts.empty()) {
    // An empty side carries no column count in the score matrix.
    MatchResult out;
    for (std::size_t i = 0; i < preds.size(); ++i) out.unmatched_preds.push_back(static_cast<int>(i));
    for (std::size_t j = 0; j < gts.size(); ++j) out.unmatched_gts.push_back(static_cast<int>(j));
    return out;
  }
  return max_score_assignment(scores);
}

bool predicted_occlusion(const MaskPrediction& pred) {
  const std::size_t a = pred.amodal.count(), v = pred.visible.count();
  if (a == 0) return false;
  // Same V/A < 0.95 rule as the annotations, in integer form.
  return v * 100 < a * 95;
}

double OcclusionMetrics::acc_o() const { return ratio(delta, alpha); }
double OcclusionMetrics::p_o() const { return ratio(delta, beta); }
double OcclusionMetrics::r_o() const { return ratio(delta, gamma); }
double OcclusionMetrics::f_o() const { return harmonic(p_o(), r_o()); }

void MetricsAccumulator::merge(const MetricsAccumulator& o) {
  num_preds += o.num_preds;
  num_gts += o.num_gts;
  matched += o.matched;
  iou_full += o.iou_full;
  occ_pairs += o.occ_pairs;
  iou_occ += o.iou_occ;
  add_to(amodal_overlap, o.amodal_overlap);
  add_to(amodal_boundary, o.amodal_boundary);
  add_to(invisible_overlap, o.invisible_overlap);
  add_to(invisible_boundary, o.invisible_boundary);
  f75 += o.f75;
  occlusion.alpha += o.occlusion.alpha;
  occlusion.beta += o.occlusion.beta;
  occlusion.gamma += o.occlusion.gamma;
  occlusion.delta += o.occlusion.delta;
  amodal_overlap_f.insert(amodal_overlap_f.end(), o.amodal_overlap_f.begin(), o.amodal_overlap_f.end());
}

MetricsAccumulator evaluate_scene(const std::vector<MaskPrediction>& preds, const std::vector<InstanceAnnotation>& gts,
                                  double boundary_tolerance) {
  MetricsAccumulator acc;
  acc.num_preds = preds.size();
  acc.num_gts = gts.size();
  std::vector<Bitmap> pa, ga;
  for (const auto& p : preds) pa.push_back(p.amodal);
  for (const auto& g : gts) ga.push_back(g.amodal_mask);
  const MatchResult match = hungarian_match(pa, ga);
  for (const auto& [i, j] : match.pairs) {
    const MaskPrediction& p = preds[static_cast<std::size_t>(i)];
    const InstanceAnnotation& g = gts[static_cast<std::size_t>(j)];
    require_same(p.visible, g.visible_mask, "evaluate_scene");
    ++acc.matched;
    acc.iou_full += iou(p.amodal, g.amodal_mask);
    const PRF ov = overlap_prf(p.amodal, g.amodal_mask);
    add_to(acc.amodal_overlap, ov);
    add_to(acc.amodal_boundary, boundary_prf(p.amodal, g.amodal_mask, boundary_tolerance));
    acc.amodal_overlap_f.push_back(ov.f);
    if (ov.f > 0.75) ++acc.f75;
    if (!g.occluded_mask.empty()) {
      const Bitmap pred_occ = subtract(p.amodal, p.visible);
      ++acc.occ_pairs;
      acc.iou_occ += iou(pred_occ, g.occluded_mask);
      add_to(acc.invisible_overlap, overlap_prf(pred_occ, g.occluded_mask));
      add_to(acc.invisible_boundary, boundary_prf(pred_occ, g.occluded_mask, boundary_tolerance));
    }
    const bool po = predicted_occlusion(p), go = g.occluded_flag;
    ++acc.occlusion.alpha;
    acc.occlusion.beta += po;
    acc.occlusion.gamma += go;
    acc.occlusion.delta += po && go;
  }
  return acc;
}

MetricsReport make_report(const MetricsAccumulator& acc) {
  MetricsReport r;
  r.num_preds = acc.num_preds;
  r.num_gts = acc.num_gts;
  r.matched = acc.matched;
  r.occ_pairs = acc.occ_pairs;
  r.occlusion = acc.occlusion;
  if (acc.matched > 0) {
    const double m = static_cast<double>(acc.matched);
    r.miou_full = acc.iou_full / m;
    r.amodal_overlap = mean_of(acc.amodal_overlap, acc.matched);
    r.amodal_boundary = mean_of(acc.amodal_boundary, acc.matched);
    r.f_at_075 = 100.0 * static_cast<double>(acc.f75) / m;
    r.acc_o = acc.occlusion.acc_o();
    r.p_o = acc.occlusion.p_o();
    r.r_o = acc.occlusion.r_o();
    r.f_o = acc.occlusion.f_o();
  }
  if (acc.occ_pairs > 0) {
    r.miou_occ = acc.iou_occ / static_cast<double>(acc.occ_pairs);
    r.invisible_overlap = mean_of(acc.invisible_overlap, acc.occ_pairs);
    r.invisible_boundary = mean_of(acc.invisible_boundary, acc.occ_pairs);
  }
  return r;
}

MetricsReport evaluate_scene_report(const std::vector<MaskPrediction>& preds,
                                    const std::vector<InstanceAnnotation>& gts, double boundary_tolerance) {
  return make_report(evaluate_scene(preds, gts, boundary_tolerance));
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json("undefined"); }

nlohmann::json opt(const std::optional<PRF>& v) {
  if (!v) return "undefined";
  return {{"P", v->p}, {"R", v->r}, {"F", v->f}};
}

std::string cell(const std::optional<double>& v, double scale) {
  if (!v) return "undef";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * scale);
  return buf;
}

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  return {{"num_preds", r.num_preds},
          {"num_gts", r.num_gts},
          {"matched", r.matched},
          {"occluded_pairs", r.occ_pairs},
          {"miou_full", opt(r.miou_full)},
          {"miou_occ", opt(r.miou_occ)},
          {"amodal_overlap", opt(r.amodal_overlap)},
          {"amodal_boundary", opt(r.amodal_boundary)},
          {"invisible_overlap", opt(r.invisible_overlap)},
          {"invisible_boundary", opt(r.invisible_boundary)},
          {"f_at_0.75", opt(r.f_at_075)},
          {"occlusion",
           {{"alpha", r.occlusion.alpha},
            {"beta", r.occlusion.beta},
            {"gamma", r.occlusion.gamma},
            {"delta", r.occlusion.delta},
            {"acc_o", opt(r.acc_o)},
            {"p_o", opt(r.p_o)},
            {"r_o", opt(r.r_o)},
            {"f_o", opt(r.f_o)}}}};
}

std::string format_table(const MetricsReport& r, const std::string& title) {
  auto prf_cells = [](const std::optional<PRF>& v) {
    std::vector<std::string> c;
    for (auto get : {&PRF::p, &PRF::r, &PRF::f}) c.push_back(v ? cell((*v).*get, 100) : "undef");
    return c;
  };
  std::vector<std::string> head{"Mask", "OV-P", "OV-R", "OV-F", "BO-P", "BO-R", "BO-F", "F@.75", "FO", "ACCO", "mIoU"};
  std::vector<std::vector<std::string>> rows;
  {
    auto ov = prf_cells(r.amodal_overlap), bo = prf_cells(r.amodal_boundary);
    std::vector<std::string> row{"amodal"};
    row.insert(row.end(), ov.begin(), ov.end());
    row.insert(row.end(), bo.begin(), bo.end());
    row.push_back(cell(r.f_at_075, 1));
    row.push_back(cell(r.f_o, 100));
    row.push_back(cell(r.acc_o, 100));
    row.push_back(cell(r.miou_full, 100));
    rows.push_back(row);
  }
  {
    auto ov = prf_cells(r.invisible_overlap), bo = prf_cells(r.invisible_boundary);
    std::vector<std::string> row{"invisible"};
    row.insert(row.end(), ov.begin(), ov.end());
    row.insert(row.end(), bo.begin(), bo.end());
    row.insert(row.end(), {"-", "-", "-"});
    row.push_back(cell(r.miou_occ, 100));
    rows.push_back(row);
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t i = 0; i < head.size(); ++i) {
    width[i] = head[i].size();
    for (const auto& row : rows) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream os;
  os << title << "  (matched " << r.matched << " of " << r.num_gts << " GT, " << r.num_preds << " predictions)\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string pad(width[i] - cells[i].size(), ' ');
      os << (i == 0 ? cells[i] + pad : pad + cells[i]) << (i + 1 < cells.size() ? "  " : "\n");
    }
  };
  line(head);
  for (const auto& row : rows) line(row);
  return os.str();
}

}  // namespace lacnet
