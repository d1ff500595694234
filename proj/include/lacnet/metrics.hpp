#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lacnet/bitmap.hpp"
#include "lacnet/scene.hpp"

namespace lacnet {

struct PRF {
  double p = 0, r = 0, f = 0;
};

/// |a∩b| / |a∪b|, 1 when both are empty.
double iou(const Bitmap& a, const Bitmap& b);
PRF overlap_prf(const Bitmap& pred, const Bitmap& gt);
/// Set pixels with an unset 4-neighbour; pixels outside the image count as unset.
Bitmap boundary_pixels(const Bitmap& mask);
/// Boundary pixels of one mask within `tolerance` (Euclidean) of the other's boundary.
PRF boundary_prf(const Bitmap& pred, const Bitmap& gt, double tolerance);
/// max(2, 0.5% of the image diagonal).
double default_boundary_tolerance(int width, int height);

struct MatchResult {
  std::vector<std::pair<int, int>> pairs;  // (pred, gt), sorted by pred index
  std::vector<int> unmatched_preds, unmatched_gts;
};

/// Maximum-total-score partial assignment on a rows × cols score matrix (scores >= 0).
/// Pairs with score 0 are left unmatched.
MatchResult max_score_assignment(const std::vector<std::vector<double>>& scores);
/// Matches on amodal Overlap-F.
MatchResult hungarian_match(const std::vector<Bitmap>& preds, const std::vector<Bitmap>& gts);

struct MaskPrediction {
  Bitmap amodal;
  Bitmap visible;
};

/// Predicted occlusion: |visible|/|amodal| < 0.95 with the predicted masks.
bool predicted_occlusion(const MaskPrediction& pred);

struct OcclusionMetrics {
  std::size_t alpha = 0, beta = 0, gamma = 0, delta = 0;
  double acc_o() const;
  double p_o() const;
  double r_o() const;
  double f_o() const;
};

/// Running sums over matched pairs; scenes are merged by adding counts and sums.
struct MetricsAccumulator {
  std::size_t num_preds = 0, num_gts = 0, matched = 0;
  double iou_full = 0;
  std::size_t occ_pairs = 0;  // matched pairs with a nonempty GT occluded region
  double iou_occ = 0;
  PRF amodal_overlap, amodal_boundary;
  PRF invisible_overlap, invisible_boundary;  // over occ_pairs
  std::size_t f75 = 0;
  OcclusionMetrics occlusion;
  std::vector<double> amodal_overlap_f;  // per matched pair, in evaluation order

  void merge(const MetricsAccumulator& other);
};

/// Means over the accumulated pairs; nullopt where the denominator is zero.
struct MetricsReport {
  std::size_t num_preds = 0, num_gts = 0, matched = 0, occ_pairs = 0;
  std::optional<double> miou_full, miou_occ;
  std::optional<PRF> amodal_overlap, amodal_boundary, invisible_overlap, invisible_boundary;
  std::optional<double> f_at_075;  // percent
  OcclusionMetrics occlusion;
  std::optional<double> acc_o, p_o, r_o, f_o;
};

MetricsAccumulator evaluate_scene(const std::vector<MaskPrediction>& preds, const std::vector<InstanceAnnotation>& gts,
                                  double boundary_tolerance);
MetricsReport make_report(const MetricsAccumulator& acc);
/// Convenience: evaluate_scene + make_report.
MetricsReport evaluate_scene_report(const std::vector<MaskPrediction>& preds,
                                    const std::vector<InstanceAnnotation>& gts, double boundary_tolerance);

/// Undefined values are written as the string "undefined".
nlohmann::json to_json(const MetricsReport& r);
/// Aligned text table with columns OV (P/R/F), BO (P/R/F), F@.75, FO, ACCO plus mIoU.
std::string format_table(const MetricsReport& r, const std::string& title);

}  // namespace lacnet
