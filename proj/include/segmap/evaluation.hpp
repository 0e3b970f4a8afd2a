#pragma once

#include "segmap/alignment.hpp"
#include "segmap/simulator.hpp"
#include "segmap/vehicle_map.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace segmap {

/// Ground-plane corners of a camera view, in image-corner winding order.
using FootprintQuad = std::array<Vec2, 4>;

class HorizonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingGroundTruth : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

FootprintQuad footprint(const Pose& pose, const CameraIntrinsics& intr, double ground_z);

/// Signed shoelace area (positive for counter-clockwise).
double polygon_area(std::span<const Vec2> poly);

/// Intersection of two convex polygons (Sutherland-Hodgman).
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

double quad_iou(const FootprintQuad& a, const FootprintQuad& b);

enum class PairClass { positive, ignore, negative };
const char* to_string(PairClass c);

struct LabelThresholds {
  double positive = 0.333;  ///< positive when iou is above this
  double negative = 0.01;   ///< negative when iou is at or below this
};

PairClass classify_iou(double iou, const LabelThresholds& t = {});

struct PairLabel {
  int offset_i = 0;
  int offset_j = 0;
  double iou = 0.0;
  PairClass label = PairClass::negative;
};

/// Subsampling step so that ceil(a/k) * ceil(b/k) <= max_evals.
std::size_t interval_step(std::size_t a, std::size_t b, std::size_t max_evals = 100);

/// Labels every window pair of the two maps by the best footprint overlap
/// of the keyframes their objects were observed from.
std::vector<PairLabel> label_pairs(const GroundTruth& truth_i, const GroundTruth& truth_j,
                                   const VehicleMap& map_i, const VehicleMap& map_j, int WL,
                                   int SL, double ground_z, const LabelThresholds& thresholds = {},
                                   int workers = 1);

struct PRPoint {
  int threshold = 0;
  double precision = 1.0;
  double recall = 0.0;
  double f1 = 0.0;
  int tp = 0;
  int fp = 0;
  int positives = 0;
};

struct PRCurve {
  std::vector<PRPoint> points;  ///< increasing threshold
  double average_f1 = 0.0;
  int precision_threshold = 0;  ///< where precision was tuned to the target
  int recall_threshold = 0;     ///< where recall was tuned to the target

  /// Best recall among points with precision >= min_precision (0 if none).
  double recall_at_precision(double min_precision) const;
};

/// Sweeps the acceptance threshold. A pair is predicted when its association
/// count exceeds the threshold and it passed the angular gate.
PRCurve precision_recall(std::span<const AlignmentHypothesis> hypotheses,
                         std::span<const PairLabel> labels, std::vector<int> thresholds,
                         double target = 0.99);

struct BenchRow {
  int WL = 0;
  int SL = 0;
  int workers = 1;
  double mean_s = 0.0;
  double std_s = 0.0;
  int repeats = 0;
  std::size_t window_pairs = 0;
};

/// Wall-clock align_maps per (WL, SL); SL > WL combinations are skipped.
std::vector<BenchRow> bench_search(const VehicleMap& map_i, const VehicleMap& map_j,
                                   const AlignmentParams& base, std::span<const int> wls,
                                   std::span<const int> sls, int repeats, int workers = 1);

void write_pr_csv(std::ostream& out, const PRCurve& curve);
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);
void write_labels_csv(std::ostream& out, std::span<const PairLabel> labels);

}  // namespace segmap
