#include "segmap/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <unordered_map>

namespace segmap {

FootprintQuad footprint(const Pose& pose, const CameraIntrinsics& intr, double ground_z) {
  const Vec3 c = pose.center();
  if (!(c.z() > ground_z)) throw HorizonError("camera is not above the ground plane");
  const std::array<Vec2, 4> corners{Vec2(0.0, 0.0), Vec2(intr.width, 0.0),
                                    Vec2(intr.width, intr.height), Vec2(0.0, intr.height)};
  FootprintQuad quad;
  for (std::size_t k = 0; k < 4; ++k) {
    const Vec3 ray = pose.rotation * back_project(intr, corners[k]);
    if (!(ray.z() < 0.0)) throw HorizonError("corner ray does not reach the ground");
    const double t = (ground_z - c.z()) / ray.z();
    const Vec3 hit = c + t * ray;
    quad[k] = hit.head<2>();
  }
  return quad;
}

double polygon_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2& p = poly[k];
    const Vec2& q = poly[(k + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

namespace {

std::vector<Vec2> counter_clockwise(std::span<const Vec2> poly) {
  std::vector<Vec2> out(poly.begin(), poly.end());
  if (polygon_area(out) < 0.0) std::reverse(out.begin(), out.end());
  return out;
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out = counter_clockwise(subject);
  const std::vector<Vec2> edges = counter_clockwise(clip);
  for (std::size_t e = 0; e < edges.size() && !out.empty(); ++e) {
    const Vec2 a = edges[e];
    const Vec2 b = edges[(e + 1) % edges.size()];
    const Vec2 dir = b - a;
    auto inside = [&](const Vec2& p) { return cross(dir, p - a) >= 0.0; };
    std::vector<Vec2> in = std::move(out);
    out.clear();
    for (std::size_t k = 0; k < in.size(); ++k) {
      const Vec2& cur = in[k];
      const Vec2& prev = in[(k + in.size() - 1) % in.size()];
      const bool cur_in = inside(cur);
      const bool prev_in = inside(prev);
      if (cur_in != prev_in) {
        const double dp = cross(dir, prev - a);
        const double dc = cross(dir, cur - a);
        const double t = dp / (dp - dc);
        out.push_back(prev + t * (cur - prev));
      }
      if (cur_in) out.push_back(cur);
    }
  }
  return out;
}

double quad_iou(const FootprintQuad& a, const FootprintQuad& b) {
  const double area_a = std::abs(polygon_area(a));
  const double area_b = std::abs(polygon_area(b));
  // Clip in a fixed argument order so that iou(a, b) == iou(b, a) bit for bit.
  auto before = [](const FootprintQuad& x, const FootprintQuad& y) {
    for (int k = 0; k < 4; ++k) {
      if (x[k].x() != y[k].x()) return x[k].x() < y[k].x();
      if (x[k].y() != y[k].y()) return x[k].y() < y[k].y();
    }
    return false;
  };
  const std::vector<Vec2> inter = before(b, a) ? clip_convex(b, a) : clip_convex(a, b);
  const double area_i = inter.size() < 3 ? 0.0 : std::abs(polygon_area(inter));
  const double uni = area_a + area_b - area_i;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(area_i / uni, 0.0, 1.0);
}

const char* to_string(PairClass c) {
  switch (c) {
    case PairClass::positive: return "positive";
    case PairClass::ignore: return "ignore";
    case PairClass::negative: return "negative";
  }
  return "?";
}

PairClass classify_iou(double iou, const LabelThresholds& t) {
  if (iou > t.positive) return PairClass::positive;
  if (iou <= t.negative) return PairClass::negative;
  return PairClass::ignore;
}

std::size_t interval_step(std::size_t a, std::size_t b, std::size_t max_evals) {
  if (a == 0 || b == 0) return 1;
  std::size_t k = 1;
  while (((a + k - 1) / k) * ((b + k - 1) / k) > max_evals) ++k;
  return k;
}

namespace {

struct TraverseFootprints {
  std::unordered_map<KeyframeId, std::size_t> index;
  std::vector<FootprintQuad> quads;
};

TraverseFootprints footprints_of(const GroundTruth& truth, double ground_z) {
  if (truth.true_poses.empty() || truth.true_poses.size() != truth.keyframe_ids.size()) {
    throw MissingGroundTruth("ground truth has no poses parallel to its keyframes");
  }
  TraverseFootprints f;
  f.quads.reserve(truth.true_poses.size());
  for (std::size_t k = 0; k < truth.true_poses.size(); ++k) {
    f.index[truth.keyframe_ids[k]] = k;
    f.quads.push_back(footprint(truth.true_poses[k], truth.intrinsics, ground_z));
  }
  return f;
}

// Pose-index interval covered by a window of map objects.
std::pair<std::size_t, std::size_t> keyframe_interval(const TraverseFootprints& f,
                                                      std::span<const MapObject> window) {
  auto find = [&](KeyframeId id) {
    const auto it = f.index.find(id);
    if (it == f.index.end()) throw MissingGroundTruth("no ground-truth pose for keyframe " + std::to_string(id));
    return it->second;
  };
  std::size_t lo = find(window.front().first_kf);
  std::size_t hi = find(window.back().last_kf);
  if (hi < lo) std::swap(lo, hi);
  return {lo, hi};
}

}  // namespace

std::vector<PairLabel> label_pairs(const GroundTruth& truth_i, const GroundTruth& truth_j,
                                   const VehicleMap& map_i, const VehicleMap& map_j, int WL,
                                   int SL, double ground_z, const LabelThresholds& thresholds,
                                   int workers) {
  const TraverseFootprints fi = footprints_of(truth_i, ground_z);
  const TraverseFootprints fj = footprints_of(truth_j, ground_z);
  const auto offsets = window_offsets(map_i.size(), map_j.size(), WL, SL);
  std::vector<PairLabel> labels(offsets.size());

  auto label_one = [&](std::size_t p) {
    const auto [oi, oj] = offsets[p];
    const auto [bi, ei] = window_range(map_i.size(), oi, WL, SL);
    const auto [bj, ej] = window_range(map_j.size(), oj, WL, SL);
    const std::span<const MapObject> wi(map_i.objects.data() + bi, ei - bi);
    const std::span<const MapObject> wj(map_j.objects.data() + bj, ej - bj);
    const auto [li, hi] = keyframe_interval(fi, wi);
    const auto [lj, hj] = keyframe_interval(fj, wj);
    const std::size_t step = interval_step(hi - li + 1, hj - lj + 1);
    double best = 0.0;
    for (std::size_t a = li; a <= hi; a += step) {
      for (std::size_t b = lj; b <= hj; b += step) {
        best = std::max(best, quad_iou(fi.quads[a], fj.quads[b]));
      }
    }
    labels[p] = {oi, oj, best, classify_iou(best, thresholds)};
  };

  const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(offsets.size())));
  if (n_threads <= 1) {
    for (std::size_t p = 0; p < offsets.size(); ++p) label_one(p);
    return labels;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t p = next++; p < offsets.size(); p = next++) {
        try {
          label_one(p);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return labels;
}

double PRCurve::recall_at_precision(double min_precision) const {
  double best = 0.0;
  for (const PRPoint& p : points) {
    if (p.precision >= min_precision) best = std::max(best, p.recall);
  }
  return best;
}

PRCurve precision_recall(std::span<const AlignmentHypothesis> hypotheses,
                         std::span<const PairLabel> labels, std::vector<int> thresholds,
                         double target) {
  std::map<std::pair<int, int>, PairClass> by_key;
  for (const PairLabel& l : labels) by_key[{l.offset_i, l.offset_j}] = l.label;

  std::vector<PairClass> cls;
  cls.reserve(hypotheses.size());
  int positives = 0;
  for (const AlignmentHypothesis& h : hypotheses) {
    const auto it = by_key.find({h.offset_i, h.offset_j});
    if (it == by_key.end()) {
      throw std::invalid_argument("hypothesis (" + std::to_string(h.offset_i) + "," +
                                  std::to_string(h.offset_j) + ") has no label");
    }
    cls.push_back(it->second);
    if (it->second == PairClass::positive) ++positives;
  }

  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  PRCurve curve;
  for (int s : thresholds) {
    PRPoint pt;
    pt.threshold = s;
    pt.positives = positives;
    for (std::size_t k = 0; k < hypotheses.size(); ++k) {
      if (!hypotheses[k].accepted_at(s)) continue;
      if (cls[k] == PairClass::positive) ++pt.tp;
      else if (cls[k] == PairClass::negative) ++pt.fp;
    }
    pt.precision = pt.tp + pt.fp == 0 ? 1.0 : static_cast<double>(pt.tp) / (pt.tp + pt.fp);
    pt.recall = positives == 0 ? 1.0 : static_cast<double>(pt.tp) / positives;
    const double denom = pt.precision + pt.recall;
    pt.f1 = denom > 0.0 ? 2.0 * pt.precision * pt.recall / denom : 0.0;
    curve.points.push_back(pt);
  }
  if (curve.points.empty()) return curve;

  // Precision tuned: lowest threshold reaching the target, else the highest.
  const PRPoint* at_p = &curve.points.back();
  for (const PRPoint& p : curve.points) {
    if (p.precision >= target) {
      at_p = &p;
      break;
    }
  }
  // Recall tuned: highest threshold reaching the target, else the lowest.
  const PRPoint* at_r = &curve.points.front();
  for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
    if (it->recall >= target) {
      at_r = &*it;
      break;
    }
  }
  curve.precision_threshold = at_p->threshold;
  curve.recall_threshold = at_r->threshold;
  curve.average_f1 = 0.5 * (at_p->f1 + at_r->f1);
  return curve;
}

std::vector<BenchRow> bench_search(const VehicleMap& map_i, const VehicleMap& map_j,
                                   const AlignmentParams& base, std::span<const int> wls,
                                   std::span<const int> sls, int repeats, int workers) {
  if (map_i.empty() || map_j.empty()) throw std::invalid_argument("bench needs non-empty maps");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  std::vector<BenchRow> rows;
  for (int wl : wls) {
    for (int sl : sls) {
      AlignmentParams p = base;
      p.WL = wl;
      p.SL = sl;
      if (!p.is_valid()) continue;
      std::vector<double> samples;
      std::size_t pairs = 0;
      for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto hyps = align_maps(map_i, map_j, p, workers);
        const auto t1 = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double>(t1 - t0).count());
        pairs = hyps.size();
      }
      double mean = 0.0;
      for (double s : samples) mean += s;
      mean /= static_cast<double>(samples.size());
      double var = 0.0;
      for (double s : samples) var += (s - mean) * (s - mean);
      const double sd = samples.size() > 1 ? std::sqrt(var / static_cast<double>(samples.size() - 1)) : 0.0;
      rows.push_back({wl, sl, workers, mean, sd, repeats, pairs});
    }
  }
  return rows;
}

void write_pr_csv(std::ostream& out, const PRCurve& curve) {
  out << "threshold,precision,recall,f1\n";
  for (const PRPoint& p : curve.points) {
    out << p.threshold << ',' << p.precision << ',' << p.recall << ',' << p.f1 << '\n';
  }
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "WL,SL,workers,mean_s,std_s\n";
  for (const BenchRow& r : rows) {
    out << r.WL << ',' << r.SL << ',' << r.workers << ',' << r.mean_s << ',' << r.std_s << '\n';
  }
}

void write_labels_csv(std::ostream& out, std::span<const PairLabel> labels) {
  out << "pair,iou,label\n";
  for (const PairLabel& l : labels) {
    out << l.offset_i << ':' << l.offset_j << ',' << l.iou << ',' << to_string(l.label) << '\n';
  }
}

}  // namespace segmap
