#pragma once

#include "segmap/observation.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace segmap {

struct TrackerParams {
  double a_lim = 10.0;     ///< epipolar margin, pixels
  double v_lim = 4.0;      ///< VIO-shift gate, standard deviations
  double q_lim = 0.2;      ///< minimum similarity of an accepted match
  double h_lim = 0.2;      ///< relative size difference cut-off
  int t_lim = 3;           ///< keyframes a track may go unobserved
  double ratio_test = 0.75;
  int n_lim = 5;           ///< minimum observations handed to reconstruction

  bool is_valid() const {
    return a_lim > 0 && v_lim > 0 && q_lim > 0 && h_lim > 0 && t_lim > 0 && ratio_test > 0 &&
           ratio_test < 1 && n_lim > 0;
  }
};

struct TrackEntry {
  KeyframeId keyframe_id = 0;
  int obs_index = 0;
  bool operator==(const TrackEntry&) const = default;
};

enum class TrackStatus { active, stale, closed };

struct Track {
  int id = 0;
  std::vector<TrackEntry> entries;
  TrackStatus status = TrackStatus::active;
  /// Position of the newest entry's keyframe in the processed sequence.
  std::size_t last_seq = 0;
};

/// What assign needs to know about a candidate track.
struct TrackCandidate {
  int track_id = 0;
  const SegmentObservation* last_obs = nullptr;
  Pose last_pose;
  /// Expected centroid displacement statistics between the track's newest
  /// keyframe and the current one.
  double mu_p = 0.0;
  double sigma_p = 1.0;
};

struct AssignResult {
  std::vector<std::pair<int, int>> matches;  ///< (track id, observation index)
  std::vector<int> new_track_obs;
};

/// Score matrix entry for one (track, observation) pair, or kInfeasible when
/// a geometric gate rejects it.
double association_score(const TrackCandidate& track, const SegmentObservation& obs,
                         const Pose& current_pose, const CameraIntrinsics& intr,
                         const TrackerParams& params);

AssignResult assign(std::span<const TrackCandidate> tracks,
                    std::span<const SegmentObservation> observations, const Pose& current_pose,
                    const CameraIntrinsics& intr, const TrackerParams& params);

class OutOfOrderKeyframe : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Frame-to-frame segment tracker. Feed keyframes in order with step(), then
/// call finish() to close the remaining tracks.
class Tracker {
 public:
  Tracker(CameraIntrinsics intr, TrackerParams params);

  void step(const Keyframe& keyframe);
  void finish();

  /// Tracks long enough for reconstruction, ordered by creation (id).
  const std::vector<Track>& completed() const { return completed_; }
  const std::vector<Track>& active() const { return active_; }
  std::size_t dropped() const { return dropped_; }
  std::size_t keyframes_seen() const { return history_.size(); }

 private:
  struct KeyframeRecord {
    KeyframeId id;
    Pose pose;
    double mu_p;
    double sigma_p;
    std::vector<SegmentObservation> observations;
  };

  void retire(Track track);

  CameraIntrinsics intr_;
  TrackerParams params_;
  std::vector<KeyframeRecord> history_;
  std::vector<Track> active_;
  std::vector<Track> completed_;
  std::size_t dropped_ = 0;
  int next_id_ = 0;
};

/// Runs the tracker over a whole log.
std::vector<Track> track_log(const FlightLog& log, const TrackerParams& params,
                             std::size_t* dropped = nullptr);

}  // namespace segmap
