#include "segmap/tracker.hpp"

#include "segmap/assignment.hpp"
#include "segmap/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace segmap {

double association_score(const TrackCandidate& track, const SegmentObservation& obs,
                         const Pose& current_pose, const CameraIntrinsics& intr,
                         const TrackerParams& params) {
  const SegmentObservation& prev = *track.last_obs;
  try {
    if (epipolar_distance(track.last_pose, current_pose, intr, prev.centroid, obs.centroid) >=
        params.a_lim) {
      return kInfeasible;
    }
  } catch (const DegenerateBaseline&) {
    // Pure rotation: only the shift gate applies.
  }
  if (!vio_shift_gate(prev.centroid, obs.centroid, track.mu_p, track.sigma_p, params.v_lim)) {
    return kInfeasible;
  }
  const double q_s = size_score(prev.size_px, obs.size_px, params.h_lim);
  const double q_f = feature_score(prev.descriptors, obs.descriptors, params.ratio_test);
  return similarity(q_s, q_f);
}

AssignResult assign(std::span<const TrackCandidate> tracks,
                    std::span<const SegmentObservation> observations, const Pose& current_pose,
                    const CameraIntrinsics& intr, const TrackerParams& params) {
  AssignResult result;
  const auto n_obs = static_cast<Eigen::Index>(observations.size());
  const auto n_tracks = static_cast<Eigen::Index>(tracks.size());
  std::vector<char> matched(observations.size(), 0);
  if (n_obs > 0 && n_tracks > 0) {
    Eigen::MatrixXd scores(n_tracks, n_obs);
    for (Eigen::Index t = 0; t < n_tracks; ++t) {
      for (Eigen::Index o = 0; o < n_obs; ++o) {
        scores(t, o) = association_score(tracks[static_cast<std::size_t>(t)],
                                         observations[static_cast<std::size_t>(o)],
                                         current_pose, intr, params);
      }
    }
    for (const auto& [t, o] : solve_assignment(scores)) {
      if (scores(t, o) < params.q_lim) continue;
      result.matches.emplace_back(tracks[static_cast<std::size_t>(t)].track_id, o);
      matched[static_cast<std::size_t>(o)] = 1;
    }
  }
  for (std::size_t o = 0; o < observations.size(); ++o) {
    if (!matched[o]) result.new_track_obs.push_back(static_cast<int>(o));
  }
  return result;
}

Tracker::Tracker(CameraIntrinsics intr, TrackerParams params)
    : intr_(intr), params_(params) {
  if (!params_.is_valid()) throw std::invalid_argument("invalid tracker parameters");
}

void Tracker::retire(Track track) {
  track.status = TrackStatus::stale;
  if (static_cast<int>(track.entries.size()) >= params_.n_lim) {
    track.status = TrackStatus::closed;
    completed_.push_back(std::move(track));
  } else {
    ++dropped_;
  }
}

void Tracker::step(const Keyframe& keyframe) {
  if (!history_.empty() && keyframe.id <= history_.back().id) {
    throw OutOfOrderKeyframe("keyframe " + std::to_string(keyframe.id) +
                             " does not follow keyframe " + std::to_string(history_.back().id));
  }
  const std::size_t seq = history_.size();
  history_.push_back({keyframe.id, keyframe.pose, keyframe.mu_p,
                      std::max(keyframe.sigma_p, kMinSigmaP), keyframe.observations});

  // A track stays eligible while it has missed at most t_lim keyframes.
  std::vector<Track> eligible;
  for (Track& t : active_) {
    const std::size_t missed = seq - t.last_seq - 1;
    if (missed <= static_cast<std::size_t>(params_.t_lim)) {
      eligible.push_back(std::move(t));
    } else {
      retire(std::move(t));
    }
  }
  active_.clear();

  std::vector<TrackCandidate> candidates;
  candidates.reserve(eligible.size());
  for (const Track& t : eligible) {
    const KeyframeRecord& last = history_[t.last_seq];
    TrackCandidate c;
    c.track_id = t.id;
    c.last_obs = &last.observations[static_cast<std::size_t>(t.entries.back().obs_index)];
    c.last_pose = last.pose;
    double mu = 0.0;
    double var = 0.0;
    for (std::size_t k = t.last_seq + 1; k <= seq; ++k) {
      mu += history_[k].mu_p;
      var += history_[k].sigma_p * history_[k].sigma_p;
    }
    c.mu_p = mu;
    c.sigma_p = std::sqrt(var);
    candidates.push_back(c);
  }

  const KeyframeRecord& current = history_[seq];
  const AssignResult res =
      assign(candidates, current.observations, current.pose, intr_, params_);

  for (const auto& [track_id, obs_index] : res.matches) {
    auto it = std::find_if(eligible.begin(), eligible.end(),
                           [id = track_id](const Track& t) { return t.id == id; });
    it->entries.push_back({keyframe.id, obs_index});
    it->last_seq = seq;
  }
  active_ = std::move(eligible);
  for (const int obs_index : res.new_track_obs) {
    Track t;
    t.id = next_id_++;
    t.entries.push_back({keyframe.id, obs_index});
    t.last_seq = seq;
    active_.push_back(std::move(t));
  }
}

void Tracker::finish() {
  for (Track& t : active_) retire(std::move(t));
  active_.clear();
  std::sort(completed_.begin(), completed_.end(),
            [](const Track& a, const Track& b) { return a.id < b.id; });
}

std::vector<Track> track_log(const FlightLog& log, const TrackerParams& params,
                             std::size_t* dropped) {
  Tracker tracker(log.intrinsics, params);
  for (const Keyframe& kf : log.keyframes) tracker.step(kf);
  tracker.finish();
  if (dropped) *dropped = tracker.dropped();
  return tracker.completed();
}

}  // namespace segmap
