#include "mvcalib/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

namespace mvcalib {

namespace {

double effective_tau_desc(const PipelineConfig& cfg, const FeatureSet& fs) {
  if (cfg.tau_desc > 0.0) return cfg.tau_desc;
  if (fs.size() == 0) return 1.0;
  double mean = 0.0;
  for (const auto& d : fs.descriptors) mean += d.norm();
  return 0.35 * mean / fs.size();
}

// Membership bookkeeping: which features already support a model point.
struct SupportIndex {
  std::map<std::pair<int, int>, int> feature_to_point;

  void build(const std::vector<ModelPoint>& points) {
    feature_to_point.clear();
    for (size_t i = 0; i < points.size(); ++i) {
      for (const auto& obs : points[i].support) {
        feature_to_point[{obs.image_id, obs.feature_id}] = static_cast<int>(i);
      }
    }
  }

  bool used(int image_id, int feature_id) const {
    return feature_to_point.count({image_id, feature_id}) > 0;
  }

  int point_of(int image_id, int feature_id) const {
    auto it = feature_to_point.find({image_id, feature_id});
    return it == feature_to_point.end() ? -1 : it->second;
  }

  void add(int image_id, int feature_id, int point) {
    feature_to_point[{image_id, feature_id}] = point;
  }
};

bool has_observation_of(const ModelPoint& p, int image_id) {
  return std::any_of(p.support.begin(), p.support.end(),
                     [image_id](const Observation& o) { return o.image_id == image_id; });
}

// Joint refinement of all registered poses and points. The first registered
// camera is always fixed; optionally everything but the newest is too.
void run_bundle_adjustment(Reconstruction& rec, const PipelineConfig& cfg) {
  BaProblem problem;
  std::map<int, int> slot_of_image;
  for (int image_id : rec.registered) {
    slot_of_image[image_id] = static_cast<int>(problem.poses.size());
    problem.poses.push_back(rec.poses.at(image_id));
  }

  problem.fixed_cameras.push_back(slot_of_image.at(rec.registered.front()));
  if (!cfg.refine_all_cameras && rec.registered.size() > 2) {
    const int newest = rec.registered.back();
    for (int image_id : rec.registered) {
      if (image_id != newest && image_id != rec.registered.front()) {
        problem.fixed_cameras.push_back(slot_of_image.at(image_id));
      }
    }
  }

  problem.points.reserve(rec.points.size());
  for (size_t j = 0; j < rec.points.size(); ++j) {
    problem.points.push_back(rec.points[j].X);
    for (const auto& obs : rec.points[j].support) {
      problem.observations.push_back(
          BaObservation{slot_of_image.at(obs.image_id), static_cast<int>(j), obs.x});
    }
  }

  const BaResult refined = bundle_adjust(problem, cfg.ba_max_iters, cfg.ba_gradient_tol);
  for (int image_id : rec.registered) {
    rec.poses[image_id] = refined.problem.poses[slot_of_image.at(image_id)];
  }
  for (size_t j = 0; j < rec.points.size(); ++j) {
    rec.points[j].X = refined.problem.points[j];
  }
}

// Step 4e: recheck every support entry against the refined geometry, then
// drop points left with fewer than three images.
void prune_points(Reconstruction& rec, const PipelineConfig& cfg, int min_support) {
  std::vector<ModelPoint> kept;
  kept.reserve(rec.points.size());
  for (auto& point : rec.points) {
    std::vector<Observation> support;
    support.reserve(point.support.size());
    for (const auto& obs : point.support) {
      if (geometrically_compatible(point, rec.poses.at(obs.image_id), obs.x, cfg.tau_reproj)) {
        support.push_back(obs);
      }
    }
    if (static_cast<int>(support.size()) >= min_support) {
      point.support = std::move(support);
      kept.push_back(std::move(point));
    }
  }
  rec.points = std::move(kept);
}

}  // namespace

Reconstruction init_pair(const FeatureSet& f1, const FeatureSet& f2, const PipelineConfig& cfg) {
  if (f1.size() == 0 || f2.size() == 0) {
    throw InitFailed("empty feature set");
  }
  if (f1.image_id == f2.image_id) {
    throw InitFailed("initial images must carry distinct ids");
  }

  const std::vector<PutativeMatch> putative = match_ratio_test(f1, f2, cfg.theta);
  std::vector<Correspondence2D2D> corrs;
  corrs.reserve(putative.size());
  for (const auto& m : putative) {
    corrs.push_back(Correspondence2D2D{f1.keypoints[m.feature_a].normalized,
                                       f2.keypoints[m.feature_b].normalized});
  }

  ConsensusResult<RelativePoseModel> consensus;
  try {
    consensus = ransac_relative_pose(corrs, cfg.relative_ransac);
  } catch (const Error& e) {
    throw InitFailed(std::string("relative pose estimation failed: ") + e.what());
  }

  Reconstruction rec;
  rec.poses[f1.image_id] = CameraPose::identity();
  rec.poses[f2.image_id] = CameraPose{consensus.model.pose.R, consensus.model.pose.T};
  rec.registered = {f1.image_id, f2.image_id};

  const CameraPose& pose1 = rec.poses[f1.image_id];
  const CameraPose& pose2 = rec.poses[f2.image_id];
  const double tau_desc = std::min(effective_tau_desc(cfg, f1), effective_tau_desc(cfg, f2));

  SupportIndex index;

  // Step 3c: model points from the consensus set first.
  for (int idx : consensus.inlier_indices) {
    const PutativeMatch& m = putative[idx];
    if (index.used(f1.image_id, m.feature_a) || index.used(f2.image_id, m.feature_b)) continue;
    if (!visually_compatible(f1.descriptors[m.feature_a], f2.descriptors[m.feature_b], tau_desc)) {
      continue;
    }
    WorldPoint X;
    try {
      X = triangulate_two_view(pose1, pose2, f1.keypoints[m.feature_a].normalized,
                               f2.keypoints[m.feature_b].normalized);
    } catch (const Error&) {
      continue;
    }
    if (reprojection_error(pose1, X, f1.keypoints[m.feature_a].normalized) >= cfg.tau_reproj ||
        reprojection_error(pose2, X, f2.keypoints[m.feature_b].normalized) >= cfg.tau_reproj) {
      continue;
    }
    ModelPoint point;
    point.X = X;
    point.support = {f1.observation(m.feature_a), f2.observation(m.feature_b)};
    index.add(f1.image_id, m.feature_a, static_cast<int>(rec.points.size()));
    index.add(f2.image_id, m.feature_b, static_cast<int>(rec.points.size()));
    rec.points.push_back(std::move(point));
  }

  // then additional pairs through guided matching
  const std::vector<GuidedCandidate> other = {GuidedCandidate{&f2, pose2}};
  for (int i = 0; i < f1.size(); ++i) {
    if (index.used(f1.image_id, i)) continue;
    const Observation query = f1.observation(i);
    const std::vector<Observation> compatible =
        guided_match(query, other, pose1, cfg.guided_k, tau_desc, cfg.tau_reproj);

    const Observation* best = nullptr;
    double best_dist = 0.0;
    for (const auto& cand : compatible) {
      if (index.used(cand.image_id, cand.feature_id)) continue;
      const double dist = (cand.descriptor - query.descriptor).norm();
      if (!best || dist < best_dist) {
        best = &cand;
        best_dist = dist;
      }
    }
    if (!best) continue;

    WorldPoint X;
    try {
      X = triangulate_two_view(pose1, pose2, query.x, best->x);
    } catch (const Error&) {
      continue;
    }
    ModelPoint point;
    point.X = X;
    point.support = {query, *best};
    index.add(f1.image_id, i, static_cast<int>(rec.points.size()));
    index.add(best->image_id, best->feature_id, static_cast<int>(rec.points.size()));
    rec.points.push_back(std::move(point));
  }

  if (rec.points.empty()) {
    throw InitFailed("no model points could be triangulated");
  }

  try {
    run_bundle_adjustment(rec, cfg);
  } catch (const Error& e) {
    throw InitFailed(std::string("initial bundle adjustment failed: ") + e.what());
  }
  return rec;
}

Reconstruction register_image(const Reconstruction& rec_in, const FeatureSet& fn,
                              const std::vector<FeatureSet>& sequence_features,
                              const PipelineConfig& cfg) {
  if (rec_in.registered.size() < 2) {
    throw RegistrationFailed("model must contain at least two registered images");
  }

  Reconstruction rec = rec_in;
  const int n = fn.image_id;
  const double tau_desc = effective_tau_desc(cfg, fn);

  // 4a: putative 2D-3D matches
  const std::vector<ModelMatch> model_matches = match_2d3d(fn, rec.points, cfg.theta);
  if (model_matches.empty()) {
    throw RegistrationFailed("no 2D-3D matches against the model");
  }

  // 4b: absolute pose by RANSAC with P3P
  ConsensusResult<CameraPose> consensus;
  try {
    consensus = ransac_absolute_pose(to_correspondences(fn, rec.points, model_matches),
                                     cfg.absolute_ransac);
  } catch (const Error& e) {
    throw RegistrationFailed(std::string("absolute pose estimation failed: ") + e.what());
  }
  const CameraPose pose_n = consensus.model;
  rec.poses[n] = pose_n;
  rec.registered.push_back(n);

  SupportIndex index;
  index.build(rec.points);

  // verified 2D-3D inliers extend the support of their points
  for (int idx : consensus.inlier_indices) {
    const ModelMatch& m = model_matches[idx];
    ModelPoint& point = rec.points[m.point_id];
    if (has_observation_of(point, n) || index.used(n, m.feature_id)) continue;
    point.support.push_back(fn.observation(m.feature_id));
    index.add(n, m.feature_id, m.point_id);
  }

  // 4c: guided matching against recently registered images
  std::vector<GuidedCandidate> candidates;
  for (auto it = rec.registered.rbegin(); it != rec.registered.rend(); ++it) {
    if (*it == n) continue;
    if (static_cast<int>(candidates.size()) >= cfg.window) break;
    if (*it < 0 || *it >= static_cast<int>(sequence_features.size()) ||
        sequence_features[*it].image_id != *it) {
      throw RegistrationFailed("sequence_features must be indexed by image id");
    }
    candidates.push_back(GuidedCandidate{&sequence_features[*it], rec.poses.at(*it)});
  }

  for (int i = 0; i < fn.size(); ++i) {
    if (index.used(n, i)) continue;
    const Observation query = fn.observation(i);
    const std::vector<Observation> compatible =
        guided_match(query, candidates, pose_n, cfg.guided_k, tau_desc, cfg.tau_reproj);
    if (compatible.empty()) continue;

    // extension first: the query may observe a point one of its matches
    // already supports
    bool extended = false;
    for (const auto& cand : compatible) {
      const int point_id = index.point_of(cand.image_id, cand.feature_id);
      if (point_id < 0) continue;
      ModelPoint& point = rec.points[point_id];
      if (has_observation_of(point, n)) continue;
      if (!geometrically_compatible(point, pose_n, query.x, cfg.tau_reproj)) continue;
      point.support.push_back(query);
      index.add(n, i, point_id);
      extended = true;
      break;
    }
    if (extended) continue;

    // new point from the best unused match per image, needing two other views
    std::map<int, const Observation*> best_per_image;
    for (const auto& cand : compatible) {
      if (index.used(cand.image_id, cand.feature_id)) continue;
      auto [it, inserted] = best_per_image.try_emplace(cand.image_id, &cand);
      if (!inserted) {
        const double old_d = (it->second->descriptor - query.descriptor).norm();
        const double new_d = (cand.descriptor - query.descriptor).norm();
        if (new_d < old_d) it->second = &cand;
      }
    }
    if (best_per_image.size() < 2) continue;

    std::vector<Observation> support = {query};
    std::vector<CameraPose> poses = {pose_n};
    std::vector<NormalizedPoint> xs = {query.x};
    for (const auto& [image_id, obs] : best_per_image) {
      support.push_back(*obs);
      poses.push_back(rec.poses.at(image_id));
      xs.push_back(obs->x);
    }

    for (int attempt = 0; attempt < 2; ++attempt) {
      WorldPoint X;
      try {
        X = triangulate_nview(poses, xs);
      } catch (const Error&) {
        break;
      }
      std::vector<int> good;
      for (size_t v = 0; v < poses.size(); ++v) {
        ModelPoint probe{X, {}};
        if (geometrically_compatible(probe, poses[v], xs[v], cfg.tau_reproj)) {
          good.push_back(static_cast<int>(v));
        }
      }
      if (good.size() == poses.size()) {
        ModelPoint point;
        point.X = X;
        point.support = support;
        const int point_id = static_cast<int>(rec.points.size());
        for (const auto& obs : support) index.add(obs.image_id, obs.feature_id, point_id);
        rec.points.push_back(std::move(point));
        break;
      }
      // drop incompatible views and retry once; the query itself must stay
      if (std::find(good.begin(), good.end(), 0) == good.end() || good.size() < 3) break;
      std::vector<Observation> s2;
      std::vector<CameraPose> p2;
      std::vector<NormalizedPoint> x2;
      for (int v : good) {
        s2.push_back(support[v]);
        p2.push_back(poses[v]);
        x2.push_back(xs[v]);
      }
      support = std::move(s2);
      poses = std::move(p2);
      xs = std::move(x2);
    }
  }

  // 4d: joint refinement
  try {
    run_bundle_adjustment(rec, cfg);
  } catch (const Error& e) {
    throw RegistrationFailed(std::string("bundle adjustment failed: ") + e.what());
  }

  // 4e: support recheck and pruning
  prune_points(rec, cfg, 3);
  return rec;
}

Reconstruction run_sequence(const std::vector<FeatureSet>& features, const PipelineConfig& cfg) {
  if (features.size() < 2) {
    throw InitFailed("a sequence needs at least two images");
  }

  // images are indexed by their position in the sequence
  std::vector<FeatureSet> indexed = features;
  for (size_t i = 0; i < indexed.size(); ++i) {
    indexed[i].image_id = static_cast<int>(i);
  }

  Reconstruction rec = init_pair(indexed[0], indexed[1], cfg);
  for (size_t i = 2; i < indexed.size(); ++i) {
    try {
      rec = register_image(rec, indexed[i], indexed, cfg);
    } catch (const RegistrationFailed&) {
      rec.failed.push_back(static_cast<int>(i));
    }
  }
  return rec;
}

}  // namespace mvcalib
