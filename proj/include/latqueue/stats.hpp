#pragma once

// Trajectory statistics and batch-means confidence intervals. A trajectory
// contributes per-node time averages plus per-batch means; replications are
// combined by pooling their batch means as independent samples.

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace latqueue {

struct MomentEstimate {
  double point = 0;
  double half_width = 0;  // 95% two-sided
  std::size_t batches = 0;
  bool conclusive = false;  // at least 20 batches behind the interval

  double lo() const { return point - half_width; }
  double hi() const { return point + half_width; }
};

inline double student_t_975(std::size_t df) {
  if (df < 1) throw std::invalid_argument("t quantile needs df >= 1");
  boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(dist, 0.975);
}

inline MomentEstimate batch_means_estimate(std::span<const double> batch_values) {
  MomentEstimate e;
  e.batches = batch_values.size();
  if (batch_values.empty()) return e;
  double mean = 0;
  for (double v : batch_values) mean += v;
  mean /= static_cast<double>(batch_values.size());
  e.point = mean;
  if (batch_values.size() < 2) return e;
  double ss = 0;
  for (double v : batch_values) ss += (v - mean) * (v - mean);
  double var = ss / static_cast<double>(batch_values.size() - 1);
  e.half_width = student_t_975(batch_values.size() - 1) *
                 std::sqrt(var / static_cast<double>(batch_values.size()));
  e.conclusive = batch_values.size() >= 20;
  return e;
}

// Per-replication trajectory summary. Batch rows hold per-node means of the
// tracked functionals over equal spans of the post-burn-in trajectory.
struct TrajectoryStats {
  std::size_t nodes = 0;
  double span = 0;     // post-burn-in slots or time
  double burn_in = 0;  // slots or time discarded

  std::vector<double> mean_x, mean_x2, mean_g, mean_delta, service_rate;  // per node
  std::vector<std::vector<double>> batch_x, batch_x2, batch_g, batch_delta, batch_service;

  // Node-averaged queue over [T/2, 3T/4) and [3T/4, T) of the full horizon.
  double window_first = 0, window_second = 0;

  double self_loop_fraction = 0;  // continuous runs only
  double events = 0;              // continuous runs: total events
};

// Pools one scalar per batch across replications: `reduce` maps a per-node
// batch row to the scalar of interest.
inline MomentEstimate pooled_estimate(
    std::span<const TrajectoryStats> reps,
    const std::vector<std::vector<double>> TrajectoryStats::* series,
    const std::function<double(std::span<const double>)>& reduce) {
  std::vector<double> values;
  for (const auto& r : reps)
    for (const auto& row : r.*series) values.push_back(reduce(std::span<const double>(row)));
  return batch_means_estimate(values);
}

inline MomentEstimate pooled_node_mean(std::span<const TrajectoryStats> reps,
                                       const std::vector<std::vector<double>> TrajectoryStats::* series,
                                       std::size_t node) {
  return pooled_estimate(reps, series,
                         [node](std::span<const double> row) { return row[node]; });
}

inline MomentEstimate pooled_average(std::span<const TrajectoryStats> reps,
                                     const std::vector<std::vector<double>> TrajectoryStats::* series) {
  return pooled_estimate(reps, series, [](std::span<const double> row) {
    double acc = 0;
    for (double v : row) acc += v;
    return acc / static_cast<double>(row.size());
  });
}

// Weighted sum over nodes, one scalar per batch.
inline MomentEstimate pooled_weighted_sum(std::span<const TrajectoryStats> reps,
                                          const std::vector<std::vector<double>> TrajectoryStats::* series,
                                          std::span<const double> weights) {
  std::vector<double> w(weights.begin(), weights.end());
  return pooled_estimate(reps, series, [w](std::span<const double> row) {
    double acc = 0;
    for (std::size_t i = 0; i < row.size(); ++i) acc += w[i] * row[i];
    return acc;
  });
}

}  // namespace latqueue
