#pragma once

// Seeded multi-realization NMSE sweeps.
//
// Each realization draws, from its own child stream and in this order: the
// system couplings, the bath couplings, then the reservoir couplings. The
// target-parameter grid, Δt, h and the evolution time are deterministic.

#include "qelm/collision.hpp"
#include "qelm/random.hpp"
#include "qelm/readout.hpp"
#include "qelm/reservoir.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace qelm {

enum class Task { estimate_chi, estimate_lambda };

inline std::string to_string(Task t) {
  return t == Task::estimate_chi ? "estimate_chi" : "estimate_lambda";
}

inline Task parse_task(std::string_view s) {
  if (s == "estimate_chi") return Task::estimate_chi;
  if (s == "estimate_lambda") return Task::estimate_lambda;
  throw std::invalid_argument("unknown task '" + std::string(s) +
                              "' (expected estimate_chi or estimate_lambda)");
}

/// Name of the parameter held fixed while the other one is estimated.
inline std::string fixed_param_name(Task t) { return t == Task::estimate_chi ? "lambda" : "chi"; }

struct ExperimentSpec {
  Task task = Task::estimate_chi;
  std::vector<double> fixed_values = {0.10, 0.50, 1.00};
  std::size_t grid_size = 40;
  double grid_lo = 0.0;
  double grid_hi = std::numbers::pi / 2;
  std::size_t steps = 10;
  std::size_t realizations = 200;
  std::vector<Extension> extensions = {Extension::none(), Extension::past_step(),
                                       Extension::fixed_step(1), Extension::extra_observable()};
  double train_fraction = 0.75;
  std::uint64_t master_seed = 20250101;
  CollisionConfig collision;
  ReservoirConfig reservoir;
  double epsilon = 0.0;
  bool bias = true;
  std::string output_path;

  /// Task-dependent defaults: fixed λ ∈ {0.1, 0.5, 1} with χ on [0, π/2], or
  /// fixed χ ∈ {0.1, 0.5, 1.0, 1.57} with λ on [0, 1].
  static ExperimentSpec defaults(Task task) {
    ExperimentSpec s;
    s.task = task;
    if (task == Task::estimate_lambda) {
      s.fixed_values = {0.1, 0.5, 1.0, 1.57};
      s.grid_lo = 0.0;
      s.grid_hi = 1.0;
    }
    return s;
  }

  double target_upper_bound() const {
    return task == Task::estimate_chi ? std::numbers::pi / 2 : 1.0;
  }
  double fixed_upper_bound() const {
    return task == Task::estimate_chi ? 1.0 : std::numbers::pi / 2;
  }

  /// Test every `stride`-th grid point (indices stride-1, 2·stride-1, ...).
  std::size_t test_stride() const {
    return static_cast<std::size_t>(std::llround(1.0 / (1.0 - train_fraction)));
  }

  std::vector<double> grid() const {
    std::vector<double> g(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i)
      g[i] = grid_lo + (grid_hi - grid_lo) * static_cast<double>(i) /
                           static_cast<double>(grid_size - 1);
    return g;
  }

  std::vector<bool> test_mask() const {
    std::vector<bool> m(grid_size, false);
    const std::size_t stride = test_stride();
    for (std::size_t i = 0; i < grid_size; ++i) m[i] = (i % stride) == stride - 1;
    return m;
  }

  /// Throws std::domain_error naming the offending field.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::domain_error(field + ": " + why);
    };
    const std::string target = task == Task::estimate_chi ? "chi" : "lambda";
    if (fixed_values.empty()) fail("experiment.fixed_values", "must not be empty");
    for (double v : fixed_values)
      if (!(v >= 0.0 && v <= fixed_upper_bound()))
        fail("experiment.fixed_values", "value " + std::to_string(v) + " outside the " +
                                            fixed_param_name(task) + " domain");
    if (grid_size < 4) fail("experiment.grid_size", "must be at least 4");
    if (!(grid_lo >= 0.0 && grid_hi <= target_upper_bound() && grid_lo < grid_hi))
      fail("experiment.grid_range", "must satisfy 0 <= lo < hi <= " +
                                        std::to_string(target_upper_bound()) + " for " + target);
    if (steps < 2) fail("experiment.steps", "must be at least 2");
    if (realizations < 1) fail("experiment.realizations", "must be at least 1");
    if (extensions.empty()) fail("experiment.extensions", "must not be empty");
    for (const auto& e : extensions)
      if (e.kind == Extension::Kind::fixed_step && (e.reference_step < 1 || e.reference_step > steps))
        fail("experiment.extensions", e.name() + " references a step outside 1..steps");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      fail("experiment.train_fraction", "must lie in (0, 1)");
    const std::size_t stride = test_stride();
    if (stride < 2 || grid_size / stride < 2)
      fail("experiment.train_fraction", "leaves fewer than two test or train points");
    if (!(epsilon >= 0.0)) fail("readout.epsilon", "must be >= 0");
    collision.validate();
    reservoir.validate_for(collision.n_sys);
  }

  friend bool operator==(const ExperimentSpec& a, const ExperimentSpec& b) {
    auto same_collision = [](const CollisionConfig& x, const CollisionConfig& y) {
      return x.n_sys == y.n_sys && x.n_bath == y.n_bath && x.chi == y.chi &&
             x.lambda == y.lambda && x.j_sys == y.j_sys && x.j_bath == y.j_bath &&
             x.j_scale == y.j_scale && x.dt == y.dt && x.boundary == y.boundary &&
             x.interacting_bath == y.interacting_bath && x.sys_init == y.sys_init &&
             x.bath_init == y.bath_init && x.seed == y.seed;
    };
    auto same_reservoir = [](const ReservoirConfig& x, const ReservoirConfig& y) {
      return x.n_res == y.n_res && x.h == y.h && x.j_matrix == y.j_matrix &&
             x.j_scale == y.j_scale && x.evolve_time == y.evolve_time &&
             x.input_sites == y.input_sites && x.ancilla_init == y.ancilla_init &&
             x.seed == y.seed;
    };
    return a.task == b.task && a.fixed_values == b.fixed_values && a.grid_size == b.grid_size &&
           a.grid_lo == b.grid_lo && a.grid_hi == b.grid_hi && a.steps == b.steps &&
           a.realizations == b.realizations && a.extensions == b.extensions &&
           a.train_fraction == b.train_fraction && a.master_seed == b.master_seed &&
           same_collision(a.collision, b.collision) && same_reservoir(a.reservoir, b.reservoir) &&
           a.epsilon == b.epsilon && a.bias == b.bias && a.output_path == b.output_path;
  }
};

struct NmseResult {
  Task task = Task::estimate_chi;
  std::string fixed_param;
  double fixed_value = 0.0;
  std::size_t step = 1;
  std::string extension;
  double nmse_mean = 0.0;
  double nmse_std = 0.0;
  std::size_t n_realizations = 1;
};

/// Canonical output order: task, fixed value, step, extension name.
inline bool result_order(const NmseResult& a, const NmseResult& b) {
  return std::tie(a.task, a.fixed_value, a.step, a.extension) <
         std::tie(b.task, b.fixed_value, b.step, b.extension);
}

/// Number of rows a single realization produces.
inline std::size_t rows_per_realization(const ExperimentSpec& spec) {
  std::size_t per_value = 0;
  for (const auto& e : spec.extensions) per_value += spec.steps - e.first_valid_step() + 1;
  return per_value * spec.fixed_values.size();
}

/// Couplings drawn for one realization (exposed for inspection and tests).
struct RealizationDraw {
  CollisionConfig collision;
  ReservoirConfig reservoir;
};

inline RealizationDraw draw_realization(const ExperimentSpec& spec, std::size_t realization_index) {
  Rng rng(derive_seed(spec.master_seed, realization_index));
  RealizationDraw d{spec.collision, spec.reservoir};
  d.collision.seed = derive_seed(spec.master_seed, realization_index);
  d.reservoir.seed = d.collision.seed;
  sample_collision_couplings(d.collision, rng);
  d.reservoir.j_matrix = sample_reservoir_couplings(rng, d.reservoir.n_res, d.reservoir.j_scale);
  return d;
}

/// Per-realization NMSE rows (n_realizations = 1, nmse_std = 0), in
/// (fixed value, extension, step) generation order.
inline std::vector<NmseResult> run_realization(const ExperimentSpec& spec,
                                               std::size_t realization_index) {
  if (realization_index >= spec.realizations)
    throw std::out_of_range("run_realization: index " + std::to_string(realization_index) +
                            " >= realizations " + std::to_string(spec.realizations));
  const RealizationDraw draw = draw_realization(spec, realization_index);
  const CollisionEvolution evolution = CollisionEvolution::from_config(draw.collision);
  const ReservoirMap reservoir(draw.reservoir);

  const std::vector<double> grid = spec.grid();
  const std::vector<bool> is_test = spec.test_mask();
  std::vector<double> y_train, y_test;
  for (std::size_t g = 0; g < grid.size(); ++g) (is_test[g] ? y_test : y_train).push_back(grid[g]);
  const RealVector targets_train = Eigen::Map<const RealVector>(y_train.data(), static_cast<Eigen::Index>(y_train.size()));
  const RealVector targets_test = Eigen::Map<const RealVector>(y_test.data(), static_cast<Eigen::Index>(y_test.size()));

  std::vector<NmseResult> rows;
  rows.reserve(rows_per_realization(spec));
  for (double fixed : spec.fixed_values) {
    std::vector<TrajectoryFeatures> features;
    features.reserve(grid.size());
    for (double target : grid) {
      CollisionConfig cfg = draw.collision;
      if (spec.task == Task::estimate_chi) {
        cfg.chi = target;
        cfg.lambda = fixed;
      } else {
        cfg.chi = fixed;
        cfg.lambda = target;
      }
      features.push_back(
          features_for_trajectory(generate_trajectory(cfg, spec.steps, evolution), reservoir));
    }

    for (const auto& ext : spec.extensions) {
      for (std::size_t k = ext.first_valid_step(); k <= spec.steps; ++k) {
        std::vector<RealVector> train_cols, test_cols;
        for (std::size_t g = 0; g < grid.size(); ++g)
          (is_test[g] ? test_cols : train_cols).push_back(augment(features[g], k, ext).values);
        const auto x_train = FeatureMatrix::from_columns(train_cols, spec.bias, k, ext);
        const auto x_test = FeatureMatrix::from_columns(test_cols, spec.bias, k, ext);
        const double err = train_eval_step(x_train, targets_train, x_test, targets_test, spec.epsilon);
        rows.push_back({spec.task, fixed_param_name(spec.task), fixed, k, ext.name(), err, 0.0, 1});
      }
    }
  }
  return rows;
}

/// Mean and sample standard deviation (n − 1 denominator; 0 when n = 1),
/// computed in two passes over values in the given order.
inline std::pair<double, double> mean_and_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_and_std: no values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

/// Combines per-realization rows (all realizations emit rows in the same
/// order) into mean/std rows sorted in canonical order.
inline std::vector<NmseResult> aggregate(const std::vector<std::vector<NmseResult>>& per_realization) {
  if (per_realization.empty()) return {};
  const std::size_t n_rows = per_realization.front().size();
  std::vector<NmseResult> out;
  out.reserve(n_rows);
  std::vector<double> values(per_realization.size());
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t i = 0; i < per_realization.size(); ++i) {
      if (per_realization[i].size() != n_rows)
        throw std::logic_error("aggregate: realizations produced different row counts");
      values[i] = per_realization[i][r].nmse_mean;
    }
    NmseResult row = per_realization.front()[r];
    std::tie(row.nmse_mean, row.nmse_std) = mean_and_std(values);
    row.n_realizations = per_realization.size();
    out.push_back(std::move(row));
  }
  std::sort(out.begin(), out.end(), result_order);
  return out;
}

/// Runs `count` indexed tasks over `threads` workers. The first failure (by
/// index) is rethrown after all workers stop.
template <class Fn>
void parallel_for_index(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < count; ++i)
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        throw std::runtime_error("realization " + std::to_string(i) + " failed: " + e.what());
      }
    }
}

inline std::vector<NmseResult> run_experiment(const ExperimentSpec& spec, std::size_t threads = 1) {
  spec.validate();
  std::vector<std::vector<NmseResult>> per_realization(spec.realizations);
  parallel_for_index(spec.realizations, threads,
                     [&](std::size_t i) { per_realization[i] = run_realization(spec, i); });
  return aggregate(per_realization);
}

}  // namespace qelm
