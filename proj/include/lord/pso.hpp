#pragma once

// Particle swarm minimizer on a box, plus the design encodings used to
// search over design measures.
//
// Continuous encoding with n candidate points: a particle is
// (d_1..d_n, p_1..p_n); doses live in the dose interval, raw weights in
// [0, 1] and rho_i = p_i^2 / sum_j p_j^2. Discrete encoding over K doses:
// a particle is (p_1..p_K) mapped the same way.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "lord/cr_model.hpp"
#include "lord/errors.hpp"
#include "lord/information.hpp"

namespace lord {

struct InertiaSchedule {
  double w_start = 0.9;
  double w_end = 0.4;
  double relaxation = 1.25;

  /// Inertia at iteration j in [1, max_iters].
  double at(int j, int max_iters) const noexcept {
    if (max_iters <= 1) return w_start;
    const double frac = static_cast<double>(max_iters - j) / (max_iters - 1);
    return w_end + (w_start - w_end) * std::pow(frac, relaxation);
  }

  friend bool operator==(const InertiaSchedule&, const InertiaSchedule&) = default;
};

struct StopRule {
  int stall_iters = 200;
  double rel_tol = 1e-10;

  friend bool operator==(const StopRule&, const StopRule&) = default;
};

struct PsoConfig {
  int swarm_size = 50;
  int max_iters = 1500;
  double cognitive = 2.5;
  double social = 0.5;
  InertiaSchedule inertia;
  std::uint64_t seed = 20240917;
  int restarts = 10;
  StopRule stop;
  /// Worker threads for independent restarts; 0 picks the hardware count.
  unsigned threads = 0;

  void validate() const {
    if (swarm_size < 2) throw DomainError("swarm size must be at least 2");
    if (max_iters < 1) throw DomainError("max_iters must be at least 1");
    if (!(cognitive >= 0.0) || !(social >= 0.0))
      throw DomainError("cognitive and social coefficients must be >= 0");
    if (!(inertia.w_end > 0.0) || !(inertia.w_start >= inertia.w_end))
      throw DomainError("inertia requires w_start >= w_end > 0");
    if (!(inertia.relaxation > 0.0)) throw DomainError("inertia relaxation must be > 0");
    if (restarts < 1) throw DomainError("restarts must be at least 1");
    if (stop.stall_iters < 1 || !(stop.rel_tol >= 0.0))
      throw DomainError("stop rule requires stall_iters >= 1 and rel_tol >= 0");
  }

  friend bool operator==(const PsoConfig&, const PsoConfig&) = default;
};

struct SearchBox {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const noexcept { return lo.size(); }

  void validate() const {
    if (lo.size() != hi.size() || lo.empty()) throw DomainError("malformed search box");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] <= hi[i]))
        throw DomainError("search box bounds must be finite with lo <= hi");
  }
};

struct HistoryEntry {
  int iteration = 0;
  double best_value = 0.0;
  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct SwarmResult {
  std::vector<double> best_position;
  double best_value = std::numeric_limits<double>::infinity();
  int iterations_run = 0;
  std::vector<HistoryEntry> history;
  int restart_index = 0;
};

namespace detail {

inline std::mt19937_64 restart_engine(std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  return std::mt19937_64(seq);
}

template <class F>
SwarmResult run_swarm(F& f, const SearchBox& box, const PsoConfig& cfg, int restart) {
  const std::size_t dim = box.dim();
  const auto n = static_cast<std::size_t>(cfg.swarm_size);
  auto rng = restart_engine(cfg.seed, restart);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<double>> pos(n, std::vector<double>(dim));
  std::vector<std::vector<double>> vel(n, std::vector<double>(dim));
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double span = box.hi[k] - box.lo[k];
      pos[p][k] = box.lo[k] + span * unit(rng);
      vel[p][k] = span * (unit(rng) - 0.5);
    }
  }

  auto eval = [&](const std::vector<double>& x) {
    const double v = f(std::span<const double>(x));
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<std::vector<double>> best_pos = pos;
  std::vector<double> best_val(n);
  for (std::size_t p = 0; p < n; ++p) best_val[p] = eval(pos[p]);

  std::size_t g = 0;
  for (std::size_t p = 1; p < n; ++p)
    if (best_val[p] < best_val[g]) g = p;
  std::vector<double> global_pos = best_pos[g];
  double global_val = best_val[g];

  SwarmResult out;
  out.restart_index = restart;
  out.history.push_back({0, global_val});

  std::vector<double> values(n);
  int stalled = 0;
  int j = 1;
  for (; j <= cfg.max_iters; ++j) {
    const double w = cfg.inertia.at(j, cfg.max_iters);
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t k = 0; k < dim; ++k) {
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        double v = w * vel[p][k] + cfg.cognitive * r1 * (best_pos[p][k] - pos[p][k]) +
                   cfg.social * r2 * (global_pos[k] - pos[p][k]);
        double x = pos[p][k] + v;
        if (x < box.lo[k]) {
          x = box.lo[k];
          v = 0.0;
        } else if (x > box.hi[k]) {
          x = box.hi[k];
          v = 0.0;
        }
        pos[p][k] = x;
        vel[p][k] = v;
      }
    }
    for (std::size_t p = 0; p < n; ++p) values[p] = eval(pos[p]);

    const double previous = global_val;
    for (std::size_t p = 0; p < n; ++p) {
      if (values[p] < best_val[p]) {
        best_val[p] = values[p];
        best_pos[p] = pos[p];
      }
      if (best_val[p] < global_val) {
        global_val = best_val[p];
        global_pos = best_pos[p];
      }
    }
    out.history.push_back({j, global_val});

    const bool improved = std::isinf(previous)
                              ? !std::isinf(global_val)
                              : previous - global_val > cfg.stop.rel_tol * std::abs(previous);
    stalled = improved ? 0 : stalled + 1;
    if (stalled >= cfg.stop.stall_iters) break;
  }
  out.iterations_run = std::min(j, cfg.max_iters);
  out.best_position = std::move(global_pos);
  out.best_value = global_val;
  return out;
}

}  // namespace detail

/// Minimizes `f` over `box`: the best of cfg.restarts independent swarms.
/// Restart r draws from its own engine seeded by (cfg.seed, r), so results do
/// not depend on the number of worker threads. Ties go to the lower restart.
template <class F>
SwarmResult minimize(F f, const SearchBox& box, const PsoConfig& cfg) {
  cfg.validate();
  box.validate();
  const auto restarts = static_cast<std::size_t>(cfg.restarts);
  std::vector<SwarmResult> results(restarts);
  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                      : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, restarts));
  if (threads <= 1) {
    for (std::size_t r = 0; r < restarts; ++r)
      results[r] = detail::run_swarm(f, box, cfg, static_cast<int>(r));
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        F local = f;
        for (std::size_t r = t; r < restarts; r += threads)
          results[r] = detail::run_swarm(local, box, cfg, static_cast<int>(r));
      });
    }
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r)
    if (results[r].best_value < results[best].best_value) best = r;
  return std::move(results[best]);
}

// ---------------------------------------------------------------------------
// Design encodings

struct ContinuousEncoding {
  std::size_t points = 10;
  DoseInterval bounds;
};

struct DiscreteEncoding {
  std::vector<double> doses;
};

using Encoding = std::variant<ContinuousEncoding, DiscreteEncoding>;

struct CleanupTolerances {
  double merge = 0.05;
  double min_weight = 0.01;
};

inline SearchBox search_box(const Encoding& enc) {
  SearchBox box;
  if (const auto* c = std::get_if<ContinuousEncoding>(&enc)) {
    box.lo.assign(c->points, c->bounds.lo);
    box.hi.assign(c->points, c->bounds.hi);
    box.lo.resize(2 * c->points, 0.0);
    box.hi.resize(2 * c->points, 1.0);
  } else {
    const auto& d = std::get<DiscreteEncoding>(enc);
    box.lo.assign(d.doses.size(), 0.0);
    box.hi.assign(d.doses.size(), 1.0);
  }
  return box;
}

/// rho_i = p_i^2 / sum p_j^2, uniform when every raw weight is zero.
inline std::vector<double> squared_weights(std::span<const double> raw) {
  std::vector<double> w(raw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    w[i] = raw[i] * raw[i];
    total += w[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(raw.size()));
    return w;
  }
  for (auto& v : w) v /= total;
  return w;
}

/// Sorts by dose, merges points closer than tol.merge into their weighted
/// mean location, drops weights below tol.min_weight and renormalizes.
inline DesignMeasure cleanup(std::vector<double> points, std::vector<double> weights,
                             const CleanupTolerances& tol) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (weights[i] > 0.0) order.push_back(i);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });

  DesignMeasure merged;
  for (const auto i : order) {
    if (!merged.empty() && points[i] - merged.points.back() < tol.merge) {
      double& loc = merged.points.back();
      double& wt = merged.weights.back();
      loc = (loc * wt + points[i] * weights[i]) / (wt + weights[i]);
      wt += weights[i];
    } else {
      merged.points.push_back(points[i]);
      merged.weights.push_back(weights[i]);
    }
  }

  DesignMeasure out;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (merged.weights[i] >= tol.min_weight) {
      out.points.push_back(merged.points[i]);
      out.weights.push_back(merged.weights[i]);
    }
  }
  if (out.empty() && !merged.empty()) {
    const auto k = static_cast<std::size_t>(
        std::max_element(merged.weights.begin(), merged.weights.end()) -
        merged.weights.begin());
    out.points.push_back(merged.points[k]);
    out.weights.push_back(merged.weights[k]);
  }
  const double total = out.total_weight();
  for (auto& w : out.weights) w /= total;
  return out;
}

inline DesignMeasure decode(std::span<const double> position, const Encoding& enc,
                            const CleanupTolerances& tol = {}) {
  if (const auto* c = std::get_if<ContinuousEncoding>(&enc)) {
    if (position.size() != 2 * c->points) throw DomainError("position has wrong length");
    std::vector<double> pts(position.begin(), position.begin() + c->points);
    for (auto& p : pts) p = std::clamp(p, c->bounds.lo, c->bounds.hi);
    return cleanup(std::move(pts), squared_weights(position.subspan(c->points)), tol);
  }
  const auto& d = std::get<DiscreteEncoding>(enc);
  if (position.size() != d.doses.size()) throw DomainError("position has wrong length");
  // grid doses are distinct, so nothing merges as long as spacing >= tol.merge
  CleanupTolerances grid_tol = tol;
  grid_tol.merge = 0.0;
  return cleanup(d.doses, squared_weights(position), grid_tol);
}

struct PsoResult {
  DesignMeasure best_design;
  double best_value = std::numeric_limits<double>::infinity();
  int iterations_run = 0;
  std::vector<HistoryEntry> history;
  int restart_index = 0;
};

/// Minimizes a design criterion over the designs reachable by `enc`.
template <class Objective>
PsoResult optimize(Objective objective, const Encoding& enc, const PsoConfig& cfg,
                   const CleanupTolerances& tol = {}) {
  auto fitness = [objective, &enc, tol](std::span<const double> x) {
    return objective(decode(x, enc, tol));
  };
  SwarmResult s = minimize(fitness, search_box(enc), cfg);
  PsoResult out;
  out.best_design = decode(s.best_position, enc, tol);
  out.best_value = s.best_value;
  out.iterations_run = s.iterations_run;
  out.history = std::move(s.history);
  out.restart_index = s.restart_index;
  return out;
}

}  // namespace lord
