#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "finitekey/keyrates.hpp"

namespace finitekey {

struct ThresholdNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MonotonicityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SearchConfig {
  long precision_bits = 256;
  std::string eps_total = "1e-9";
  std::string eps_ec = "1e-10";
  std::string f_ec = "1.2";
  RateOptions rate;

  double tol = 1e-3;            // final step, in search units
  std::size_t max_evals = 6000;
  bool search_eps_hat = false;  // adds log10(eps_hat / eps_bar) as a coordinate
  unsigned threads = 1;
  double log10_eps_min = -20.0;
  double pz_margin = 1e-6;
  // In sweeps, start each bound's search also from the previous bound's
  // optimum (aep -> sre -> renyi).
  bool chain_seeds = true;

  double rel_tol = 0.02;  // threshold bracket width
  std::uint64_t n_start = 10000;
  std::uint64_t n_min = 100;
  std::uint64_t n_max = 10000000000ULL;
};

// Search coordinates: log10 eps_pe, log10 eps_pa, log10 eps_bar, p_z and
// log10(eps_hat / eps_bar). The three eps are rescaled onto
// eps_total - eps_ec before evaluation.
struct SearchPoint {
  std::array<double, 5> x{};

  double log10_eps_pe() const { return x[0]; }
  double log10_eps_pa() const { return x[1]; }
  double log10_eps_bar() const { return x[2]; }
  double p_z() const { return x[3]; }
  double log10_hat_fraction() const { return x[4]; }
};

struct OptResult {
  RateBreakdown best;
  SearchPoint params;
  SecurityBudget budget;
  ExtFloat p_z;
  std::size_t evaluations = 0;
  bool converged = false;
};

// The fixed multi-start seed set for a configuration.
std::vector<SearchPoint> seed_points(const SearchConfig& cfg);

// Budget after the feasibility projection.
SecurityBudget project_budget(const SearchPoint& pt, const SearchConfig& cfg);

OptResult maximize_rate(std::uint64_t N, const std::string& e_m, BoundKind kind, const SearchConfig& cfg,
                        const std::vector<SearchPoint>& extra_seeds = {});

struct SweepRow {
  std::uint64_t N = 0;
  std::string qber;
  BoundKind kind = BoundKind::renyi;
  std::optional<OptResult> result;
  std::string error;
};

// Rows ordered by N, then bound name.
std::vector<SweepRow> sweep_n(const std::vector<std::uint64_t>& N_list, const std::string& e_m,
                              const std::vector<BoundKind>& kinds, const SearchConfig& cfg);

struct ThresholdProbe {
  std::uint64_t N = 0;
  double rate = 0.0;
  bool positive = false;
};

struct ThresholdResult {
  std::uint64_t N_min = 0;  // smallest probed N with a positive optimized rate
  std::uint64_t N_lo = 0;   // largest probed N without one
  double bracket_rel_width = 0.0;
  std::vector<ThresholdProbe> probes;  // in probe order
};

ThresholdResult threshold_n(const std::string& e_m, BoundKind kind, const SearchConfig& cfg);

// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace finitekey
