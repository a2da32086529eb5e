#pragma once

#include <cstdint>

#include "finitekey/numerics.hpp"
#include "finitekey/spectra.hpp"

namespace finitekey {

enum class RenyiOrder { zero, two, infinity };

ExtFloat renyi(const WeightedSpectrum& s, RenyiOrder order);
// General order alpha >= 0, alpha != 1.
ExtFloat renyi(const WeightedSpectrum& s, const ExtFloat& alpha);

// Full-state S2 of rho_XE^(n): n - log2(block sum of squares).
ExtFloat full_state_s2(const BlockSpectrumXE& bs);

struct SmoothingResult {
  ExtFloat entropy;        // bits, full 2^n-block state
  std::uint64_t b_plus = 0;  // plateau spans levels k = 0..b_plus
  ExtFloat lambda_plus;    // common plateau level
  ExtFloat kernel_level;   // eps / (2 m0)
  ExtFloat mass_moved;     // mass removed from the top, eps / 2
  ExtFloat block_sum;      // sum of squared block eigenvalues after smoothing
};

// Top flattening by eps/2 plus a flat kernel raise of eps/(2 m0).
// The BlockSpectrumXE overload walks only the levels that matter at the
// working precision; the WeightedSpectrum overload visits every entry and
// serves general blocks and cross-checks.
SmoothingResult modified_s2(const BlockSpectrumXE& bs, const ExtFloat& eps);
SmoothingResult modified_s2(const WeightedSpectrum& block, std::uint64_t n, const ExtFloat& eps);

struct OptimalS2Result {
  ExtFloat entropy;
  // log2(modified block sum / optimal block sum) >= 0, computed without
  // cancellation so gaps far below 2^-precision relative stay resolvable.
  ExtFloat gap_bits;
  std::uint64_t raised_levels = 0;  // positive levels joined to the raised floor
  ExtFloat raise_level;
};

// Same top flattening, with the bottom eps/2 spread over the kernel and the
// lowest levels at one common level. Unless resolve_gap is set, the bottom
// walk is skipped when the gap cannot reach the working precision; gap_bits
// is then reported as zero.
OptimalS2Result smooth_s2_optimal_detail(const BlockSpectrumXE& bs, const ExtFloat& eps,
                                         bool resolve_gap = false);
ExtFloat smooth_s2_optimal(const BlockSpectrumXE& bs, const ExtFloat& eps);
ExtFloat smooth_s2_optimal(const WeightedSpectrum& block, std::uint64_t n, const ExtFloat& eps);

// Greedy rank reduction: remove the smallest eigenvalues while the removed
// mass stays within eps/2, splitting the boundary level by integer count.
ExtFloat smooth_s0(const WeightedSpectrum& s, const ExtFloat& eps);
ExtFloat smooth_s0(const SpectrumE& s, const ExtFloat& eps);

// How the identity floor delta = eps_hat / 2^(2n+1) enters the S0 term.
//  uncharged: the cut set is chosen on rho_E + delta (same ordering as
//             rho_E) but only the rho_E mass is charged to the eps_hat/2
//             budget; equals smooth_s0(rho_E, eps_hat).
//  charged:   smooth_s0(shift_spectrum(rho_E, delta), eps_hat), every cut
//             direction also paying delta. Near-vacuous for large n.
enum class FloorAccounting { uncharged, charged };

struct TheoremTwoBound {
  ExtFloat s2bar;
  ExtFloat s0;
  ExtFloat epsilon_hat;
  ExtFloat floor_shift;
  ExtFloat value;  // s2bar - s0 - epsilon_hat
};

TheoremTwoBound theorem2_bound(const ChannelModel& ch, std::uint64_t n, const ExtFloat& eps_bar,
                               const ExtFloat& eps_hat,
                               FloorAccounting floor = FloorAccounting::uncharged);

// S2^eps_bar(rho_XE) - S0^eps_bar(rho_E), the matching upper bound.
ExtFloat theorem2_upper(const ChannelModel& ch, std::uint64_t n, const ExtFloat& eps_bar);

// Conditional entropy H(X|E) per signal for the depolarizing channel.
ExtFloat aep_entropy(const ExtFloat& e);

}  // namespace finitekey
