#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "finitekey/entropies.hpp"
#include "finitekey/numerics.hpp"

namespace finitekey {

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class BoundKind { renyi, sre, aep };

std::string_view to_string(BoundKind kind);
BoundKind parse_bound_kind(std::string_view name);

struct ProtocolParams {
  std::uint64_t N = 0;
  ExtFloat p_z;   // probability of the Z basis; X and Y share the rest
  ExtFloat e_m;   // measured QBER (largest over the bases)
  ExtFloat f_ec;  // error-correction efficiency
};

struct SecurityBudget {
  ExtFloat eps_total;
  ExtFloat eps_ec;
  ExtFloat eps_pe;
  ExtFloat eps_pa;
  ExtFloat eps_bar;
  ExtFloat eps_hat;

  // eps_bar takes whatever eps_total leaves after ec, pe and pa;
  // eps_hat defaults to eps_bar / 2.
  static SecurityBudget from_parts(const ExtFloat& total, const ExtFloat& ec, const ExtFloat& pe,
                                   const ExtFloat& pa, std::optional<ExtFloat> eps_hat = std::nullopt);
  void validate() const;
};

struct SiftCounts {
  std::uint64_t n_z = 0;  // floor(N p_z^2)
  std::uint64_t m = 0;    // floor(N ((1 - p_z)/2)^2), PE sample per basis
  std::uint64_t n = 0;    // n_z - m, key-string length
};

SiftCounts accounting(const ProtocolParams& p);

// sqrt((ln(1/eps_pe) + 2 ln(m + 1)) / (8 m)), natural logs.
ExtFloat zeta(const ExtFloat& eps_pe, std::uint64_t m);

// f n h(e) + log2(2 / eps_ec).
ExtFloat leak_ec(std::uint64_t n, const ExtFloat& e, const ExtFloat& f_ec, const ExtFloat& eps_ec);

struct RateOptions {
  FloorAccounting floor = FloorAccounting::uncharged;
  // Multiplier of sqrt(log2(2/eps_bar)/n) in the AEP correction.
  double aep_coefficient = 5.0;
};

struct RateBreakdown {
  BoundKind kind = BoundKind::renyi;
  std::uint64_t N = 0;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  ExtFloat zeta;
  ExtFloat e_bound;
  ExtFloat s2_term;  // smoothed S2 of rho_XE (zero for aep)
  ExtFloat s0_term;  // smoothed S0 of rho_E (zero for aep)
  ExtFloat entropy_term;
  ExtFloat leak;
  ExtFloat pa_term;  // 2 log2(2 eps_pa)
  ExtFloat ell;
  ExtFloat rate;     // ell / N
};

RateBreakdown rate_renyi(const ProtocolParams& p, const SecurityBudget& b, const RateOptions& opt = {});
RateBreakdown rate_sre(const ProtocolParams& p, const SecurityBudget& b, const RateOptions& opt = {});
RateBreakdown rate_aep(const ProtocolParams& p, const SecurityBudget& b, const RateOptions& opt = {});
RateBreakdown evaluate_rate(BoundKind kind, const ProtocolParams& p, const SecurityBudget& b,
                            const RateOptions& opt = {});

}  // namespace finitekey
