// Acceptance checks, one PASS/FAIL line per criterion. Select criteria with
// --criterion (repeatable); the exit status is non-zero if any selected
// criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "finitekey/entropies.hpp"
#include "finitekey/optimizer.hpp"
#include "finitekey/oracle.hpp"

using namespace finitekey;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string bits(const ExtFloat& v) {
  if (v.is_zero()) return "0";
  return "2^" + std::to_string(std::lround(v.log2_abs()));
}

// Minimal N for a positive optimized rate at QBER 1%.
Outcome thresholds() {
  SearchConfig cfg;
  const std::map<BoundKind, double> target = {
      {BoundKind::renyi, 5e4}, {BoundKind::sre, 6.5e4}, {BoundKind::aep, 1e5}};
  std::map<BoundKind, double> found;
  bool ok = true;
  std::ostringstream d;
  for (BoundKind k : {BoundKind::renyi, BoundKind::sre, BoundKind::aep}) {
    ThresholdResult t = threshold_n("0.01", k, cfg);
    double n = static_cast<double>(t.N_min);
    found[k] = n;
    bool in = std::abs(n / target.at(k) - 1.0) <= 0.20;
    ok = ok && in;
    d << to_string(k) << " " << t.N_min << (in ? "" : " (outside +-20%)") << "; ";
  }
  double save_sre = 1.0 - found[BoundKind::renyi] / found[BoundKind::sre];
  double save_aep = 1.0 - found[BoundKind::renyi] / found[BoundKind::aep];
  ok = ok && save_sre >= 0.15 && save_aep >= 0.40;
  d << "saving vs sre " << fmt("%.1f%%", 100 * save_sre) << " (>= 15%), vs aep " << fmt("%.1f%%", 100 * save_aep)
    << " (>= 40%)";
  return {ok, d.str()};
}

std::vector<std::uint64_t> ordering_grid() {
  std::vector<std::uint64_t> ns;
  for (int k = 0; k <= 8; ++k) ns.push_back(10000ULL << k);
  return ns;
}

const std::vector<std::string> kOrderingQbers = {"0.01", "0.025", "0.05"};

using RateGrid = std::map<std::pair<std::uint64_t, std::string>, std::map<BoundKind, ExtFloat>>;

RateGrid optimized_grid(long precision_bits) {
  SearchConfig cfg;
  cfg.precision_bits = precision_bits;
  RateGrid g;
  for (const auto& q : kOrderingQbers)
    for (const auto& row : sweep_n(ordering_grid(), q, {BoundKind::renyi, BoundKind::sre, BoundKind::aep}, cfg)) {
      if (!row.result) throw std::runtime_error("sweep row failed: " + row.error);
      g[{row.N, q}].emplace(row.kind, row.result->best.rate);
    }
  return g;
}

Outcome ordering(const RateGrid& g) {
  PrecisionContext ctx(256);
  ExtFloat slack("1e-6", ctx);
  int violations = 0, positive_violations = 0;
  std::ostringstream d;
  for (const auto& [key, r] : g) {
    const ExtFloat& renyi = r.at(BoundKind::renyi);
    const ExtFloat& sre = r.at(BoundKind::sre);
    const ExtFloat& aep = r.at(BoundKind::aep);
    if (!(renyi >= sre && sre >= aep - slack)) {
      d << "N=" << key.first << " e=" << key.second << ": " << renyi.to_string(6) << ", " << sre.to_string(6)
        << ", " << aep.to_string(6) << "; ";
      ++violations;
      if (sre.sign() > 0) ++positive_violations;
    }
  }
  // Where no bound gives a key the optimizer shrinks n to a few bits, and
  // there S2 - S0 is below the smoothed S2 alone; report those separately.
  d << g.size() << " grid points, " << violations << " violations (" << positive_violations
    << " with a positive sre rate)";
  return {violations == 0, d.str()};
}

Outcome footnote_gap(long precision_bits) {
  PrecisionContext ctx(precision_bits);
  BlockSpectrumXE bs = block_spectrum_xe(build_channel(ExtFloat("0.05", ctx)), 10000);
  ExtFloat eps("1e-16", ctx);
  OptimalS2Result r = smooth_s2_optimal_detail(bs, eps, true);
  double lg = (r.gap_bits.log2_abs() - r.entropy.log2_abs()) * std::log10(2.0);
  bool ok = precision_bits >= 20000 && !r.gap_bits.is_zero() && lg >= -5450 && lg <= -5330;

  // For comparison: the kernel-raise share of the smoothed block sum, and
  // the entropy shift it alone would cause relative to S2.
  SmoothingResult m = modified_s2(bs, eps);
  ExtFloat kernel_share = bs.m0 * m.kernel_level * m.kernel_level / m.block_sum;
  double share_log10 = kernel_share.log2_abs() * std::log10(2.0);
  double shift_log10 = share_log10 - std::log10(std::log(2.0)) - std::log10(m.entropy.to_double());

  std::ostringstream d;
  d << precision_bits << " bits: log10 relative gap " << fmt("%.2f", lg) << ", need [-5450, -5330]"
    << "; kernel-raise share log10 " << fmt("%.2f", share_log10) << ", its entropy shift log10 "
    << fmt("%.2f", shift_log10);
  if (precision_bits < 20000) d << "; needs >= 20000 bits";
  return {ok, d.str()};
}

Outcome entropy_gap() {
  PrecisionContext ctx(256);
  ChannelModel ch = build_channel(ExtFloat("0.05", ctx));
  ExtFloat bar("1e-9", ctx);
  ExtFloat upper = theorem2_upper(ch, 10000, bar);
  ExtFloat lower = theorem2_bound(ch, 10000, bar, bar * ExtFloat("0.5", ctx)).value;
  double rel = ((upper - lower) / upper).to_double();

  // Best split of eps_bar over a coarse grid, for context.
  double best_rel = rel, best_frac = 0.5;
  for (int i = 1; i < 20; ++i) {
    double frac = i / 20.0;
    ExtFloat lo = theorem2_bound(ch, 10000, bar, bar * ExtFloat(frac, ctx)).value;
    double r = ((upper - lo) / upper).to_double();
    if (r < best_rel) {
      best_rel = r;
      best_frac = frac;
    }
  }
  std::ostringstream d;
  d << "lower " << lower.to_string(10) << ", upper " << upper.to_string(10) << ", relative gap "
    << fmt("%.4f%%", 100 * rel) << " (<= 0.2%); best eps_hat/eps_bar " << best_frac << " gives "
    << fmt("%.4f%%", 100 * best_rel);
  return {rel <= 0.002, d.str()};
}

std::vector<ExtFloat> expand_compact(const BlockSpectrumXE& bs) {
  auto ctx = bs.m0.context();
  std::size_t blocks = std::size_t{1} << bs.n;
  ExtFloat w = ExtFloat::pow2(-static_cast<long>(bs.n), ctx);
  std::vector<ExtFloat> out;
  WeightedSpectrum base = bs.base();
  for (const auto& e : base.entries()) {
    auto count = mpfr_get_ui(e.multiplicity.raw(), MPFR_RNDN) * blocks;
    out.insert(out.end(), count, e.value * w);
  }
  out.insert(out.end(), mpfr_get_ui(base.kernel_dim().raw(), MPFR_RNDN) * blocks, ExtFloat(ctx));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome oracle_equivalence() {
  const long P = 256;
  PrecisionContext ctx(P);
  ExtFloat spectrum_tol = ExtFloat::pow2(16 - P, ctx);
  ExtFloat rel30("1e-30", ctx);
  ExtFloat ball_tol = ExtFloat::pow2(24 - P, ctx);
  ExtFloat worst_spectrum(ctx), worst_entropy(ctx), worst_ball(ctx);
  bool ok = true;
  int comparisons = 0;
  for (const char* q : {"0.01", "0.05", "0.1"}) {
    ChannelModel ch = build_channel(ExtFloat(q, ctx));
    for (std::size_t n = 1; n <= 4; ++n) {
      CqOperator rho = build_rho_xe_dense(ch, n);
      BlockSpectrumXE bs = block_spectrum_xe(ch, n);
      std::vector<ExtFloat> dense = eigenvalues(rho);
      std::vector<ExtFloat> compact = expand_compact(bs);
      if (dense.size() != compact.size()) {
        ok = false;
        continue;
      }
      for (std::size_t i = 0; i < dense.size(); ++i) {
        if (compact[i].is_zero()) {
          ok = ok && dense[i].is_zero();
          continue;
        }
        worst_spectrum = max(worst_spectrum, relative_difference(dense[i], compact[i]));
      }

      DenseOperator marg = partial_trace_x(rho);
      std::vector<ExtFloat> diag;
      for (std::size_t i = 0; i < marg.dim(); ++i) diag.push_back(marg(i, i));

      for (const char* eps_text : {"1e-9", "1e-3"}) {
        ExtFloat eps(eps_text, ctx);
        ExtFloat brute2 = brute_smooth(dense, eps, 2);
        OptimalS2Result best = smooth_s2_optimal_detail(bs, eps);
        worst_entropy = max(worst_entropy, relative_difference(best.entropy, brute2));
        if (best.raised_levels == 0)
          worst_entropy = max(worst_entropy, relative_difference(modified_s2(bs, eps).entropy, brute2));
        worst_entropy = max(worst_entropy, relative_difference(smooth_s0(spectrum_e(ch, n), eps),
                                                               brute_smooth(diag, eps, 0)));
        BallCheck ball = tau_ball_check(ch, n, eps);
        worst_ball = max(worst_ball, max(ball.residual, ball.trace_error));
        comparisons += 1;
      }
    }
  }
  ok = ok && worst_spectrum <= spectrum_tol && worst_entropy <= rel30 && worst_ball <= ball_tol;
  std::ostringstream d;
  d << comparisons << " (e, n, eps) cases; spectra max rel " << bits(worst_spectrum) << " (<= 2^" << 16 - P
    << "), entropies max rel " << worst_entropy.to_string(3) << " (<= 1e-30), ball residual " << bits(worst_ball)
    << " (<= 2^" << 24 - P << ")";
  return {ok, d.str()};
}

Outcome closed_forms() {
  PrecisionContext ctx(256);
  ExtFloat e("0.05", ctx);
  ExtFloat one(1L, ctx);
  ChannelModel ch = build_channel(e);
  ExtFloat per_signal = one - log2((one - e) * (one - e) + e * e);
  ExtFloat worst(ctx);
  for (std::uint64_t n : {1ULL, 10ULL, 1000ULL, 100000ULL}) {
    ExtFloat nn(static_cast<unsigned long>(n), ctx);
    worst = max(worst, relative_difference(full_state_s2(block_spectrum_xe(ch, n)), nn * per_signal));
    worst = max(worst, relative_difference(renyi(spectrum_e(ch, n).base(), RenyiOrder::zero), ExtFloat(2L, ctx) * nn));
  }
  return {worst <= ExtFloat("1e-30", ctx), "max relative error " + worst.to_string(3) + " (<= 1e-30)"};
}

Outcome precision_convergence(const RateGrid& lo, const RateGrid& hi) {
  PrecisionContext ctx(512);
  ExtFloat worst(ctx);
  std::string where;
  for (const auto& [key, rates] : lo)
    for (const auto& [kind, r] : rates) {
      ExtFloat d = relative_difference(r, hi.at(key).at(kind));
      if (where.empty() || d > worst) {
        worst = d;
        where = "N=" + std::to_string(key.first) + " e=" + key.second + " " + std::string(to_string(kind));
      }
    }
  return {worst < ExtFloat("1e-20", ctx), "max relative change " + worst.to_string(3) + " at " + where + " (< 1e-20)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finitekey acceptance checks"};
  std::vector<int> selected;
  long long_bits = 20000;
  app.add_option("--criterion", selected, "Criterion number 1-7 (repeatable; default all)")
      ->check(CLI::Range(1, 7));
  app.add_option("--long-precision-bits", long_bits, "Precision for criterion 3")->check(CLI::Range(64L, 1000000L));
  CLI11_PARSE(app, argc, argv);
  std::set<int> want(selected.begin(), selected.end());
  if (want.empty()) want = {1, 2, 3, 4, 5, 6, 7};

  const std::map<int, std::string> names = {
      {1, "threshold reproduction"}, {2, "rate ordering"},          {3, "raise-fill precision gap"},
      {4, "lower/upper entropy gap"}, {5, "oracle equivalence"},    {6, "closed-form identities"},
      {7, "precision convergence"}};

  RateGrid grid256, grid512;
  bool all_ok = true;
  for (int c : want) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      switch (c) {
        case 1: o = thresholds(); break;
        case 2:
          if (grid256.empty()) grid256 = optimized_grid(256);
          o = ordering(grid256);
          break;
        case 3: o = footnote_gap(long_bits); break;
        case 4: o = entropy_gap(); break;
        case 5: o = oracle_equivalence(); break;
        case 6: o = closed_forms(); break;
        case 7:
          if (grid256.empty()) grid256 = optimized_grid(256);
          grid512 = optimized_grid(512);
          o = precision_convergence(grid256, grid512);
          break;
      }
    } catch (const std::exception& ex) {
      o = {false, std::string("error: ") + ex.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.ok ? "PASS" : "FAIL") << " criterion " << c << " " << names.at(c) << ": " << o.detail << " ["
              << fmt("%.1f", secs) << " s]" << std::endl;
    all_ok = all_ok && o.ok;
  }
  return all_ok ? 0 : 1;
}
