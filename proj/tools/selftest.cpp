#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "cli.hpp"
#include "finitekey/entropies.hpp"
#include "finitekey/oracle.hpp"

namespace finitekey::cli {

namespace {

class Suite {
 public:
  explicit Suite(std::ostream& out) : out_(out) {}

  void check(const std::string& name, bool ok, const std::string& detail = "") {
    out_ << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) out_ << "  (" << detail << ")";
    out_ << "\n";
    all_ok_ = all_ok_ && ok;
  }

  bool ok() const { return all_ok_; }

 private:
  std::ostream& out_;
  bool all_ok_ = true;
};

std::string bits(const ExtFloat& v) {
  if (v.is_zero()) return "0";
  std::ostringstream s;
  s << "2^" << std::lround(v.log2_abs());
  return s.str();
}

// Compact spectrum of the full rho_XE^(n), expanded entry by entry.
std::vector<ExtFloat> expand_compact(const BlockSpectrumXE& bs, bool tamper) {
  auto ctx = bs.m0.context();
  std::size_t blocks = std::size_t{1} << bs.n;
  ExtFloat w = ExtFloat::pow2(-static_cast<long>(bs.n), ctx);
  std::vector<ExtFloat> out;
  WeightedSpectrum base = bs.base();
  for (const auto& e : base.entries()) {
    ExtFloat v = e.value * w;
    if (tamper) v *= ExtFloat(1L, ctx) + ExtFloat::pow2(-40, ctx);
    auto count = mpfr_get_ui(e.multiplicity.raw(), MPFR_RNDN) * blocks;
    for (unsigned long i = 0; i < count; ++i) out.push_back(v);
  }
  auto zeros = mpfr_get_ui(base.kernel_dim().raw(), MPFR_RNDN) * blocks;
  for (unsigned long i = 0; i < zeros; ++i) out.push_back(ExtFloat(ctx));
  std::sort(out.begin(), out.end());
  return out;
}

void oracle_suite(Suite& s, const SelftestOptions& opt) {
  PrecisionContext ctx(opt.precision_bits);
  ExtFloat tight = ExtFloat::pow2(16 - opt.precision_bits, ctx);
  ExtFloat ball_tol = ExtFloat::pow2(24 - opt.precision_bits, ctx);
  ExtFloat rel30("1e-30", ctx);

  for (const char* q : {"0.01", "0.05", "0.1"}) {
    ChannelModel ch = build_channel(ExtFloat(q, ctx));
    std::string at = std::string("e=") + q;

    CheckReport proj = projectors_check(ch);
    s.check("projectors " + at, proj.ok, "max residual " + bits(proj.max_residual));

    for (std::size_t n = 1; n <= 4; ++n) {
      std::string tag = at + " n=" + std::to_string(n);
      CqOperator rho = build_rho_xe_dense(ch, n);
      BlockSpectrumXE bs = block_spectrum_xe(ch, n);

      std::vector<ExtFloat> dense = eigenvalues(rho);
      std::vector<ExtFloat> compact = expand_compact(bs, opt.tamper);
      ExtFloat worst(ctx);
      bool same = dense.size() == compact.size();
      for (std::size_t i = 0; same && i < dense.size(); ++i) {
        if (compact[i].is_zero()) {
          same = dense[i].is_zero();
          continue;
        }
        worst = max(worst, relative_difference(dense[i], compact[i]));
      }
      s.check("spectrum " + tag, same && worst <= tight, "max rel " + bits(worst));

      DenseOperator marg = partial_trace_x(rho);
      s.check("marginal " + tag, (marg - rho_e_product(ch, n)).max_abs() <= tight);

      for (const char* eps_text : {"1e-9", "1e-3"}) {
        ExtFloat eps(eps_text, ctx);
        std::string et = tag + " eps=" + eps_text;
        ExtFloat brute2 = brute_smooth(dense, eps, 2);
        OptimalS2Result best = smooth_s2_optimal_detail(bs, eps);
        ExtFloat d = relative_difference(brute2, best.entropy);
        s.check("S2 optimal vs brute " + et, d <= rel30, "rel " + bits(d));
        if (best.raised_levels == 0) {
          ExtFloat dm = relative_difference(brute2, modified_s2(bs, eps).entropy);
          s.check("S2 modified vs brute " + et, dm <= rel30, "rel " + bits(dm));
        }

        std::vector<ExtFloat> diag;
        for (std::size_t i = 0; i < marg.dim(); ++i) diag.push_back(marg(i, i));
        ExtFloat d0 = relative_difference(brute_smooth(diag, eps, 0), smooth_s0(spectrum_e(ch, n), eps));
        s.check("S0 vs brute " + et, d0 <= rel30, "rel " + bits(d0));

        BallCheck ball = tau_ball_check(ch, n, eps);
        s.check("tau ball " + et, ball.residual <= ball_tol && ball.trace_error <= ball_tol,
                "residual " + bits(ball.residual));

        ExtFloat excess = floor_bound_excess(ch, n, eps);
        s.check("kernel floor bound " + et, excess <= ball_tol, "max excess " + excess.to_string(6));
      }
    }
  }
}

void invariant_suite(Suite& s, const SelftestOptions& opt) {
  PrecisionContext ctx(opt.precision_bits);
  ExtFloat rel30("1e-30", ctx);
  ExtFloat e("0.05", ctx);
  ChannelModel ch = build_channel(e);
  ExtFloat one(1L, ctx);
  ExtFloat per_signal = one - log2((one - e) * (one - e) + e * e);

  for (std::uint64_t n : {1ULL, 10ULL, 1000ULL, 100000ULL}) {
    std::string tag = "n=" + std::to_string(n);
    ExtFloat nn(static_cast<unsigned long>(n), ctx);
    ExtFloat d2 = relative_difference(full_state_s2(block_spectrum_xe(ch, n)), nn * per_signal);
    s.check("closed-form S2 " + tag, d2 <= rel30, "rel " + bits(d2));
    ExtFloat d0 = relative_difference(smooth_s0(spectrum_e(ch, n), ExtFloat(ctx)), ExtFloat(2L, ctx) * nn);
    s.check("closed-form S0 " + tag, d0 <= rel30, "rel " + bits(d0));
  }

  BlockSpectrumXE bs = block_spectrum_xe(ch, 1000);
  SpectrumE se = spectrum_e(ch, 1000);
  bool mono = true, dominated = true;
  ExtFloat prev2 = ExtFloat::infinity(-1, ctx), prev0 = ExtFloat::infinity(1, ctx);
  for (const char* t : {"1e-15", "1e-12", "1e-9", "1e-6", "1e-3"}) {
    ExtFloat eps(t, ctx);
    ExtFloat s2 = modified_s2(bs, eps).entropy;
    ExtFloat s0 = smooth_s0(se, eps);
    mono = mono && s2 >= prev2 && s0 <= prev0;
    dominated = dominated && smooth_s2_optimal(bs, eps) >= s2;
    prev2 = s2;
    prev0 = s0;
  }
  s.check("smoothing monotone in eps", mono);
  s.check("optimal S2 dominates modified S2", dominated);

  bool sandwich = true;
  for (std::uint64_t n : {100ULL, 1000ULL, 10000ULL}) {
    ExtFloat bar("1e-9", ctx);
    ExtFloat hat = bar * ExtFloat("0.5", ctx);
    sandwich = sandwich && theorem2_bound(ch, n, bar, hat).value <= theorem2_upper(ch, n, bar);
  }
  s.check("lower bound below upper bound", sandwich);
}

void long_suite(Suite& s, const SelftestOptions& opt) {
  if (opt.precision_bits < 20000) {
    s.check("S2 raise-fill gap at 20000 bits", false, "needs --precision-bits >= 20000");
    return;
  }
  PrecisionContext ctx(opt.precision_bits);
  BlockSpectrumXE bs = block_spectrum_xe(build_channel(ExtFloat("0.05", ctx)), 10000);
  OptimalS2Result r = smooth_s2_optimal_detail(bs, ExtFloat("1e-16", ctx), true);
  double lg = (r.gap_bits.log2_abs() - r.entropy.log2_abs()) * std::log10(2.0);
  std::ostringstream d;
  d << "log10 rel gap " << lg;
  s.check("S2 raise-fill gap in [-5450, -5330]", !r.gap_bits.is_zero() && lg >= -5450 && lg <= -5330, d.str());
}

}  // namespace

bool run_selftest(const SelftestOptions& opt, std::ostream& out) {
  Suite s(out);
  oracle_suite(s, opt);
  invariant_suite(s, opt);
  if (opt.long_checks) long_suite(s, opt);
  out << (s.ok() ? "selftest passed" : "selftest FAILED") << "\n";
  return s.ok();
}

}  // namespace finitekey::cli
