#include "finitekey/keyrates.hpp"

#include <string>

#include "finitekey/spectra.hpp"

namespace finitekey {

std::string_view to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::renyi: return "renyi";
    case BoundKind::sre: return "sre";
    case BoundKind::aep: return "aep";
  }
  return "?";
}

BoundKind parse_bound_kind(std::string_view name) {
  if (name == "renyi") return BoundKind::renyi;
  if (name == "sre") return BoundKind::sre;
  if (name == "aep") return BoundKind::aep;
  throw DomainError("unknown bound kind '" + std::string(name) + "'");
}

SecurityBudget SecurityBudget::from_parts(const ExtFloat& total, const ExtFloat& ec, const ExtFloat& pe,
                                          const ExtFloat& pa, std::optional<ExtFloat> eps_hat) {
  SecurityBudget b;
  b.eps_total = total;
  b.eps_ec = ec;
  b.eps_pe = pe;
  b.eps_pa = pa;
  b.eps_bar = total - ec - pe - pa;
  if (eps_hat) {
    b.eps_hat = *eps_hat;
  } else {
    b.eps_hat = b.eps_bar;
    b.eps_hat.mul_2exp(-1);
  }
  b.validate();
  return b;
}

void SecurityBudget::validate() const {
  for (const ExtFloat* v : {&eps_total, &eps_ec, &eps_pe, &eps_pa, &eps_bar})
    if (!(v->sign() > 0)) throw InfeasibleError("security budget components must be positive");
  if (mpfr_cmp_ui(eps_total.raw(), 1) >= 0) throw InfeasibleError("eps_total must be below 1");
  ExtFloat sum = eps_pe + eps_pa + eps_bar + eps_ec;
  ExtFloat tol = eps_total;
  tol.mul_2exp(-(eps_total.precision() - 8));
  if (abs(sum - eps_total) > tol) throw InfeasibleError("security budget does not add up to eps_total");
  if (eps_hat.sign() < 0 || eps_hat > eps_bar) throw InfeasibleError("eps_hat must lie in [0, eps_bar]");
}

namespace {

// Floor that treats values within a few ulp below an integer as that
// integer, so decimal inputs such as p_z = 0.8 give the exact counts.
ExtFloat floor_snapped(const ExtFloat& x) {
  return floor(x + x * ExtFloat::pow2(8 - x.precision(), x.context()));
}

}  // namespace

SiftCounts accounting(const ProtocolParams& p) {
  auto ctx = p.p_z.context();
  ExtFloat one(1L, ctx);
  if (p.N < 1) throw InfeasibleError("N must be positive");
  if (ExtFloat(3L, ctx) * p.p_z < one || p.p_z >= one) throw DomainError("p_z must lie in [1/3, 1)");
  ExtFloat N(static_cast<unsigned long>(p.N), ctx);
  ExtFloat px = one - p.p_z;
  px.mul_2exp(-1);
  ExtFloat nz = floor_snapped(N * p.p_z * p.p_z);
  ExtFloat m = floor_snapped(N * px * px);
  SiftCounts c;
  c.n_z = mpfr_get_ui(nz.raw(), MPFR_RNDN);
  c.m = mpfr_get_ui(m.raw(), MPFR_RNDN);
  if (c.n_z <= c.m) throw InfeasibleError("no key bits left after parameter estimation");
  c.n = c.n_z - c.m;
  return c;
}

ExtFloat zeta(const ExtFloat& eps_pe, std::uint64_t m) {
  if (m < 1) throw InfeasibleError("parameter estimation needs m >= 1");
  auto ctx = eps_pe.context();
  if (!(eps_pe.sign() > 0) || mpfr_cmp_ui(eps_pe.raw(), 1) > 0) throw DomainError("eps_pe must lie in (0, 1]");
  ExtFloat mm(static_cast<unsigned long>(m), ctx);
  ExtFloat num = -ln(eps_pe) + ExtFloat(2L, ctx) * ln(mm + ExtFloat(1L, ctx));
  return sqrt(num / (ExtFloat(8L, ctx) * mm));
}

ExtFloat leak_ec(std::uint64_t n, const ExtFloat& e, const ExtFloat& f_ec, const ExtFloat& eps_ec) {
  auto ctx = e.context();
  if (!(eps_ec.sign() > 0)) throw DomainError("eps_ec must be positive");
  return f_ec * ExtFloat(static_cast<unsigned long>(n), ctx) * binary_entropy(e) +
         log2(ExtFloat(2L, ctx) / eps_ec);
}

namespace {

RateBreakdown common_terms(BoundKind kind, const ProtocolParams& p, const SecurityBudget& b) {
  b.validate();
  auto ctx = p.e_m.context();
  if (p.e_m.sign() < 0) throw DomainError("measured QBER must be non-negative");
  RateBreakdown r;
  r.kind = kind;
  r.N = p.N;
  SiftCounts c = accounting(p);
  r.n = c.n;
  r.m = c.m;
  r.zeta = zeta(b.eps_pe, c.m);
  r.e_bound = p.e_m + ExtFloat(2L, ctx) * r.zeta;
  if (mpfr_cmp_d(r.e_bound.raw(), 0.5) >= 0) throw InfeasibleError("QBER bound reaches 1/2");
  r.leak = leak_ec(c.n, r.e_bound, p.f_ec, b.eps_ec);
  r.pa_term = ExtFloat(2L, ctx) * log2(ExtFloat(2L, ctx) * b.eps_pa);
  r.s2_term = ExtFloat(ctx);
  r.s0_term = ExtFloat(ctx);
  return r;
}

void finish(RateBreakdown& r) {
  r.ell = r.entropy_term - r.leak + r.pa_term;
  r.rate = r.ell / ExtFloat(static_cast<unsigned long>(r.N), r.ell.context());
}

}  // namespace

RateBreakdown rate_renyi(const ProtocolParams& p, const SecurityBudget& b, const RateOptions& opt) {
  RateBreakdown r = common_terms(BoundKind::renyi, p, b);
  TheoremTwoBound t = theorem2_bound(build_channel(r.e_bound), r.n, b.eps_bar, b.eps_hat, opt.floor);
  r.s2_term = t.s2bar;
  r.s0_term = t.s0;
  r.entropy_term = t.value;
  finish(r);
  return r;
}

RateBreakdown rate_sre(const ProtocolParams& p, const SecurityBudget& b, const RateOptions&) {
  RateBreakdown r = common_terms(BoundKind::sre, p, b);
  ExtFloat eps_prime = b.eps_bar * b.eps_bar;
  eps_prime.mul_2exp(-1);
  ChannelModel ch = build_channel(r.e_bound);
  r.s2_term = smooth_s2_optimal(block_spectrum_xe(ch, r.n), eps_prime);
  r.s0_term = smooth_s0(spectrum_e(ch, r.n), eps_prime);
  r.entropy_term = r.s2_term - r.s0_term;
  finish(r);
  return r;
}

RateBreakdown rate_aep(const ProtocolParams& p, const SecurityBudget& b, const RateOptions& opt) {
  RateBreakdown r = common_terms(BoundKind::aep, p, b);
  auto ctx = p.e_m.context();
  ExtFloat n(static_cast<unsigned long>(r.n), ctx);
  ExtFloat penalty = ExtFloat(opt.aep_coefficient, ctx) * sqrt(log2(ExtFloat(2L, ctx) / b.eps_bar) / n);
  r.entropy_term = n * (aep_entropy(r.e_bound) - penalty);
  finish(r);
  return r;
}

RateBreakdown evaluate_rate(BoundKind kind, const ProtocolParams& p, const SecurityBudget& b,
                            const RateOptions& opt) {
  switch (kind) {
    case BoundKind::renyi: return rate_renyi(p, b, opt);
    case BoundKind::sre: return rate_sre(p, b, opt);
    case BoundKind::aep: return rate_aep(p, b, opt);
  }
  throw DomainError("unknown bound kind");
}

}  // namespace finitekey
