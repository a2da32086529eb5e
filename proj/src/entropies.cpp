#include "finitekey/entropies.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace finitekey {

namespace {

// Terms below sum * 2^-(P + kTailBits) are dropped once a walk has passed
// its peak; with log-concave terms the dropped tail stays far below 2^-P.
constexpr long kTailBits = 40;
// Window edges are placed where a level's mass falls below budget * 2^-(P + kWindowBits).
constexpr double kWindowBits = 64.0;

ExtFloat scaled(const ExtFloat& x, long shift) {
  ExtFloat r = x;
  r.mul_2exp(shift);
  return r;
}

bool negligible(const ExtFloat& term, const ExtFloat& sum, long prec) {
  return term < scaled(sum, -(prec + kTailBits));
}

// Smallest k in [0, hi] with log_mass(k) >= threshold, for log_mass
// increasing on [0, hi] and log_mass(hi) >= threshold.
std::uint64_t first_above(const BinomialLevels& lv, std::uint64_t hi, double threshold) {
  if (lv.log_mass(0) >= threshold) return 0;
  std::uint64_t lo = 0;
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    if (lv.log_mass(mid) >= threshold) hi = mid; else lo = mid;
  }
  return hi;
}

// Largest k in [lo, n] with log_mass(k) >= threshold, for log_mass
// decreasing on [lo, n] and log_mass(lo) >= threshold.
std::uint64_t last_above(const BinomialLevels& lv, std::uint64_t lo, double threshold) {
  std::uint64_t hi = lv.n;
  if (lv.log_mass(hi) >= threshold) return hi;
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    if (lv.log_mass(mid) >= threshold) lo = mid; else hi = mid;
  }
  return lo;
}

double window_threshold(const ExtFloat& budget, long prec) {
  if (budget.is_zero()) return -INFINITY;
  return budget.log2_abs() * std::log(2.0) - (static_cast<double>(prec) + kWindowBits) * std::log(2.0);
}

std::uint64_t binomial_mode(std::uint64_t n, double p) {
  double m = std::floor((static_cast<double>(n) + 1.0) * p);
  if (m < 0) m = 0;
  return std::min<std::uint64_t>(n, static_cast<std::uint64_t>(m));
}

void check_eps(const ExtFloat& eps) {
  if (eps.is_nan() || eps.sign() < 0 || mpfr_cmp_ui(eps.raw(), 1) >= 0)
    throw DomainError("smoothing parameter must lie in [0, 1)");
}

// Top flattening on an explicit increasing list. Returns the index of the
// lowest plateau entry.
struct TopFlatten {
  std::size_t plateau_low = 0;
  ExtFloat plateau_count;
  ExtFloat lambda_plus;
  ExtFloat mass_moved;
  std::uint64_t b_plus = 0;
};

TopFlatten flatten_top(const std::vector<SpectrumEntry>& en, const ExtFloat& h) {
  std::size_t idx = en.size() - 1;
  ExtFloat A = en[idx].value * en[idx].multiplicity;
  ExtFloat M = en[idx].multiplicity;
  std::uint64_t b = 0;
  while (idx > 0) {
    const auto& next = en[idx - 1];
    ExtFloat s_next = A - next.value * M;
    if (s_next > h) break;
    --idx;
    A += en[idx].value * en[idx].multiplicity;
    M += en[idx].multiplicity;
    ++b;
  }
  ExtFloat s_b = A - en[idx].value * M;
  TopFlatten t;
  t.plateau_low = idx;
  t.plateau_count = M;
  t.lambda_plus = en[idx].value - (h - s_b) / M;
  t.mass_moved = s_b + M * (en[idx].value - t.lambda_plus);
  t.b_plus = b;
  if (t.lambda_plus.sign() <= 0) throw DomainError("smoothing budget exceeds the spectrum");
  return t;
}

}  // namespace

ExtFloat renyi(const WeightedSpectrum& s, RenyiOrder order) {
  if (s.empty()) throw DomainError("Renyi entropy of an empty spectrum");
  auto ctx = s.trace().context();
  switch (order) {
    case RenyiOrder::zero:
      return log2(s.rank());
    case RenyiOrder::two: {
      ExtFloat sum(ctx);
      for (const auto& en : s.entries()) sum += en.multiplicity * en.value * en.value;
      return -log2(sum);
    }
    case RenyiOrder::infinity:
      return -log2(s.entries().back().value);
  }
  throw DomainError("unknown Renyi order");
}

ExtFloat renyi(const WeightedSpectrum& s, const ExtFloat& alpha) {
  if (s.empty()) throw DomainError("Renyi entropy of an empty spectrum");
  if (alpha.sign() < 0) throw DomainError("Renyi order must be non-negative");
  ExtFloat one(1L, alpha.context());
  if (alpha == one) throw DomainError("Renyi order 1 is not supported");
  if (alpha.is_zero()) return renyi(s, RenyiOrder::zero);
  ExtFloat sum(s.trace().context());
  for (const auto& en : s.entries()) sum += en.multiplicity * pow(en.value, alpha);
  return log2(sum) / (one - alpha);
}

ExtFloat full_state_s2(const BlockSpectrumXE& bs) {
  auto ctx = bs.channel.e.context();
  ExtFloat n_bits(static_cast<unsigned long>(bs.n), ctx);
  if (bs.degenerate) return n_bits;
  const auto& lv = bs.levels;
  long prec = ctx.bits;
  // Squared levels peak near k = n e^2 / ((1-e)^2 + e^2).
  double e = bs.channel.e.to_double();
  std::uint64_t k0 = binomial_mode(bs.n, e * e / ((1 - e) * (1 - e) + e * e));
  ExtFloat sum(ctx);
  auto up = lv.at(k0);
  ExtFloat prev = ExtFloat::infinity(1, ctx);
  for (;;) {
    ExtFloat t = up.mass() * up.value;
    sum += t;
    if (t <= prev && negligible(t, sum, prec)) break;
    prev = t;
    if (up.k == bs.n) break;
    up.up();
  }
  if (k0 > 0) {
    auto dn = lv.at(k0);
    prev = ExtFloat::infinity(1, ctx);
    do {
      dn.down();
      ExtFloat t = dn.mass() * dn.value;
      sum += t;
      if (t <= prev && negligible(t, sum, prec)) break;
      prev = t;
    } while (dn.k > 0);
  }
  return n_bits - log2(sum);
}

SmoothingResult modified_s2(const BlockSpectrumXE& bs, const ExtFloat& eps) {
  check_eps(eps);
  if (bs.degenerate) throw DomainError("modified S2 needs a non-degenerate spectrum");
  auto ctx = eps.context();
  long prec = ctx.bits;
  const auto& lv = bs.levels;
  const std::uint64_t n = bs.n;
  ExtFloat h = scaled(eps, -1);

  // Levels whose mass is far below h cannot change s_r at working precision.
  std::uint64_t k_lo = first_above(lv, binomial_mode(n, bs.channel.e.to_double()), window_threshold(h, prec));

  auto cur = lv.at(k_lo);
  ExtFloat A = cur.mass();
  ExtFloat Mw = cur.multiplicity;
  std::uint64_t b = k_lo;
  while (b < n) {
    auto nxt = cur;
    nxt.up();
    if (A - nxt.value * Mw > h) break;
    cur = nxt;
    A += cur.mass();
    Mw += cur.multiplicity;
    ++b;
  }

  // Multiplicities above the window still belong to the plateau.
  ExtFloat tail(ctx);
  if (k_lo > 0) {
    auto c = lv.at(k_lo - 1);
    for (;;) {
      tail += c.multiplicity;
      if (c.k == 0 || negligible(c.multiplicity, tail, prec)) break;
      c.down();
    }
  }
  ExtFloat M = Mw + tail;
  ExtFloat s_b = A - cur.value * Mw;

  SmoothingResult r;
  r.b_plus = b;
  r.lambda_plus = cur.value - (h - s_b) / M;
  r.mass_moved = s_b + M * (cur.value - r.lambda_plus);
  r.kernel_level = h / bs.m0;

  ExtFloat below(ctx);
  if (b < n) {
    auto c = cur;
    ExtFloat prev = ExtFloat::infinity(1, ctx);
    do {
      c.up();
      ExtFloat t = c.mass() * c.value;
      below += t;
      if (t <= prev && negligible(t, below, prec)) break;
      prev = t;
    } while (c.k < n);
  }
  r.block_sum = M * r.lambda_plus * r.lambda_plus + below + bs.m0 * r.kernel_level * r.kernel_level;
  r.entropy = ExtFloat(static_cast<unsigned long>(n), ctx) - log2(r.block_sum);
  return r;
}

SmoothingResult modified_s2(const WeightedSpectrum& block, std::uint64_t n, const ExtFloat& eps) {
  check_eps(eps);
  if (block.empty()) throw DomainError("modified S2 of an empty spectrum");
  if (block.kernel_dim().is_zero() && !eps.is_zero()) throw DomainError("modified S2 needs a kernel to raise");
  auto ctx = eps.context();
  ExtFloat h = scaled(eps, -1);
  const auto& en = block.entries();
  TopFlatten t = flatten_top(en, h);

  SmoothingResult r;
  r.b_plus = t.b_plus;
  r.lambda_plus = t.lambda_plus;
  r.mass_moved = t.mass_moved;
  r.kernel_level = eps.is_zero() ? ExtFloat(ctx) : h / block.kernel_dim();
  ExtFloat sum = t.plateau_count * t.lambda_plus * t.lambda_plus;
  for (std::size_t i = 0; i < t.plateau_low; ++i) sum += en[i].multiplicity * en[i].value * en[i].value;
  sum += block.kernel_dim() * r.kernel_level * r.kernel_level;
  r.block_sum = sum;
  r.entropy = ExtFloat(static_cast<unsigned long>(n), ctx) - log2(sum);
  return r;
}

OptimalS2Result smooth_s2_optimal_detail(const BlockSpectrumXE& bs, const ExtFloat& eps, bool resolve_gap) {
  SmoothingResult mod = modified_s2(bs, eps);
  auto ctx = eps.context();
  long prec = ctx.bits;
  const auto& lv = bs.levels;
  ExtFloat h = scaled(eps, -1);
  const ExtFloat& c0 = mod.kernel_level;

  OptimalS2Result out;
  out.entropy = mod.entropy;
  out.gap_bits = ExtFloat(ctx);
  out.raise_level = c0;
  if (h.is_zero()) return out;
  auto low = lv.at(bs.n);
  if (c0 <= low.value) return out;

  // The exact correction D obeys D <= 3 * 2^n * c0^2; skip the bottom walk
  // when even that is below the working resolution of the block sum.
  double bound_log2 = std::log2(3.0) + static_cast<double>(bs.n) + 2.0 * c0.log2_abs();
  if (!resolve_gap && bound_log2 < mod.block_sum.log2_abs() - static_cast<double>(prec + kTailBits)) return out;

  if (bs.n == mod.b_plus) throw DomainError("raise-fill reaches the flattened plateau");
  std::vector<SpectrumEntry> raised;
  ExtFloat M(ctx), A(ctx);
  ExtFloat level = c0;
  for (;;) {
    if (!(low.value < level)) break;
    if (low.k <= mod.b_plus) throw DomainError("raise-fill reaches the flattened plateau");
    raised.push_back({low.value, low.multiplicity});
    M += low.multiplicity;
    A += low.mass();
    level = (h + A) / (bs.m0 + M);
    if (low.k == 0) break;
    low.down();
  }

  // D (m0 + M) = m0 sum m (c0 - v)^2 + M sum m (v - mean)^2, all terms >= 0.
  ExtFloat mean = A / M;
  ExtFloat spread_c(ctx), spread_mean(ctx);
  for (const auto& en : raised) {
    ExtFloat dc = c0 - en.value;
    ExtFloat dm = en.value - mean;
    spread_c += en.multiplicity * dc * dc;
    spread_mean += en.multiplicity * dm * dm;
  }
  ExtFloat D = (bs.m0 * spread_c + M * spread_mean) / (bs.m0 + M);
  ExtFloat ln2(ctx);
  mpfr_const_log2(ln2.raw(), MPFR_RNDN);
  out.gap_bits = -log1p(-(D / mod.block_sum)) / ln2;
  out.entropy = mod.entropy + out.gap_bits;
  out.raised_levels = raised.size();
  out.raise_level = level;
  return out;
}

ExtFloat smooth_s2_optimal(const BlockSpectrumXE& bs, const ExtFloat& eps) {
  return smooth_s2_optimal_detail(bs, eps).entropy;
}

ExtFloat smooth_s2_optimal(const WeightedSpectrum& block, std::uint64_t n, const ExtFloat& eps) {
  check_eps(eps);
  if (block.empty()) throw DomainError("optimal S2 of an empty spectrum");
  auto ctx = eps.context();
  ExtFloat h = scaled(eps, -1);
  const auto& en = block.entries();
  TopFlatten t = flatten_top(en, h);

  // Raise the floor: kernel first, then positive entries from the bottom.
  ExtFloat count = block.kernel_dim();
  ExtFloat mass(ctx);
  std::size_t raised = 0;
  ExtFloat level = count.is_zero() ? ExtFloat(ctx) : h / count;
  while (raised < t.plateau_low && (count.is_zero() || en[raised].value < level)) {
    count += en[raised].multiplicity;
    mass += en[raised].multiplicity * en[raised].value;
    level = (h + mass) / count;
    ++raised;
  }
  if (raised == t.plateau_low && t.plateau_low > 0 && level > t.lambda_plus)
    throw DomainError("raise-fill reaches the flattened plateau");

  ExtFloat sum = t.plateau_count * t.lambda_plus * t.lambda_plus;
  for (std::size_t i = raised; i < t.plateau_low; ++i) sum += en[i].multiplicity * en[i].value * en[i].value;
  if (!h.is_zero()) sum += count * level * level;
  else for (std::size_t i = 0; i < raised; ++i) sum += en[i].multiplicity * en[i].value * en[i].value;
  return ExtFloat(static_cast<unsigned long>(n), ctx) - log2(sum);
}

namespace {

// Cut budget widened by a few ulp: an eigenvalue mass that equals the
// budget in exact arithmetic (decimal inputs make this common) is cut
// regardless of how the sums happened to round.
ExtFloat with_tie_slack(const ExtFloat& h) { return h + scaled(h, 16 - h.precision()); }

}  // namespace

ExtFloat smooth_s0(const WeightedSpectrum& s, const ExtFloat& eps) {
  if (eps.is_nan() || eps.sign() < 0) throw DomainError("smoothing parameter must be non-negative");
  if (s.empty()) throw DomainError("S0 of an empty spectrum");
  ExtFloat h = scaled(eps, -1);
  if (h >= s.trace()) throw DomainError("smoothing budget covers the whole trace");
  h = with_tie_slack(h);
  const auto& en = s.entries();
  ExtFloat cum(eps.context());
  std::size_t i = 0;
  ExtFloat partial(eps.context());
  for (; i < en.size(); ++i) {
    ExtFloat m = en[i].value * en[i].multiplicity;
    if (cum + m <= h) {
      cum += m;
      continue;
    }
    partial = floor((h - cum) / en[i].value);
    break;
  }
  ExtFloat rank(eps.context());
  for (std::size_t j = i; j < en.size(); ++j) rank += en[j].multiplicity;
  rank -= partial;
  return log2(rank);
}

ExtFloat smooth_s0(const SpectrumE& s, const ExtFloat& eps) {
  if (eps.is_nan() || eps.sign() < 0) throw DomainError("smoothing parameter must be non-negative");
  auto ctx = eps.context();
  if (mpfr_cmp_ui(eps.raw(), 2) >= 0) throw DomainError("smoothing budget covers the whole trace");
  if (s.degenerate) return ExtFloat(ctx);
  long prec = ctx.bits;
  const auto& lv = s.levels;
  const std::uint64_t n = s.n;
  ExtFloat h = scaled(eps, -1);
  ExtFloat four_n = s.dimension();
  if (h.is_zero()) return log2(four_n);

  // Levels beyond the window carry mass far below h; they are cut.
  std::uint64_t mode = binomial_mode(n, 1.5 * s.channel.e.to_double());
  std::uint64_t j_hi = last_above(lv, mode, window_threshold(h, prec));

  h = with_tie_slack(h);
  auto cur = lv.at(j_hi);
  ExtFloat cum(ctx);
  ExtFloat partial(ctx);
  for (;;) {
    ExtFloat m = cur.mass();
    if (cum + m <= h) {
      cum += m;
      if (cur.k == 0) throw DomainError("smoothing budget covers the whole trace");
      cur.down();
      continue;
    }
    partial = floor((h - cum) / cur.value);
    break;
  }
  const std::uint64_t j_star = cur.k;

  // Kept multiplicity sum over j <= j_star. Terms 3^j C(n, j) grow up to
  // j ~ 3n/4, so sum downward below that and use the complement above it.
  ExtFloat kept(ctx);
  if (4 * j_star <= 3 * n) {
    auto c = cur;
    ExtFloat prev = ExtFloat::infinity(1, ctx);
    for (;;) {
      kept += c.multiplicity;
      if (c.multiplicity <= prev && negligible(c.multiplicity, kept, prec)) break;
      prev = c.multiplicity;
      if (c.k == 0) break;
      c.down();
    }
  } else {
    ExtFloat upper(ctx);
    if (j_star < n) {
      auto c = cur;
      ExtFloat prev = ExtFloat::infinity(1, ctx);
      do {
        c.up();
        upper += c.multiplicity;
        if (c.multiplicity <= prev && negligible(c.multiplicity, upper, prec)) break;
        prev = c.multiplicity;
      } while (c.k < n);
    }
    kept = four_n - upper;
  }
  return log2(kept - partial);
}

TheoremTwoBound theorem2_bound(const ChannelModel& ch, std::uint64_t n, const ExtFloat& eps_bar,
                               const ExtFloat& eps_hat, FloorAccounting floor_mode) {
  if (eps_hat.sign() < 0 || eps_hat > eps_bar) throw DomainError("need 0 <= eps_hat <= eps_bar");
  check_eps(eps_bar);
  auto ctx = eps_bar.context();
  TheoremTwoBound t;
  t.epsilon_hat = eps_hat;
  t.floor_shift = scaled(eps_hat, -(2 * static_cast<long>(n) + 1));
  BlockSpectrumXE bs = block_spectrum_xe(ch, n);
  SpectrumE se = spectrum_e(ch, n);
  if (bs.degenerate) {
    t.s2bar = full_state_s2(bs);
    t.s0 = ExtFloat(ctx);
  } else {
    t.s2bar = modified_s2(bs, eps_bar - eps_hat).entropy;
    if (floor_mode == FloorAccounting::charged)
      t.s0 = smooth_s0(shift_spectrum(se, t.floor_shift), eps_hat);
    else
      t.s0 = smooth_s0(se, eps_hat);
  }
  t.value = t.s2bar - t.s0 - eps_hat;
  return t;
}

ExtFloat theorem2_upper(const ChannelModel& ch, std::uint64_t n, const ExtFloat& eps_bar) {
  BlockSpectrumXE bs = block_spectrum_xe(ch, n);
  return smooth_s2_optimal(bs, eps_bar) - smooth_s0(spectrum_e(ch, n), eps_bar);
}

ExtFloat aep_entropy(const ExtFloat& e) {
  auto ctx = e.context();
  ExtFloat one(1L, ctx);
  if (e.sign() < 0 || e >= ExtFloat(2L, ctx) / ExtFloat(3L, ctx))
    throw DomainError("AEP entropy needs e in [0, 2/3)");
  ExtFloat q = (one - ExtFloat(3L, ctx) * scaled(e, -1)) / (one - e);
  return (one - e) * (one - binary_entropy(q));
}

}  // namespace finitekey
