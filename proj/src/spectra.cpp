#include "finitekey/spectra.hpp"

#include <algorithm>
#include <cmath>

namespace finitekey {

ChannelModel build_channel(const ExtFloat& e) {
  if (e.is_nan() || e.sign() < 0 || mpfr_cmp_d(e.raw(), 0.5) >= 0)
    throw DomainError("QBER must lie in [0, 1/2), got " + e.to_string(10));
  auto ctx = e.context();
  ExtFloat half_e = e;
  half_e.mul_2exp(-1);
  ExtFloat l0 = ExtFloat(1L, ctx) - ExtFloat(3L, ctx) * half_e;
  return ChannelModel{e, {l0, half_e, half_e, half_e}};
}

WeightedSpectrum::WeightedSpectrum(std::vector<SpectrumEntry> entries, ExtFloat kernel_dim)
    : entries_(std::move(entries)), kernel_dim_(std::move(kernel_dim)) {
  if (kernel_dim_.sign() < 0) throw DomainError("kernel dimension must be non-negative");
  long prec = kernel_dim_.precision();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].value.sign() <= 0) throw DomainError("spectrum entries must be positive");
    if (entries_[i].multiplicity.sign() <= 0) throw DomainError("multiplicities must be positive");
    if (i > 0 && !(entries_[i - 1].value < entries_[i].value))
      throw DomainError("spectrum entries must be strictly increasing");
    prec = std::max(prec, entries_[i].value.precision());
  }
  trace_ = ExtFloat(PrecisionContext(prec));
  for (const auto& en : entries_) trace_ += en.value * en.multiplicity;
}

WeightedSpectrum WeightedSpectrum::from_unsorted(std::vector<SpectrumEntry> entries, ExtFloat kernel_dim) {
  std::sort(entries.begin(), entries.end(),
            [](const SpectrumEntry& x, const SpectrumEntry& y) { return x.value < y.value; });
  std::vector<SpectrumEntry> merged;
  for (auto& en : entries) {
    if (en.value.sign() < 0) throw DomainError("negative eigenvalue in spectrum");
    if (en.value.is_zero()) {
      kernel_dim += en.multiplicity;
      continue;
    }
    if (!merged.empty() && merged.back().value == en.value)
      merged.back().multiplicity += en.multiplicity;
    else
      merged.push_back(std::move(en));
  }
  return WeightedSpectrum(std::move(merged), std::move(kernel_dim));
}

ExtFloat WeightedSpectrum::rank() const {
  ExtFloat r(kernel_dim_.context());
  for (const auto& en : entries_) r += en.multiplicity;
  return r;
}

BinomialLevels make_levels(std::uint64_t n, const ExtFloat& a, const ExtFloat& b, unsigned long w) {
  BinomialLevels lv;
  lv.n = n;
  lv.a = a;
  lv.b = b;
  lv.w = w;
  lv.ratio_up = b / a;
  lv.ratio_down = a / b;
  return lv;
}

ExtFloat BinomialLevels::value(std::uint64_t k) const {
  ExtFloat r(a.context());
  ExtFloat t(a.context());
  mpfr_pow_ui(r.raw(), a.raw(), n - k, MPFR_RNDN);
  mpfr_pow_ui(t.raw(), b.raw(), k, MPFR_RNDN);
  return r * t;
}

ExtFloat BinomialLevels::multiplicity(std::uint64_t k) const {
  ExtFloat c = binomial_seed(n, k, a.context());
  if (w != 1) {
    ExtFloat wk(w, a.context());
    mpfr_pow_ui(wk.raw(), wk.raw(), k, MPFR_RNDN);
    c *= wk;
  }
  return c;
}

double BinomialLevels::log_value(std::uint64_t k) const {
  double la = std::log(a.to_double());
  double lb = std::log(b.to_double());
  return static_cast<double>(n - k) * la + static_cast<double>(k) * lb;
}

double BinomialLevels::log_mass(std::uint64_t k) const {
  return log_binomial_double(static_cast<double>(n), static_cast<double>(k)) +
         static_cast<double>(k) * std::log(static_cast<double>(w)) + log_value(k);
}

BinomialLevels::Cursor BinomialLevels::at(std::uint64_t k) const {
  if (k > n) throw DomainError("level index out of range");
  return Cursor{this, k, value(k), multiplicity(k)};
}

void BinomialLevels::Cursor::up() {
  multiplicity.mul(levels->w);
  multiplicity.mul(levels->n - k);
  multiplicity.div(k + 1);
  value *= levels->ratio_up;
  ++k;
}

void BinomialLevels::Cursor::down() {
  multiplicity.mul(k);
  multiplicity.div(levels->w);
  multiplicity.div(levels->n - k + 1);
  value *= levels->ratio_down;
  --k;
}

std::vector<SpectrumEntry> BinomialLevels::materialize() const {
  std::vector<SpectrumEntry> out;
  out.reserve(n + 1);
  auto c = at(n);
  for (;;) {
    out.push_back({c.value, c.multiplicity});
    if (c.k == 0) break;
    c.down();
  }
  return out;
}

BlockSpectrumXE block_spectrum_xe(const ChannelModel& ch, std::uint64_t n) {
  if (n < 1) throw DomainError("block spectrum needs n >= 1");
  auto ctx = ch.e.context();
  BlockSpectrumXE bs;
  bs.channel = ch;
  bs.n = n;
  bs.degenerate = ch.noiseless();
  ExtFloat four_n = ExtFloat::pow2(2 * static_cast<long>(n), ctx);
  bs.m0 = bs.degenerate ? four_n - ExtFloat(1L, ctx) : four_n - ExtFloat::pow2(static_cast<long>(n), ctx);
  if (!bs.degenerate) bs.levels = make_levels(n, ExtFloat(1L, ctx) - ch.e, ch.e, 1);
  return bs;
}

WeightedSpectrum BlockSpectrumXE::base() const {
  auto ctx = channel.e.context();
  if (degenerate) return WeightedSpectrum({{ExtFloat(1L, ctx), ExtFloat(1L, ctx)}}, m0);
  return WeightedSpectrum(levels.materialize(), m0);
}

SpectrumE spectrum_e(const ChannelModel& ch, std::uint64_t n) {
  if (n < 1) throw DomainError("spectrum of rho_E needs n >= 1");
  SpectrumE s;
  s.channel = ch;
  s.n = n;
  s.degenerate = ch.noiseless();
  if (!s.degenerate) s.levels = make_levels(n, ch.lambda[0], ch.lambda[1], 3);
  return s;
}

ExtFloat SpectrumE::dimension() const {
  return ExtFloat::pow2(2 * static_cast<long>(n), channel.e.context());
}

WeightedSpectrum SpectrumE::base() const {
  auto ctx = channel.e.context();
  ExtFloat one(1L, ctx);
  if (degenerate) return WeightedSpectrum({{one, one}}, dimension() - one);
  return WeightedSpectrum(levels.materialize(), ExtFloat(ctx));
}

WeightedSpectrum shift_spectrum(const SpectrumE& s, const ExtFloat& delta) {
  if (delta.sign() < 0) throw DomainError("spectrum shift must be non-negative");
  WeightedSpectrum b = s.base();
  if (delta.is_zero()) return b;
  std::vector<SpectrumEntry> shifted;
  shifted.reserve(b.size() + 1);
  if (!b.kernel_dim().is_zero()) shifted.push_back({delta, b.kernel_dim()});
  for (const auto& en : b.entries()) shifted.push_back({en.value + delta, en.multiplicity});
  return WeightedSpectrum::from_unsorted(std::move(shifted), ExtFloat(delta.context()));
}

}  // namespace finitekey
