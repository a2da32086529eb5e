#include "finitekey/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace finitekey {

namespace {

// MPFR keeps its exponent range per thread; widen it once per thread so
// values like e^n for n ~ 1e6 never saturate.
void ensure_exponent_range() {
  thread_local bool done = false;
  if (!done) {
    mpfr_set_emin(mpfr_get_emin_min());
    mpfr_set_emax(mpfr_get_emax_max());
    done = true;
  }
}

constexpr mpfr_rnd_t kRnd = MPFR_RNDN;
constexpr long kMinBits = 64;

mpfr_prec_t wider(const ExtFloat& a, const ExtFloat& b) {
  return std::max(mpfr_get_prec(a.raw()), mpfr_get_prec(b.raw()));
}

template <typename F>
ExtFloat unary(const ExtFloat& x, F f) {
  ExtFloat r(x.context());
  f(r.raw(), x.raw(), kRnd);
  return r;
}

}  // namespace

PrecisionContext::PrecisionContext(long mantissa_bits) : bits(mantissa_bits) {
  if (mantissa_bits < kMinBits) throw DomainError("precision must be at least 64 bits");
}

ExtFloat::ExtFloat() {
  ensure_exponent_range();
  mpfr_init2(v_, kMinBits);
  mpfr_set_zero(v_, 1);
}

ExtFloat::ExtFloat(const PrecisionContext& ctx) {
  ensure_exponent_range();
  mpfr_init2(v_, ctx.bits);
  mpfr_set_zero(v_, 1);
}

ExtFloat::ExtFloat(double v, const PrecisionContext& ctx) {
  ensure_exponent_range();
  mpfr_init2(v_, ctx.bits);
  mpfr_set_d(v_, v, kRnd);
}

ExtFloat::ExtFloat(long v, const PrecisionContext& ctx) {
  ensure_exponent_range();
  mpfr_init2(v_, ctx.bits);
  mpfr_set_si(v_, v, kRnd);
}

ExtFloat::ExtFloat(unsigned long v, const PrecisionContext& ctx) {
  ensure_exponent_range();
  mpfr_init2(v_, ctx.bits);
  mpfr_set_ui(v_, v, kRnd);
}

ExtFloat::ExtFloat(std::string_view text, const PrecisionContext& ctx) {
  ensure_exponent_range();
  mpfr_init2(v_, ctx.bits);
  std::string s(text);
  char* end = nullptr;
  if (!s.empty()) mpfr_strtofr(v_, s.c_str(), &end, 10, kRnd);
  if (s.empty() || end == s.c_str() || *end != '\0') {
    mpfr_clear(v_);
    throw DomainError("not a decimal number: '" + s + "'");
  }
}

ExtFloat::ExtFloat(const ExtFloat& other) {
  ensure_exponent_range();
  mpfr_init2(v_, mpfr_get_prec(other.v_));
  mpfr_set(v_, other.v_, kRnd);
}

ExtFloat::ExtFloat(ExtFloat&& other) noexcept {
  ensure_exponent_range();
  mpfr_init2(v_, kMinBits);
  mpfr_swap(v_, other.v_);
}

ExtFloat& ExtFloat::operator=(const ExtFloat& other) {
  if (this != &other) {
    if (mpfr_get_prec(v_) != mpfr_get_prec(other.v_)) mpfr_set_prec(v_, mpfr_get_prec(other.v_));
    mpfr_set(v_, other.v_, kRnd);
  }
  return *this;
}

ExtFloat& ExtFloat::operator=(ExtFloat&& other) noexcept {
  mpfr_swap(v_, other.v_);
  return *this;
}

ExtFloat::~ExtFloat() { mpfr_clear(v_); }

ExtFloat ExtFloat::pow2(long k, const PrecisionContext& ctx) {
  ExtFloat r(1L, ctx);
  mpfr_mul_2si(r.v_, r.v_, k, kRnd);
  return r;
}

ExtFloat ExtFloat::nan(const PrecisionContext& ctx) {
  ExtFloat r(ctx);
  mpfr_set_nan(r.v_);
  return r;
}

ExtFloat ExtFloat::infinity(int sign, const PrecisionContext& ctx) {
  ExtFloat r(ctx);
  mpfr_set_inf(r.v_, sign);
  return r;
}

int ExtFloat::sign() const { return mpfr_sgn(v_); }

double ExtFloat::to_double() const { return mpfr_get_d(v_, kRnd); }

double ExtFloat::log2_abs() const {
  if (is_zero()) return -INFINITY;
  if (!is_finite()) return is_nan() ? NAN : INFINITY;
  long e = 0;
  double d = mpfr_get_d_2exp(&e, v_, kRnd);
  return std::log2(std::fabs(d)) + static_cast<double>(e);
}

std::string ExtFloat::to_string(int significant_digits) const {
  if (is_nan()) return "nan";
  if (!is_finite()) return sign() > 0 ? "inf" : "-inf";
  char* buf = nullptr;
  mpfr_asprintf(&buf, "%.*Rg", significant_digits, v_);
  std::string s(buf);
  mpfr_free_str(buf);
  return s;
}

ExtFloat& ExtFloat::operator+=(const ExtFloat& b) {
  if (mpfr_get_prec(b.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(b.v_), kRnd);
  mpfr_add(v_, v_, b.v_, kRnd);
  return *this;
}

ExtFloat& ExtFloat::operator-=(const ExtFloat& b) {
  if (mpfr_get_prec(b.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(b.v_), kRnd);
  mpfr_sub(v_, v_, b.v_, kRnd);
  return *this;
}

ExtFloat& ExtFloat::operator*=(const ExtFloat& b) {
  if (mpfr_get_prec(b.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(b.v_), kRnd);
  mpfr_mul(v_, v_, b.v_, kRnd);
  return *this;
}

ExtFloat& ExtFloat::operator/=(const ExtFloat& b) {
  if (b.is_zero()) throw DomainError("division by zero");
  if (mpfr_get_prec(b.v_) > mpfr_get_prec(v_)) mpfr_prec_round(v_, mpfr_get_prec(b.v_), kRnd);
  mpfr_div(v_, v_, b.v_, kRnd);
  return *this;
}

ExtFloat& ExtFloat::mul(unsigned long k) {
  mpfr_mul_ui(v_, v_, k, kRnd);
  return *this;
}

ExtFloat& ExtFloat::div(unsigned long k) {
  if (k == 0) throw DomainError("division by zero");
  mpfr_div_ui(v_, v_, k, kRnd);
  return *this;
}

ExtFloat& ExtFloat::mul_2exp(long k) {
  mpfr_mul_2si(v_, v_, k, kRnd);
  return *this;
}

ExtFloat ExtFloat::operator-() const {
  ExtFloat r(*this);
  mpfr_neg(r.v_, r.v_, kRnd);
  return r;
}

ExtFloat operator+(const ExtFloat& a, const ExtFloat& b) {
  ExtFloat r(PrecisionContext(wider(a, b)));
  mpfr_add(r.raw(), a.raw(), b.raw(), kRnd);
  return r;
}

ExtFloat operator-(const ExtFloat& a, const ExtFloat& b) {
  ExtFloat r(PrecisionContext(wider(a, b)));
  mpfr_sub(r.raw(), a.raw(), b.raw(), kRnd);
  return r;
}

ExtFloat operator*(const ExtFloat& a, const ExtFloat& b) {
  ExtFloat r(PrecisionContext(wider(a, b)));
  mpfr_mul(r.raw(), a.raw(), b.raw(), kRnd);
  return r;
}

ExtFloat operator/(const ExtFloat& a, const ExtFloat& b) {
  if (b.is_zero()) throw DomainError("division by zero");
  ExtFloat r(PrecisionContext(wider(a, b)));
  mpfr_div(r.raw(), a.raw(), b.raw(), kRnd);
  return r;
}

int compare(const ExtFloat& a, const ExtFloat& b) { return mpfr_cmp(a.raw(), b.raw()); }

ExtFloat ln(const ExtFloat& x) {
  if (x.sign() <= 0) throw DomainError("ln of non-positive value");
  return unary(x, mpfr_log);
}

ExtFloat log2(const ExtFloat& x) {
  if (x.sign() <= 0) throw DomainError("log2 of non-positive value");
  return unary(x, mpfr_log2);
}

ExtFloat log10(const ExtFloat& x) {
  if (x.sign() <= 0) throw DomainError("log10 of non-positive value");
  return unary(x, mpfr_log10);
}

ExtFloat log1p(const ExtFloat& x) {
  if (mpfr_cmp_si(x.raw(), -1) <= 0) throw DomainError("log1p argument must exceed -1");
  return unary(x, mpfr_log1p);
}

ExtFloat exp(const ExtFloat& x) { return unary(x, mpfr_exp); }
ExtFloat exp2(const ExtFloat& x) { return unary(x, mpfr_exp2); }
ExtFloat exp10(const ExtFloat& x) { return unary(x, mpfr_exp10); }

ExtFloat sqrt(const ExtFloat& x) {
  if (x.sign() < 0) throw DomainError("sqrt of negative value");
  return unary(x, mpfr_sqrt);
}

ExtFloat pow(const ExtFloat& x, long k) {
  ExtFloat r(x.context());
  mpfr_pow_si(r.raw(), x.raw(), k, kRnd);
  return r;
}

ExtFloat pow(const ExtFloat& x, const ExtFloat& y) {
  if (x.sign() < 0) throw DomainError("pow of negative base");
  ExtFloat r(PrecisionContext(wider(x, y)));
  mpfr_pow(r.raw(), x.raw(), y.raw(), kRnd);
  return r;
}

ExtFloat abs(const ExtFloat& x) { return unary(x, mpfr_abs); }

ExtFloat floor(const ExtFloat& x) {
  ExtFloat r(x.context());
  mpfr_floor(r.raw(), x.raw());
  return r;
}

ExtFloat min(const ExtFloat& a, const ExtFloat& b) { return b < a ? b : a; }
ExtFloat max(const ExtFloat& a, const ExtFloat& b) { return a < b ? b : a; }

ExtFloat relative_difference(const ExtFloat& a, const ExtFloat& b) {
  if (b.is_zero()) return a.is_zero() ? ExtFloat(a.context()) : ExtFloat::infinity(1, a.context());
  return abs((a - b) / b);
}

ExtFloat binomial_row(std::uint64_t n, std::uint64_t k, const PrecisionContext& ctx) {
  if (k > n) throw DomainError("binomial_row requires k <= n");
  std::uint64_t j = std::min(k, n - k);
  ExtFloat c(1L, ctx);
  for (std::uint64_t i = 0; i < j; ++i) {
    c.mul(n - i);
    c.div(i + 1);
  }
  return c;
}

ExtFloat log_binomial(std::uint64_t n, std::uint64_t k, const PrecisionContext& ctx) {
  if (k > n) throw DomainError("log_binomial requires k <= n");
  PrecisionContext guard(ctx.bits + 64);
  auto lgam = [&](std::uint64_t v) {
    ExtFloat x(static_cast<unsigned long>(v) + 1UL, guard);
    ExtFloat r(guard);
    mpfr_lngamma(r.raw(), x.raw(), kRnd);
    return r;
  };
  return lgam(n) - lgam(k) - lgam(n - k);
}

ExtFloat binomial_seed(std::uint64_t n, std::uint64_t k, const PrecisionContext& ctx) {
  if (k > n) throw DomainError("binomial_seed requires k <= n");
  if (std::min(k, n - k) <= 64) return binomial_row(n, k, ctx);
  ExtFloat r(ctx);
  ExtFloat lb = log_binomial(n, k, ctx);
  mpfr_exp(r.raw(), lb.raw(), kRnd);
  return r;
}

ExtFloat log_sum(std::vector<ExtFloat> values) {
  if (values.empty()) throw DomainError("log_sum of an empty list");
  for (const auto& v : values)
    if (v.sign() < 0 || v.is_nan()) throw DomainError("log_sum requires non-negative values");
  std::sort(values.begin(), values.end(), [](const ExtFloat& a, const ExtFloat& b) { return a < b; });
  mpfr_prec_t prec = 0;
  for (const auto& v : values) prec = std::max(prec, mpfr_get_prec(v.raw()));
  ExtFloat total(PrecisionContext(static_cast<long>(prec)));
  for (const auto& v : values) total += v;
  if (total.is_zero()) throw DomainError("log_sum of all-zero values");
  return log2(total);
}

ExtFloat binary_entropy(const ExtFloat& p) {
  if (p.sign() < 0 || mpfr_cmp_ui(p.raw(), 1) > 0) throw DomainError("binary entropy needs p in [0, 1]");
  ExtFloat one(1L, p.context());
  ExtFloat q = one - p;
  ExtFloat h(p.context());
  if (!p.is_zero()) h -= p * log2(p);
  if (!q.is_zero()) h -= q * log2(q);
  return h;
}

double log_binomial_double(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace finitekey
