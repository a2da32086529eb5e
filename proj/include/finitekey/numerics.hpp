#pragma once

#include <mpfr.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace finitekey {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct PrecisionContext {
  long bits = 256;

  PrecisionContext() = default;
  explicit PrecisionContext(long mantissa_bits);
};

// MPFR-backed real with value semantics. Every value carries its own
// precision; binary operations round to the larger operand precision.
// Copy assignment adopts the precision of the source.
class ExtFloat {
 public:
  ExtFloat();
  explicit ExtFloat(const PrecisionContext& ctx);
  ExtFloat(double v, const PrecisionContext& ctx);
  ExtFloat(long v, const PrecisionContext& ctx);
  ExtFloat(unsigned long v, const PrecisionContext& ctx);
  ExtFloat(int v, const PrecisionContext& ctx) : ExtFloat(static_cast<long>(v), ctx) {}
  // Decimal or scientific literal ("1e-9", "0.05"), correctly rounded.
  ExtFloat(std::string_view text, const PrecisionContext& ctx);

  ExtFloat(const ExtFloat& other);
  ExtFloat(ExtFloat&& other) noexcept;
  ExtFloat& operator=(const ExtFloat& other);
  ExtFloat& operator=(ExtFloat&& other) noexcept;
  ~ExtFloat();

  static ExtFloat pow2(long k, const PrecisionContext& ctx);
  static ExtFloat nan(const PrecisionContext& ctx);
  static ExtFloat infinity(int sign, const PrecisionContext& ctx);

  long precision() const { return static_cast<long>(mpfr_get_prec(v_)); }
  PrecisionContext context() const { return PrecisionContext(precision()); }
  int sign() const;
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  bool is_nan() const { return mpfr_nan_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }

  double to_double() const;
  // log2 of |x| as a double; usable far outside the double exponent range.
  double log2_abs() const;
  std::string to_string(int significant_digits = 20) const;

  ExtFloat& operator+=(const ExtFloat& b);
  ExtFloat& operator-=(const ExtFloat& b);
  ExtFloat& operator*=(const ExtFloat& b);
  ExtFloat& operator/=(const ExtFloat& b);
  ExtFloat& mul(unsigned long k);
  ExtFloat& div(unsigned long k);
  ExtFloat& mul_2exp(long k);

  ExtFloat operator-() const;

  mpfr_srcptr raw() const { return v_; }
  mpfr_ptr raw() { return v_; }

 private:
  mpfr_t v_;
};

ExtFloat operator+(const ExtFloat& a, const ExtFloat& b);
ExtFloat operator-(const ExtFloat& a, const ExtFloat& b);
ExtFloat operator*(const ExtFloat& a, const ExtFloat& b);
ExtFloat operator/(const ExtFloat& a, const ExtFloat& b);

int compare(const ExtFloat& a, const ExtFloat& b);
inline bool operator<(const ExtFloat& a, const ExtFloat& b) { return mpfr_less_p(a.raw(), b.raw()); }
inline bool operator>(const ExtFloat& a, const ExtFloat& b) { return mpfr_greater_p(a.raw(), b.raw()); }
inline bool operator<=(const ExtFloat& a, const ExtFloat& b) { return mpfr_lessequal_p(a.raw(), b.raw()); }
inline bool operator>=(const ExtFloat& a, const ExtFloat& b) { return mpfr_greaterequal_p(a.raw(), b.raw()); }
inline bool operator==(const ExtFloat& a, const ExtFloat& b) { return mpfr_equal_p(a.raw(), b.raw()); }
inline bool operator!=(const ExtFloat& a, const ExtFloat& b) { return !(a == b); }

ExtFloat ln(const ExtFloat& x);
ExtFloat log2(const ExtFloat& x);
ExtFloat log10(const ExtFloat& x);
ExtFloat log1p(const ExtFloat& x);
ExtFloat exp(const ExtFloat& x);
ExtFloat exp2(const ExtFloat& x);
ExtFloat exp10(const ExtFloat& x);
ExtFloat sqrt(const ExtFloat& x);
ExtFloat pow(const ExtFloat& x, long k);
ExtFloat pow(const ExtFloat& x, const ExtFloat& y);
ExtFloat abs(const ExtFloat& x);
ExtFloat floor(const ExtFloat& x);
ExtFloat min(const ExtFloat& a, const ExtFloat& b);
ExtFloat max(const ExtFloat& a, const ExtFloat& b);

// |a - b| / |b|, with 0 when both vanish.
ExtFloat relative_difference(const ExtFloat& a, const ExtFloat& b);

// C(n, k) by the running product C(n, j+1) = C(n, j)(n - j)/(j + 1),
// started from the nearer end of the row.
ExtFloat binomial_row(std::uint64_t n, std::uint64_t k, const PrecisionContext& ctx);

// Natural log of C(n, k) through lgamma, evaluated with guard bits so the
// exponentiated value keeps full working precision for n up to ~1e12.
ExtFloat log_binomial(std::uint64_t n, std::uint64_t k, const PrecisionContext& ctx);
ExtFloat binomial_seed(std::uint64_t n, std::uint64_t k, const PrecisionContext& ctx);

// log2 of the sum of non-negative values, summed smallest first.
ExtFloat log_sum(std::vector<ExtFloat> values);

// Binary Shannon entropy in bits, h(0) = h(1) = 0.
ExtFloat binary_entropy(const ExtFloat& p);

// Natural log of C(n, k) in double precision, for locating summation windows.
double log_binomial_double(double n, double k);

}  // namespace finitekey
