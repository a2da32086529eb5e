#include <cmath>

#include "finitekey/keyrates.hpp"
#include "test_util.hpp"

using namespace finitekey;
using fk_test::ext;
using fk_test::rel_close;

namespace {

ProtocolParams params(std::uint64_t N, const char* e_m, const char* p_z = "0.8") {
  return ProtocolParams{N, ext(p_z), ext(e_m), ext("1.2")};
}

SecurityBudget paper_budget() {
  // eps_total 1e-9 with eps_ec 1e-10; the rest split evenly.
  return SecurityBudget::from_parts(ext("1e-9"), ext("1e-10"), ext("3e-10"), ext("3e-10"));
}

}  // namespace

TEST_SUITE("keyrates") {
  TEST_CASE("bound kind names") {
    for (BoundKind k : {BoundKind::renyi, BoundKind::sre, BoundKind::aep}) CHECK(parse_bound_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_bound_kind("shannon"), DomainError);
  }

  TEST_CASE("budget bookkeeping") {
    SecurityBudget b = paper_budget();
    CHECK(rel_close(b.eps_bar, "3e-10", "1e-60"));
    CHECK(rel_close(b.eps_hat, "1.5e-10", "1e-60"));
    CHECK_THROWS_AS(SecurityBudget::from_parts(ext("1e-9"), ext("1e-10"), ext("5e-10"), ext("5e-10")),
                    InfeasibleError);
    CHECK_THROWS_AS(SecurityBudget::from_parts(ext("1e-9"), ext("1e-10"), ext("3e-10"), ext("3e-10"), ext("4e-10")),
                    InfeasibleError);
  }

  TEST_CASE("sifting accounting") {
    SiftCounts c = accounting(params(1000000, "0.01"));
    CHECK(c.n_z == 640000);
    CHECK(c.m == 10000);
    CHECK(c.n == 630000);

    // Products that are integers in exact arithmetic must not round down.
    for (std::uint64_t N : {200000ULL, 3000000ULL, 7000000ULL}) {
      SiftCounts s = accounting(params(N, "0.01"));
      CHECK(s.n_z == N / 25 * 16);
      CHECK(s.m == N / 100);
    }
    SiftCounts odd = accounting(params(1001, "0.01", "0.7"));
    CHECK(odd.n_z == 490);
    CHECK(odd.m == 22);

    ProtocolParams unbiased = params(900, "0.01");
    unbiased.p_z = ext("1") / ext("3");
    CHECK_THROWS(accounting(unbiased));
    CHECK_THROWS_AS(accounting(params(1000, "0.01", "1")), DomainError);
    CHECK_THROWS_AS(accounting(params(0, "0.01")), InfeasibleError);
  }

  TEST_CASE("zeta") {
    CHECK(rel_close(zeta(ext("1"), 1), "0.4162773055788488781765823224476005238153", "1e-36"));
    CHECK(zeta(ext("1e-10"), 100000000) < ext("1e-3"));
    ExtFloat prev = zeta(ext("1e-10"), 10);
    for (std::uint64_t m : {100ULL, 1000ULL, 100000ULL, 10000000ULL}) {
      ExtFloat z = zeta(ext("1e-10"), m);
      CHECK(z < prev);
      prev = z;
    }
    CHECK_THROWS_AS(zeta(ext("1e-10"), 0), InfeasibleError);
  }

  TEST_CASE("error-correction leakage") {
    CHECK(leak_ec(1000, ext("0"), ext("1.2"), ext("0.5")) == ext("2"));
    CHECK(rel_close(leak_ec(1000, ext("0.05"), ext("1.2"), ext("1e-10")),
                    "377.8956294880209779984743675683708709258", "1e-36"));
  }

  TEST_CASE("breakdown adds up") {
    for (BoundKind k : {BoundKind::renyi, BoundKind::sre, BoundKind::aep}) {
      RateBreakdown r = evaluate_rate(k, params(1000000, "0.01", "0.6"), paper_budget());
      CHECK(r.kind == k);
      CHECK(r.n == 320000);
      CHECK(r.m == 40000);
      CHECK(r.e_bound == ext("0.01") + ext("2") * r.zeta);
      CHECK(r.ell == r.entropy_term - r.leak + r.pa_term);
      CHECK(rel_close(r.rate * ext("1000000"), r.ell, "1e-70"));
      CHECK(r.rate.sign() > 0);
    }
  }

  TEST_CASE("eps_pa = 1/2 removes the hashing penalty") {
    SecurityBudget b = SecurityBudget::from_parts(ext("0.9"), ext("0.1"), ext("0.1"), ext("0.5"));
    RateBreakdown r = rate_renyi(params(100000, "0.01"), b);
    CHECK(r.pa_term.is_zero());
  }

  TEST_CASE("renyi dominates sre at a shared parameter point") {
    for (const char* e : {"0.01", "0.03"})
      for (std::uint64_t N : {60000ULL, 300000ULL, 3000000ULL}) {
        RateBreakdown a = rate_renyi(params(N, e), paper_budget());
        RateBreakdown b = rate_sre(params(N, e), paper_budget());
        CHECK(a.rate >= b.rate);
      }
  }

  TEST_CASE("aep entropy term approaches one bit per signal on a clean channel") {
    ExtFloat prev = ext("-1");
    for (std::uint64_t N : {10000ULL, 1000000ULL, 100000000ULL, 10000000000ULL}) {
      RateBreakdown r = rate_aep(params(N, "0"), paper_budget());
      ExtFloat per_bit = r.entropy_term / ExtFloat(static_cast<unsigned long>(r.n), PrecisionContext(256));
      CHECK(per_bit > prev);
      CHECK(per_bit < ext("1"));
      prev = per_bit;
    }
    CHECK(prev > ext("0.98"));
  }

  TEST_CASE("aep coefficient scales the finite-size penalty") {
    RateOptions five, seven;
    seven.aep_coefficient = 7.0;
    RateBreakdown a = rate_aep(params(100000, "0.01"), paper_budget(), five);
    RateBreakdown b = rate_aep(params(100000, "0.01"), paper_budget(), seven);
    ExtFloat n(static_cast<unsigned long>(a.n), PrecisionContext(256));
    ExtFloat unit = sqrt(log2(ext("2") / ext("3e-10")) / n);
    CHECK(rel_close(a.entropy_term - b.entropy_term, ext("2") * n * unit, "1e-60"));
  }

  TEST_CASE("QBER bound reaching one half is infeasible") {
    CHECK_THROWS_AS(rate_renyi(params(100000, "0.49"), paper_budget()), InfeasibleError);
    CHECK_THROWS_AS(rate_renyi(params(100000, "-0.01"), paper_budget()), DomainError);
  }
}
