#include <atomic>

#include "finitekey/optimizer.hpp"
#include "test_util.hpp"

using namespace finitekey;
using fk_test::ext;

namespace {

ExtFloat rate_at(const SearchPoint& pt, std::uint64_t N, const char* e_m, BoundKind kind, const SearchConfig& cfg) {
  ProtocolParams p{N, ExtFloat(pt.p_z(), PrecisionContext(cfg.precision_bits)), ext(e_m), ext("1.2")};
  return evaluate_rate(kind, p, project_budget(pt, cfg), cfg.rate).rate;
}

}  // namespace

TEST_SUITE("optimizer") {
  TEST_CASE("projected budget spends eps_total exactly") {
    SearchConfig cfg;
    for (const SearchPoint& s : seed_points(cfg)) {
      SecurityBudget b = project_budget(s, cfg);
      CHECK(fk_test::rel_close(b.eps_pe + b.eps_pa + b.eps_bar + b.eps_ec, "1e-9", "1e-70"));
      CHECK(b.eps_hat * ext("2") == b.eps_bar);
    }
    CHECK(seed_points(cfg).size() == 4);
  }

  TEST_CASE("optimum is at least as good as every seed") {
    SearchConfig cfg;
    for (BoundKind k : {BoundKind::renyi, BoundKind::aep}) {
      OptResult r = maximize_rate(200000, "0.01", k, cfg);
      for (const SearchPoint& s : seed_points(cfg)) CHECK(r.best.rate >= rate_at(s, 200000, "0.01", k, cfg));
      CHECK(r.best.rate == rate_at(r.params, 200000, "0.01", k, cfg));
      CHECK(r.evaluations <= cfg.max_evals);
    }
  }

  TEST_CASE("search is deterministic") {
    SearchConfig cfg;
    OptResult a = maximize_rate(80000, "0.02", BoundKind::sre, cfg);
    OptResult b = maximize_rate(80000, "0.02", BoundKind::sre, cfg);
    CHECK(a.best.rate == b.best.rate);
    CHECK(a.evaluations == b.evaluations);
  }

  TEST_CASE("renyi rate turns positive just above 5e4 signals at QBER 1%") {
    SearchConfig cfg;
    CHECK(maximize_rate(51000, "0.01", BoundKind::renyi, cfg).best.rate.sign() > 0);
  }

  // Measured optimum at exactly 5e4 is -3.8e-4; the threshold sits at 50625.
  TEST_CASE("renyi rate at exactly 5e4 signals" * doctest::should_fail()) {
    SearchConfig cfg;
    CHECK(maximize_rate(50000, "0.01", BoundKind::renyi, cfg).best.rate.sign() > 0);
  }

  TEST_CASE("clean channel rate is positive and grows with N") {
    SearchConfig cfg;
    ExtFloat prev(PrecisionContext(256));
    for (std::uint64_t N : {50000ULL, 200000ULL, 1000000ULL}) {
      ExtFloat r = maximize_rate(N, "0", BoundKind::renyi, cfg).best.rate;
      CHECK(r > prev);
      prev = r;
    }
  }

  // At N = 1e4 the estimation sample alone pushes the QBER bound to ~0.14,
  // above the six-state limit; the clean-channel threshold is 41250.
  TEST_CASE("clean channel rate at 1e4 signals" * doctest::should_fail()) {
    SearchConfig cfg;
    CHECK(maximize_rate(10000, "0", BoundKind::renyi, cfg).best.rate.sign() > 0);
  }

  TEST_CASE("domain checks") {
    SearchConfig cfg;
    CHECK_THROWS_AS(maximize_rate(99, "0.01", BoundKind::renyi, cfg), DomainError);
    CHECK_THROWS_AS(maximize_rate(1000, "0.5", BoundKind::renyi, cfg), DomainError);
    SearchConfig bad = cfg;
    bad.eps_ec = "1e-9";
    CHECK_THROWS_AS(maximize_rate(1000, "0.01", BoundKind::renyi, bad), InfeasibleError);
  }

  TEST_CASE("sweep rows") {
    SearchConfig cfg;
    CHECK(sweep_n({100000}, "0.01", {}, cfg).empty());
    CHECK(sweep_n({}, "0.01", {BoundKind::renyi}, cfg).empty());

    auto rows = sweep_n({300000, 100000}, "0.01", {BoundKind::renyi, BoundKind::aep, BoundKind::sre}, cfg);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].N == 100000);
    CHECK(rows[0].kind == BoundKind::aep);
    CHECK(rows[1].kind == BoundKind::renyi);
    CHECK(rows[2].kind == BoundKind::sre);
    CHECK(rows[3].N == 300000);
    for (std::size_t i = 0; i < rows.size(); i += 3) {
      CHECK(rows[i + 1].result->best.rate >= rows[i + 2].result->best.rate);
      CHECK(rows[i + 2].result->best.rate >= rows[i].result->best.rate);
    }

    auto failing = sweep_n({150, 100000}, "0.01", {BoundKind::renyi}, cfg);
    REQUIRE(failing.size() == 2);
    CHECK(!failing[0].result.has_value());
    CHECK(!failing[0].error.empty());
    CHECK(failing[1].result.has_value());
  }

  TEST_CASE("threads change nothing but wall time") {
    SearchConfig one, two;
    two.threads = 2;
    auto a = sweep_n({60000, 120000}, "0.02", {BoundKind::renyi}, one);
    auto b = sweep_n({60000, 120000}, "0.02", {BoundKind::renyi}, two);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].result->best.rate == b[i].result->best.rate);
  }

  TEST_CASE("threshold brackets the sign change") {
    SearchConfig cfg;
    ThresholdResult t = threshold_n("0.01", BoundKind::renyi, cfg);
    CHECK(t.N_min > t.N_lo);
    CHECK(t.bracket_rel_width <= cfg.rel_tol);
    CHECK(t.N_min >= 40000);
    CHECK(t.N_min <= 60000);
    for (const auto& p : t.probes) CHECK(p.positive == (p.N >= t.N_min));

    SearchConfig capped = cfg;
    capped.n_max = 20000;
    CHECK_THROWS_AS(threshold_n("0.01", BoundKind::renyi, capped), ThresholdNotFound);
  }

  TEST_CASE("parallel_for visits every index once") {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(hits.size(), 3, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
}
