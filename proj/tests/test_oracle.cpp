#include "finitekey/entropies.hpp"
#include "finitekey/oracle.hpp"
#include "test_util.hpp"

using namespace finitekey;
using fk_test::ext;
using fk_test::rel_close;

TEST_SUITE("oracle") {
  TEST_CASE("single-signal rho_XE") {
    ChannelModel ch = build_channel(ext("0.1"));
    CqOperator rho = build_rho_xe_dense(ch, 1);
    CHECK(rho.dim() == 8);
    REQUIRE(rho.blocks.size() == 2);
    for (const auto& b : rho.blocks) {
      CHECK(b.dim() == 4);
      CHECK(rel_close(b.trace() * rho.block_weight, "0.5", "1e-70"));
      CHECK(b.asymmetry().is_zero());
    }
    CHECK(rel_close(rho.trace(), "1", "1e-70"));
    DenseOperator full = to_dense(rho);
    CHECK(full.dim() == 8);
    CHECK(full(0, 4).is_zero());
  }

  TEST_CASE("off-diagonal entries of the conditional states") {
    ChannelModel ch = build_channel(ext("0.1"));
    ExtFloat a = sqrt(ch.lambda[0] * ch.lambda[1]);
    ExtFloat b = sqrt(ch.lambda[2] * ch.lambda[3]);
    DenseOperator r0 = rho_e_conditional(ch, 0);
    DenseOperator r1 = rho_e_conditional(ch, 1);
    CHECK(abs(r0(0, 1)) == a);
    CHECK(abs(r0(2, 3)) == b);
    CHECK(r0(0, 1) == -r1(0, 1));
    CHECK(r0(0, 2).is_zero());
    for (int i = 0; i < 4; ++i) CHECK(r0(i, i) == ch.lambda[i]);
  }

  TEST_CASE("dense eigenvalues at n = 1") {
    std::vector<ExtFloat> ev = eigenvalues(build_rho_xe_dense(build_channel(ext("0.1")), 1));
    REQUIRE(ev.size() == 8);
    for (int i = 0; i < 4; ++i) CHECK(ev[i].is_zero());
    for (int i = 4; i < 6; ++i) CHECK(rel_close(ev[i], "0.05", "1e-70"));
    for (int i = 6; i < 8; ++i) CHECK(rel_close(ev[i], "0.45", "1e-70"));
  }

  TEST_CASE("jacobi reconstructs its input") {
    ChannelModel ch = build_channel(ext("0.05"));
    DenseOperator a = build_rho_xe_dense(ch, 2).blocks[1];
    Eigensystem es = jacobi_eigensystem(a);
    std::size_t d = a.dim();
    DenseOperator lam(d, a(0, 0).context());
    for (std::size_t i = 0; i < d; ++i) lam(i, i) = es.values[i];
    DenseOperator vt(d, a(0, 0).context());
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) vt(i, j) = es.vectors(j, i);
    CHECK((es.vectors * lam * vt - a).max_abs() <= ExtFloat::pow2(-240, PrecisionContext(256)));
    CHECK((vt * es.vectors - identity_operator(d, PrecisionContext(256))).max_abs() <=
          ExtFloat::pow2(-240, PrecisionContext(256)));
  }

  TEST_CASE("projectors") {
    for (const char* e : {"0.01", "0.1", "0.3"}) {
      ChannelModel ch = build_channel(ext(e));
      CheckReport rep = projectors_check(ch);
      CHECK(rep.ok);
      CHECK(rep.failures.empty());
      CHECK(rep.max_residual <= ExtFloat::pow2(32 - 256, PrecisionContext(256)));
      for (int i = 0; i < 4; ++i) {
        DenseOperator p = eigenprojector(ch, i, 0);
        CHECK((p * p - p).max_abs() <= ExtFloat::pow2(-240, PrecisionContext(256)));
      }
      DenseOperator proj_rho = eigenprojector(ch, 1, 0) * rho_e_conditional(ch, 0);
      CHECK(rel_close(proj_rho.trace(), ch.lambda[0] + ch.lambda[1], "1e-70"));
    }
  }

  TEST_CASE("marginal is the product state") {
    ChannelModel ch = build_channel(ext("0.05"));
    for (std::size_t n = 1; n <= 3; ++n)
      CHECK((partial_trace_x(build_rho_xe_dense(ch, n)) - rho_e_product(ch, n)).max_abs() <=
            ExtFloat::pow2(-240, PrecisionContext(256)));
  }

  TEST_CASE("brute smoothing") {
    PrecisionContext ctx(256);
    std::vector<ExtFloat> flat(4, ExtFloat(0.25, ctx));
    CHECK(brute_smooth(flat, ExtFloat(ctx), 0) == ExtFloat(2L, ctx));
    CHECK(brute_smooth(flat, ExtFloat(ctx), 2) == ExtFloat(2L, ctx));

    ChannelModel ch = build_channel(ext("0.1"));
    std::vector<ExtFloat> ev = eigenvalues(build_rho_xe_dense(ch, 2));
    BlockSpectrumXE bs = block_spectrum_xe(ch, 2);
    CHECK(rel_close(brute_smooth(ev, ExtFloat(ctx), 2), full_state_s2(bs), "1e-60"));
    CHECK(rel_close(brute_smooth(ev, ext("1e-3"), 2), modified_s2(bs, ext("1e-3")).entropy, "1e-30"));
    CHECK(brute_smooth(ev, ExtFloat(ctx), 0) == ExtFloat(4L, ctx));

    // No flat eigenvalue fits in eps/2 = 0.125.
    CHECK(brute_smooth(flat, ExtFloat(0.25, ctx), 0) == ExtFloat(2L, ctx));
    std::vector<ExtFloat> mixed = {ExtFloat(0.0625, ctx), ExtFloat(0.0625, ctx), ExtFloat(0.875, ctx)};
    CHECK(brute_smooth(mixed, ExtFloat(0.125, ctx), 0) == log2(ExtFloat(2L, ctx)));
    CHECK(brute_smooth(mixed, ExtFloat(0.25, ctx), 0).is_zero());
  }

  TEST_CASE("smoothed state lies on the eps/2 sphere") {
    for (const char* e : {"0.01", "0.1"}) {
      BallCheck b = tau_ball_check(build_channel(ext(e)), 2, ext("1e-3"));
      CHECK(rel_close(b.half_trace_norm, "5e-4", "1e-60"));
      CHECK(b.residual <= ExtFloat::pow2(24 - 256, PrecisionContext(256)));
      CHECK(b.trace_error <= ExtFloat::pow2(24 - 256, PrecisionContext(256)));
    }
  }

  TEST_CASE("kernel floor bound holds") {
    for (const char* e : {"0.05", "0.1"})
      for (std::size_t n = 1; n <= 3; ++n)
        CHECK(floor_bound_excess(build_channel(ext(e)), n, ext("1e-3")) <=
              ExtFloat::pow2(24 - 256, PrecisionContext(256)));
  }
}
