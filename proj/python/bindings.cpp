#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <string>

#include "finitekey/entropies.hpp"
#include "finitekey/keyrates.hpp"
#include "finitekey/optimizer.hpp"

namespace py = pybind11;
using namespace finitekey;

namespace {

// Decimal parameters may be given as str (exact decimal) or number; numbers
// go through Python's shortest repr, so 0.05 means the decimal 0.05.
std::string text(const py::handle& v) { return py::str(v).cast<std::string>(); }

ExtFloat real(const py::handle& v, long bits) { return ExtFloat(text(v), PrecisionContext(bits)); }

std::uint64_t count(long long v, const char* what) {
  if (v < 1) throw DomainError(std::string(what) + " must be positive");
  return static_cast<std::uint64_t>(v);
}

std::vector<std::pair<double, double>> as_pairs(const WeightedSpectrum& s) {
  std::vector<std::pair<double, double>> out;
  for (const auto& e : s.entries()) out.emplace_back(e.value.to_double(), e.multiplicity.to_double());
  return out;
}

py::dict breakdown(const RateBreakdown& b) {
  py::dict d;
  d["bound"] = std::string(to_string(b.kind));
  d["N"] = b.N;
  d["n"] = b.n;
  d["m"] = b.m;
  d["zeta"] = b.zeta.to_double();
  d["e_bound"] = b.e_bound.to_double();
  d["s2_term"] = b.s2_term.to_double();
  d["s0_term"] = b.s0_term.to_double();
  d["entropy_term"] = b.entropy_term.to_double();
  d["leak"] = b.leak.to_double();
  d["pa_term"] = b.pa_term.to_double();
  d["ell"] = b.ell.to_double();
  d["rate"] = b.rate.to_double();
  return d;
}

SearchConfig search_config(long bits, std::size_t max_evals, double tol, double aep_coef, bool charged,
                           unsigned threads) {
  SearchConfig cfg;
  cfg.precision_bits = bits;
  cfg.max_evals = max_evals;
  cfg.tol = tol;
  cfg.rate.aep_coefficient = aep_coef;
  cfg.rate.floor = charged ? FloorAccounting::charged : FloorAccounting::uncharged;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite-key entropy bounds and key rates for the six-state protocol";

  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_ValueError);
  py::register_exception<ThresholdNotFound>(m, "ThresholdNotFound", PyExc_RuntimeError);
  py::register_exception<MonotonicityError>(m, "MonotonicityError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  m.def(
      "channel_weights",
      [](py::object e, long bits) {
        ChannelModel ch = build_channel(real(e, bits));
        std::vector<double> out;
        for (const auto& l : ch.lambda) out.push_back(l.to_double());
        return out;
      },
      py::arg("e"), py::arg("precision_bits") = 256);

  m.def(
      "block_spectrum",
      [](py::object e, long long n, long bits) {
        BlockSpectrumXE bs = block_spectrum_xe(build_channel(real(e, bits)), count(n, "n"));
        WeightedSpectrum s = bs.base();
        return py::make_tuple(as_pairs(s), s.kernel_dim().to_double());
      },
      py::arg("e"), py::arg("n"), py::arg("precision_bits") = 256,
      "Distinct nonzero eigenvalues of one block of rho_XE^n as (value, multiplicity) pairs in doubles, "
      "with the kernel dimension.");

  m.def(
      "spectrum_e",
      [](py::object e, long long n, long bits) {
        return as_pairs(spectrum_e(build_channel(real(e, bits)), count(n, "n")).base());
      },
      py::arg("e"), py::arg("n"), py::arg("precision_bits") = 256);

  m.def(
      "full_state_s2",
      [](py::object e, long long n, long bits) {
        ExtFloat q = real(e, bits);
        py::gil_scoped_release release;
        return full_state_s2(block_spectrum_xe(build_channel(q), count(n, "n"))).to_double();
      },
      py::arg("e"), py::arg("n"), py::arg("precision_bits") = 256);

  m.def(
      "modified_s2",
      [](py::object e, long long n, py::object eps, long bits) {
        ExtFloat q = real(e, bits), ep = real(eps, bits);
        py::gil_scoped_release release;
        return modified_s2(block_spectrum_xe(build_channel(q), count(n, "n")), ep).entropy.to_double();
      },
      py::arg("e"), py::arg("n"), py::arg("eps"), py::arg("precision_bits") = 256);

  m.def(
      "smooth_s2_optimal",
      [](py::object e, long long n, py::object eps, long bits, bool resolve_gap) {
        ExtFloat q = real(e, bits), ep = real(eps, bits);
        OptimalS2Result r;
        {
          py::gil_scoped_release release;
          r = smooth_s2_optimal_detail(block_spectrum_xe(build_channel(q), count(n, "n")), ep, resolve_gap);
        }
        py::dict d;
        d["entropy"] = r.entropy.to_double();
        d["raised_levels"] = r.raised_levels;
        // log10 of (optimal - modified) / optimal; the gap is usually far
        // below the double range, so only its logarithm is returned.
        d["gap_log10"] = r.gap_bits.is_zero() ? -INFINITY
                                              : (r.gap_bits.log2_abs() - r.entropy.log2_abs()) * std::log10(2.0);
        return d;
      },
      py::arg("e"), py::arg("n"), py::arg("eps"), py::arg("precision_bits") = 256, py::arg("resolve_gap") = false);

  m.def(
      "smooth_s0",
      [](py::object e, long long n, py::object eps, long bits) {
        ExtFloat q = real(e, bits), ep = real(eps, bits);
        py::gil_scoped_release release;
        return smooth_s0(spectrum_e(build_channel(q), count(n, "n")), ep).to_double();
      },
      py::arg("e"), py::arg("n"), py::arg("eps"), py::arg("precision_bits") = 256);

  m.def(
      "lower_bound",
      [](py::object e, long long n, py::object eps_bar, py::object eps_hat, bool charged, long bits) {
        ExtFloat q = real(e, bits), bar = real(eps_bar, bits);
        ExtFloat hat = eps_hat.is_none() ? bar * ExtFloat("0.5", PrecisionContext(bits)) : real(eps_hat, bits);
        TheoremTwoBound t;
        {
          py::gil_scoped_release release;
          t = theorem2_bound(build_channel(q), count(n, "n"), bar, hat,
                             charged ? FloorAccounting::charged : FloorAccounting::uncharged);
        }
        py::dict d;
        d["s2bar"] = t.s2bar.to_double();
        d["s0"] = t.s0.to_double();
        d["eps_hat"] = t.epsilon_hat.to_double();
        d["value"] = t.value.to_double();
        return d;
      },
      py::arg("e"), py::arg("n"), py::arg("eps_bar"), py::arg("eps_hat") = py::none(), py::arg("charged") = false,
      py::arg("precision_bits") = 256,
      "S2 of rho_XE^n smoothed by eps_bar - eps_hat minus S0 of rho_E^n smoothed by eps_hat, minus eps_hat.");

  m.def(
      "upper_bound",
      [](py::object e, long long n, py::object eps_bar, long bits) {
        ExtFloat q = real(e, bits), bar = real(eps_bar, bits);
        py::gil_scoped_release release;
        return theorem2_upper(build_channel(q), count(n, "n"), bar).to_double();
      },
      py::arg("e"), py::arg("n"), py::arg("eps_bar"), py::arg("precision_bits") = 256);

  m.def(
      "aep_entropy", [](py::object e, long bits) { return aep_entropy(real(e, bits)).to_double(); }, py::arg("e"),
      py::arg("precision_bits") = 256);

  m.def(
      "rate",
      [](const std::string& bound, long long N, py::object qber, py::object p_z, py::object eps_pe,
         py::object eps_pa, py::object eps_total, py::object eps_ec, py::object f_ec, py::object eps_hat,
         double aep_coef, bool charged, long bits) {
        BoundKind kind = parse_bound_kind(bound);
        ProtocolParams p{count(N, "N"), real(p_z, bits), real(qber, bits), real(f_ec, bits)};
        std::optional<ExtFloat> hat;
        if (!eps_hat.is_none()) hat = real(eps_hat, bits);
        SecurityBudget b = SecurityBudget::from_parts(real(eps_total, bits), real(eps_ec, bits), real(eps_pe, bits),
                                                      real(eps_pa, bits), hat);
        RateOptions opt;
        opt.aep_coefficient = aep_coef;
        opt.floor = charged ? FloorAccounting::charged : FloorAccounting::uncharged;
        RateBreakdown r;
        {
          py::gil_scoped_release release;
          r = evaluate_rate(kind, p, b, opt);
        }
        return breakdown(r);
      },
      py::arg("bound"), py::arg("N"), py::arg("qber"), py::arg("p_z"), py::arg("eps_pe"), py::arg("eps_pa"),
      py::arg("eps_total") = "1e-9", py::arg("eps_ec") = "1e-10", py::arg("f_ec") = "1.2",
      py::arg("eps_hat") = py::none(), py::arg("aep_coef") = 5.0, py::arg("charged") = false,
      py::arg("precision_bits") = 256,
      "Key rate at fixed parameters; eps_bar is whatever eps_total leaves after ec, pe and pa.");

  m.def(
      "maximize_rate",
      [](const std::string& bound, long long N, py::object qber, long bits, std::size_t max_evals, double tol,
         double aep_coef, bool charged) {
        BoundKind kind = parse_bound_kind(bound);
        std::string q = text(qber);
        SearchConfig cfg = search_config(bits, max_evals, tol, aep_coef, charged, 1);
        OptResult r;
        {
          py::gil_scoped_release release;
          r = maximize_rate(count(N, "N"), q, kind, cfg);
        }
        py::dict d = breakdown(r.best);
        d["eps_pe"] = r.budget.eps_pe.to_double();
        d["eps_pa"] = r.budget.eps_pa.to_double();
        d["eps_bar"] = r.budget.eps_bar.to_double();
        d["eps_hat"] = r.budget.eps_hat.to_double();
        d["p_z"] = r.p_z.to_double();
        d["evaluations"] = r.evaluations;
        d["converged"] = r.converged;
        return d;
      },
      py::arg("bound"), py::arg("N"), py::arg("qber"), py::arg("precision_bits") = 256, py::arg("max_evals") = 6000,
      py::arg("tol") = 1e-3, py::arg("aep_coef") = 5.0, py::arg("charged") = false);

  m.def(
      "threshold",
      [](const std::string& bound, py::object qber, long bits, double rel_tol, double aep_coef, bool charged) {
        BoundKind kind = parse_bound_kind(bound);
        std::string q = text(qber);
        SearchConfig cfg = search_config(bits, 6000, 1e-3, aep_coef, charged, 1);
        cfg.rel_tol = rel_tol;
        ThresholdResult t;
        {
          py::gil_scoped_release release;
          t = threshold_n(q, kind, cfg);
        }
        py::dict d;
        d["N_min"] = t.N_min;
        d["N_lo"] = t.N_lo;
        d["bracket_rel_width"] = t.bracket_rel_width;
        return d;
      },
      py::arg("bound"), py::arg("qber"), py::arg("precision_bits") = 256, py::arg("rel_tol") = 0.02,
      py::arg("aep_coef") = 5.0, py::arg("charged") = false);
}
