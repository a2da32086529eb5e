#include "finitekey/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "finitekey/spectra.hpp"

namespace finitekey {

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

constexpr std::array<double, 5> kScale = {1.0, 1.0, 1.0, 0.1, 1.0};
constexpr double kInitialStep = 0.5;
constexpr double kHatFractionMin = -3.0;
// A move must beat the incumbent by this relative margin, so that runs at
// different precisions take the same path.
constexpr long kMarginBits = 100;

struct Box {
  std::array<double, 5> lo;
  std::array<double, 5> hi;
};

Box search_box(const SearchConfig& cfg) {
  PrecisionContext ctx(cfg.precision_bits);
  ExtFloat room = ExtFloat(cfg.eps_total, ctx) - ExtFloat(cfg.eps_ec, ctx);
  if (!(room.sign() > 0)) throw InfeasibleError("eps_total must exceed eps_ec");
  double top = log10(room).to_double();
  double lo_eps = std::min(cfg.log10_eps_min, top);
  return Box{{lo_eps, lo_eps, lo_eps, 1.0 / 3.0 + cfg.pz_margin, kHatFractionMin},
             {top, top, top, 1.0 - cfg.pz_margin, 0.0}};
}

SearchPoint clamp(SearchPoint p, const Box& box) {
  for (std::size_t i = 0; i < p.x.size(); ++i) p.x[i] = std::clamp(p.x[i], box.lo[i], box.hi[i]);
  return p;
}

bool better(const std::optional<RateBreakdown>& a, const std::optional<RateBreakdown>& b) {
  if (!a) return false;
  if (!b) return true;
  ExtFloat margin = abs(b->rate);
  margin.mul_2exp(-kMarginBits);
  return a->rate > b->rate + margin;
}

struct Objective {
  std::uint64_t N;
  ExtFloat e_m;
  BoundKind kind;
  const SearchConfig& cfg;
  ExtFloat f_ec;

  std::optional<RateBreakdown> operator()(const SearchPoint& pt) const {
    try {
      PrecisionContext ctx(cfg.precision_bits);
      SecurityBudget b = project_budget(pt, cfg);
      ProtocolParams p{N, ExtFloat(pt.p_z(), ctx), e_m, f_ec};
      return evaluate_rate(kind, p, b, cfg.rate);
    } catch (const InfeasibleError&) {
      return std::nullopt;
    } catch (const DomainError&) {
      return std::nullopt;
    }
  }
};

struct LocalResult {
  SearchPoint point;
  std::optional<RateBreakdown> value;
  std::size_t evals = 0;
  bool converged = false;
};

LocalResult compass_search(const Objective& f, SearchPoint start, const Box& box, std::size_t budget) {
  const SearchConfig& cfg = f.cfg;
  std::size_t dims = cfg.search_eps_hat ? 5 : 4;
  LocalResult r;
  r.point = clamp(start, box);
  r.value = f(r.point);
  r.evals = 1;
  double step = kInitialStep;
  while (step >= cfg.tol && r.evals < budget) {
    std::vector<SearchPoint> cand;
    for (std::size_t i = 0; i < dims; ++i) {
      for (double dir : {+1.0, -1.0}) {
        SearchPoint y = r.point;
        y.x[i] += dir * step * kScale[i];
        y = clamp(y, box);
        if (y.x[i] != r.point.x[i]) cand.push_back(y);
      }
    }
    std::vector<std::optional<RateBreakdown>> vals(cand.size());
    parallel_for(cand.size(), cfg.threads, [&](std::size_t i) { vals[i] = f(cand[i]); });
    r.evals += cand.size();
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const auto& incumbent = pick ? vals[*pick] : r.value;
      if (better(vals[i], incumbent)) pick = i;
    }
    if (pick) {
      r.point = cand[*pick];
      r.value = vals[*pick];
    } else {
      step *= 0.5;
    }
  }
  r.converged = step < cfg.tol;
  return r;
}

}  // namespace

std::vector<SearchPoint> seed_points(const SearchConfig& cfg) {
  Box box = search_box(cfg);
  double top = box.hi[0];
  double hat = std::log10(0.5);
  std::vector<SearchPoint> seeds = {
      SearchPoint{{top - 0.5, top - 2.0, top - 0.5, 0.50, hat}},
      SearchPoint{{top - 0.5, top - 2.0, top - 0.5, 0.70, hat}},
      SearchPoint{{top - 0.3, top - 3.0, top - 1.0, 0.85, hat}},
      SearchPoint{{top - 1.0, top - 1.0, top - 0.3, 0.60, hat}},
  };
  for (auto& s : seeds) s = clamp(s, box);
  return seeds;
}

SecurityBudget project_budget(const SearchPoint& pt, const SearchConfig& cfg) {
  PrecisionContext ctx(cfg.precision_bits);
  ExtFloat total(cfg.eps_total, ctx);
  ExtFloat ec(cfg.eps_ec, ctx);
  ExtFloat room = total - ec;
  ExtFloat pe = exp10(ExtFloat(pt.log10_eps_pe(), ctx));
  ExtFloat pa = exp10(ExtFloat(pt.log10_eps_pa(), ctx));
  ExtFloat bar = exp10(ExtFloat(pt.log10_eps_bar(), ctx));
  ExtFloat s = room / (pe + pa + bar);
  pe *= s;
  pa *= s;
  bar = room - pe - pa;
  std::optional<ExtFloat> hat;
  if (cfg.search_eps_hat) hat = bar * exp10(ExtFloat(pt.log10_hat_fraction(), ctx));
  return SecurityBudget::from_parts(total, ec, pe, pa, hat);
}

OptResult maximize_rate(std::uint64_t N, const std::string& e_m, BoundKind kind, const SearchConfig& cfg,
                        const std::vector<SearchPoint>& extra_seeds) {
  PrecisionContext ctx(cfg.precision_bits);
  ExtFloat em(e_m, ctx);
  build_channel(em);  // rejects QBER outside [0, 1/2)
  if (N < 100) throw DomainError("N must be at least 100");
  Objective f{N, em, kind, cfg, ExtFloat(cfg.f_ec, ctx)};
  Box box = search_box(cfg);

  std::vector<SearchPoint> seeds = seed_points(cfg);
  seeds.insert(seeds.end(), extra_seeds.begin(), extra_seeds.end());

  LocalResult best;
  std::size_t evals = 0;
  for (const auto& s : seeds) {
    if (evals >= cfg.max_evals) break;
    LocalResult r = compass_search(f, s, box, cfg.max_evals - evals);
    evals += r.evals;
    if (better(r.value, best.value)) best = r;
  }
  if (!best.value) throw InfeasibleError("no feasible parameters at N = " + std::to_string(N));

  OptResult out;
  out.best = *best.value;
  out.params = best.point;
  out.budget = project_budget(best.point, cfg);
  out.p_z = ExtFloat(best.point.p_z(), ctx);
  out.evaluations = evals;
  out.converged = best.converged;
  return out;
}

std::vector<SweepRow> sweep_n(const std::vector<std::uint64_t>& N_list, const std::string& e_m,
                              const std::vector<BoundKind>& kinds, const SearchConfig& cfg) {
  std::vector<BoundKind> order;
  for (BoundKind k : {BoundKind::aep, BoundKind::sre, BoundKind::renyi})
    if (std::find(kinds.begin(), kinds.end(), k) != kinds.end()) order.push_back(k);

  std::vector<std::vector<SweepRow>> per_n(N_list.size());
  bool rows_parallel = N_list.size() > 1 && cfg.threads > 1;
  SearchConfig inner = cfg;
  if (rows_parallel) inner.threads = 1;

  parallel_for(N_list.size(), rows_parallel ? cfg.threads : 1, [&](std::size_t i) {
    std::vector<SearchPoint> chain;
    for (BoundKind k : order) {
      SweepRow row;
      row.N = N_list[i];
      row.qber = e_m;
      row.kind = k;
      try {
        row.result = maximize_rate(N_list[i], e_m, k, inner, chain);
        if (cfg.chain_seeds) chain = {row.result->params};
      } catch (const std::exception& ex) {
        row.error = ex.what();
      }
      per_n[i].push_back(std::move(row));
    }
  });

  std::vector<SweepRow> rows;
  for (auto& v : per_n)
    for (auto& r : v) rows.push_back(std::move(r));
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.N != b.N) return a.N < b.N;
    return to_string(a.kind) < to_string(b.kind);
  });
  return rows;
}

ThresholdResult threshold_n(const std::string& e_m, BoundKind kind, const SearchConfig& cfg) {
  ThresholdResult out;
  auto probe = [&](std::uint64_t N) {
    ThresholdProbe p;
    p.N = N;
    try {
      OptResult r = maximize_rate(N, e_m, kind, cfg);
      p.rate = r.best.rate.to_double();
      p.positive = r.best.rate.sign() > 0;
    } catch (const InfeasibleError&) {
      p.rate = -INFINITY;
      p.positive = false;
    }
    out.probes.push_back(p);
    return p.positive;
  };

  std::uint64_t lo = 0, hi = 0;
  std::uint64_t N = std::max(cfg.n_start, cfg.n_min);
  if (probe(N)) {
    hi = N;
    for (;;) {
      std::uint64_t down = hi / 2;
      if (down < cfg.n_min) {
        lo = cfg.n_min;
        if (probe(lo)) hi = lo;
        break;
      }
      if (!probe(down)) {
        lo = down;
        break;
      }
      hi = down;
    }
  } else {
    lo = N;
    for (;;) {
      if (lo >= cfg.n_max) {
        std::ostringstream msg;
        msg << "no positive " << to_string(kind) << " rate up to N = " << cfg.n_max << " at QBER " << e_m;
        throw ThresholdNotFound(msg.str());
      }
      std::uint64_t up = std::min(lo * 2, cfg.n_max);
      if (probe(up)) {
        hi = up;
        break;
      }
      lo = up;
    }
  }

  while (hi > lo + 1 && static_cast<double>(hi - lo) > cfg.rel_tol * static_cast<double>(hi)) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    if (probe(mid)) hi = mid; else lo = mid;
  }

  // The bracket is only meaningful if positivity is monotone in N.
  auto sorted = out.probes;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.N < b.N; });
  bool seen_positive = false;
  for (const auto& p : sorted) {
    if (p.positive) seen_positive = true;
    else if (seen_positive) {
      std::ostringstream msg;
      msg << "rate positivity not monotone in N near N = " << p.N << " (" << to_string(kind) << ", QBER "
          << e_m << ")";
      throw MonotonicityError(msg.str());
    }
  }

  out.N_min = hi;
  out.N_lo = lo;
  out.bracket_rel_width = hi == lo ? 0.0 : static_cast<double>(hi - lo) / static_cast<double>(hi);
  return out;
}

}  // namespace finitekey
