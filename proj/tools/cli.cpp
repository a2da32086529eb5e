#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

#include "finitekey/entropies.hpp"

namespace finitekey::cli {

namespace {

using nlohmann::ordered_json;

const char* kSweepHeader = "N,qber,bound,rate,ell,n,m,e_bound,leak,eps_pe,eps_pa,eps_bar,p_z,evals";
const char* kThresholdHeader = "qber,bound,N_min,bracket_rel_width";

struct RunConfig {
  std::string command;
  std::vector<std::string> qber;
  std::string qber_range;
  std::uint64_t n_signals = 0;
  std::vector<std::uint64_t> n_list;
  std::string n_range;
  std::string bound = "renyi";
  std::string eps_total = "1e-9";
  std::string eps_ec = "1e-10";
  std::string f_ec = "1.2";
  long precision_bits = 256;
  unsigned threads = 1;
  std::string output;
  std::string format;
  double aep_coef = 5.0;
  std::string floor = "uncharged";
  bool search_eps_hat = false;
  std::size_t max_evals = 6000;
  double tol = 1e-3;
  bool long_checks = false;
  bool tamper = false;
  std::uint64_t key_length = 10000;
  std::string eps_bar = "1e-9";
  std::string eps_hat;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<BoundKind> bound_kinds(const std::string& name) {
  if (name == "all") return {BoundKind::aep, BoundKind::renyi, BoundKind::sre};
  return {parse_bound_kind(name)};
}

SearchConfig search_config(const RunConfig& c) {
  SearchConfig s;
  s.precision_bits = c.precision_bits;
  s.eps_total = c.eps_total;
  s.eps_ec = c.eps_ec;
  s.f_ec = c.f_ec;
  s.rate.aep_coefficient = c.aep_coef;
  s.rate.floor = c.floor == "charged" ? FloorAccounting::charged : FloorAccounting::uncharged;
  s.search_eps_hat = c.search_eps_hat;
  s.max_evals = c.max_evals;
  s.tol = c.tol;
  s.threads = c.threads;
  return s;
}

std::string single_qber(const RunConfig& c) {
  if (c.qber.size() != 1 || !c.qber_range.empty()) throw UsageError(c.command + " needs exactly one --qber");
  return c.qber.front();
}

std::vector<std::string> qber_list(const RunConfig& c) {
  std::vector<std::string> out = c.qber;
  if (!c.qber_range.empty()) {
    double lo = 0, hi = 0;
    long count = 0;
    if (std::sscanf(c.qber_range.c_str(), "%lf:%lf:%ld", &lo, &hi, &count) != 3 || count < 0 || hi < lo)
      throw UsageError("--qber-range must be lo:hi:count");
    for (long i = 0; i < count; ++i) {
      double q = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", q);
      out.push_back(buf);
    }
  }
  if (out.empty()) throw UsageError(c.command + " needs --qber or --qber-range");
  return out;
}

std::vector<std::uint64_t> n_values(const RunConfig& c) {
  std::vector<std::uint64_t> out = c.n_list;
  if (c.n_signals) out.push_back(c.n_signals);
  if (!c.n_range.empty()) {
    auto r = parse_n_range(c.n_range);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

std::string num(const ExtFloat& v) { return format_number(v.to_double()); }

struct TableRow {
  std::uint64_t N = 0;
  std::string qber;
  std::string bound;
  std::optional<OptResult> r;
};

std::vector<std::string> row_fields(const TableRow& t) {
  std::vector<std::string> f = {std::to_string(t.N), t.qber, t.bound};
  if (!t.r) {
    for (int i = 0; i < 11; ++i) f.push_back("NaN");
    return f;
  }
  const auto& b = t.r->best;
  f.insert(f.end(), {num(b.rate), num(b.ell), std::to_string(b.n), std::to_string(b.m), num(b.e_bound),
                     num(b.leak), num(t.r->budget.eps_pe), num(t.r->budget.eps_pa), num(t.r->budget.eps_bar),
                     num(t.r->p_z), std::to_string(t.r->evaluations)});
  return f;
}

std::vector<std::string> split_header(const char* header) {
  std::vector<std::string> out;
  std::stringstream ss(header);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

// Numeric JSON fields; text fields stay strings.
ordered_json json_value(const std::string& key, const std::string& v) {
  static const std::set<std::string> text = {"qber", "bound"};
  if (text.count(key)) return v;
  if (v == "NaN" || v == "nan") return nullptr;
  if (v == "inf") return "inf";
  if (key == "N" || key == "n" || key == "m" || key == "evals" || key == "N_min" ||
      key == "precision")
    return static_cast<std::uint64_t>(std::stoull(v));
  return std::stod(v);
}

void write_table(std::ostream& os, const char* header, const std::vector<std::vector<std::string>>& rows,
                 const std::string& format) {
  if (format == "json") {
    auto keys = split_header(header);
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
      ordered_json o;
      for (std::size_t i = 0; i < keys.size(); ++i) o[keys[i]] = json_value(keys[i], r[i]);
      arr.push_back(o);
    }
    os << arr.dump(2) << "\n";
    return;
  }
  os << header << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
}

int cmd_rate(const RunConfig& c, std::ostream& out) {
  std::string q = single_qber(c);
  auto ns = n_values(c);
  if (ns.size() != 1) throw UsageError("rate needs exactly one --n-signals");
  SearchConfig s = search_config(c);
  bool all_positive = true;
  std::vector<TableRow> rows;
  for (BoundKind k : bound_kinds(c.bound)) {
    OptResult r = maximize_rate(ns.front(), q, k, s);
    all_positive = all_positive && r.best.rate.sign() > 0;
    rows.push_back({ns.front(), q, std::string(to_string(k)), r});
  }

  if (c.format == "csv" || c.format == "json") {
    std::vector<std::vector<std::string>> table;
    for (const auto& t : rows) table.push_back(row_fields(t));
    write_table(out, kSweepHeader, table, c.format);
  } else {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = *rows[i].r;
      const auto& b = r.best;
      if (i) out << "\n";
      out << "bound          " << rows[i].bound << "\n"
          << "N              " << b.N << "\n"
          << "qber           " << q << "\n"
          << "n              " << b.n << "\n"
          << "m              " << b.m << "\n"
          << "zeta           " << num(b.zeta) << "\n"
          << "e_bound        " << num(b.e_bound) << "\n"
          << "s2_term        " << num(b.s2_term) << "\n"
          << "s0_term        " << num(b.s0_term) << "\n"
          << "entropy_term   " << num(b.entropy_term) << "\n"
          << "leak           " << num(b.leak) << "\n"
          << "pa_term        " << num(b.pa_term) << "\n"
          << "ell            " << num(b.ell) << "\n"
          << "rate           " << num(b.rate) << "\n"
          << "eps_pe         " << num(r.budget.eps_pe) << "\n"
          << "eps_pa         " << num(r.budget.eps_pa) << "\n"
          << "eps_bar        " << num(r.budget.eps_bar) << "\n"
          << "eps_hat        " << num(r.budget.eps_hat) << "\n"
          << "p_z            " << num(r.p_z) << "\n"
          << "evals          " << r.evaluations << "\n"
          << "converged      " << (r.converged ? "yes" : "no") << "\n";
    }
  }
  return all_positive ? kPositive : kNonPositive;
}

int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::string q = single_qber(c);
  auto ns = n_values(c);
  auto rows = sweep_n(ns, q, bound_kinds(c.bound), search_config(c));
  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows) {
    if (!r.result) err << "N = " << r.N << ", " << to_string(r.kind) << ": " << r.error << "\n";
    table.push_back(row_fields({r.N, r.qber, std::string(to_string(r.kind)), r.result}));
  }
  write_table(out, kSweepHeader, table, c.format.empty() ? "csv" : c.format);
  return kPositive;
}

int cmd_threshold(const RunConfig& c, std::ostream& out, std::ostream& err) {
  auto qs = qber_list(c);
  auto kinds = bound_kinds(c.bound);
  SearchConfig s = search_config(c);
  struct Job {
    std::string q;
    BoundKind k;
    std::vector<std::string> fields;
    std::string note;
  };
  std::vector<Job> jobs;
  for (const auto& q : qs)
    for (BoundKind k : kinds) jobs.push_back({q, k, {}, {}});
  SearchConfig inner = s;
  if (jobs.size() > 1) inner.threads = 1;
  parallel_for(jobs.size(), jobs.size() > 1 ? s.threads : 1, [&](std::size_t i) {
    Job& j = jobs[i];
    std::string name(to_string(j.k));
    try {
      ThresholdResult t = threshold_n(j.q, j.k, inner);
      j.fields = {j.q, name, std::to_string(t.N_min), format_number(t.bracket_rel_width)};
    } catch (const ThresholdNotFound& ex) {
      j.fields = {j.q, name, "inf", "NaN"};
      j.note = ex.what();
    } catch (const std::exception& ex) {
      j.fields = {j.q, name, "NaN", "NaN"};
      j.note = ex.what();
    }
  });
  std::vector<std::vector<std::string>> table;
  for (const auto& j : jobs) {
    if (!j.note.empty()) err << "qber " << j.q << ", " << to_string(j.k) << ": " << j.note << "\n";
    table.push_back(j.fields);
  }
  write_table(out, kThresholdHeader, table, c.format.empty() ? "csv" : c.format);
  return kPositive;
}

// Entropy-level comparison at a fixed key length: the implemented lower
// bound against the matching upper bound, and the raise-fill gap.
int cmd_compare(const RunConfig& c, std::ostream& out) {
  std::string q = single_qber(c);
  PrecisionContext ctx(c.precision_bits);
  ChannelModel ch = build_channel(ExtFloat(q, ctx));
  ExtFloat bar(c.eps_bar, ctx);
  ExtFloat hat = c.eps_hat.empty() ? bar * ExtFloat("0.5", ctx) : ExtFloat(c.eps_hat, ctx);
  FloorAccounting fl = c.floor == "charged" ? FloorAccounting::charged : FloorAccounting::uncharged;
  TheoremTwoBound lower = theorem2_bound(ch, c.key_length, bar, hat, fl);
  BlockSpectrumXE bs = block_spectrum_xe(ch, c.key_length);
  OptimalS2Result opt = smooth_s2_optimal_detail(bs, bar, true);
  ExtFloat s0 = smooth_s0(spectrum_e(ch, c.key_length), bar);
  ExtFloat upper = opt.entropy - s0;
  ExtFloat rel = (upper - lower.value) / upper;
  // log10 of the relative S2 gap between optimal and kernel-only raising.
  double gap_log10 = (opt.gap_bits.log2_abs() - opt.entropy.log2_abs()) * std::log10(2.0);

  std::vector<std::pair<std::string, std::string>> kv = {
      {"qber", q},
      {"n", std::to_string(c.key_length)},
      {"precision", std::to_string(c.precision_bits)},
      {"eps_bar", num(bar)},
      {"eps_hat", num(hat)},
      {"s2_modified", num(lower.s2bar)},
      {"s0_hat", num(lower.s0)},
      {"lower", num(lower.value)},
      {"s2_optimal", num(opt.entropy)},
      {"s0_bar", num(s0)},
      {"upper", num(upper)},
      {"rel_gap", num(rel)},
      {"s2_gap_log10", opt.gap_bits.is_zero() ? "-inf" : format_number(gap_log10)},
  };
  if (c.format == "json") {
    ordered_json o;
    for (const auto& [k, v] : kv) o[k] = (k == "qber" || v == "-inf") ? ordered_json(v) : json_value(k, v);
    out << o.dump(2) << "\n";
  } else {
    for (const auto& [k, v] : kv) out << k << std::string(14 - k.size(), ' ') << v << "\n";
  }
  return kPositive;
}

int dispatch(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.command == "rate") return cmd_rate(c, out);
  if (c.command == "sweep") return cmd_sweep(c, out, err);
  if (c.command == "threshold") return cmd_threshold(c, out, err);
  if (c.command == "compare") return cmd_compare(c, out);
  SelftestOptions st{c.precision_bits, c.long_checks, c.tamper};
  return run_selftest(st, out) ? kPositive : kError;
}

long default_precision() {
  if (const char* env = std::getenv("FINITEKEY_PRECISION_BITS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 64) return v;
  }
  return 256;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::uint64_t> parse_n_range(const std::string& spec) {
  double lo = 0, hi = 0;
  long count = 0;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%ld%c", &lo, &hi, &count, &tail) != 3 || count < 0 || lo < 1 || hi < lo)
    throw UsageError("--n-range must be lo:hi:count with 1 <= lo <= hi");
  std::vector<std::uint64_t> out;
  double a = std::log10(lo), b = std::log10(hi);
  for (long i = 0; i < count; ++i) {
    double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    auto N = static_cast<std::uint64_t>(std::llround(std::pow(10.0, a + (b - a) * t)));
    if (out.empty() || out.back() != N) out.push_back(N);
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  c.precision_bits = default_precision();

  CLI::App app{"Finite-key secret key rates for the six-state protocol", "finitekey"};
  app.set_config("--config", "", "key=value configuration file; flags override it");
  app.require_subcommand(1, 1);

  app.add_option("--qber", c.qber, "Measured QBER (threshold accepts a comma list)")->delimiter(',');
  app.add_option("--qber-range", c.qber_range, "Linear QBER grid lo:hi:count (threshold)");
  app.add_option("--n-signals", c.n_signals, "Number of signals N");
  app.add_option("--n-list", c.n_list, "Comma list of N")->delimiter(',');
  app.add_option("--n-range", c.n_range, "Log-spaced N grid lo:hi:count");
  app.add_option("--bound", c.bound, "renyi, sre, aep or all")
      ->check(CLI::IsMember({"renyi", "sre", "aep", "all"}));
  app.add_option("--eps-total", c.eps_total, "Total security parameter");
  app.add_option("--eps-ec", c.eps_ec, "Error-correction failure probability");
  app.add_option("--f-ec", c.f_ec, "Error-correction efficiency");
  app.add_option("--precision-bits", c.precision_bits, "MPFR mantissa bits")->check(CLI::Range(64L, 10000000L));
  app.add_option("--threads", c.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--output", c.output, "Write results to this file");
  app.add_option("--format", c.format, "csv or json (text for rate/compare by default)")
      ->check(CLI::IsMember({"csv", "json", "text"}));
  app.add_option("--aep-coef", c.aep_coef, "Coefficient of the AEP correction term");
  app.add_option("--floor", c.floor, "Identity-floor accounting in the S0 term")
      ->check(CLI::IsMember({"uncharged", "charged"}));
  app.add_flag("--search-eps-hat", c.search_eps_hat, "Optimize eps_hat / eps_bar too");
  app.add_option("--max-evals", c.max_evals, "Rate evaluations per optimization");
  app.add_option("--tol", c.tol, "Final pattern-search step");
  app.add_option("--key-length", c.key_length, "Key-string length n (compare)");
  app.add_option("--eps-bar", c.eps_bar, "Smoothing parameter (compare)");
  app.add_option("--eps-hat", c.eps_hat, "S0 smoothing parameter (compare, default eps_bar/2)");
  app.add_flag("--long", c.long_checks, "Include the high-precision selftest checks");
  app.add_flag("--tamper", c.tamper, "Perturb compact spectra in selftest")->group("");

  const std::pair<const char*, const char*> commands[] = {
      {"rate", "Optimized key rate at one N"},
      {"sweep", "Optimized key rates over a grid of N"},
      {"threshold", "Smallest N with a positive optimized rate"},
      {"compare", "Lower and upper entropy bounds at a key length"},
      {"selftest", "Compact spectra and entropies against the dense oracle"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&c, sub] { c.command = sub->get_name(); });
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPositive;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPositive;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    std::ofstream file;
    std::ostream* os = &out;
    if (!c.output.empty()) {
      file.open(c.output);
      if (!file) throw std::runtime_error("cannot open " + c.output);
      os = &file;
    }
    return dispatch(c, *os, err);
  } catch (const UsageError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kError;
  }
}

}  // namespace finitekey::cli
