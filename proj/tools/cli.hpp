#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "finitekey/optimizer.hpp"

namespace finitekey::cli {

enum ExitCode : int { kPositive = 0, kError = 1, kNonPositive = 2, kUsage = 64 };

// Parses argv (without the program name) and runs one subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Log-spaced integer grid "lo:hi:count"; duplicates after rounding are kept
// once.
std::vector<std::uint64_t> parse_n_range(const std::string& spec);

std::string format_number(double v);

struct SelftestOptions {
  long precision_bits = 256;
  bool long_checks = false;
  bool tamper = false;  // perturbs the compact spectra to prove checks can fail
};

// Oracle equivalence and invariant suites. Returns true when every check
// passes; one line per check goes to out.
bool run_selftest(const SelftestOptions& opt, std::ostream& out);

}  // namespace finitekey::cli
