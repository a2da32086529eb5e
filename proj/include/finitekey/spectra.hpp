#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "finitekey/numerics.hpp"

namespace finitekey {

// Symmetric depolarizing channel seen by the six-state protocol.
struct ChannelModel {
  ExtFloat e;
  std::array<ExtFloat, 4> lambda;

  bool noiseless() const { return e.is_zero(); }
};

ChannelModel build_channel(const ExtFloat& e);

struct SpectrumEntry {
  ExtFloat value;
  ExtFloat multiplicity;
};

// Distinct positive eigenvalues in increasing order with multiplicities;
// the zero eigenvalue is carried separately as kernel_dim.
class WeightedSpectrum {
 public:
  WeightedSpectrum(std::vector<SpectrumEntry> entries, ExtFloat kernel_dim);

  // Sorts and merges equal values; zero values go to the kernel.
  static WeightedSpectrum from_unsorted(std::vector<SpectrumEntry> entries, ExtFloat kernel_dim);

  const std::vector<SpectrumEntry>& entries() const { return entries_; }
  const ExtFloat& kernel_dim() const { return kernel_dim_; }
  const ExtFloat& trace() const { return trace_; }
  ExtFloat rank() const;
  ExtFloat dimension() const { return rank() + kernel_dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<SpectrumEntry> entries_;
  ExtFloat kernel_dim_;
  ExtFloat trace_;
};

// Levels of the form value_k = a^(n-k) b^k with multiplicity w^k C(n, k),
// k = 0..n. Both protocol spectra have this shape; the fast entropy paths
// walk them lazily instead of materializing n + 1 entries.
struct BinomialLevels {
  std::uint64_t n = 0;
  ExtFloat a;
  ExtFloat b;
  unsigned long w = 1;

  ExtFloat value(std::uint64_t k) const;
  ExtFloat multiplicity(std::uint64_t k) const;
  // Natural logs in double precision, for window placement only.
  double log_value(std::uint64_t k) const;
  double log_mass(std::uint64_t k) const;

  struct Cursor {
    const BinomialLevels* levels;
    std::uint64_t k;
    ExtFloat value;
    ExtFloat multiplicity;

    ExtFloat mass() const { return value * multiplicity; }
    void up();
    void down();
  };
  Cursor at(std::uint64_t k) const;

  // Increasing-value materialization (k = n first).
  std::vector<SpectrumEntry> materialize() const;

  ExtFloat ratio_up;    // b / a
  ExtFloat ratio_down;  // a / b
};

BinomialLevels make_levels(std::uint64_t n, const ExtFloat& a, const ExtFloat& b, unsigned long w);

// One block of rho_XE^(n): values (1-e)^(n-k) e^k with multiplicity C(n, k)
// and a kernel of dimension 4^n - 2^n. Trace 1.
struct BlockSpectrumXE {
  ChannelModel channel;
  std::uint64_t n = 0;
  ExtFloat m0;
  bool degenerate = false;
  BinomialLevels levels;

  WeightedSpectrum base() const;
};

// rho_E^(n): values lambda0^(n-j) (e/2)^j with multiplicity 3^j C(n, j).
struct SpectrumE {
  ChannelModel channel;
  std::uint64_t n = 0;
  bool degenerate = false;
  BinomialLevels levels;

  WeightedSpectrum base() const;
  ExtFloat dimension() const;  // 4^n
};

BlockSpectrumXE block_spectrum_xe(const ChannelModel& ch, std::uint64_t n);
SpectrumE spectrum_e(const ChannelModel& ch, std::uint64_t n);

// Adds delta to every eigenvalue of the full 4^n-dimensional space.
WeightedSpectrum shift_spectrum(const SpectrumE& s, const ExtFloat& delta);

}  // namespace finitekey
