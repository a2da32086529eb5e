#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finitekey/numerics.hpp"
#include "finitekey/spectra.hpp"

namespace finitekey {

// Dense real symmetric matrix of ExtFloat, row-major.
class DenseOperator {
 public:
  DenseOperator() = default;
  DenseOperator(std::size_t dim, const PrecisionContext& ctx);

  std::size_t dim() const { return dim_; }
  ExtFloat& operator()(std::size_t i, std::size_t j) { return a_[i * dim_ + j]; }
  const ExtFloat& operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }

  ExtFloat trace() const;
  DenseOperator kron(const DenseOperator& other) const;
  DenseOperator operator*(const DenseOperator& other) const;
  DenseOperator operator+(const DenseOperator& other) const;
  DenseOperator operator-(const DenseOperator& other) const;
  // Largest |a_ij - a_ji|.
  ExtFloat asymmetry() const;
  ExtFloat max_abs() const;

 private:
  std::size_t dim_ = 0;
  std::vector<ExtFloat> a_;
};

DenseOperator identity_operator(std::size_t dim, const PrecisionContext& ctx);

// Conditional states of E given X = x for one signal (4x4).
DenseOperator rho_e_conditional(const ChannelModel& ch, int x);

// Eigenprojector i of rho_e_conditional(ch, x): i = 1 and 3 carry
// 1 - e and e, i = 0 and 2 span the kernel.
DenseOperator eigenprojector(const ChannelModel& ch, int i, int x);

// rho_XE^(n) as 2^n diagonal blocks, block x = tensor product of the
// conditional states, each block weighted by 2^-n.
struct CqOperator {
  std::size_t n = 0;
  std::vector<DenseOperator> blocks;
  ExtFloat block_weight;

  std::size_t dim() const;
  ExtFloat trace() const;
};

CqOperator build_rho_xe_dense(const ChannelModel& ch, std::size_t n);
DenseOperator to_dense(const CqOperator& op);
DenseOperator partial_trace_x(const CqOperator& op);
// diag(lambda)^(n).
DenseOperator rho_e_product(const ChannelModel& ch, std::size_t n);

struct Eigensystem {
  std::vector<ExtFloat> values;
  DenseOperator vectors;  // column j belongs to values[j]
};

// Cyclic Jacobi rotations, run separately on each connected component of
// the nonzero pattern.
Eigensystem jacobi_eigensystem(const DenseOperator& a);

// All 8^n eigenvalues of rho_XE^(n), increasing.
std::vector<ExtFloat> eigenvalues(const CqOperator& op);

// Entropy in bits after the best commuting smoothing within trace
// distance eps/2. order 0: greedy rank cut; order 2: two-sided water-fill
// located by bisection.
ExtFloat brute_smooth(std::vector<ExtFloat> eigs, const ExtFloat& eps, int order);

struct CheckReport {
  bool ok = true;
  ExtFloat max_residual;
  std::vector<std::string> failures;

  void record(const std::string& what, const ExtFloat& residual, const ExtFloat& tol);
};

CheckReport projectors_check(const ChannelModel& ch);

// Builds tau from the flattened-top / raised-kernel eigenvalue assignment
// in the eigenbasis of each block and returns |0.5 ||tau - rho||_1 - eps/2|
// together with tau's trace deviation.
struct BallCheck {
  ExtFloat half_trace_norm;
  ExtFloat residual;
  ExtFloat trace_error;
};
BallCheck tau_ball_check(const ChannelModel& ch, std::size_t n, const ExtFloat& eps);

// Largest excess of <l| tr_X(tau - rho) |l> over
// eps/(2 m0) (1 - (lambda1/(lambda0 + lambda1))^n) in the product basis.
ExtFloat floor_bound_excess(const ChannelModel& ch, std::size_t n, const ExtFloat& eps);

}  // namespace finitekey
