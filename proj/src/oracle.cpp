#include "finitekey/oracle.hpp"

#include <algorithm>
#include <numeric>

#include "finitekey/entropies.hpp"

namespace finitekey {

DenseOperator::DenseOperator(std::size_t dim, const PrecisionContext& ctx)
    : dim_(dim), a_(dim * dim, ExtFloat(ctx)) {}

ExtFloat DenseOperator::trace() const {
  ExtFloat t = dim_ ? ExtFloat(a_[0].context()) : ExtFloat();
  for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

DenseOperator DenseOperator::kron(const DenseOperator& o) const {
  DenseOperator r(dim_ * o.dim_, a_.front().context());
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) {
      const ExtFloat& a = (*this)(i, j);
      if (a.is_zero()) continue;
      for (std::size_t k = 0; k < o.dim_; ++k)
        for (std::size_t l = 0; l < o.dim_; ++l) {
          const ExtFloat& b = o(k, l);
          if (!b.is_zero()) r(i * o.dim_ + k, j * o.dim_ + l) = a * b;
        }
    }
  return r;
}

DenseOperator DenseOperator::operator*(const DenseOperator& o) const {
  if (dim_ != o.dim_) throw DomainError("dimension mismatch");
  DenseOperator r(dim_, a_.front().context());
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t k = 0; k < dim_; ++k) {
      const ExtFloat& a = (*this)(i, k);
      if (a.is_zero()) continue;
      for (std::size_t j = 0; j < dim_; ++j) r(i, j) += a * o(k, j);
    }
  return r;
}

DenseOperator DenseOperator::operator+(const DenseOperator& o) const {
  if (dim_ != o.dim_) throw DomainError("dimension mismatch");
  DenseOperator r = *this;
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
  return r;
}

DenseOperator DenseOperator::operator-(const DenseOperator& o) const {
  if (dim_ != o.dim_) throw DomainError("dimension mismatch");
  DenseOperator r = *this;
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] -= o.a_[i];
  return r;
}

ExtFloat DenseOperator::asymmetry() const {
  ExtFloat m(a_.front().context());
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i + 1; j < dim_; ++j) m = max(m, abs((*this)(i, j) - (*this)(j, i)));
  return m;
}

ExtFloat DenseOperator::max_abs() const {
  ExtFloat m(a_.front().context());
  for (const auto& v : a_) m = max(m, abs(v));
  return m;
}

DenseOperator identity_operator(std::size_t dim, const PrecisionContext& ctx) {
  DenseOperator r(dim, ctx);
  for (std::size_t i = 0; i < dim; ++i) r(i, i) = ExtFloat(1L, ctx);
  return r;
}

DenseOperator rho_e_conditional(const ChannelModel& ch, int x) {
  if (x != 0 && x != 1) throw DomainError("x must be 0 or 1");
  auto ctx = ch.e.context();
  const auto& l = ch.lambda;
  DenseOperator r(4, ctx);
  for (int i = 0; i < 4; ++i) r(i, i) = l[i];
  ExtFloat o01 = sqrt(l[0] * l[1]);
  ExtFloat o23 = sqrt(l[2] * l[3]);
  if (x == 1) {
    o01 = -o01;
    o23 = -o23;
  }
  r(0, 1) = r(1, 0) = o01;
  r(2, 3) = r(3, 2) = o23;
  return r;
}

DenseOperator eigenprojector(const ChannelModel& ch, int i, int x) {
  if (i < 0 || i > 3) throw DomainError("projector index must be in 0..3");
  if (x != 0 && x != 1) throw DomainError("x must be 0 or 1");
  auto ctx = ch.e.context();
  const auto& l = ch.lambda;
  // i = 0, 1 live on the first pair of levels, i = 2, 3 on the second.
  std::size_t off = i < 2 ? 0 : 2;
  const ExtFloat& p = l[off];
  const ExtFloat& q = l[off + 1];
  ExtFloat s = p + q;
  ExtFloat c = sqrt(p * q) / s;
  // The support projector (odd i) is positively correlated for x = 0.
  bool support = i % 2 == 1;
  if (support == (x == 1)) c = -c;
  DenseOperator r(4, ctx);
  r(off, off) = (support ? p : q) / s;
  r(off + 1, off + 1) = (support ? q : p) / s;
  r(off, off + 1) = r(off + 1, off) = c;
  return r;
}

std::size_t CqOperator::dim() const { return blocks.empty() ? 0 : blocks.size() * blocks.front().dim(); }

ExtFloat CqOperator::trace() const {
  ExtFloat t(block_weight.context());
  for (const auto& b : blocks) t += b.trace();
  return t * block_weight;
}

namespace {

constexpr std::size_t kMaxOracleSignals = 4;

void check_oracle_n(std::size_t n) {
  if (n < 1 || n > kMaxOracleSignals) throw DomainError("oracle supports 1 <= n <= 4");
}

// Block x: tensor product over signals p of rho_E^{x_p}, with signal 0 as
// the most significant factor.
DenseOperator build_block(const ChannelModel& ch, std::size_t n, std::size_t x) {
  DenseOperator single[2] = {rho_e_conditional(ch, 0), rho_e_conditional(ch, 1)};
  DenseOperator r = single[(x >> (n - 1)) & 1];
  for (std::size_t p = 1; p < n; ++p) r = r.kron(single[(x >> (n - 1 - p)) & 1]);
  return r;
}

// Connected components of the nonzero pattern, each sorted.
std::vector<std::vector<std::size_t>> components(const DenseOperator& a) {
  std::size_t d = a.dim();
  std::vector<std::size_t> parent(d);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (!a(i, j).is_zero() || !a(j, i).is_zero()) parent[find(i)] = find(j);
  std::vector<std::vector<std::size_t>> groups(d);
  for (std::size_t i = 0; i < d; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& g : groups)
    if (!g.empty()) out.push_back(std::move(g));
  std::sort(out.begin(), out.end());
  return out;
}

DenseOperator submatrix(const DenseOperator& a, const std::vector<std::size_t>& idx) {
  DenseOperator r(idx.size(), a(0, 0).context());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) r(i, j) = a(idx[i], idx[j]);
  return r;
}

// Cyclic Jacobi on one dense symmetric matrix.
Eigensystem jacobi_dense(DenseOperator a) {
  std::size_t m = a.dim();
  auto ctx = a(0, 0).context();
  DenseOperator v = identity_operator(m, ctx);
  ExtFloat frob(ctx);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) frob += a(i, j) * a(i, j);
  ExtFloat tol = frob;
  tol.mul_2exp(-2 * (ctx.bits - 8));

  ExtFloat one(1L, ctx);
  for (int sweep = 0; sweep < 100; ++sweep) {
    ExtFloat off(ctx);
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) off += a(p, q) * a(p, q);
    if (off <= tol) break;
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) {
        if (a(p, q).is_zero()) continue;
        ExtFloat theta = (a(q, q) - a(p, p)) / (ExtFloat(2L, ctx) * a(p, q));
        ExtFloat t = one / (abs(theta) + sqrt(theta * theta + one));
        if (theta.sign() < 0) t = -t;
        ExtFloat c = one / sqrt(t * t + one);
        ExtFloat s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          ExtFloat akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          ExtFloat apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = ExtFloat(ctx);
        a(q, p) = ExtFloat(ctx);
        for (std::size_t k = 0; k < m; ++k) {
          ExtFloat vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  Eigensystem es;
  es.values.reserve(m);
  for (std::size_t i = 0; i < m; ++i) es.values.push_back(a(i, i));
  es.vectors = std::move(v);
  return es;
}

// Eigenvalues this close to zero relative to the block scale are exact
// kernel directions blurred by rounding.
bool is_numerical_zero(const ExtFloat& v, const ExtFloat& scale) {
  ExtFloat tol = scale;
  tol.mul_2exp(-(v.precision() - 16));
  return abs(v) <= tol;
}

ExtFloat sum_of(const std::vector<ExtFloat>& v, const PrecisionContext& ctx) {
  ExtFloat s(ctx);
  for (const auto& x : v) s += x;
  return s;
}

ExtFloat bisect_level(const std::vector<ExtFloat>& eigs, const ExtFloat& budget, bool top) {
  auto ctx = budget.context();
  ExtFloat lo(ctx), hi = *std::max_element(eigs.begin(), eigs.end());
  // top: mass above the level; bottom: mass missing below it.
  auto moved = [&](const ExtFloat& level) {
    ExtFloat s(ctx);
    for (const auto& x : eigs) {
      if (top && x > level) s += x - level;
      if (!top && x < level) s += level - x;
    }
    return s;
  };
  for (long it = 0; it < ctx.bits + 16; ++it) {
    ExtFloat mid = lo + hi;
    mid.mul_2exp(-1);
    bool above = moved(mid) > budget;
    // moved() falls with the level at the top and rises at the bottom.
    if (above == top) lo = mid; else hi = mid;
  }
  ExtFloat mid = lo + hi;
  mid.mul_2exp(-1);
  return mid;
}

}  // namespace

CqOperator build_rho_xe_dense(const ChannelModel& ch, std::size_t n) {
  check_oracle_n(n);
  auto ctx = ch.e.context();
  CqOperator op;
  op.n = n;
  op.block_weight = ExtFloat::pow2(-static_cast<long>(n), ctx);
  for (std::size_t x = 0; x < (std::size_t{1} << n); ++x) op.blocks.push_back(build_block(ch, n, x));
  return op;
}

DenseOperator to_dense(const CqOperator& op) {
  if (op.blocks.empty()) throw DomainError("empty operator");
  std::size_t bd = op.blocks.front().dim();
  DenseOperator r(op.dim(), op.block_weight.context());
  for (std::size_t x = 0; x < op.blocks.size(); ++x)
    for (std::size_t i = 0; i < bd; ++i)
      for (std::size_t j = 0; j < bd; ++j)
        if (!op.blocks[x](i, j).is_zero()) r(x * bd + i, x * bd + j) = op.block_weight * op.blocks[x](i, j);
  return r;
}

DenseOperator partial_trace_x(const CqOperator& op) {
  if (op.blocks.empty()) throw DomainError("empty operator");
  DenseOperator r(op.blocks.front().dim(), op.block_weight.context());
  for (const auto& b : op.blocks) r = r + b;
  std::size_t d = r.dim();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) r(i, j) *= op.block_weight;
  return r;
}

DenseOperator rho_e_product(const ChannelModel& ch, std::size_t n) {
  check_oracle_n(n);
  auto ctx = ch.e.context();
  DenseOperator single(4, ctx);
  for (int i = 0; i < 4; ++i) single(i, i) = ch.lambda[i];
  DenseOperator r = single;
  for (std::size_t p = 1; p < n; ++p) r = r.kron(single);
  return r;
}

Eigensystem jacobi_eigensystem(const DenseOperator& a) {
  if (a.dim() == 0) throw DomainError("empty operator");
  auto ctx = a(0, 0).context();
  Eigensystem es;
  es.values.assign(a.dim(), ExtFloat(ctx));
  es.vectors = DenseOperator(a.dim(), ctx);
  for (const auto& idx : components(a)) {
    Eigensystem part = jacobi_dense(submatrix(a, idx));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      es.values[idx[j]] = part.values[j];
      for (std::size_t i = 0; i < idx.size(); ++i) es.vectors(idx[i], idx[j]) = part.vectors(i, j);
    }
  }
  return es;
}

std::vector<ExtFloat> eigenvalues(const CqOperator& op) {
  std::vector<ExtFloat> out;
  out.reserve(op.dim());
  for (const auto& b : op.blocks) {
    ExtFloat scale = b.max_abs();
    for (auto& v : jacobi_eigensystem(b).values) {
      ExtFloat w = is_numerical_zero(v, scale) ? ExtFloat(v.context()) : v * op.block_weight;
      out.push_back(std::move(w));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ExtFloat brute_smooth(std::vector<ExtFloat> eigs, const ExtFloat& eps, int order) {
  if (eigs.empty()) throw DomainError("empty eigenvalue list");
  if (eigs.size() > 4096) throw DomainError("brute_smooth supports at most 4096 eigenvalues");
  if (eps.sign() < 0) throw DomainError("eps must be non-negative");
  auto ctx = eps.context();
  ExtFloat h = eps;
  h.mul_2exp(-1);
  std::sort(eigs.begin(), eigs.end());

  if (order == 0) {
    // Same tie rule as the compact path: a mass equal to the budget is cut.
    ExtFloat budget = h + h * ExtFloat::pow2(16 - h.precision(), ctx);
    ExtFloat cut(ctx);
    std::size_t removed = 0;
    for (const auto& v : eigs) {
      if (v.is_zero()) {
        ++removed;
        continue;
      }
      if (cut + v > budget) break;
      cut += v;
      ++removed;
    }
    std::size_t rank = eigs.size() - removed;
    if (rank == 0) throw DomainError("smoothing removes the whole spectrum");
    return log2(ExtFloat(static_cast<unsigned long>(rank), ctx));
  }
  if (order != 2) throw DomainError("brute_smooth supports orders 0 and 2");

  if (!eps.is_zero()) {
    ExtFloat top = bisect_level(eigs, h, true);
    ExtFloat bottom = bisect_level(eigs, h, false);
    if (bottom >= top) throw DomainError("smoothing levels cross");
    for (auto& v : eigs) {
      if (v > top) v = top;
      else if (v < bottom) v = bottom;
    }
  }
  ExtFloat sq(ctx);
  for (const auto& v : eigs) sq += v * v;
  return -log2(sq / (sum_of(eigs, ctx) * sum_of(eigs, ctx)));
}

void CheckReport::record(const std::string& what, const ExtFloat& residual, const ExtFloat& tol) {
  max_residual = max(max_residual, residual);
  if (!(residual <= tol)) {
    ok = false;
    failures.push_back(what + ": residual " + residual.to_string(6));
  }
}

CheckReport projectors_check(const ChannelModel& ch) {
  auto ctx = ch.e.context();
  CheckReport rep;
  rep.max_residual = ExtFloat(ctx);
  ExtFloat tol = ExtFloat::pow2(32 - ctx.bits, ctx);
  DenseOperator id = identity_operator(4, ctx);
  const auto& l = ch.lambda;
  ExtFloat gamma[4] = {ExtFloat(ctx), l[0] + l[1], ExtFloat(ctx), l[2] + l[3]};

  for (int x = 0; x < 2; ++x) {
    std::string tag = "x=" + std::to_string(x);
    DenseOperator rho = rho_e_conditional(ch, x);
    DenseOperator sum(4, ctx), rebuilt(4, ctx);
    for (int i = 0; i < 4; ++i) {
      DenseOperator p = eigenprojector(ch, i, x);
      std::string pi = tag + " P" + std::to_string(i);
      rep.record(pi + " symmetric", p.asymmetry(), tol);
      rep.record(pi + " idempotent", (p * p - p).max_abs(), tol);
      rep.record(pi + " rank one", abs(p.trace() - ExtFloat(1L, ctx)), tol);
      for (int j = i + 1; j < 4; ++j)
        rep.record(pi + " orthogonal to P" + std::to_string(j), (p * eigenprojector(ch, j, x)).max_abs(), tol);
      // Eigenprojector: rho P = gamma P.
      DenseOperator gp = p;
      for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) gp(r, c) *= gamma[i];
      rep.record(pi + " eigenvector", (rho * p - gp).max_abs(), tol);
      sum = sum + p;
      rebuilt = rebuilt + gp;
    }
    rep.record(tag + " completeness", (sum - id).max_abs(), tol);
    rep.record(tag + " spectral sum", (rebuilt - rho).max_abs(), tol);
    rep.record(tag + " tr(P1 rho)", abs((eigenprojector(ch, 1, x) * rho).trace() - gamma[1]), tol);
  }

  DenseOperator p13(4, ctx);
  for (int i = 0; i < 4; ++i) {
    DenseOperator avg = eigenprojector(ch, i, 0) + eigenprojector(ch, i, 1);
    ExtFloat off(ctx);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        avg(r, c).mul_2exp(-1);
        if (r != c) off = max(off, abs(avg(r, c)));
      }
    rep.record("averaged P" + std::to_string(i) + " diagonal", off, tol);
    if (i % 2 == 1) p13 = p13 + avg;
  }
  ExtFloat expect[4] = {l[0] / (l[0] + l[1]), l[1] / (l[0] + l[1]), l[2] / (l[2] + l[3]), l[3] / (l[2] + l[3])};
  for (std::size_t i = 0; i < 4; ++i)
    rep.record("P1 + P3 diagonal " + std::to_string(i), abs(p13(i, i) - expect[i]), tol);
  return rep;
}

namespace {

// Walks every block of rho_XE^(n) component by component, handing each
// component's rho, eigenvectors and the smoothed eigenvalue assignment to
// visit(block, indices, rho_c, eigensystem, mu).
template <class Visit>
void for_each_smoothed_component(const ChannelModel& ch, std::size_t n, const ExtFloat& eps, Visit visit) {
  check_oracle_n(n);
  if (ch.noiseless()) throw DomainError("tau construction needs e > 0");
  BlockSpectrumXE bs = block_spectrum_xe(ch, n);
  SmoothingResult sm = modified_s2(bs, eps);
  std::vector<SpectrumEntry> levels = bs.levels.materialize();

  for (std::size_t x = 0; x < (std::size_t{1} << n); ++x) {
    DenseOperator block = build_block(ch, n, x);
    ExtFloat scale = block.max_abs();
    for (const auto& idx : components(block)) {
      DenseOperator rc = submatrix(block, idx);
      Eigensystem es = jacobi_dense(rc);
      std::vector<ExtFloat> mu;
      for (const auto& g : es.values) {
        if (is_numerical_zero(g, scale)) {
          mu.push_back(sm.kernel_level);
          continue;
        }
        // Snap to the nearest compact level, then apply the plateau cap.
        const SpectrumEntry* best = &levels.front();
        for (const auto& lv : levels)
          if (abs(lv.value - g) < abs(best->value - g)) best = &lv;
        mu.push_back(min(best->value, sm.lambda_plus));
      }
      visit(x, idx, rc, es, mu);
    }
  }
}

DenseOperator reassemble(const Eigensystem& es, const std::vector<ExtFloat>& mu) {
  std::size_t m = es.values.size();
  DenseOperator r(m, mu.front().context());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) r(i, j) += es.vectors(i, k) * mu[k] * es.vectors(j, k);
  return r;
}

}  // namespace

BallCheck tau_ball_check(const ChannelModel& ch, std::size_t n, const ExtFloat& eps) {
  auto ctx = ch.e.context();
  ExtFloat norm(ctx), trace(ctx);
  ExtFloat w = ExtFloat::pow2(-static_cast<long>(n), ctx);
  for_each_smoothed_component(ch, n, eps, [&](std::size_t, const std::vector<std::size_t>&,
                                              const DenseOperator& rc, const Eigensystem& es,
                                              const std::vector<ExtFloat>& mu) {
    DenseOperator tau = reassemble(es, mu);
    trace += w * tau.trace();
    for (const auto& d : jacobi_dense(tau - rc).values) norm += w * abs(d);
  });
  BallCheck out;
  out.half_trace_norm = norm;
  out.half_trace_norm.mul_2exp(-1);
  ExtFloat h = eps;
  h.mul_2exp(-1);
  out.residual = abs(out.half_trace_norm - h);
  out.trace_error = abs(trace - ExtFloat(1L, ctx));
  return out;
}

ExtFloat floor_bound_excess(const ChannelModel& ch, std::size_t n, const ExtFloat& eps) {
  auto ctx = ch.e.context();
  std::size_t dim = std::size_t{1} << (2 * n);
  std::vector<ExtFloat> delta(dim, ExtFloat(ctx));
  ExtFloat w = ExtFloat::pow2(-static_cast<long>(n), ctx);
  for_each_smoothed_component(ch, n, eps, [&](std::size_t, const std::vector<std::size_t>& idx,
                                              const DenseOperator& rc, const Eigensystem& es,
                                              const std::vector<ExtFloat>& mu) {
    DenseOperator d = reassemble(es, mu) - rc;
    for (std::size_t i = 0; i < idx.size(); ++i) delta[idx[i]] += w * d(i, i);
  });

  BlockSpectrumXE bs = block_spectrum_xe(ch, n);
  const auto& l = ch.lambda;
  ExtFloat bound = eps / (ExtFloat(2L, ctx) * bs.m0) *
                   (ExtFloat(1L, ctx) - pow(l[1] / (l[0] + l[1]), static_cast<long>(n)));
  ExtFloat worst = ExtFloat::infinity(-1, ctx);
  for (const auto& v : delta) worst = max(worst, v - bound);
  return worst;
}

}  // namespace finitekey
