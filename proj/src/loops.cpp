#include "bandlab/loops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bandlab {

LoopSignature cut_glue_g(const LoopSignature& s, int k, std::int64_t a) {
  const int n = s.n();
  if (k < 1 || k > n) throw std::out_of_range("cut_glue_g: k out of range");
  LoopSignature out;
  out.sigma.reserve(n + 1);
  out.blocks.reserve(n + 1);
  for (int i = 0; i < k; ++i) out.sigma.push_back(s.sigma[i]);
  out.sigma.push_back(s.sigma[k - 1]);
  for (int i = k; i < n; ++i) out.sigma.push_back(s.sigma[i]);
  for (int i = 0; i < k - 1; ++i) out.blocks.push_back(s.blocks[i]);
  out.blocks.push_back(a);
  for (int i = k - 1; i < n; ++i) out.blocks.push_back(s.blocks[i]);
  return out;
}

LoopSignature cut_glue_left(const LoopSignature& s, int k, int l, std::int64_t a) {
  const int n = s.n();
  if (!(1 <= k && k < l && l <= n)) throw std::out_of_range("cut_glue_left: need 1 <= k < l <= n");
  LoopSignature out;
  for (int i = 0; i < k; ++i) out.sigma.push_back(s.sigma[i]);
  for (int i = l - 1; i < n; ++i) out.sigma.push_back(s.sigma[i]);
  for (int i = 0; i < k - 1; ++i) out.blocks.push_back(s.blocks[i]);
  out.blocks.push_back(a);
  for (int i = l - 1; i < n; ++i) out.blocks.push_back(s.blocks[i]);
  return out;
}

LoopSignature cut_glue_right(const LoopSignature& s, int k, int l, std::int64_t b) {
  const int n = s.n();
  if (!(1 <= k && k < l && l <= n)) throw std::out_of_range("cut_glue_right: need 1 <= k < l <= n");
  LoopSignature out;
  for (int i = k - 1; i < l; ++i) out.sigma.push_back(s.sigma[i]);
  for (int i = k - 1; i < l - 1; ++i) out.blocks.push_back(s.blocks[i]);
  out.blocks.push_back(b);
  return out;
}

LoopEvaluator::LoopEvaluator(const TorusGeometry& geo, const Matrix& G)
    : geo_(&geo), G_(&G) {
  const std::int64_t nb = geo.n_blocks();
  cells_.resize(static_cast<std::size_t>(nb));
  for (std::int64_t a = 0; a < nb; ++a) cells_[static_cast<std::size_t>(a)] = geo.cells_of(a);
  block_of_.resize(static_cast<std::size_t>(geo.n_sites()));
  for (std::int64_t x = 0; x < geo.n_sites(); ++x)
    block_of_[static_cast<std::size_t>(x)] = geo.block_of(x);
  w_pow_ = 1.0 / static_cast<double>(geo.cells_per_block());
}

Matrix LoopEvaluator::block_g(int sigma, std::int64_t a, std::int64_t b) const {
  const auto& ca = cells_[static_cast<std::size_t>(a)];
  const auto& cb = cells_[static_cast<std::size_t>(b)];
  const std::int64_t w = static_cast<std::int64_t>(ca.size());
  Matrix M(w, w);
  for (std::int64_t j = 0; j < w; ++j)
    for (std::int64_t i = 0; i < w; ++i) M(i, j) = g(sigma, ca[static_cast<std::size_t>(i)], cb[static_cast<std::size_t>(j)]);
  return M;
}

Complex LoopEvaluator::eval(const LoopSignature& sig) const {
  const int n = sig.n();
  if (n < 1) throw std::invalid_argument("LoopEvaluator::eval: empty signature");
  const double scale = std::pow(w_pow_, n);
  if (n == 1) {
    Complex tr = 0.0;
    for (std::int64_t x : cells_[static_cast<std::size_t>(sig.blocks[0])]) tr += g(sig.sigma[0], x, x);
    return scale * tr;
  }
  // Tr[M_1 ... M_n], M_i = G(sigma_i) restricted to rows I_{a_{i-1}}, cols I_{a_i}
  Matrix prod = block_g(sig.sigma[0], sig.blocks[static_cast<std::size_t>(n - 1)], sig.blocks[0]);
  for (int i = 1; i < n - 1; ++i)
    prod = prod * block_g(sig.sigma[i], sig.blocks[static_cast<std::size_t>(i - 1)], sig.blocks[static_cast<std::size_t>(i)]);
  const Matrix last = block_g(sig.sigma[n - 1], sig.blocks[static_cast<std::size_t>(n - 2)],
                              sig.blocks[static_cast<std::size_t>(n - 1)]);
  const Complex tr = (prod.array() * last.transpose().array()).sum();
  return scale * tr;
}

std::vector<Complex> LoopEvaluator::slot_scan(const LoopSignature& sig, int slot) const {
  const int n = sig.n();
  if (slot < 0 || slot >= n) throw std::out_of_range("slot_scan: slot out of range");
  const std::int64_t nb = geo_->n_blocks();
  const std::int64_t N = geo_->n_sites();
  const double scale = std::pow(w_pow_, n);
  std::vector<Complex> out(static_cast<std::size_t>(nb), Complex(0.0));

  // rotate so the free slot is last
  std::vector<int> tau(static_cast<std::size_t>(n));
  std::vector<std::int64_t> c(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int src = (slot + 1 + i) % n;
    tau[static_cast<std::size_t>(i)] = sig.sigma[static_cast<std::size_t>(src)];
    c[static_cast<std::size_t>(i)] = sig.blocks[static_cast<std::size_t>(src)];
  }

  if (n == 1) {
    for (std::int64_t x = 0; x < N; ++x)
      out[static_cast<std::size_t>(block_of_[static_cast<std::size_t>(x)])] += g(tau[0], x, x);
    for (auto& v : out) v *= scale;
    return out;
  }

  const std::int64_t w = geo_->cells_per_block();
  // P = G(tau_1)[:, I_{c_1}] * prod_{i=2}^{n-1} G(tau_i)[I_{c_{i-1}}, I_{c_i}]
  Matrix P(N, w);
  const auto& c1 = cells_[static_cast<std::size_t>(c[0])];
  for (std::int64_t j = 0; j < w; ++j)
    for (std::int64_t x = 0; x < N; ++x) P(x, j) = g(tau[0], x, c1[static_cast<std::size_t>(j)]);
  for (int i = 1; i < n - 1; ++i)
    P = P * block_g(tau[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(i - 1)], c[static_cast<std::size_t>(i)]);

  const auto& clast = cells_[static_cast<std::size_t>(c[static_cast<std::size_t>(n - 2)])];
  for (std::int64_t x = 0; x < N; ++x) {
    Complex wx = 0.0;
    for (std::int64_t j = 0; j < w; ++j)
      wx += P(x, j) * g(tau[static_cast<std::size_t>(n - 1)], clast[static_cast<std::size_t>(j)], x);
    out[static_cast<std::size_t>(block_of_[static_cast<std::size_t>(x)])] += wx;
  }
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<Complex> LoopEvaluator::block_traces(int sigma) const {
  const std::int64_t nb = geo_->n_blocks();
  std::vector<Complex> out(static_cast<std::size_t>(nb), Complex(0.0));
  for (std::int64_t x = 0; x < geo_->n_sites(); ++x)
    out[static_cast<std::size_t>(block_of_[static_cast<std::size_t>(x)])] += g(sigma, x, x);
  for (auto& v : out) v *= w_pow_;
  return out;
}

BlockTensor LoopEvaluator::full2(int s1, int s2) const {
  BlockTensor out(geo_->blocks(), 2);
  const std::int64_t N = geo_->n_sites();
  const std::int64_t nb = geo_->n_blocks();
  const double scale = w_pow_ * w_pow_;
  // L(a,b) = W^{-2d} sum_{x in I_a, y in I_b} G(s1)_{yx} G(s2)_{xy}
  for (std::int64_t x = 0; x < N; ++x) {
    const std::int64_t bx = block_of_[static_cast<std::size_t>(x)];
    for (std::int64_t y = 0; y < N; ++y) {
      const std::int64_t by = block_of_[static_cast<std::size_t>(y)];
      out[by * nb + bx] += g(s1, x, y) * g(s2, y, x);
    }
  }
  out *= scale;
  return out;
}

BlockTensor LoopEvaluator::full3(int s1, int s2, int s3) const {
  BlockTensor out(geo_->blocks(), 3);
  const std::int64_t nb = geo_->n_blocks();
  const std::int64_t N = geo_->n_sites();
  const std::int64_t w = geo_->cells_per_block();
  const double scale = std::pow(w_pow_, 3);
  for (std::int64_t a = 0; a < nb; ++a) {
    for (std::int64_t b = 0; b < nb; ++b) {
      const Matrix D = block_g(s2, a, b);  // G2[I_a, I_b]
      // E = D * G3[I_b, :]
      Matrix Gb(w, N);
      const auto& cb = cells_[static_cast<std::size_t>(b)];
      for (std::int64_t x = 0; x < N; ++x)
        for (std::int64_t j = 0; j < w; ++j) Gb(j, x) = g(s3, cb[static_cast<std::size_t>(j)], x);
      const Matrix E = D * Gb;  // rows ~ I_a, cols ~ sites
      for (std::int64_t cblk = 0; cblk < nb; ++cblk) {
        const auto& cc = cells_[static_cast<std::size_t>(cblk)];
        const Matrix G1c = block_g(s1, cblk, a);  // G1[I_c, I_a]
        Complex tr = 0.0;
        for (std::int64_t v = 0; v < w; ++v)
          for (std::int64_t i = 0; i < w; ++i)
            tr += E(i, cc[static_cast<std::size_t>(v)]) * G1c(v, i);
        out[(a * nb + b) * nb + cblk] = scale * tr;
      }
    }
  }
  return out;
}

double loop_ward_residual(const LoopEvaluator& ev, const LoopSignature& sig, double eta) {
  const int n = sig.n();
  if (n < 2) throw std::invalid_argument("loop_ward_residual: need n >= 2");
  if (sig.sigma.front() != -sig.sigma.back())
    throw std::invalid_argument("loop_ward_residual: requires sigma_1 = -sigma_n");
  const double wd = static_cast<double>(ev.geometry().cells_per_block());

  const auto scan = ev.slot_scan(sig, n - 1);
  Complex lhs = 0.0;
  for (const auto& v : scan) lhs += v;

  LoopSignature reduced;
  reduced.sigma.assign(sig.sigma.begin(), sig.sigma.end() - 1);
  reduced.blocks.assign(sig.blocks.begin(), sig.blocks.end() - 1);
  reduced.sigma[0] = +1;
  const Complex plus = ev.eval(reduced);
  reduced.sigma[0] = -1;
  const Complex minus = ev.eval(reduced);
  const Complex rhs = (plus - minus) / (Complex(0.0, 2.0) * wd * eta);

  const double mag = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  return std::abs(lhs - rhs) / mag;
}

WardInequalityReport ward_inequality_check(const LoopEvaluator& ev, const LoopSignature& sig,
                                           int k) {
  const int n = sig.n();
  if (!(1 <= k && k <= n - 1)) throw std::out_of_range("ward_inequality_check: bad split");
  WardInequalityReport rep;
  rep.lhs_abs = std::abs(ev.eval(sig));

  // split signatures of the Cauchy-Schwarz chain (both symmetric, hence the
  // split loop values are nonnegative reals)
  LoopSignature s1, s2;
  for (int i = 1; i <= k; ++i) {
    s1.sigma.push_back(sig.sigma[static_cast<std::size_t>(i - 1)]);
  }
  for (int i = k; i >= 1; --i) s1.sigma.push_back(-sig.sigma[static_cast<std::size_t>(i - 1)]);
  for (int i = 1; i <= k - 1; ++i) s1.blocks.push_back(sig.blocks[static_cast<std::size_t>(i - 1)]);
  s1.blocks.push_back(sig.blocks[static_cast<std::size_t>(k - 1)]);
  for (int i = k - 1; i >= 1; --i) s1.blocks.push_back(sig.blocks[static_cast<std::size_t>(i - 1)]);
  s1.blocks.push_back(sig.blocks[static_cast<std::size_t>(n - 1)]);

  for (int i = n; i >= k + 1; --i) s2.sigma.push_back(-sig.sigma[static_cast<std::size_t>(i - 1)]);
  for (int i = k + 1; i <= n; ++i) s2.sigma.push_back(sig.sigma[static_cast<std::size_t>(i - 1)]);
  for (int i = n - 1; i >= k + 1; --i) s2.blocks.push_back(sig.blocks[static_cast<std::size_t>(i - 1)]);
  s2.blocks.push_back(sig.blocks[static_cast<std::size_t>(k - 1)]);
  for (int i = k + 1; i <= n - 1; ++i) s2.blocks.push_back(sig.blocks[static_cast<std::size_t>(i - 1)]);
  s2.blocks.push_back(sig.blocks[static_cast<std::size_t>(n - 1)]);

  const Complex l1 = ev.eval(s1);
  const Complex l2 = ev.eval(s2);
  rep.rhs = std::sqrt(std::max(0.0, l1.real()) * std::max(0.0, l2.real()));
  rep.slack = rep.rhs - rep.lhs_abs;
  rep.holds = rep.lhs_abs <= rep.rhs + 1e-12;
  return rep;
}

Complex lightweight_term(const LoopEvaluator& ev, const BlockProfile& profile,
                         const LoopSignature& sig, Complex m_plus) {
  const int n = sig.n();
  const std::int64_t nb = ev.block_count();
  const double wd = static_cast<double>(ev.geometry().cells_per_block());
  Complex total = 0.0;
  for (int k = 1; k <= n; ++k) {
    const int sk = sig.sigma[static_cast<std::size_t>(k - 1)];
    std::vector<Complex> lw = ev.block_traces(sk);
    const Complex m = sk > 0 ? m_plus : std::conj(m_plus);
    for (auto& v : lw) v -= m;
    // w = S^(B) applied to the light-weight vector
    std::vector<Complex> w(static_cast<std::size_t>(nb));
    profile.apply(lw.data(), w.data());
    // v_k(b) = (G_k^{(b)} o L): the glued (n+1)-loop with the new block free
    LoopSignature glued = cut_glue_g(sig, k, 0);
    const auto scan = ev.slot_scan(glued, k - 1);
    for (std::int64_t b = 0; b < nb; ++b)
      total += wd * w[static_cast<std::size_t>(b)] * scan[static_cast<std::size_t>(b)];
  }
  return total;
}

Complex quadratic_term(const LoopEvaluator& ev, const BlockProfile& profile,
                       const LoopSignature& sig) {
  const int n = sig.n();
  const std::int64_t nb = ev.block_count();
  const double wd = static_cast<double>(ev.geometry().cells_per_block());
  Complex total = 0.0;
  for (int k = 1; k <= n; ++k) {
    for (int l = k + 1; l <= n; ++l) {
      const LoopSignature left = cut_glue_left(sig, k, l, 0);
      const LoopSignature right = cut_glue_right(sig, k, l, 0);
      const auto u = ev.slot_scan(left, k - 1);
      const auto v = ev.slot_scan(right, right.n() - 1);
      std::vector<Complex> sv(static_cast<std::size_t>(nb));
      profile.apply(v.data(), sv.data());
      for (std::int64_t a = 0; a < nb; ++a)
        total += wd * u[static_cast<std::size_t>(a)] * sv[static_cast<std::size_t>(a)];
    }
  }
  return total;
}

Complex qvar_loop(const LoopEvaluator& ev, const BlockProfile& profile,
                  const LoopSignature& sig, const std::vector<std::int64_t>& blocks_prime,
                  int k) {
  const int n = sig.n();
  if (!(1 <= k && k <= n)) throw std::out_of_range("qvar_loop: k out of range");
  const std::int64_t nb = ev.block_count();
  const double wd = static_cast<double>(ev.geometry().cells_per_block());

  // (sigma (x) -sigma)^{(k)} and (a (x) a')^{(k)}(b, b') as displayed
  LoopSignature big;
  for (int i = k; i <= n; ++i) big.sigma.push_back(sig.sigma[static_cast<std::size_t>(i - 1)]);
  for (int i = 1; i <= k; ++i) big.sigma.push_back(sig.sigma[static_cast<std::size_t>(i - 1)]);
  for (int i = k; i >= 1; --i) big.sigma.push_back(-sig.sigma[static_cast<std::size_t>(i - 1)]);
  for (int i = n; i >= k; --i) big.sigma.push_back(-sig.sigma[static_cast<std::size_t>(i - 1)]);

  for (int i = k; i <= n; ++i) big.blocks.push_back(sig.blocks[static_cast<std::size_t>(i - 1)]);
  for (int i = 1; i <= k - 1; ++i) big.blocks.push_back(sig.blocks[static_cast<std::size_t>(i - 1)]);
  big.blocks.push_back(0);  // b
  for (int i = k - 1; i >= 1; --i) big.blocks.push_back(blocks_prime[static_cast<std::size_t>(i - 1)]);
  for (int i = n; i >= k; --i) big.blocks.push_back(blocks_prime[static_cast<std::size_t>(i - 1)]);
  big.blocks.push_back(0);  // b'

  const int slot_b = n;           // 0-based position of b
  const int slot_bp = 2 * n + 1;  // 0-based position of b'
  Complex total = 0.0;
  for (std::int64_t b = 0; b < nb; ++b) {
    big.blocks[static_cast<std::size_t>(slot_b)] = b;
    const auto scan = ev.slot_scan(big, slot_bp);
    std::vector<Complex> sv(static_cast<std::size_t>(nb));
    profile.apply(scan.data(), sv.data());
    total += wd * sv[static_cast<std::size_t>(b)];
  }
  return total;
}

Complex qvar_diag(const LoopEvaluator& ev, const BlockProfile& profile,
                  const LoopSignature& sig) {
  Complex total = 0.0;
  for (int k = 1; k <= sig.n(); ++k) total += qvar_loop(ev, profile, sig, sig.blocks, k);
  return total;
}

}  // namespace bandlab
