#include "bandlab/primitive.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>

#include "bandlab/rng.hpp"

namespace bandlab {

Complex k1(int sigma, Complex m_plus) { return charge_value(sigma, m_plus); }

Complex k2(const BlockProfile& profile, double t, int s1, int s2, std::int64_t a1,
           std::int64_t a2, Complex m_plus, double w_inv_d) {
  if (!(0.0 <= t && t < 1.0)) throw std::invalid_argument("k2: t must be in [0,1)");
  const Complex c = charge_value(s1, m_plus) * charge_value(s2, m_plus);
  PropagatorFamily theta(profile, t * c);
  return w_inv_d * c * theta.entry(a1, a2);
}

Complex k3(const BlockProfile& profile, double t, int s1, int s2, int s3, std::int64_t a1,
           std::int64_t a2, std::int64_t a3, Complex m_plus, double w_inv_d) {
  if (!(0.0 <= t && t < 1.0)) throw std::invalid_argument("k3: t must be in [0,1)");
  const Complex m1 = charge_value(s1, m_plus), m2 = charge_value(s2, m_plus),
                m3 = charge_value(s3, m_plus);
  PropagatorFamily th12(profile, t * m1 * m2);
  PropagatorFamily th23(profile, t * m2 * m3);
  PropagatorFamily th31(profile, t * m3 * m1);
  Complex sum = 0.0;
  for (std::int64_t b = 0; b < profile.lat.n_points(); ++b)
    sum += th12.entry(a1, b) * th23.entry(a2, b) * th31.entry(a3, b);
  return w_inv_d * w_inv_d * m1 * m2 * m3 * sum;
}

BlockTensor k2_tensor(const BlockProfile& profile, double t, const std::vector<int>& sigma,
                      Complex m_plus, double w_inv_d) {
  const Complex c = charge_value(sigma[0], m_plus) * charge_value(sigma[1], m_plus);
  PropagatorFamily theta(profile, t * c);
  const std::int64_t nb = profile.lat.n_points();
  BlockTensor out(profile.lat, 2);
  for (std::int64_t a = 0; a < nb; ++a)
    for (std::int64_t b = 0; b < nb; ++b) out[a * nb + b] = w_inv_d * c * theta.entry(a, b);
  return out;
}

BlockTensor k3_tensor(const BlockProfile& profile, double t, const std::vector<int>& sigma,
                      Complex m_plus, double w_inv_d) {
  const Complex m1 = charge_value(sigma[0], m_plus), m2 = charge_value(sigma[1], m_plus),
                m3 = charge_value(sigma[2], m_plus);
  PropagatorFamily th12(profile, t * m1 * m2);
  PropagatorFamily th23(profile, t * m2 * m3);
  PropagatorFamily th31(profile, t * m3 * m1);
  const std::int64_t nb = profile.lat.n_points();
  BlockTensor out(profile.lat, 3);
  for (std::int64_t a1 = 0; a1 < nb; ++a1)
    for (std::int64_t a2 = 0; a2 < nb; ++a2)
      for (std::int64_t a3 = 0; a3 < nb; ++a3) {
        Complex sum = 0.0;
        for (std::int64_t b = 0; b < nb; ++b)
          sum += th12.entry(a1, b) * th23.entry(a2, b) * th31.entry(a3, b);
        out[(a1 * nb + a2) * nb + a3] = w_inv_d * w_inv_d * m1 * m2 * m3 * sum;
      }
  return out;
}

// --- canonical tree enumeration -----------------------------------------

namespace {

// child of an internal vertex: either a single leaf or a rooted subtree
struct SubTree;
struct Child {
  int leaf = -1;
  std::shared_ptr<SubTree> sub;
};
struct SubTree {
  int lo = 0, hi = 0;  // leaf arc (0-based, inclusive)
  std::vector<Child> children;
};

// all rooted subtrees over the arc [lo, hi] (root has >= 2 children)
std::vector<std::shared_ptr<SubTree>> gen_sub(int lo, int hi,
                                              std::map<std::pair<int, int>,
                                                       std::vector<std::shared_ptr<SubTree>>>& memo) {
  if (hi - lo < 1) return {};
  auto it = memo.find({lo, hi});
  if (it != memo.end()) return it->second;
  std::vector<std::shared_ptr<SubTree>> out;
  // compositions of [lo..hi] into consecutive parts; each part a leaf or a
  // recursive subtree; at least 2 parts
  std::vector<Child> acc;
  std::function<void(int)> rec = [&](int pos) {
    if (pos > hi) {
      if (acc.size() >= 2) {
        auto s = std::make_shared<SubTree>();
        s->lo = lo;
        s->hi = hi;
        s->children = acc;
        out.push_back(s);
      }
      return;
    }
    // single leaf
    acc.push_back(Child{pos, nullptr});
    rec(pos + 1);
    acc.pop_back();
    // subtree over [pos, end]; a single child spanning the whole arc would
    // recreate this arc (degree-2 root), excluded by the >= 2 parts rule
    for (int end = pos + 1; end <= hi; ++end) {
      if (pos == lo && end == hi) continue;
      for (auto& s : gen_sub(pos, end, memo)) {
        acc.push_back(Child{-1, s});
        rec(end + 1);
        acc.pop_back();
      }
    }
  };
  rec(lo);
  memo[{lo, hi}] = out;
  return out;
}

void emit_tree(const std::vector<Child>& root_children, int n, std::vector<CanonicalTree>& out) {
  CanonicalTree tree;
  tree.n_leaves = n;
  int next_internal = n;
  const int root = next_internal++;
  auto region_pair = [n](int lo, int hi, int& k, int& l) {
    k = lo + 1;                 // leaf lo is polygon vertex a_{lo+1}
    l = (hi + 1) % n + 1;       // region after the arc, cyclically
  };
  // edge root -- leaf 0 separates regions R_1 and R_2
  tree.edges.push_back(TreeEdge{0, root, 1, 2, true});
  std::function<void(int, const Child&)> attach = [&](int parent, const Child& ch) {
    if (ch.leaf >= 0) {
      int k, l;
      region_pair(ch.leaf, ch.leaf, k, l);
      tree.edges.push_back(TreeEdge{ch.leaf, parent, k, l, true});
      return;
    }
    const int v = next_internal++;
    int k, l;
    region_pair(ch.sub->lo, ch.sub->hi, k, l);
    tree.edges.push_back(TreeEdge{v, parent, k, l, false});
    for (const Child& c : ch.sub->children) attach(v, c);
  };
  for (const Child& c : root_children) attach(root, c);
  tree.n_internal = next_internal - n;
  out.push_back(std::move(tree));
}

}  // namespace

std::vector<CanonicalTree> enumerate_tsp(int n) {
  if (n < 3 || n > 6) throw std::invalid_argument("enumerate_tsp: supported range is 3 <= n <= 6");
  std::map<std::pair<int, int>, std::vector<std::shared_ptr<SubTree>>> memo;
  std::vector<CanonicalTree> out;
  // root = the internal vertex adjacent to leaf 0; its other children cover
  // the arc [1, n-1] in >= 2 consecutive parts
  std::vector<Child> acc;
  std::function<void(int)> rec = [&](int pos) {
    if (pos > n - 1) {
      if (acc.size() >= 2) emit_tree(acc, n, out);
      return;
    }
    acc.push_back(Child{pos, nullptr});
    rec(pos + 1);
    acc.pop_back();
    for (int end = pos + 1; end <= n - 1; ++end) {
      for (auto& s : gen_sub(pos, end, memo)) {
        acc.push_back(Child{-1, s});
        rec(end + 1);
        acc.pop_back();
      }
    }
  };
  rec(1);
  return out;
}

// --- tree values ---------------------------------------------------------

namespace {

// cached propagator rows for the three charge products occurring at a given t
class ThetaCache {
 public:
  ThetaCache(const BlockProfile& profile, double t) : profile_(profile), t_(t) {}

  const PropagatorFamily& family(Complex c) {
    for (auto& [key, fam] : cache_)
      if (std::abs(key - c) < 1e-15) return *fam;
    cache_.emplace_back(c, std::make_unique<PropagatorFamily>(profile_, t_ * c));
    return *cache_.back().second;
  }

 private:
  const BlockProfile& profile_;
  double t_;
  std::vector<std::pair<Complex, std::unique_ptr<PropagatorFamily>>> cache_;
};

}  // namespace

Complex tree_value(const CanonicalTree& tree, const BlockProfile& profile, double t,
                   const std::vector<int>& sigma, const std::vector<std::int64_t>& blocks,
                   Complex m_plus) {
  const int n = tree.n_leaves;
  if (static_cast<int>(sigma.size()) != n || static_cast<int>(blocks.size()) != n)
    throw std::invalid_argument("tree_value: signature size mismatch");
  const std::int64_t nb = profile.lat.n_points();
  ThetaCache cache(profile, t);

  // adjacency over vertices 0..n-1 (leaves) and n..n+n_internal-1
  const int nv = n + tree.n_internal;
  std::vector<std::vector<int>> adj(nv);
  for (int e = 0; e < static_cast<int>(tree.edges.size()); ++e) {
    adj[tree.edges[static_cast<std::size_t>(e)].u].push_back(e);
    adj[tree.edges[static_cast<std::size_t>(e)].v].push_back(e);
  }

  auto edge_charge = [&](const TreeEdge& e) {
    return charge_value(sigma[static_cast<std::size_t>(e.region_k - 1)], m_plus) *
           charge_value(sigma[static_cast<std::size_t>(e.region_l - 1)], m_plus);
  };

  // message across edge e toward vertex `to`, eliminating leaf-ward
  std::function<std::vector<Complex>(int, int)> message = [&](int eidx, int to) {
    const TreeEdge& e = tree.edges[static_cast<std::size_t>(eidx)];
    const int from = e.u == to ? e.v : e.u;
    const Complex c = edge_charge(e);
    const PropagatorFamily& fam = cache.family(c);
    if (from < n) {
      // external edge: row Theta_{tc}(a_from, .)
      std::vector<Complex> msg(static_cast<std::size_t>(nb));
      for (std::int64_t b = 0; b < nb; ++b)
        msg[static_cast<std::size_t>(b)] = fam.entry(blocks[static_cast<std::size_t>(from)], b);
      return msg;
    }
    // internal edge: (Theta_{tc} - I) applied to the product of the child
    // messages at `from`
    std::vector<Complex> h(static_cast<std::size_t>(nb), Complex(1.0));
    for (int e2 : adj[from]) {
      if (e2 == eidx) continue;
      const auto sub = message(e2, from);
      for (std::int64_t b = 0; b < nb; ++b) h[static_cast<std::size_t>(b)] *= sub[static_cast<std::size_t>(b)];
    }
    std::vector<Complex> msg(static_cast<std::size_t>(nb));
    fam.apply(h.data(), msg.data());
    for (std::int64_t b = 0; b < nb; ++b) msg[static_cast<std::size_t>(b)] -= h[static_cast<std::size_t>(b)];
    return msg;
  };

  const int root = n;  // first internal vertex
  std::vector<Complex> h(static_cast<std::size_t>(nb), Complex(1.0));
  for (int e : adj[root]) {
    const auto msg = message(e, root);
    for (std::int64_t b = 0; b < nb; ++b) h[static_cast<std::size_t>(b)] *= msg[static_cast<std::size_t>(b)];
  }
  Complex total = 0.0;
  for (std::int64_t b = 0; b < nb; ++b) total += h[static_cast<std::size_t>(b)];
  Complex mprod = 1.0;
  for (int i = 0; i < n; ++i) mprod *= charge_value(sigma[static_cast<std::size_t>(i)], m_plus);
  return mprod * total;
}

Complex k_loop_tree(const BlockProfile& profile, double t, const std::vector<int>& sigma,
                    const std::vector<std::int64_t>& blocks, Complex m_plus, double w_inv_d) {
  const int n = static_cast<int>(sigma.size());
  if (n == 1) return k1(sigma[0], m_plus);
  if (n == 2) return k2(profile, t, sigma[0], sigma[1], blocks[0], blocks[1], m_plus, w_inv_d);
  if (n == 3)
    return k3(profile, t, sigma[0], sigma[1], sigma[2], blocks[0], blocks[1], blocks[2], m_plus,
              w_inv_d);
  const auto trees = enumerate_tsp(n);
  Complex sum = 0.0;
  for (const auto& tree : trees) sum += tree_value(tree, profile, t, sigma, blocks, m_plus);
  return std::pow(w_inv_d, n - 1) * sum;
}

// --- ODE hierarchy -------------------------------------------------------

int KLoopFamily::mask_of(const std::vector<int>& sigma) {
  int mask = 0;
  for (std::size_t i = 0; i < sigma.size(); ++i)
    if (sigma[i] < 0) mask |= 1 << i;
  return mask;
}

const BlockTensor& KLoopFamily::loop(const std::vector<int>& sigma) const {
  const int n = static_cast<int>(sigma.size());
  if (n < 2 || n > n_max) throw std::out_of_range("KLoopFamily::loop: n out of range");
  return K[static_cast<std::size_t>(n)][static_cast<std::size_t>(mask_of(sigma))];
}

namespace {

using State = std::vector<std::vector<BlockTensor>>;  // [n][mask]

State make_state(const Torus& lat, int n_max, Complex m_plus, double w_inv_d) {
  State st(static_cast<std::size_t>(n_max) + 1);
  for (int n = 2; n <= n_max; ++n) {
    st[static_cast<std::size_t>(n)].resize(static_cast<std::size_t>(1) << n, BlockTensor(lat, n));
    for (int mask = 0; mask < (1 << n); ++mask) {
      BlockTensor& T = st[static_cast<std::size_t>(n)][static_cast<std::size_t>(mask)];
      Complex mprod = std::pow(w_inv_d, n - 1);
      for (int i = 0; i < n; ++i) mprod *= (mask >> i & 1) ? std::conj(m_plus) : m_plus;
      // diagonal initial condition a_1 = ... = a_n
      const std::int64_t nb = lat.n_points();
      std::int64_t idx = 0;
      std::int64_t step = 0;
      for (int i = 0; i < n; ++i) step = step * nb + 1;
      for (std::int64_t a = 0; a < nb; ++a, idx += step) T[idx] = mprod;
    }
  }
  return st;
}

void state_axpy(State& y, double alpha, const State& x) {
  for (std::size_t n = 2; n < y.size(); ++n)
    for (std::size_t m = 0; m < y[n].size(); ++m) {
      BlockTensor& t = y[n][m];
      const BlockTensor& s = x[n][m];
      for (std::int64_t i = 0; i < t.size(); ++i) t[i] += alpha * s[i];
    }
}

double state_max_diff(const State& a, const State& b) {
  double m = 0.0;
  for (std::size_t n = 2; n < a.size(); ++n)
    for (std::size_t mk = 0; mk < a[n].size(); ++mk)
      for (std::int64_t i = 0; i < a[n][mk].size(); ++i)
        m = std::max(m, std::abs(a[n][mk][i] - b[n][mk][i]));
  return m;
}

// S^(B) applied to the last axis
BlockTensor apply_s_last(const BlockProfile& profile, const BlockTensor& A) {
  BlockTensor out = A;
  const std::int64_t nb = A.axis_size();
  const std::int64_t rows = A.size() / nb;
  std::vector<Complex> buf(static_cast<std::size_t>(nb));
  for (std::int64_t r = 0; r < rows; ++r) {
    profile.apply(A.data() + r * nb, buf.data());
    std::copy(buf.begin(), buf.end(), out.data() + r * nb);
  }
  return out;
}

// hierarchy right-hand side at one level
void rhs_level(const BlockProfile& profile, const State& st, int n, int mask, double wd,
               BlockTensor& out) {
  const std::int64_t nb = profile.lat.n_points();
  std::vector<int> sigma(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sigma[static_cast<std::size_t>(i)] = (mask >> i & 1) ? -1 : +1;
  std::fill(out.data(), out.data() + out.size(), Complex(0.0));

  std::vector<std::int64_t> digits(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    for (int l = k + 1; l <= n; ++l) {
      const int n_left = n + k - l + 1;
      const int n_right = l - k + 1;
      // sub-signature masks
      int mask_left = 0, mask_right = 0;
      {
        int pos = 0;
        for (int i = 1; i <= k; ++i, ++pos)
          if (sigma[static_cast<std::size_t>(i - 1)] < 0) mask_left |= 1 << pos;
        for (int i = l; i <= n; ++i, ++pos)
          if (sigma[static_cast<std::size_t>(i - 1)] < 0) mask_left |= 1 << pos;
        pos = 0;
        for (int i = k; i <= l; ++i, ++pos)
          if (sigma[static_cast<std::size_t>(i - 1)] < 0) mask_right |= 1 << pos;
      }
      const BlockTensor& KL = st[static_cast<std::size_t>(n_left)][static_cast<std::size_t>(mask_left)];
      const BlockTensor TR =
          apply_s_last(profile, st[static_cast<std::size_t>(n_right)][static_cast<std::size_t>(mask_right)]);

      // strides for assembling indices
      std::vector<std::int64_t> powL(static_cast<std::size_t>(n_left), 1);
      for (int i = n_left - 2; i >= 0; --i) powL[static_cast<std::size_t>(i)] = powL[static_cast<std::size_t>(i + 1)] * nb;
      std::vector<std::int64_t> powR(static_cast<std::size_t>(n_right), 1);
      for (int i = n_right - 2; i >= 0; --i) powR[static_cast<std::size_t>(i)] = powR[static_cast<std::size_t>(i + 1)] * nb;
      const std::int64_t stride_free = powL[static_cast<std::size_t>(k - 1)];

      for (std::int64_t idx = 0; idx < out.size(); ++idx) {
        // digits of the target tuple
        std::int64_t rest = idx;
        for (int i = n - 1; i >= 0; --i) {
          digits[static_cast<std::size_t>(i)] = rest % nb;
          rest /= nb;
        }
        std::int64_t base_left = 0;
        for (int i = 1; i <= k - 1; ++i)
          base_left += digits[static_cast<std::size_t>(i - 1)] * powL[static_cast<std::size_t>(i - 1)];
        for (int i = l, pos = k; i <= n; ++i, ++pos)
          base_left += digits[static_cast<std::size_t>(i - 1)] * powL[static_cast<std::size_t>(pos)];
        std::int64_t base_right = 0;
        for (int i = k, pos = 0; i <= l - 1; ++i, ++pos)
          base_right += digits[static_cast<std::size_t>(i - 1)] * powR[static_cast<std::size_t>(pos)];

        Complex acc = 0.0;
        const Complex* kl = KL.data() + base_left;
        const Complex* tr = TR.data() + base_right;
        for (std::int64_t a = 0; a < nb; ++a) acc += kl[a * stride_free] * tr[a];
        out[idx] += wd * acc;
      }
    }
  }
}

State rhs(const BlockProfile& profile, const State& st, int n_max, double wd) {
  State out = st;  // shapes
  for (int n = 2; n <= n_max; ++n)
    for (int mask = 0; mask < (1 << n); ++mask)
      rhs_level(profile, st, n, mask, wd,
                out[static_cast<std::size_t>(n)][static_cast<std::size_t>(mask)]);
  return out;
}

State integrate(const BlockProfile& profile, int n_max, double t_end, Complex m_plus,
                double w_inv_d, double dt) {
  const double wd = 1.0 / w_inv_d;
  State y = make_state(profile.lat, n_max, m_plus, w_inv_d);
  const int steps = std::max(1, static_cast<int>(std::ceil(t_end / dt)));
  const double h = t_end / steps;
  for (int s = 0; s < steps; ++s) {
    State k1s = rhs(profile, y, n_max, wd);
    State y2 = y;
    state_axpy(y2, h / 2.0, k1s);
    State k2s = rhs(profile, y2, n_max, wd);
    State y3 = y;
    state_axpy(y3, h / 2.0, k2s);
    State k3s = rhs(profile, y3, n_max, wd);
    State y4 = y;
    state_axpy(y4, h, k3s);
    State k4s = rhs(profile, y4, n_max, wd);
    state_axpy(y, h / 6.0, k1s);
    state_axpy(y, h / 3.0, k2s);
    state_axpy(y, h / 3.0, k3s);
    state_axpy(y, h / 6.0, k4s);
  }
  return y;
}

}  // namespace

KLoopFamily k_loop_ode(const BlockProfile& profile, int n_max, double t_end, Complex m_plus,
                       double w_inv_d, double dt, bool halving_check) {
  if (n_max < 2 || n_max > 5) throw std::invalid_argument("k_loop_ode: n_max must be in [2,5]");
  if (!(0.0 <= t_end && t_end < 1.0))
    throw std::invalid_argument("k_loop_ode: t_end must be in [0,1)");
  if (dt <= 0.0) dt = std::clamp(0.025 * (1.0 - t_end) * (1.0 - t_end), 1e-4, 1e-3);
  KLoopFamily fam;
  fam.lat = profile.lat;
  fam.n_max = n_max;
  fam.t = t_end;
  fam.m_plus = m_plus;
  fam.w_inv_d = w_inv_d;
  fam.K = integrate(profile, n_max, t_end, m_plus, w_inv_d, dt);
  if (halving_check && t_end > 0.0) {
    const State fine = integrate(profile, n_max, t_end, m_plus, w_inv_d, dt / 2.0);
    fam.step_halving_error = state_max_diff(fam.K, fine);
    fam.unstable = fam.step_halving_error > 1e-4;
    fam.K = fine;
  }
  return fam;
}

double k_ward_residual_explicit(const BlockProfile& profile, double t, int n,
                                const std::vector<int>& sigma, Complex m_plus, double eta_t) {
  if (n != 2 && n != 3) throw std::invalid_argument("k_ward_residual_explicit: n must be 2 or 3");
  if (sigma.front() != -sigma.back())
    throw std::invalid_argument("k_ward_residual_explicit: requires sigma_1 = -sigma_n");
  const std::int64_t nb = profile.lat.n_points();
  const double wd = 1.0;  // W^{-d} factors cancel in the relative residual
  double worst = 0.0;
  if (n == 2) {
    for (std::int64_t a1 = 0; a1 < nb; ++a1) {
      Complex lhs = 0.0;
      for (std::int64_t a2 = 0; a2 < nb; ++a2)
        lhs += k2(profile, t, sigma[0], sigma[1], a1, a2, m_plus, wd);
      const Complex rhs = (k1(+1, m_plus) - k1(-1, m_plus)) / (Complex(0.0, 2.0) * eta_t);
      const double mag = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
      worst = std::max(worst, std::abs(lhs - rhs) / mag);
    }
    return worst;
  }
  for (std::int64_t a1 = 0; a1 < nb; ++a1)
    for (std::int64_t a2 = 0; a2 < nb; ++a2) {
      Complex lhs = 0.0;
      for (std::int64_t a3 = 0; a3 < nb; ++a3)
        lhs += k3(profile, t, sigma[0], sigma[1], sigma[2], a1, a2, a3, m_plus, wd);
      const Complex plus = k2(profile, t, +1, sigma[1], a1, a2, m_plus, wd);
      const Complex minus = k2(profile, t, -1, sigma[1], a1, a2, m_plus, wd);
      const Complex rhs = (plus - minus) / (Complex(0.0, 2.0) * eta_t);
      const double mag = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
      worst = std::max(worst, std::abs(lhs - rhs) / mag);
    }
  return worst;
}

double k_ward_residual_family(const KLoopFamily& family, const std::vector<int>& sigma,
                              double eta_t) {
  const int n = static_cast<int>(sigma.size());
  if (n < 3) throw std::invalid_argument("k_ward_residual_family: need n >= 3 (stored tensors)");
  if (sigma.front() != -sigma.back())
    throw std::invalid_argument("k_ward_residual_family: requires sigma_1 = -sigma_n");
  const BlockTensor& K = family.loop(sigma);
  std::vector<int> sp(sigma.begin(), sigma.end() - 1), sm = sp;
  sp[0] = +1;
  sm[0] = -1;
  const BlockTensor& Kp = family.loop(sp);
  const BlockTensor& Km = family.loop(sm);
  const std::int64_t nb = K.axis_size();
  double worst = 0.0;
  for (std::int64_t prefix = 0; prefix < Kp.size(); ++prefix) {
    Complex lhs = 0.0;
    for (std::int64_t an = 0; an < nb; ++an) lhs += K[prefix * nb + an];
    const Complex rhs = (Kp[prefix] - Km[prefix]) / (Complex(0.0, 2.0) * eta_t);
    const double mag = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    worst = std::max(worst, std::abs(lhs - rhs) / mag);
  }
  return worst;
}

std::vector<KBoundPoint> k_bound_report(const BlockProfile& profile, int n,
                                        const std::vector<double>& t_grid, Complex m_plus,
                                        double w_inv_d, int n_samples) {
  if (n < 2 || n > 5) throw std::invalid_argument("k_bound_report: n must be in [2,5]");
  const std::int64_t nb = profile.lat.n_points();
  const int d = profile.lat.dim();
  const int L = profile.lat.side();
  std::vector<KBoundPoint> out;
  for (double t : t_grid) {
    double max_abs = 0.0;
    auto consider = [&](const std::vector<int>& sigma, const std::vector<std::int64_t>& blocks) {
      max_abs = std::max(max_abs, std::abs(k_loop_tree(profile, t, sigma, blocks, m_plus, w_inv_d)));
    };
    std::vector<int> sigma(static_cast<std::size_t>(n));
    for (int mask = 0; mask < (1 << n); ++mask) {
      for (int i = 0; i < n; ++i) sigma[static_cast<std::size_t>(i)] = (mask >> i & 1) ? -1 : +1;
      if (n <= 3) {
        std::vector<std::int64_t> blocks(static_cast<std::size_t>(n), 0);
        std::function<void(int)> sweep = [&](int pos) {
          if (pos == n) {
            consider(sigma, blocks);
            return;
          }
          for (std::int64_t a = 0; a < nb; ++a) {
            blocks[static_cast<std::size_t>(pos)] = a;
            sweep(pos + 1);
          }
        };
        sweep(0);
      } else {
        RngStream rng(0xb0c4d5, static_cast<std::uint64_t>(mask) * 977 + n);
        std::vector<std::int64_t> blocks(static_cast<std::size_t>(n), 0);
        consider(sigma, blocks);  // coincident tuple
        for (int s = 0; s < n_samples; ++s) {
          for (int i = 0; i < n; ++i)
            blocks[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(nb));
          consider(sigma, blocks);
        }
      }
    }
    KBoundPoint p;
    p.t = t;
    p.max_abs = max_abs;
    p.ratio = max_abs / std::pow(w_inv_d * b_param(t, 0.0, d, L), n - 1);
    out.push_back(p);
  }
  return out;
}

// --- tensor operators ----------------------------------------------------

BlockTensor partial_avg(const BlockTensor& A, int axis) {
  if (axis < 0 || axis >= A.rank()) throw std::out_of_range("partial_avg: axis out of range");
  BlockTensor out = A;
  const std::int64_t m = A.axis_size();
  const std::int64_t stride = A.axis_stride(axis);
  for (std::int64_t outer = 0; outer < A.size(); outer += m * stride) {
    for (std::int64_t inner = 0; inner < stride; ++inner) {
      const std::int64_t base = outer + inner;
      Complex mean = 0.0;
      for (std::int64_t q = 0; q < m; ++q) mean += A[base + q * stride];
      mean /= static_cast<double>(m);
      for (std::int64_t q = 0; q < m; ++q) out[base + q * stride] = mean;
    }
  }
  return out;
}

BlockTensor zero_mode_remove(const BlockTensor& A, int axis) {
  BlockTensor out = A;
  out -= partial_avg(A, axis);
  return out;
}

std::vector<Complex> partial_sum(const BlockTensor& A) {
  const std::int64_t nb = A.axis_size();
  const std::int64_t lead = A.size() / nb;
  std::vector<Complex> out(static_cast<std::size_t>(nb), Complex(0.0));
  for (std::int64_t a1 = 0; a1 < nb; ++a1) {
    Complex s = 0.0;
    for (std::int64_t r = 0; r < lead; ++r) s += A[a1 * lead + r];
    out[static_cast<std::size_t>(a1)] = s;
  }
  return out;
}

BlockTensor mollifier_chi(const Torus& lat, int rank, double t) {
  if (rank < 2) throw std::invalid_argument("mollifier_chi: rank must be >= 2");
  const std::int64_t nb = lat.n_points();
  const double ell = ell_param(t, lat.side());
  // rescaled bump, normalized discretely so each factor sums to 1
  std::vector<double> phi(static_cast<std::size_t>(nb), 0.0);
  double norm = 0.0;
  for (std::int64_t a = 0; a < nb; ++a) {
    const std::vector<int> c = lat.canonical_coord(a);
    double r2 = 0.0;
    for (int v : c) r2 += static_cast<double>(v) * v;
    r2 /= ell * ell;
    if (r2 < 1.0) phi[static_cast<std::size_t>(a)] = std::exp(-1.0 / (1.0 - r2));
    norm += phi[static_cast<std::size_t>(a)];
  }
  for (auto& v : phi) v /= norm;

  BlockTensor chi(lat, rank);
  for (std::int64_t idx = 0; idx < chi.size(); ++idx) {
    auto a = chi.multi(idx);
    double v = 1.0;
    for (int i = 1; i < rank; ++i)
      v *= phi[static_cast<std::size_t>(lat.diff(a[static_cast<std::size_t>(i)], a[0]))];
    chi[idx] = v;
  }
  return chi;
}

BlockTensor sum_zero_apply(const BlockTensor& A, const BlockTensor& chi) {
  if (A.rank() != chi.rank()) throw std::invalid_argument("sum_zero_apply: rank mismatch");
  const std::int64_t nb = A.axis_size();
  const std::int64_t lead = A.size() / nb;
  const auto ps = partial_sum(A);
  BlockTensor out = A;
  for (std::int64_t a1 = 0; a1 < nb; ++a1)
    for (std::int64_t r = 0; r < lead; ++r)
      out[a1 * lead + r] -= ps[static_cast<std::size_t>(a1)] * chi[a1 * lead + r];
  return out;
}

}  // namespace bandlab
