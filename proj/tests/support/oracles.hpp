#pragma once

// Independent reference implementations used as test oracles.  Everything
// here is deliberately naive (dense products, exhaustive enumeration) and
// shares no code with the implementation paths it checks.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "bandlab/lattice.hpp"
#include "bandlab/loops.hpp"
#include "bandlab/model.hpp"
#include "bandlab/primitive.hpp"
#include "bandlab/propagator.hpp"

namespace bandlab::testing {

// dense evaluation of Tr prod_i G(sigma_i) E_{a_i} by explicit N x N products
inline Complex loop_dense_oracle(const TorusGeometry& geo, const Matrix& G,
                                 const LoopSignature& sig) {
  const std::int64_t N = geo.n_sites();
  const double winv = 1.0 / static_cast<double>(geo.cells_per_block());
  Matrix prod = Matrix::Identity(N, N);
  const Matrix Gm = G;
  const Matrix Ga = G.adjoint();
  for (int i = 0; i < sig.n(); ++i) {
    const Matrix& fac = sig.sigma[static_cast<std::size_t>(i)] > 0 ? Gm : Ga;
    Matrix masked = Matrix::Zero(N, N);
    for (std::int64_t x : geo.cells_of(sig.blocks[static_cast<std::size_t>(i)]))
      masked.col(x) = fac.col(x) * winv;
    prod = prod * masked;
  }
  return prod.trace();
}

// ---- brute-force canonical tree enumeration (generate and filter) --------

// Labeled trees on n leaves + I internal vertices from Prufer sequences,
// filtered to leaf degree 1, internal degree >= 3, and the non-crossing
// property (every edge splits the leaves into a cyclic interval).  Trees are
// identified by their leaf-split sets, which determine them up to internal
// relabeling.
inline int tsp_count_oracle(int n) {
  std::set<std::vector<std::uint32_t>> seen;
  for (int internal = 1; internal <= n - 2; ++internal) {
    const int nv = n + internal;
    std::vector<int> prufer(static_cast<std::size_t>(nv - 2), 0);
    while (true) {
      // decode the Prufer sequence
      std::vector<int> degree(static_cast<std::size_t>(nv), 1);
      for (int v : prufer) degree[static_cast<std::size_t>(v)]++;
      std::vector<std::pair<int, int>> edges;
      std::vector<int> deg = degree;
      std::set<int> leaves_now;
      for (int v = 0; v < nv; ++v)
        if (deg[static_cast<std::size_t>(v)] == 1) leaves_now.insert(v);
      std::vector<int> seq = prufer;
      for (int v : seq) {
        const int leaf = *leaves_now.begin();
        leaves_now.erase(leaves_now.begin());
        edges.push_back({leaf, v});
        if (--deg[static_cast<std::size_t>(v)] == 1) leaves_now.insert(v);
      }
      const int u = *leaves_now.begin();
      const int v = *std::next(leaves_now.begin());
      edges.push_back({u, v});

      bool ok = true;
      for (int x = 0; x < n && ok; ++x) ok = degree[static_cast<std::size_t>(x)] == 1;
      for (int x = n; x < nv && ok; ++x) ok = degree[static_cast<std::size_t>(x)] >= 3;
      if (ok) {
        // leaf split of every edge, non-crossing filter
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(nv));
        for (auto [a, b] : edges) {
          adj[static_cast<std::size_t>(a)].push_back(b);
          adj[static_cast<std::size_t>(b)].push_back(a);
        }
        std::vector<std::uint32_t> splits;
        for (auto [a, b] : edges) {
          // leaves reachable from b without crossing edge (a,b)
          std::uint32_t mask = 0;
          std::vector<int> stack{b};
          std::vector<char> visited(static_cast<std::size_t>(nv), 0);
          visited[static_cast<std::size_t>(a)] = 1;
          visited[static_cast<std::size_t>(b)] = 1;
          while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            if (cur < n) mask |= 1u << cur;
            for (int nx : adj[static_cast<std::size_t>(cur)])
              if (!visited[static_cast<std::size_t>(nx)]) {
                visited[static_cast<std::size_t>(nx)] = 1;
                stack.push_back(nx);
              }
          }
          // normalize to the side not containing leaf 0
          if (mask & 1u) mask = ~mask & ((1u << n) - 1u);
          // cyclic-interval test
          std::vector<int> in_mask;
          for (int x = 0; x < n; ++x)
            if (mask >> x & 1u) in_mask.push_back(x);
          bool interval = false;
          const int sz = static_cast<int>(in_mask.size());
          for (int start = 0; start < n && !interval; ++start) {
            bool all = true;
            for (int q = 0; q < sz; ++q)
              if (!(mask >> ((start + q) % n) & 1u)) {
                all = false;
                break;
              }
            if (all && sz > 0) {
              // must be exactly the arc [start, start+sz)
              std::uint32_t arc = 0;
              for (int q = 0; q < sz; ++q) arc |= 1u << ((start + q) % n);
              interval = arc == mask;
            }
          }
          if (!interval) {
            ok = false;
            break;
          }
          splits.push_back(mask);
        }
        if (ok) {
          std::sort(splits.begin(), splits.end());
          seen.insert(splits);
        }
      }

      // next Prufer sequence
      int pos = nv - 3;
      while (pos >= 0 && prufer[static_cast<std::size_t>(pos)] == nv - 1) {
        prufer[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
      prufer[static_cast<std::size_t>(pos)]++;
    }
  }
  return static_cast<int>(seen.size());
}

// naive nested-sum evaluation of a tree value (no contraction ordering)
inline Complex tree_value_oracle(const CanonicalTree& tree, const BlockProfile& profile,
                                 double t, const std::vector<int>& sigma,
                                 const std::vector<std::int64_t>& blocks, Complex m_plus) {
  const std::int64_t nb = profile.lat.n_points();
  const int n = tree.n_leaves;
  std::vector<std::unique_ptr<PropagatorFamily>> fams;
  auto theta = [&](Complex c) -> const PropagatorFamily& {
    for (auto& f : fams)
      if (std::abs(f->xi() - t * c) < 1e-15) return *f;
    fams.push_back(std::make_unique<PropagatorFamily>(profile, t * c));
    return *fams.back();
  };
  std::vector<std::int64_t> b(static_cast<std::size_t>(tree.n_internal), 0);
  Complex total = 0.0;
  while (true) {
    Complex prod = 1.0;
    for (const TreeEdge& e : tree.edges) {
      const Complex c = charge_value(sigma[static_cast<std::size_t>(e.region_k - 1)], m_plus) *
                        charge_value(sigma[static_cast<std::size_t>(e.region_l - 1)], m_plus);
      auto pos = [&](int vertex) {
        return vertex < n ? blocks[static_cast<std::size_t>(vertex)]
                          : b[static_cast<std::size_t>(vertex - n)];
      };
      const PropagatorFamily& fam = theta(c);
      Complex val = fam.entry(pos(e.u), pos(e.v));
      if (!e.external && pos(e.u) == pos(e.v)) val -= 1.0;
      prod *= val;
    }
    total += prod;
    int k = tree.n_internal - 1;
    while (k >= 0 && ++b[static_cast<std::size_t>(k)] == nb) {
      b[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
  }
  Complex mprod = 1.0;
  for (int i = 0; i < n; ++i) mprod *= charge_value(sigma[static_cast<std::size_t>(i)], m_plus);
  return mprod * total;
}

}  // namespace bandlab::testing
