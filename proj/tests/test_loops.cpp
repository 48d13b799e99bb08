#include "bandlab/loops.hpp"

#include "doctest.h"

#include <cmath>

#include "bandlab/primitive.hpp"
#include "bandlab/propagator.hpp"
#include "oracles.hpp"

using namespace bandlab;
using bandlab::testing::loop_dense_oracle;

namespace {

struct Fixture {
  TorusGeometry geo{3, 2, 2};
  VarianceProfile prof{geo, 1.0};
  BandMatrix bm = sample_h(prof, 101, 0);
  SpectralFlowState fs = flow_state(0.2, 0.6, geo.block_side());
  Matrix G;
  Fixture() {
    Matrix H = bm.H;
    H *= std::sqrt(fs.t);
    G = resolvent_inverse(H, fs.z_t);
  }
};

}  // namespace

TEST_SUITE_BEGIN("loops");

TEST_CASE("cut-and-glue index calculus matches the displayed tuples") {
  LoopSignature s;
  s.sigma = {+1, -1, +1, -1};
  s.blocks = {11, 12, 13, 14};
  const LoopSignature g = cut_glue_g(s, 2, 99);
  CHECK(g.sigma == std::vector<int>{+1, -1, -1, +1, -1});
  CHECK(g.blocks == std::vector<std::int64_t>{11, 99, 12, 13, 14});

  LoopSignature s5;
  s5.sigma = {+1, -1, +1, -1, +1};
  s5.blocks = {1, 2, 3, 4, 5};
  const LoopSignature left = cut_glue_left(s5, 3, 5, 77);
  CHECK(left.sigma == std::vector<int>{+1, -1, +1, +1});
  CHECK(left.blocks == std::vector<std::int64_t>{1, 2, 77, 5});
  const LoopSignature right = cut_glue_right(s5, 3, 5, 88);
  CHECK(right.sigma == std::vector<int>{+1, -1, +1});
  CHECK(right.blocks == std::vector<std::int64_t>{3, 4, 88});
  // length bookkeeping
  CHECK(left.n() + right.n() == s5.n() + 2);
}

TEST_CASE("loop evaluation against the dense oracle") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const std::int64_t nb = f.geo.n_blocks();
  RngStream rng(5);
  for (int n = 1; n <= 4; ++n) {
    for (int rep = 0; rep < 4; ++rep) {
      LoopSignature sig;
      for (int i = 0; i < n; ++i) {
        sig.sigma.push_back(rng.next_u64() % 2 ? +1 : -1);
        sig.blocks.push_back(static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(nb)));
      }
      const Complex fast = ev.eval(sig);
      const Complex dense = loop_dense_oracle(f.geo, f.G, sig);
      CHECK(std::abs(fast - dense) < 1e-12 * std::max(1.0, std::abs(dense)));
    }
  }
}

TEST_CASE("alternating 2-loop is a nonnegative sum of squares") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const std::int64_t nb = f.geo.n_blocks();
  const double winv = 1.0 / static_cast<double>(f.geo.cells_per_block());
  for (std::int64_t a = 0; a < nb; ++a)
    for (std::int64_t b = 0; b < nb; ++b) {
      LoopSignature sig;
      sig.sigma = {-1, +1};
      sig.blocks = {a, b};
      const Complex v = ev.eval(sig);
      CHECK(v.imag() == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(v.real() >= -1e-12);
      // direct |G_xy|^2 sum
      double direct = 0.0;
      for (std::int64_t x : f.geo.cells_of(a))
        for (std::int64_t y : f.geo.cells_of(b)) direct += std::norm(f.G(x, y));
      CHECK(v.real() == doctest::Approx(direct * winv * winv).epsilon(1e-12));
    }
}

TEST_CASE("1-loop is the rescaled block trace") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const double winv = 1.0 / static_cast<double>(f.geo.cells_per_block());
  const auto traces = ev.block_traces(+1);
  for (std::int64_t a = 0; a < f.geo.n_blocks(); ++a) {
    Complex direct = 0.0;
    for (std::int64_t x : f.geo.cells_of(a)) direct += f.G(x, x);
    CHECK(std::abs(traces[static_cast<std::size_t>(a)] - winv * direct) < 1e-13);
    LoopSignature sig;
    sig.sigma = {+1};
    sig.blocks = {a};
    CHECK(std::abs(ev.eval(sig) - winv * direct) < 1e-13);
  }
}

TEST_CASE("H = 0 loops reproduce the primitive initial condition") {
  TorusGeometry geo(3, 2, 2);
  const Complex z(0.0, 1.0);
  const Complex m0 = -1.0 / z;  // G = m0 I
  const Matrix G = m0 * Matrix::Identity(geo.n_sites(), geo.n_sites());
  LoopEvaluator ev(geo, G);
  const double winv = 1.0 / static_cast<double>(geo.cells_per_block());
  for (int n = 1; n <= 3; ++n) {
    LoopSignature sig;
    Complex expect = 1.0;
    for (int i = 0; i < n; ++i) {
      sig.sigma.push_back(i % 2 ? -1 : +1);
      sig.blocks.push_back(0);
      expect *= i % 2 ? std::conj(m0) : m0;
    }
    expect *= std::pow(winv, n - 1);
    CHECK(std::abs(ev.eval(sig) - expect) < 1e-13);
    if (n >= 2) {
      sig.blocks.back() = 1;  // distinct blocks vanish at H = 0
      CHECK(std::abs(ev.eval(sig)) < 1e-14);
    }
  }
}

TEST_CASE("slot scan agrees with pointwise evaluation") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const std::int64_t nb = f.geo.n_blocks();
  LoopSignature sig;
  sig.sigma = {+1, -1, +1};
  sig.blocks = {2, 5, 0};
  for (int slot = 0; slot < 3; ++slot) {
    const auto scan = ev.slot_scan(sig, slot);
    for (std::int64_t b = 0; b < nb; ++b) {
      LoopSignature point = sig;
      point.blocks[static_cast<std::size_t>(slot)] = b;
      CHECK(std::abs(scan[static_cast<std::size_t>(b)] - ev.eval(point)) <
            1e-12 * std::max(1.0, std::abs(ev.eval(point))));
    }
  }
}

TEST_CASE("full tensors match pointwise evaluation") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const std::int64_t nb = f.geo.n_blocks();
  const BlockTensor t2 = ev.full2(-1, +1);
  const BlockTensor t3 = ev.full3(+1, -1, +1);
  for (std::int64_t a = 0; a < nb; ++a)
    for (std::int64_t b = 0; b < nb; ++b) {
      LoopSignature sig;
      sig.sigma = {-1, +1};
      sig.blocks = {a, b};
      CHECK(std::abs(t2[a * nb + b] - ev.eval(sig)) < 1e-12);
      for (std::int64_t c = 0; c < nb; ++c) {
        LoopSignature s3;
        s3.sigma = {+1, -1, +1};
        s3.blocks = {a, b, c};
        CHECK(std::abs(t3[(a * nb + b) * nb + c] - ev.eval(s3)) < 1e-12);
      }
    }
}

TEST_CASE("2-loop trace consistency via the elementary Ward identity") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const std::int64_t nb = f.geo.n_blocks();
  const double wd = static_cast<double>(f.geo.cells_per_block());
  const BlockTensor t2 = ev.full2(-1, +1);
  Complex total = 0.0;
  for (std::int64_t i = 0; i < t2.size(); ++i) total += t2[i];
  // sum_{a,b} W^{2d} L2 = sum_{x,y} |G_xy|^2 = Im Tr G / eta
  const double ward = f.G.trace().imag() / f.fs.z_t.imag();
  CHECK((wd * wd * total).real() == doctest::Approx(ward).epsilon(1e-10));
}

TEST_CASE("hermitian pairing of the two alternating 2-loops") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const std::int64_t nb = f.geo.n_blocks();
  const BlockTensor mp = ev.full2(-1, +1);
  const BlockTensor pm = ev.full2(+1, -1);
  for (std::int64_t a = 0; a < nb; ++a)
    for (std::int64_t b = 0; b < nb; ++b)
      CHECK(std::abs(mp[a * nb + b] - std::conj(pm[b * nb + a])) < 1e-13);
}

TEST_CASE("loop Ward identity") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const double eta = f.fs.z_t.imag();
  // n = 2 over all prefixes
  for (std::int64_t a = 0; a < f.geo.n_blocks(); ++a) {
    LoopSignature sig;
    sig.sigma = {-1, +1};
    sig.blocks = {a, 0};
    CHECK(loop_ward_residual(ev, sig, eta) < 1e-10);
  }
  // n = 3, sampled prefixes
  for (std::int64_t a = 0; a < f.geo.n_blocks(); a += 2)
    for (std::int64_t b = 0; b < f.geo.n_blocks(); b += 3) {
      LoopSignature sig;
      sig.sigma = {+1, -1, -1};
      sig.blocks = {a, b, 0};
      CHECK(loop_ward_residual(ev, sig, eta) < 1e-9);
    }
  // wrong signature rejected
  LoopSignature bad;
  bad.sigma = {+1, +1};
  bad.blocks = {0, 0};
  CHECK_THROWS(loop_ward_residual(ev, bad, eta));
}

TEST_CASE("loop Ward identity is exact for H = 0") {
  TorusGeometry geo(3, 1, 3);
  const Complex m0(0.12, 0.85);
  const Matrix G = m0 * Matrix::Identity(geo.n_sites(), geo.n_sites());
  LoopEvaluator ev(geo, G);
  // for G = m0 I the identity holds with eta implied by m0 = (m0 - conj m0)/(2i eta) |m0|^2...
  // use the resolvent relation: G = (0 - z)^{-1} with z = -1/m0
  const double eta = (-1.0 / m0).imag();
  LoopSignature sig;
  sig.sigma = {-1, +1};
  sig.blocks = {0, 0};
  CHECK(loop_ward_residual(ev, sig, eta) < 1e-13);
}

TEST_CASE("cyclic invariance and conjugation") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  LoopSignature sig;
  sig.sigma = {+1, -1, +1, +1};
  sig.blocks = {1, 4, 2, 7};
  const Complex base = ev.eval(sig);
  // simultaneous cyclic rotation
  LoopSignature rot;
  rot.sigma = {-1, +1, +1, +1};
  rot.blocks = {4, 2, 7, 1};
  CHECK(std::abs(ev.eval(rot) - base) < 1e-13);
  // conjugation: reverse and negate sigma, blocks (a_{n-1},...,a_1,a_n)
  LoopSignature conj_sig;
  conj_sig.sigma = {-1, -1, +1, -1};          // (-s4, -s3, -s2, -s1)
  conj_sig.blocks = {2, 4, 1, 7};             // (a3, a2, a1, a4)
  CHECK(std::abs(ev.eval(conj_sig) - std::conj(base)) < 1e-13);
}

TEST_CASE("ward inequality: exact Cauchy-Schwarz chain") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const std::int64_t nb = f.geo.n_blocks();
  RngStream rng(17);
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    LoopSignature sig;
    for (int i = 0; i < 3; ++i) {
      sig.sigma.push_back(rng.next_u64() % 2 ? +1 : -1);
      sig.blocks.push_back(static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(nb)));
    }
    for (int k = 1; k <= 2; ++k) {
      const auto rep_k = ward_inequality_check(ev, sig, k);
      CHECK(rep_k.holds);
      ++checked;
    }
  }
  CHECK(checked == 40);
  // degenerate all-equal blocks at n = 2k: near equality
  LoopSignature deg;
  deg.sigma = {+1, -1};
  deg.blocks = {3, 3};
  const auto r = ward_inequality_check(ev, deg, 1);
  CHECK(r.holds);
  CHECK(r.lhs_abs == doctest::Approx(r.rhs).epsilon(1e-9));
}

TEST_CASE("lightweight term vanishes for the deterministic start") {
  TorusGeometry geo(3, 1, 3);
  VarianceProfile prof(geo, 1.0);
  const double E = 0.4;
  const Complex m = m_sc_real(E);
  // H = 0 at t = 0: G = m I exactly
  const Matrix G = m * Matrix::Identity(geo.n_sites(), geo.n_sites());
  LoopEvaluator ev(geo, G);
  LoopSignature sig;
  sig.sigma = {+1, -1};
  sig.blocks = {0, 1};
  CHECK(std::abs(lightweight_term(ev, prof.block(), sig, m)) < 1e-13);
}

TEST_CASE("lightweight term equals the hand-expanded double sum") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const std::int64_t nb = f.geo.n_blocks();
  const double wd = static_cast<double>(f.geo.cells_per_block());
  const Complex m = f.fs.m;
  LoopSignature sig;
  sig.sigma = {+1, -1};
  sig.blocks = {2, 6};
  const Complex fast = lightweight_term(ev, f.prof.block(), sig, m);
  // independent route: dense-oracle loops and a dense S^(B)
  Complex manual = 0.0;
  const RealMatrix sB = f.prof.sB_dense();
  for (int k = 1; k <= 2; ++k) {
    for (std::int64_t u = 0; u < nb; ++u) {
      LoopSignature one;
      one.sigma = {sig.sigma[static_cast<std::size_t>(k - 1)]};
      one.blocks = {u};
      const Complex lw =
          loop_dense_oracle(f.geo, f.G, one) - charge_value(one.sigma[0], m);
      for (std::int64_t v = 0; v < nb; ++v) {
        if (sB(u, v) == 0.0) continue;
        const LoopSignature glued = cut_glue_g(sig, k, v);
        manual += wd * lw * sB(u, v) * loop_dense_oracle(f.geo, f.G, glued);
      }
    }
  }
  CHECK(std::abs(fast - manual) < 1e-12 * std::max(1.0, std::abs(manual)));
}

TEST_CASE("quadratic term equals the tensor contraction route") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const std::int64_t nb = f.geo.n_blocks();
  const double wd = static_cast<double>(f.geo.cells_per_block());
  LoopSignature sig;
  sig.sigma = {-1, +1};
  sig.blocks = {1, 5};
  const Complex fast = quadratic_term(ev, f.prof.block(), sig);
  // manual contraction from the full 2-loop tensor
  const BlockTensor t2 = ev.full2(-1, +1);
  const RealMatrix sB = f.prof.sB_dense();
  Complex manual = 0.0;
  for (std::int64_t a = 0; a < nb; ++a)
    for (std::int64_t b = 0; b < nb; ++b)
      manual += wd * t2[a * nb + sig.blocks[1]] * sB(a, b) * t2[sig.blocks[0] * nb + b];
  CHECK(std::abs(fast - manual) < 1e-12 * std::max(1.0, std::abs(manual)));
}

TEST_CASE("quadratic variation loop: structure and nonnegativity") {
  Fixture f;
  LoopEvaluator ev(f.geo, f.G);
  const std::int64_t nb = f.geo.n_blocks();
  const double wd = static_cast<double>(f.geo.cells_per_block());
  LoopSignature sig;
  sig.sigma = {+1, -1};
  sig.blocks = {2, 4};
  // manual: W^d sum_{b,b'} S^B_{bb'} L^(6) with the displayed indices
  const RealMatrix sB = f.prof.sB_dense();
  for (int k = 1; k <= 2; ++k) {
    const Complex fast = qvar_loop(ev, f.prof.block(), sig, sig.blocks, k);
    Complex manual = 0.0;
    for (std::int64_t b = 0; b < nb; ++b)
      for (std::int64_t bp = 0; bp < nb; ++bp) {
        if (sB(b, bp) == 0.0) continue;
        LoopSignature big;
        if (k == 1) {
          big.sigma = {sig.sigma[0], sig.sigma[1], sig.sigma[0],
                       -sig.sigma[0], -sig.sigma[1], -sig.sigma[0]};
          big.blocks = {sig.blocks[0], sig.blocks[1], b, sig.blocks[1], sig.blocks[0], bp};
        } else {
          big.sigma = {sig.sigma[1], sig.sigma[0], sig.sigma[1],
                       -sig.sigma[1], -sig.sigma[0], -sig.sigma[1]};
          big.blocks = {sig.blocks[1], sig.blocks[0], b, sig.blocks[0], sig.blocks[1], bp};
        }
        manual += wd * sB(b, bp) * ev.eval(big);
      }
    CHECK(std::abs(fast - manual) < 1e-11 * std::max(1.0, std::abs(manual)));
  }
  const Complex diag = qvar_diag(ev, f.prof.block(), sig);
  CHECK(std::abs(diag.imag()) < 1e-12 * std::max(1.0, std::abs(diag)));
  CHECK(diag.real() >= -1e-12);
}

TEST_SUITE_END();
