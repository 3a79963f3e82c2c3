#pragma once

// Helpers shared by the unit tests and the acceptance runner: an independent
// term-by-term assembly of the right-hand side and a few smooth states.

#include <array>
#include <cmath>
#include <random>

#include "vvlab/solver.hpp"

namespace vvlab::test_support {

inline ModelParameters p1(double eps = 0.3) {
  ModelParameters p;
  p.gamma = 2;
  p.delta = 3;
  p.alpha = 1;
  p.beta = -0.6;
  p.epsilon = eps;
  return p;
}

// Periodic neighbour with explicit index arithmetic, independent of Grid::shift.
inline std::size_t nb(const Grid& g, std::size_t c, int axis, int s) {
  std::array<int, 3> ijk{static_cast<int>(c % g.n[0]), static_cast<int>((c / g.n[0]) % g.n[1]),
                         static_cast<int>(c / (g.n[0] * g.n[1]))};
  ijk[axis] = ((ijk[axis] + s) % g.n[axis] + g.n[axis]) % g.n[axis];
  return ijk[0] + static_cast<std::size_t>(g.n[0]) * (ijk[1] + static_cast<std::size_t>(g.n[1]) * ijk[2]);
}

inline double D(std::span<const double> f, const Grid& g, std::size_t c, int a) {
  return (f[nb(g, c, a, 1)] - f[nb(g, c, a, -1)]) / (2 * g.h);
}

inline double DD(std::span<const double> f, const Grid& g, std::size_t c, int a, int b) {
  if (a == b) return (f[nb(g, c, a, 1)] - 2 * f[c] + f[nb(g, c, a, -1)]) / (g.h * g.h);
  const auto pp = nb(g, nb(g, c, a, 1), b, 1), pm = nb(g, nb(g, c, a, 1), b, -1);
  const auto mp = nb(g, nb(g, c, a, -1), b, 1), mm = nb(g, nb(g, c, a, -1), b, -1);
  return (f[pp] - f[pm] - f[mp] + f[mm]) / (4 * g.h * g.h);
}

// Term-by-term assembly of
//   W_t = -sum_j A_j(W) d_j W - eps visc^2 (0, L v) + eps (0, Q(u) grad visc^2)
//         - B(grad u_hat, W) - sum_j u_hat_j d_j W - eps (0, visc^2 L u_hat)
// and the transport equation of visc, for the full stress.
inline State oracle_rhs(const State& s, const Grid& g, const ModelParameters& p, const BackgroundFlow& flow) {
  const int d = g.dim;
  State out(g, s.t);
  const double eps = p.epsilon;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Vec x = g.position(c);
    const Vec uh = flow.eval(s.t, x);
    const Mat G = flow.grad(s.t, x);
    const Hessian H = flow.hessian(s.t, x);

    Eigen::VectorXd W(1 + d);
    Vec v(d);
    W[0] = s.sound()[c];
    for (int i = 0; i < d; ++i) W[1 + i] = v[i] = s.vel(i)[c];
    std::vector<Eigen::VectorXd> dW(d, Eigen::VectorXd(1 + d));
    for (int j = 0; j < d; ++j) {
      dW[j][0] = D(s.sound(), g, c, j);
      for (int i = 0; i < d; ++i) dW[j][1 + i] = D(s.vel(i), g, c, j);
    }

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(1 + d);
    for (int j = 0; j < d; ++j) rhs -= ops::flux_matrix(p.gamma, W[0], v, j) * dW[j];
    for (int j = 0; j < d; ++j) rhs -= uh[j] * dW[j];

    Eigen::VectorXd B = Eigen::VectorXd::Zero(1 + d);
    B[0] = 0.5 * (p.gamma - 1) * W[0] * G.trace();
    B.tail(d) = G * v;
    rhs -= B;

    if (eps != 0.0) {
      const double visc = s.visc()[c];
      Mat Du(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Du(i, j) = dW[j][1 + i] + G(i, j);
      const double div = Du.trace();
      for (int i = 0; i < d; ++i) {
        double lap = 0, gd = 0, lap_h = 0, gd_h = 0;
        for (int k = 0; k < d; ++k) {
          lap += DD(s.vel(i), g, c, k, k);
          gd += DD(s.vel(k), g, c, i, k);
          lap_h += H[i](k, k);
          gd_h += H[k](k, i);
        }
        const double Lv = -p.alpha * lap - (p.alpha + p.beta) * gd;
        const double Luh = -p.alpha * lap_h - (p.alpha + p.beta) * gd_h;
        double hq = 0;
        for (int j = 0; j < d; ++j) {
          const double S = p.alpha * (Du(i, j) + Du(j, i)) + (i == j ? p.beta * div : 0.0);
          hq += p.delta / (p.delta - 1) * S * 2 * visc * D(s.visc(), g, c, j);
        }
        rhs[1 + i] += -eps * visc * visc * Lv + eps * hq - eps * visc * visc * Luh;
      }
    }

    out.sound()[c] = rhs[0];
    for (int i = 0; i < d; ++i) out.vel(i)[c] = rhs[1 + i];
    double adv = 0, div = G.trace();
    for (int j = 0; j < d; ++j) {
      adv += (v[j] + uh[j]) * D(s.visc(), g, c, j);
      div += D(s.vel(j), g, c, j);
    }
    out.visc()[c] = -adv - 0.5 * (p.delta - 1) * s.visc()[c] * div;

    // transport of both density powers in skew-symmetric form:
    // u.Df -> u.Df + (u.Df + f div u - D(u f)) / 2
    for (int comp : {State::kSound, State::kVisc}) {
      const auto f = s.comp(comp);
      double defect = f[c] * div;
      for (int j = 0; j < d; ++j) {
        const auto cp = nb(g, c, j, 1), cm = nb(g, c, j, -1);
        const double up = s.vel(j)[cp] + flow.eval(s.t, g.position(cp))[j];
        const double um = s.vel(j)[cm] + flow.eval(s.t, g.position(cm))[j];
        defect += (v[j] + uh[j]) * D(f, g, c, j) - (up * f[cp] - um * f[cm]) / (2 * g.h);
      }
      out.comp(comp)[c] += 0.5 * defect;
    }
  }
  return out;
}

inline State random_smooth_state(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  State s(g, 0.7);
  const double L = g.n[0] * g.h;
  for (int comp = 0; comp < s.ncomp; ++comp) {
    std::array<double, 6> a{};
    for (double& x : a) x = U(rng);
    for (std::size_t c = 0; c < g.size(); ++c) {
      const Vec x = g.position(c);
      double val = comp < 2 ? 1.5 : 0.0;
      for (int k = 0; k < g.dim; ++k) {
        const double w = 2 * M_PI * (x[k] - g.lo[k]) / L;
        val += 0.4 * a[2 * k] * std::sin(w + a[2 * k + 1]) + 0.2 * a[2 * k + 1] * std::cos(2 * w);
      }
      s.comp(comp)[c] = val;
    }
  }
  return s;
}

inline BackgroundFlow perturbed_flow(int dim) {
  InitialVelocity u0 = InitialVelocity::identity(dim);
  u0.perturbation = Perturbation::sine_bump;
  u0.amplitude = 0.1;
  u0.shift = Vec::Constant(dim, 0.05);
  return BackgroundFlow(u0);
}

inline State smooth_periodic(const Grid& g) {
  State s(g);
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double x = g.position(c)[0];
    s.sound()[c] = 0.5 + 0.2 * std::sin(x);
    s.visc()[c] = 0.4 + 0.1 * std::cos(x);
    s.vel(0)[c] = 0.1 * std::sin(x);
  }
  return s;
}

}  // namespace vvlab::test_support
