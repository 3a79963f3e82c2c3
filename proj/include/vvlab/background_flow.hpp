#pragma once

// Smooth global solution u_hat of the pressureless transport problem
//   u_t + u . grad u = 0,  u(0, x) = u0(x),
// evaluated exactly along characteristics x = x0 + t u0(x0).

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vvlab/errors.hpp"

namespace vvlab {

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Third-order tensor T[i](j, k) = d_j d_k u_i.
using Hessian = std::array<Mat, 3>;

enum class Perturbation {
  none,
  sine_bump,  // f_i(x) = sin(x_i) exp(-|x|^2 / 2)
  gaussian,   // f_i(x) = exp(-|x|^2 / 2)
};

inline std::string to_string(Perturbation p) {
  switch (p) {
    case Perturbation::none: return "none";
    case Perturbation::sine_bump: return "sine_bump";
    case Perturbation::gaussian: return "gaussian";
  }
  return "none";
}

inline Perturbation perturbation_from_string(const std::string& s) {
  if (s == "none") return Perturbation::none;
  if (s == "sine_bump") return Perturbation::sine_bump;
  if (s == "gaussian") return Perturbation::gaussian;
  throw ConfigError("unknown perturbation kind '" + s + "'");
}

/// u0(x) = matrix x + shift + amplitude f(x).
struct InitialVelocity {
  int dim = 1;
  Mat matrix = Mat::Identity(1, 1);
  Vec shift = Vec::Zero(1);
  Perturbation perturbation = Perturbation::none;
  double amplitude = 0.0;

  static InitialVelocity affine(Mat m, Vec b) {
    InitialVelocity u;
    u.dim = static_cast<int>(m.rows());
    u.matrix = std::move(m);
    u.shift = std::move(b);
    return u;
  }

  static InitialVelocity identity(int dim) {
    return affine(Mat::Identity(dim, dim), Vec::Zero(dim));
  }

  bool is_affine() const { return perturbation == Perturbation::none || amplitude == 0.0; }

  void validate() const {
    if (dim < 1 || dim > 3) throw PreconditionError("initial velocity: dimension must be 1, 2 or 3");
    if (matrix.rows() != dim || matrix.cols() != dim || shift.size() != dim)
      throw PreconditionError("initial velocity: matrix/shift size does not match dimension");
  }

  Vec value(const Vec& x) const {
    Vec u = matrix * x + shift;
    if (is_affine()) return u;
    const double g = std::exp(-0.5 * x.squaredNorm());
    for (int i = 0; i < dim; ++i)
      u[i] += amplitude * (perturbation == Perturbation::sine_bump ? std::sin(x[i]) * g : g);
    return u;
  }

  /// J(i, j) = d_j u0_i.
  Mat jacobian(const Vec& x) const {
    Mat J = matrix;
    if (is_affine()) return J;
    const double g = std::exp(-0.5 * x.squaredNorm());
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        double d;
        if (perturbation == Perturbation::sine_bump) {
          d = -x[j] * std::sin(x[i]) * g;
          if (i == j) d += std::cos(x[i]) * g;
        } else {
          d = -x[j] * g;
        }
        J(i, j) += amplitude * d;
      }
    }
    return J;
  }

  Hessian hessian(const Vec& x) const {
    Hessian H;
    for (int i = 0; i < 3; ++i) H[i] = Mat::Zero(dim, dim);
    if (is_affine()) return H;
    const double g = std::exp(-0.5 * x.squaredNorm());
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        for (int k = 0; k < dim; ++k) {
          const double djk = j == k ? 1.0 : 0.0;
          // d_j d_k g = (x_j x_k - delta_jk) g
          const double gjk = (x[j] * x[k] - djk) * g;
          double d;
          if (perturbation == Perturbation::sine_bump) {
            const double s = std::sin(x[i]), c = std::cos(x[i]);
            d = s * gjk;
            if (i == j) d += -x[k] * c * g;
            if (i == k) d += -x[j] * c * g;
            if (i == j && i == k) d += -s * g;
          } else {
            d = gjk;
          }
          H[i](j, k) = amplitude * d;
        }
      }
    }
    return H;
  }
};

/// Distance from a complex number to the closed half-line (-inf, 0].
inline double distance_to_nonpositive_reals(std::complex<double> z) {
  return z.real() >= 0.0 ? std::abs(z) : std::abs(z.imag());
}

/// Heuristic certificate of the spectral condition: minimum over the given
/// sample points of Dist(Sp(grad u0(x)), R_-). Compare against kappa.
inline double spectral_gap(const InitialVelocity& u0, std::span<const Vec> samples) {
  double gap = std::numeric_limits<double>::infinity();
  for (const Vec& x : samples) {
    Eigen::EigenSolver<Mat> es(u0.jacobian(x), /*computeEigenvectors=*/false);
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      gap = std::min(gap, distance_to_nonpositive_reals(es.eigenvalues()[i]));
  }
  return gap;
}

struct NewtonSettings {
  double tolerance = 1e-12;
  int max_iterations = 50;
};

class BackgroundFlow {
 public:
  explicit BackgroundFlow(InitialVelocity u0, NewtonSettings newton = {})
      : u0_(std::move(u0)), newton_(newton) {
    u0_.validate();
  }

  /// u = 0 everywhere; used by periodic tests that switch the background off.
  static BackgroundFlow zero(int dim) {
    return BackgroundFlow(InitialVelocity::affine(Mat::Zero(dim, dim), Vec::Zero(dim)));
  }

  int dim() const { return u0_.dim; }
  const InitialVelocity& initial() const { return u0_; }
  bool is_zero() const {
    return u0_.is_affine() && u0_.matrix.isZero(0.0) && u0_.shift.isZero(0.0);
  }

  /// Foot of the characteristic through (t, x).
  Vec foot(double t, const Vec& x) const {
    check_time(t);
    const int d = dim();
    const Mat I = Mat::Identity(d, d);
    Eigen::PartialPivLU<Mat> affine_lu(I + t * u0_.matrix);
    Vec x0 = affine_lu.solve(x - t * u0_.shift);
    if (u0_.is_affine()) {
      if (!x0.allFinite()) throw NewtonError("background flow: I + t A is singular");
      return x0;
    }
    const double scale = std::max(1.0, x.norm());
    auto residual = [&](const Vec& y) -> Vec { return y + t * u0_.value(y) - x; };
    Vec r = residual(x0);
    double rn = r.norm();
    for (int it = 0; it < newton_.max_iterations; ++it) {
      if (rn <= newton_.tolerance * scale) return x0;
      const Mat Jc = I + t * u0_.jacobian(x0);
      const Vec step = Jc.partialPivLu().solve(r);
      double damping = 1.0;
      Vec trial = x0 - step;
      Vec rt = residual(trial);
      // halve the step while the residual grows
      while (rt.norm() > rn && damping > 1e-6) {
        damping *= 0.5;
        trial = x0 - damping * step;
        rt = residual(trial);
      }
      x0 = trial;
      r = rt;
      rn = r.norm();
    }
    if (rn <= newton_.tolerance * scale) return x0;
    throw NewtonError("background flow: characteristic inversion did not converge at t=" +
                      std::to_string(t));
  }

  Vec eval(double t, const Vec& x) const { return u0_.value(foot(t, x)); }

  /// G(i, j) = d_j u_hat_i = (I + t J)^{-1} J with J = grad u0 at the foot.
  Mat grad(double t, const Vec& x) const { return grad_at_foot(t, foot(t, x)); }

  /// d_j d_k u_hat_i. With M = I + t J(x0): dG = M^{-1} dJ M^{-1}, where the
  /// derivative of J along x_k is sum_l H_l (M^{-1})_{lk}.
  Hessian hessian(double t, const Vec& x) const {
    const int d = dim();
    Hessian out;
    for (int i = 0; i < 3; ++i) out[i] = Mat::Zero(d, d);
    if (u0_.is_affine()) return out;
    const Vec x0 = foot(t, x);
    const Mat Minv = inverse_transport(t, x0);
    const Hessian H0 = u0_.hessian(x0);
    for (int k = 0; k < d; ++k) {
      // dJ/dx_k (i, j) = sum_l H0[i](j, l) Minv(l, k)
      Mat dJ = Mat::Zero(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int l = 0; l < d; ++l) dJ(i, j) += H0[i](j, l) * Minv(l, k);
      const Mat dG = Minv * dJ * Minv;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[i](j, k) = dG(i, j);
    }
    return out;
  }

  /// K(t, x) = (1 + t)^2 (grad u_hat - I / (1 + t)).
  Mat k_matrix(double t, const Vec& x) const {
    const int d = dim();
    return (1.0 + t) * (1.0 + t) * (grad(t, x) - Mat::Identity(d, d) / (1.0 + t));
  }

 private:
  static void check_time(double t) {
    if (!(t >= 0.0)) throw PreconditionError("background flow: time must be nonnegative");
  }

  Mat inverse_transport(double t, const Vec& x0) const {
    const int d = dim();
    const Mat M = Mat::Identity(d, d) + t * u0_.jacobian(x0);
    Eigen::FullPivLU<Mat> lu(M);
    if (!lu.isInvertible())
      throw NewtonError("background flow: I + t grad u0 is singular (spectral condition violated)");
    return lu.inverse();
  }

  Mat grad_at_foot(double t, const Vec& x0) const {
    return inverse_transport(t, x0) * u0_.jacobian(x0);
  }

  InitialVelocity u0_;
  NewtonSettings newton_;
};

/// sup over the sample set of the spectral norm of K(t, x).
inline double k_matrix_bound(const BackgroundFlow& flow, std::span<const double> times,
                             std::span<const Vec> points) {
  double bound = 0.0;
  for (double t : times) {
    for (const Vec& x : points) {
      const Mat K = flow.k_matrix(t, x);
      Eigen::JacobiSVD<Mat> svd(K);
      bound = std::max(bound, svd.singularValues().size() ? svd.singularValues()[0] : 0.0);
    }
  }
  return bound;
}

/// Tensor-product sample grid of `per_axis` points on [-half_width, half_width]^dim.
inline std::vector<Vec> sample_box(int dim, int per_axis, double half_width) {
  std::vector<Vec> pts;
  const int n = std::max(per_axis, 1);
  auto coord = [&](int i) {
    return n == 1 ? 0.0 : -half_width + 2.0 * half_width * i / (n - 1);
  };
  const int ny = dim > 1 ? n : 1, nz = dim > 2 ? n : 1;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < n; ++i) {
        Vec x(dim);
        x[0] = coord(i);
        if (dim > 1) x[1] = coord(j);
        if (dim > 2) x[2] = coord(k);
        pts.push_back(x);
      }
  return pts;
}

inline std::vector<double> sample_times(double t_max, int count) {
  std::vector<double> ts;
  for (int i = 0; i < count; ++i) ts.push_back(count == 1 ? 0.0 : t_max * i / (count - 1));
  return ts;
}

}  // namespace vvlab
