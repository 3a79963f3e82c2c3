#pragma once

// Uniform node grid, multi-component state storage and centered stencils.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vvlab/background_flow.hpp"
#include "vvlab/errors.hpp"

namespace vvlab {

enum class BoundaryMode {
  truncated,  // vacuum collar: density powers pinned to zero, velocity extrapolated
  periodic,   // periodic wrap, for tests
};

inline std::string to_string(BoundaryMode m) {
  return m == BoundaryMode::periodic ? "periodic" : "truncated";
}

inline BoundaryMode boundary_from_string(const std::string& s) {
  if (s == "truncated") return BoundaryMode::truncated;
  if (s == "periodic") return BoundaryMode::periodic;
  throw ConfigError("unknown boundary mode '" + s + "'");
}

/// Nodes x_i = lo + i h along each active axis. Inactive axes have one node.
struct Grid {
  int dim = 1;
  std::array<int, 3> n{1, 1, 1};
  double h = 1.0;
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  BoundaryMode boundary = BoundaryMode::truncated;

  /// Nodes on [-half_width, half_width]^dim. Truncated grids include both end
  /// nodes; periodic grids omit the right one.
  static Grid box(int dim, int nodes, double half_width, BoundaryMode mode) {
    if (dim < 1 || dim > 3) throw PreconditionError("grid: dimension must be 1, 2 or 3");
    if (nodes < 8) throw PreconditionError("grid: need at least 8 nodes per axis");
    if (!(half_width > 0.0)) throw PreconditionError("grid: half width must be positive");
    Grid g;
    g.dim = dim;
    g.boundary = mode;
    g.h = mode == BoundaryMode::periodic ? 2.0 * half_width / nodes
                                         : 2.0 * half_width / (nodes - 1);
    for (int a = 0; a < dim; ++a) {
      g.n[a] = nodes;
      g.lo[a] = -half_width;
    }
    return g;
  }

  std::size_t size() const {
    return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) *
           static_cast<std::size_t>(n[2]);
  }
  std::size_t stride(int axis) const {
    return axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(n[0])
                                     : static_cast<std::size_t>(n[0]) * n[1];
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + stride(1) * j + stride(2) * k;
  }
  std::array<int, 3> coords(std::size_t c) const {
    const int i = static_cast<int>(c % n[0]);
    const int j = static_cast<int>((c / n[0]) % n[1]);
    const int k = static_cast<int>(c / (static_cast<std::size_t>(n[0]) * n[1]));
    return {i, j, k};
  }
  Vec position(std::size_t c) const {
    const auto ijk = coords(c);
    Vec x(dim);
    for (int a = 0; a < dim; ++a) x[a] = lo[a] + h * ijk[a];
    return x;
  }
  double cell_volume() const { return std::pow(h, dim); }

  /// Index of the node offset by `s` along `axis`; wraps on periodic grids.
  /// On truncated grids the caller guarantees the offset stays inside.
  std::size_t shift(std::size_t c, int axis, int s) const {
    const int i = coords(c)[axis];
    int j = i + s;
    if (boundary == BoundaryMode::periodic) {
      j %= n[axis];
      if (j < 0) j += n[axis];
    }
    return c + static_cast<std::ptrdiff_t>(j - i) * static_cast<std::ptrdiff_t>(stride(axis));
  }

  /// Distance (in nodes) of node c from the nearest face along any active axis.
  int boundary_distance(std::size_t c) const {
    if (boundary == BoundaryMode::periodic) return 1 << 20;
    const auto ijk = coords(c);
    int d = 1 << 20;
    for (int a = 0; a < dim; ++a) d = std::min({d, ijk[a], n[a] - 1 - ijk[a]});
    return d;
  }
};

/// Component layout: 0 = sound (phi), 1 = visc (varphi), 2.. = velocity deviation v.
struct State {
  static constexpr int kSound = 0;
  static constexpr int kVisc = 1;
  static constexpr int kVel = 2;

  State() = default;
  explicit State(const Grid& g, double time = 0.0)
      : t(time), cells(g.size()), ncomp(2 + g.dim), data(cells * (2 + g.dim), 0.0) {}

  double t = 0.0;
  std::size_t cells = 0;
  int ncomp = 0;
  std::vector<double> data;

  std::span<double> comp(int c) { return {data.data() + c * cells, cells}; }
  std::span<const double> comp(int c) const { return {data.data() + c * cells, cells}; }
  std::span<double> sound() { return comp(kSound); }
  std::span<const double> sound() const { return comp(kSound); }
  std::span<double> visc() { return comp(kVisc); }
  std::span<const double> visc() const { return comp(kVisc); }
  std::span<double> vel(int a) { return comp(kVel + a); }
  std::span<const double> vel(int a) const { return comp(kVel + a); }
};

namespace stencil {

/// Centered first difference along `axis`.
inline double d1(std::span<const double> f, const Grid& g, std::size_t c, int axis) {
  return (f[g.shift(c, axis, 1)] - f[g.shift(c, axis, -1)]) / (2.0 * g.h);
}

/// Compact second difference along `axis`.
inline double d2(std::span<const double> f, const Grid& g, std::size_t c, int axis) {
  return (f[g.shift(c, axis, 1)] - 2.0 * f[c] + f[g.shift(c, axis, -1)]) / (g.h * g.h);
}

/// Mixed second difference d_a d_b (a != b) as a product of centered differences.
inline double d11(std::span<const double> f, const Grid& g, std::size_t c, int a, int b) {
  const std::size_t pp = g.shift(g.shift(c, a, 1), b, 1);
  const std::size_t pm = g.shift(g.shift(c, a, 1), b, -1);
  const std::size_t mp = g.shift(g.shift(c, a, -1), b, 1);
  const std::size_t mm = g.shift(g.shift(c, a, -1), b, -1);
  return (f[pp] - f[pm] - f[mp] + f[mm]) / (4.0 * g.h * g.h);
}

/// Undivided fourth difference along `axis`.
inline double delta4(std::span<const double> f, const Grid& g, std::size_t c, int axis) {
  return f[g.shift(c, axis, -2)] - 4.0 * f[g.shift(c, axis, -1)] + 6.0 * f[c] -
         4.0 * f[g.shift(c, axis, 1)] + f[g.shift(c, axis, 2)];
}

}  // namespace stencil

}  // namespace vvlab
