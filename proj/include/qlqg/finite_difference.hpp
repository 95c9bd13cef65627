#pragma once

#include "qlqg/types.hpp"

namespace qlqg {

/// Fourth-order first derivative at grid index k of samples f(0..n) with
/// spacing h. Uses the centred five-point stencil where it fits and the
/// shifted five-point stencils near the ends. Needs n >= 4.
template <typename F>
double derivative5(F&& f, int k, int n, double h) {
  require(n >= 4, ErrorKind::GridMismatch, "five-point derivative needs at least four steps");
  static constexpr double w[5][5] = {{-25, 48, -36, 16, -3},
                                     {-3, -10, 18, -6, 1},
                                     {1, -8, 0, 8, -1},
                                     {-1, 6, -18, 10, 3},
                                     {3, -16, 36, -48, 25}};
  const int first = k < 2 ? 0 : (k > n - 2 ? n - 4 : k - 2);
  const int row = k - first;
  double acc = 0.0;
  for (int j = 0; j < 5; ++j)
    if (w[row][j] != 0.0) acc += w[row][j] * f(first + j);
  return acc / (12.0 * h);
}

}  // namespace qlqg
