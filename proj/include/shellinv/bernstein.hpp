#pragma once

#include "shellinv/common.hpp"

namespace shellinv {

/// Values and first/second derivatives of the degree-p Bernstein basis at
/// xi in [-1,1] (parent-domain convention). Output arrays have p+1 entries.
inline void bernstein_basis(double xi, int p, std::vector<double>& val,
                            std::vector<double>& d1, std::vector<double>& d2) {
  require(p >= 1, "bernstein_basis: degree must be >= 1");
  const double s = 0.5 * (xi + 1.0);  // map to [0,1]
  const int n = p + 1;
  val.assign(n, 0.0);
  d1.assign(n, 0.0);
  d2.assign(n, 0.0);

  // de Casteljau-style triangular recursion for values at s.
  auto eval = [&](int deg, std::vector<double>& out) {
    out.assign(deg + 1, 0.0);
    out[0] = 1.0;
    for (int j = 1; j <= deg; ++j) {
      double saved = 0.0;
      for (int k = 0; k < j; ++k) {
        double t = out[k];
        out[k] = saved + (1.0 - s) * t;
        saved = s * t;
      }
      out[j] = saved;
    }
  };

  eval(p, val);

  // Derivatives from lower-degree bases; chain rule factor 1/2 per order
  // for the [-1,1] parent coordinate.
  std::vector<double> bm1, bm2;
  eval(p - 1, bm1);
  auto at = [](const std::vector<double>& b, int i) {
    return (i < 0 || i >= static_cast<int>(b.size())) ? 0.0 : b[i];
  };
  for (int i = 0; i <= p; ++i)
    d1[i] = 0.5 * p * (at(bm1, i - 1) - at(bm1, i));
  if (p >= 2) {
    eval(p - 2, bm2);
    for (int i = 0; i <= p; ++i)
      d2[i] = 0.25 * p * (p - 1) * (at(bm2, i - 2) - 2.0 * at(bm2, i - 1) + at(bm2, i));
  }
}

}  // namespace shellinv
