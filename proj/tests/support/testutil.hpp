#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "shellinv/common.hpp"

#include <random>

namespace testutil {

inline std::mt19937_64 rng(unsigned seed = 20491) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(gen);
}

inline shellinv::MatrixXd perturbed(const shellinv::MatrixXd& base, double amp,
                                    std::mt19937_64& gen) {
  shellinv::MatrixXd out = base;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += uniform(gen, -amp, amp);
  return out;
}

inline shellinv::Matrix3d random_rotation(std::mt19937_64& gen) {
  const double ang = uniform(gen, 0.2, 2.8);
  shellinv::Vector3d axis(uniform(gen, -1, 1), uniform(gen, -1, 1), uniform(gen, -1, 1));
  axis.normalize();
  return Eigen::AngleAxisd(ang, axis).toRotationMatrix();
}

}  // namespace testutil
