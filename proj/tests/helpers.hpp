#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "jkoflow/measures.hpp"
#include "jkoflow/random.hpp"

namespace testing {

inline Eigen::MatrixXd random_points(std::uint64_t seed, Eigen::Index n, Eigen::Index d,
                                     double low = -2.0, double high = 2.0) {
  jkoflow::CounterRng rng(seed, 0x7e57);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = rng.uniform(low, high);
  return x;
}

inline Eigen::VectorXd random_weights(std::uint64_t seed, Eigen::Index n) {
  jkoflow::CounterRng rng(seed, 0x3e16);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = rng.uniform(0.1, 1.0);
  return w / w.sum();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("jkoflow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
