#include "pride/privacy.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "pride/rng.hpp"

namespace pride {

double column_range_bound(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  if (X.rows() == 0 || X.cols() == 0) throw std::invalid_argument("column_range_bound: empty matrix");
  return (X.colwise().maxCoeff() - X.colwise().minCoeff()).maxCoeff();
}

double noise_sigma(double epsilon, double delta, double theta, double sensitivity_w2) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("noise_sigma: epsilon must be positive");
  if (!(delta > 0.0 && delta < 0.5)) throw std::invalid_argument("noise_sigma: delta must lie in (0, 1/2)");
  if (theta < 0.0 || sensitivity_w2 < 0.0) throw std::invalid_argument("noise_sigma: negative theta or w2");
  return sensitivity_w2 * theta / epsilon * std::sqrt(2.0 * (std::log(1.0 / (2.0 * delta)) + epsilon));
}

PrivacyBudget PrivacyBudget::calibrate(double epsilon, double delta, double theta, double sensitivity_w2,
                                       double noise_multiplier) {
  if (noise_multiplier < 1.0) throw std::invalid_argument("PrivacyBudget: noise_multiplier below 1 voids the guarantee");
  PrivacyBudget b;
  b.epsilon = epsilon;
  b.delta = delta;
  b.sensitivity_w2 = sensitivity_w2;
  b.theta = theta;
  b.noise_multiplier = noise_multiplier;
  b.sigma = noise_multiplier * noise_sigma(epsilon, delta, theta, sensitivity_w2);
  return b;
}

Eigen::MatrixXd gaussian_perturb(const Eigen::Ref<const Eigen::MatrixXd>& Z, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian_perturb: sigma must be non-negative");
  Eigen::MatrixXd out = Z;
  if (sigma == 0.0) return out;
  Engine eng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  // Row-major fill order keeps a given (row, col) draw independent of storage.
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += normal(eng);
  return out;
}

}  // namespace pride
