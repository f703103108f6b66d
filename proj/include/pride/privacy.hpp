#ifndef PRIDE_PRIVACY_HPP
#define PRIDE_PRIVACY_HPP

#include <Eigen/Dense>

#include <cstdint>

namespace pride {

/// Gaussian-mechanism calibration for one party's released random features.
///
/// `sigma` is set to the boundary value
///
///   sigma = w2 * theta / epsilon * sqrt(2 (ln(1 / (2 delta)) + epsilon)),
///
/// which is what the published noise tables report. The guarantee itself is
/// stated for any strictly larger sigma; `noise_multiplier` > 1 gives that.
struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 0.05;
  double sensitivity_w2 = 1.0;
  double theta = 0.0;
  double noise_multiplier = 1.0;
  double sigma = 0.0;

  static PrivacyBudget calibrate(double epsilon, double delta, double theta, double sensitivity_w2 = 1.0,
                                 double noise_multiplier = 1.0);
};

/// Privacy setting of a run. `enabled == false` is the no-privacy entry
/// (epsilon = infinity, sigma = 0, i.e. Dual-LOCO).
struct PrivacyParams {
  bool enabled = true;
  double epsilon = 1.0;
  double delta = 0.05;
  double noise_multiplier = 1.0;

  static PrivacyParams none() { return PrivacyParams{false, 0.0, 0.05, 1.0}; }
  static PrivacyParams with_epsilon(double epsilon, double delta = 0.05) {
    return PrivacyParams{true, epsilon, delta, 1.0};
  }
};

/// Largest column range max_j (max_i X_ij - min_i X_ij).
double column_range_bound(const Eigen::Ref<const Eigen::MatrixXd>& X);

double noise_sigma(double epsilon, double delta, double theta, double sensitivity_w2 = 1.0);

/// Z + W with W_ij ~ N(0, sigma^2), drawn from an engine seeded with `seed`.
/// sigma == 0 returns Z unchanged without consuming randomness.
Eigen::MatrixXd gaussian_perturb(const Eigen::Ref<const Eigen::MatrixXd>& Z, double sigma, std::uint64_t seed);

}  // namespace pride

#endif  // PRIDE_PRIVACY_HPP
