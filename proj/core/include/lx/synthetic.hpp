#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lx/sur.hpp"

namespace lx::synth {

/// Seeded generator for product-level data with known rating and purchase equations.
/// Every record it emits is synthetic; ids carry a "synthetic-" prefix.
struct GeneratorConfig {
  std::size_t n_products = 5000;
  std::uint64_t seed = 1;

  double gamma0 = 3.6;
  std::array<double, sur::kEmotions> gamma{};  // rating equation emotion effects
  double beta0 = 0.2;
  double beta_rating = 0.0;
  std::array<double, sur::kControls> beta_controls{};  // on log controls
  std::array<double, sur::kEmotions> beta_emotions{};

  double sigma_rating = 0.25;
  double sigma_purchase = 0.035;
  /// Correlation of the two equation errors. Any non-zero value makes the rating regressor
  /// endogenous in the purchase equation, which biases its coefficient by rho * sigma_purchase / sigma_rating.
  double rho = 0.0;

  /// Reviews per product: min_reviews + Poisson(extra_reviews_mean).
  int min_reviews = 40;
  double extra_reviews_mean = 40.0;
  /// Per-product mention rate is base_rate * LogNormal(0, rate_dispersion), capped at 1.
  std::array<double, sur::kEmotions> base_rates{};
  double rate_dispersion = 0.05;

  /// Log-scale means and sds of the raw controls.
  std::array<double, sur::kControls> control_log_mean = {3.0, 5.0, 6.0, 3.5};
  std::array<double, sur::kControls> control_log_sd = {0.8, 1.0, 1.0, 0.3};
};

/// Reference fixture: fixed coefficient tables, mention base rates from review-level counts and
/// 10491 products. Noise levels are set so the anger and rating coefficients get standard errors
/// near 0.042 and 0.00135.
GeneratorConfig reference_config();

std::vector<sur::ProductRecord> generate_products(const GeneratorConfig& config);

/// gamma_j * beta_rating for each emotion.
std::array<double, sur::kEmotions> true_indirect_effects(const GeneratorConfig& config);

}  // namespace lx::synth
