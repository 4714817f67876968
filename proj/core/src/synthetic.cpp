#include "lx/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "lx/error.hpp"

namespace lx::synth {

GeneratorConfig reference_config() {
  GeneratorConfig c;
  c.n_products = 10491;
  // taxonomy order: anger, discontent, worry, sadness, fear, shame, envy, loneliness,
  // romantic_love, love, peacefulness, contentment, optimism, joy, excitement, surprise
  c.gamma = {-0.48189, -0.81714, 0.10400,  -0.34045, -0.14958, -0.07682, 0.08264, 0.07584,
             -0.12878, 0.15673,  -0.11657, 0.52498,  -0.00415, 0.19309,  0.12571, 0.03350};
  c.beta_rating = 0.00472;
  c.beta_controls = {-0.00504, 0.00002, 0.00314, 0.00487};
  c.beta_emotions = {0.00387,  -0.01789, -0.00534, 0.00698,  0.00655,  -0.00784, -0.00916, -0.00040,
                     -0.00131, 0.00740,  -0.00934, -0.00265, -0.00586, 0.00042,  0.00113,  -0.00924};
  const double mentions[sur::kEmotions] = {1003, 902, 393, 302, 151, 158, 30, 39, 54, 301, 650, 982, 537, 939, 628, 266};
  for (std::size_t j = 0; j < sur::kEmotions; ++j) c.base_rates[j] = mentions[j] / 2523.0;
  return c;
}

std::vector<sur::ProductRecord> generate_products(const GeneratorConfig& c) {
  if (c.n_products == 0) throw Error(ErrorCode::InvalidConfig, "n_products must be > 0");
  if (c.rho <= -1.0 || c.rho >= 1.0) throw Error(ErrorCode::InvalidConfig, "rho must be in (-1, 1)");
  if (c.sigma_rating <= 0.0 || c.sigma_purchase <= 0.0) throw Error(ErrorCode::InvalidConfig, "sigmas must be > 0");
  if (c.min_reviews < 1) throw Error(ErrorCode::InvalidConfig, "min_reviews must be >= 1");

  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::poisson_distribution<int> extra(c.extra_reviews_mean);
  const double rho_c = std::sqrt(1.0 - c.rho * c.rho);

  std::vector<sur::ProductRecord> out;
  out.reserve(c.n_products);
  char id[32];
  for (std::size_t i = 0; i < c.n_products; ++i) {
    sur::ProductRecord p;
    std::snprintf(id, sizeof id, "synthetic-%06zu", i + 1);
    p.product_id = id;

    const int reviews = c.min_reviews + (c.extra_reviews_mean > 0 ? extra(rng) : 0);
    for (std::size_t j = 0; j < sur::kEmotions; ++j) {
      const double rate = std::min(1.0, c.base_rates[j] * std::exp(c.rate_dispersion * z(rng)));
      std::binomial_distribution<int> mentions(reviews, rate);
      p.emotions[j] = static_cast<double>(mentions(rng)) / reviews;
    }
    for (std::size_t k = 0; k < sur::kControls; ++k) {
      p.controls[k] = std::exp(c.control_log_mean[k] + c.control_log_sd[k] * z(rng));
    }

    double rating_mean = c.gamma0;
    double purchase_mean = c.beta0;
    for (std::size_t j = 0; j < sur::kEmotions; ++j) {
      rating_mean += c.gamma[j] * p.emotions[j];
      purchase_mean += c.beta_emotions[j] * p.emotions[j];
    }
    for (std::size_t k = 0; k < sur::kControls; ++k) purchase_mean += c.beta_controls[k] * std::log(p.controls[k]);

    // Redraw the error pair until both outcomes fall inside their natural ranges.
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw Error(ErrorCode::InvalidConfig, "generator cannot keep outcomes in range");
      const double u = z(rng);
      const double v = z(rng);
      const double e_r = c.sigma_rating * u;
      const double e_p = c.sigma_purchase * (c.rho * u + rho_c * v);
      const double rating = rating_mean + e_r;
      const double purchase = purchase_mean + c.beta_rating * rating + e_p;
      if (rating >= 1.0 && rating <= 5.0 && purchase >= 0.0 && purchase <= 1.0) {
        p.average_rating = rating;
        p.purchase_rate = purchase;
        break;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::array<double, sur::kEmotions> true_indirect_effects(const GeneratorConfig& c) {
  std::array<double, sur::kEmotions> out{};
  for (std::size_t j = 0; j < sur::kEmotions; ++j) out[j] = c.gamma[j] * c.beta_rating;
  return out;
}

}  // namespace lx::synth
