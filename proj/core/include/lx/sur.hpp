#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace lx::sur {

inline constexpr std::size_t kEmotions = 16;
inline constexpr std::size_t kControls = 4;
inline constexpr Eigen::Index kRatingParams = 1 + kEmotions;                 // intercept + emotions
inline constexpr Eigen::Index kPurchaseParams = 1 + 1 + kControls + kEmotions;  // intercept + rating + controls + emotions
inline constexpr Eigen::Index kTotalParams = kRatingParams + kPurchaseParams;

/// Control names in design order.
inline constexpr std::array<std::string_view, kControls> kControlNames = {"price", "volume", "views", "length"};

/// One product. Controls are stored untransformed; the estimator applies the log toggle.
struct ProductRecord {
  std::string product_id;
  double average_rating = 0.0;
  double purchase_rate = 0.0;
  std::array<double, kControls> controls{};  // price, volume, views, mean review length
  std::array<double, kEmotions> emotions{};   // share of reviews mentioning each emotion, taxonomy order
};

struct Review {
  std::string product_id;
  double rating = 0.0;
  std::array<bool, kEmotions> emotions{};
  double word_count = 0.0;
};

struct AggregatedProduct {
  std::string product_id;
  std::size_t review_count = 0;
  double average_rating = 0.0;
  std::array<double, kEmotions> emotions{};
  double mean_length = 0.0;
};

/// Per-product means in first-seen order.
std::vector<AggregatedProduct> aggregate_reviews(const std::vector<Review>& reviews);

/// Natural log of each control whose toggle is set. Throws NonPositiveControl.
std::array<double, kControls> prepare_controls(const std::array<double, kControls>& raw,
                                               const std::array<bool, kControls>& take_log = {true, true, true, true});

struct OlsResult {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd covariance;  // s^2 (X'X)^-1 with s^2 = RSS / (n - k)
};

/// Column-pivoted QR least squares. Throws Underdetermined (rows <= cols) and RankDeficient.
OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

enum class PValueMethod { Normal, StudentT };

struct SurOptions {
  std::array<bool, kControls> log_controls = {true, true, true, true};
  std::size_t min_records = 50;
  PValueMethod p_values = PValueMethod::Normal;
  /// Zero the cross-equation residual covariance; the system then reduces to per-equation OLS.
  bool force_diagonal_sigma = false;
};

struct Designs {
  Eigen::MatrixXd X_rating;
  Eigen::VectorXd y_rating;
  Eigen::MatrixXd X_purchase;
  Eigen::VectorXd y_purchase;
};

/// Rating equation: [1, emotions]. Purchase equation: [1, rating, controls, emotions].
Designs build_designs(const std::vector<ProductRecord>& records, const SurOptions& options = {});
/// Same, over a multiset of row indices (bootstrap resamples).
Designs build_designs(const std::vector<ProductRecord>& records, const std::vector<std::size_t>& rows,
                      const SurOptions& options);

struct SurEstimate {
  Eigen::VectorXd gamma;       // 17: intercept, emotions
  Eigen::VectorXd beta;        // 22: intercept, rating, controls, emotions
  Eigen::MatrixXd covariance;  // 39 x 39 over (gamma, beta)
  Eigen::Matrix2d sigma;       // residual covariance of the two equations
  Eigen::VectorXd se;
  Eigen::VectorXd t;
  Eigen::VectorXd p;
  std::size_t n = 0;

  double gamma_emotion(std::size_t j) const { return gamma(1 + static_cast<Eigen::Index>(j)); }
  double beta_rating() const { return beta(1); }
  double beta_control(std::size_t c) const { return beta(2 + static_cast<Eigen::Index>(c)); }
  double beta_emotion(std::size_t j) const { return beta(2 + kControls + static_cast<Eigen::Index>(j)); }

  static Eigen::Index gamma_index(std::size_t j) { return 1 + static_cast<Eigen::Index>(j); }
  static Eigen::Index beta_rating_index() { return kRatingParams + 1; }
  static Eigen::Index beta_control_index(std::size_t c) { return kRatingParams + 2 + static_cast<Eigen::Index>(c); }
  static Eigen::Index beta_emotion_index(std::size_t j) {
    return kRatingParams + 2 + static_cast<Eigen::Index>(kControls + j);
  }
};

/// Two-step feasible GLS on the stacked system. Throws Underdetermined, RankDeficient, SingularSigma.
SurEstimate sur_fgls(const Designs& designs, const SurOptions& options = {});
SurEstimate sur_fgls(const std::vector<ProductRecord>& records, const SurOptions& options = {});

/// Two-sided p-value for a t statistic.
double two_sided_p(double t, PValueMethod method, double dof);

/// Header: product_id,average_rating,purchase_rate,price,volume,views,length,<16 emotion ids>.
std::vector<std::string> product_csv_header();
/// Throws MissingColumn, Unparseable, OutOfRange (proportions outside [0,1]).
std::vector<ProductRecord> read_products_csv(std::string_view text);
std::string write_products_csv(const std::vector<ProductRecord>& records);

}  // namespace lx::sur
