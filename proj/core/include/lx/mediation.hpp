#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lx/sur.hpp"

namespace lx::mediation {

double indirect_effect(double gamma_1j, double beta_1) noexcept;

/// First-order delta-method SE of gamma * beta, including the cross-equation covariance.
/// Throws NegativeVariance for a negative input variance or a negative total.
double delta_se(double gamma_1j, double beta_1, double var_gamma, double var_beta, double cov_gb);

/// Type-7 (linear interpolation) quantile. `sorted` must be ascending and non-empty.
double quantile(const std::vector<double>& sorted, double q);

/// Equal-tailed percentile interval. Draws need not be sorted. Throws EmptyInput.
std::pair<double, double> percentile_interval(std::vector<double> draws, double level);

struct BootstrapConfig {
  int n_boot = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;
  double max_failure_share = 0.05;
  unsigned threads = 1;
};

struct BootstrapResult {
  std::array<std::pair<double, double>, sur::kEmotions> ci{};
  std::vector<std::array<double, sur::kEmotions>> draws;  // successful replicates, replicate order
  int failed = 0;
};

/// Resamples product rows with replacement and re-estimates gamma_j * beta_1 per replicate.
/// Replicate b draws from a stream seeded by (seed, b), so results do not depend on thread count.
/// Failed replicates are dropped; more than max_failure_share of them throws TooManyFailures.
BootstrapResult bootstrap_indirect(const std::vector<sur::ProductRecord>& records, const sur::SurOptions& options,
                                   const BootstrapConfig& config);

enum class Mediation { Full, Partial, NoMediation };
std::string_view to_string(Mediation m);

/// Full: CI excludes 0 and direct effect not significant. Partial: CI excludes 0 and direct significant.
Mediation classify_mediation(std::pair<double, double> indirect_ci, double direct_p, double alpha = 0.05);

struct MediationResult {
  std::string emotion_id;
  double indirect = 0.0;
  double indirect_se = 0.0;
  std::pair<double, double> indirect_ci{};
  double direct = 0.0;
  double direct_p = 1.0;
  Mediation classification = Mediation::NoMediation;
};

struct MediationConfig {
  sur::SurOptions sur;
  BootstrapConfig bootstrap;
  double alpha = 0.05;
};

struct MediationReport {
  sur::SurEstimate estimate;
  std::vector<MediationResult> results;  // taxonomy order
  int bootstrap_replicates = 0;
  int bootstrap_failed = 0;

  /// One row per variable with both equations' estimate/se/t/p and the mediation columns.
  std::string to_csv() const;
  /// Array of {emotion, indirect, se, ci_lo, ci_hi, direct, direct_p, classification}.
  std::string to_json() const;
};

MediationReport mediation_report(const std::vector<sur::ProductRecord>& records, const MediationConfig& config = {});

}  // namespace lx::mediation
