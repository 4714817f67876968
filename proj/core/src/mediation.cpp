#include "lx/mediation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "lx/csv.hpp"
#include "lx/error.hpp"
#include "lx/taxonomy.hpp"

namespace lx::mediation {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::optional<std::array<double, sur::kEmotions>> replicate(const std::vector<sur::ProductRecord>& records,
                                                            const sur::SurOptions& options, std::uint64_t seed,
                                                            int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, records.size() - 1);
  std::vector<std::size_t> rows(records.size());
  for (auto& r : rows) r = pick(rng);
  try {
    const auto est = sur::sur_fgls(sur::build_designs(records, rows, options), options);
    std::array<double, sur::kEmotions> out{};
    for (std::size_t j = 0; j < sur::kEmotions; ++j) out[j] = indirect_effect(est.gamma_emotion(j), est.beta_rating());
    return out;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

double indirect_effect(double gamma_1j, double beta_1) noexcept { return gamma_1j * beta_1; }

double delta_se(double g, double b, double var_g, double var_b, double cov) {
  if (var_g < 0.0 || var_b < 0.0) throw Error(ErrorCode::NegativeVariance, "variance inputs must be >= 0");
  const double v = b * b * var_g + g * g * var_b + 2.0 * g * b * cov;
  if (v < 0.0) {
    if (v > -1e-15 * (b * b * var_g + g * g * var_b)) return 0.0;
    throw Error(ErrorCode::NegativeVariance, "delta-method variance is negative; covariance is inconsistent");
  }
  return std::sqrt(v);
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "quantile of no values");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::pair<double, double> percentile_interval(std::vector<double> draws, double level) {
  if (draws.empty()) throw Error(ErrorCode::EmptyInput, "no bootstrap draws");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::OutOfRange, "level must be in (0, 1)");
  std::sort(draws.begin(), draws.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile(draws, tail), quantile(draws, 1.0 - tail)};
}

BootstrapResult bootstrap_indirect(const std::vector<sur::ProductRecord>& records, const sur::SurOptions& options,
                                   const BootstrapConfig& config) {
  if (config.n_boot < 100) throw Error(ErrorCode::InvalidConfig, "n_boot must be >= 100");
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no products to resample");

  std::vector<std::optional<std::array<double, sur::kEmotions>>> slots(static_cast<std::size_t>(config.n_boot));
  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(config.n_boot)));
  auto run = [&](unsigned worker) {
    for (int b = static_cast<int>(worker); b < config.n_boot; b += static_cast<int>(threads)) {
      slots[static_cast<std::size_t>(b)] = replicate(records, options, config.seed, b);
    }
  };
  if (threads == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(run, w);
  }

  BootstrapResult result;
  for (auto& s : slots) {
    if (s) {
      result.draws.push_back(*s);
    } else {
      ++result.failed;
    }
  }
  if (static_cast<double>(result.failed) > config.max_failure_share * config.n_boot) {
    throw Error(ErrorCode::TooManyFailures, std::to_string(result.failed) + " of " + std::to_string(config.n_boot) +
                                                " bootstrap replicates failed");
  }
  std::vector<double> col(result.draws.size());
  for (std::size_t j = 0; j < sur::kEmotions; ++j) {
    for (std::size_t b = 0; b < result.draws.size(); ++b) col[b] = result.draws[b][j];
    result.ci[j] = percentile_interval(col, config.level);
  }
  return result;
}

std::string_view to_string(Mediation m) {
  switch (m) {
    case Mediation::Full:
      return "full";
    case Mediation::Partial:
      return "partial";
    case Mediation::NoMediation:
      return "none";
  }
  return "none";
}

Mediation classify_mediation(std::pair<double, double> ci, double direct_p, double alpha) {
  const bool excludes_zero = ci.first > 0.0 || ci.second < 0.0;
  if (!excludes_zero) return Mediation::NoMediation;
  return direct_p >= alpha ? Mediation::Full : Mediation::Partial;
}

MediationReport mediation_report(const std::vector<sur::ProductRecord>& records, const MediationConfig& config) {
  MediationReport report;
  report.estimate = sur::sur_fgls(records, config.sur);
  const auto boot = bootstrap_indirect(records, config.sur, config.bootstrap);
  report.bootstrap_replicates = static_cast<int>(boot.draws.size());
  report.bootstrap_failed = boot.failed;

  const auto& est = report.estimate;
  const auto& emotions = default_taxonomy().emotions();
  const auto bi = sur::SurEstimate::beta_rating_index();
  for (std::size_t j = 0; j < sur::kEmotions; ++j) {
    MediationResult m;
    m.emotion_id = emotions[j].id;
    const auto gi = sur::SurEstimate::gamma_index(j);
    const auto di = sur::SurEstimate::beta_emotion_index(j);
    m.indirect = indirect_effect(est.gamma_emotion(j), est.beta_rating());
    m.indirect_se = delta_se(est.gamma_emotion(j), est.beta_rating(), est.covariance(gi, gi), est.covariance(bi, bi),
                             est.covariance(gi, bi));
    m.indirect_ci = boot.ci[j];
    m.direct = est.beta_emotion(j);
    m.direct_p = est.p(di);
    m.classification = classify_mediation(m.indirect_ci, m.direct_p, config.alpha);
    report.results.push_back(std::move(m));
  }
  return report;
}

std::string MediationReport::to_csv() const {
  std::ostringstream out;
  csv::write_row(out, {"variable", "rating_estimate", "rating_se", "rating_t", "rating_p", "purchase_estimate",
                       "purchase_se", "purchase_t", "purchase_p", "indirect", "indirect_se", "indirect_ci_lo",
                       "indirect_ci_hi", "mediation"});
  const auto& e = estimate;
  auto cells = [&](Eigen::Index i) {
    return std::array<std::string, 4>{num(i < sur::kRatingParams ? e.gamma(i) : e.beta(i - sur::kRatingParams)),
                                      num(e.se(i)), num(e.t(i)), num(e.p(i))};
  };
  const std::array<std::string, 4> blank{};
  auto row = [&](const std::string& name, std::optional<Eigen::Index> gi, std::optional<Eigen::Index> bi,
                 const MediationResult* m) {
    std::vector<std::string> r{name};
    const auto g = gi ? cells(*gi) : blank;
    const auto b = bi ? cells(*bi) : blank;
    r.insert(r.end(), g.begin(), g.end());
    r.insert(r.end(), b.begin(), b.end());
    if (m) {
      r.insert(r.end(), {num(m->indirect), num(m->indirect_se), num(m->indirect_ci.first),
                         num(m->indirect_ci.second), std::string(mediation::to_string(m->classification))});
    } else {
      r.insert(r.end(), 5, std::string());
    }
    csv::write_row(out, r);
  };
  row("intercept", 0, sur::kRatingParams, nullptr);
  row("average_rating", std::nullopt, sur::SurEstimate::beta_rating_index(), nullptr);
  for (std::size_t c = 0; c < sur::kControls; ++c) {
    row(std::string(sur::kControlNames[c]), std::nullopt, sur::SurEstimate::beta_control_index(c), nullptr);
  }
  for (std::size_t j = 0; j < results.size(); ++j) {
    row(results[j].emotion_id, sur::SurEstimate::gamma_index(j), sur::SurEstimate::beta_emotion_index(j), &results[j]);
  }
  return out.str();
}

std::string MediationReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : results) {
    arr.push_back({{"emotion", m.emotion_id},
                   {"indirect", m.indirect},
                   {"se", m.indirect_se},
                   {"ci_lo", m.indirect_ci.first},
                   {"ci_hi", m.indirect_ci.second},
                   {"direct", m.direct},
                   {"direct_p", m.direct_p},
                   {"classification", std::string(mediation::to_string(m.classification))}});
  }
  return arr.dump(2);
}

}  // namespace lx::mediation
