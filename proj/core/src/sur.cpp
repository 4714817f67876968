#include "lx/sur.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "lx/csv.hpp"
#include "lx/error.hpp"
#include "lx/taxonomy.hpp"

namespace lx::sur {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, std::size_t row, std::string_view column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Unparseable,
                "row " + std::to_string(row + 1) + " column " + std::string(column) + ": '" + field + "'");
  }
}

}  // namespace

std::vector<AggregatedProduct> aggregate_reviews(const std::vector<Review>& reviews) {
  std::vector<AggregatedProduct> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& r : reviews) {
    auto [it, fresh] = slot.emplace(r.product_id, out.size());
    if (fresh) out.push_back(AggregatedProduct{r.product_id, 0, 0.0, {}, 0.0});
    auto& p = out[it->second];
    ++p.review_count;
    p.average_rating += r.rating;
    p.mean_length += r.word_count;
    for (std::size_t j = 0; j < kEmotions; ++j) p.emotions[j] += r.emotions[j] ? 1.0 : 0.0;
  }
  for (auto& p : out) {
    const double k = static_cast<double>(p.review_count);
    p.average_rating /= k;
    p.mean_length /= k;
    for (auto& e : p.emotions) e /= k;
  }
  return out;
}

std::array<double, kControls> prepare_controls(const std::array<double, kControls>& raw,
                                               const std::array<bool, kControls>& take_log) {
  std::array<double, kControls> out{};
  for (std::size_t c = 0; c < kControls; ++c) {
    if (!take_log[c]) {
      out[c] = raw[c];
      continue;
    }
    if (!(raw[c] > 0.0)) {
      throw Error(ErrorCode::NonPositiveControl,
                  std::string(kControlNames[c]) + " must be > 0 to take logs, got " + fmt(raw[c]));
    }
    out[c] = std::log(raw[c]);
  }
  return out;
}

OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw Error(ErrorCode::ShapeMismatch, "design rows and response length differ");
  if (X.rows() <= X.cols()) {
    throw Error(ErrorCode::Underdetermined,
                std::to_string(X.rows()) + " rows for " + std::to_string(X.cols()) + " coefficients");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) {
    throw Error(ErrorCode::RankDeficient,
                "design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(X.cols()) + " columns");
  }
  OlsResult r;
  r.coefficients = qr.solve(y);
  r.residuals = y - X * r.coefficients;
  const double s2 = r.residuals.squaredNorm() / static_cast<double>(X.rows() - X.cols());
  // (X'X)^-1 = P R^-1 R^-T P'
  const auto k = X.cols();
  Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd inner = Rinv * Rinv.transpose();
  const auto& P = qr.colsPermutation();
  r.covariance = s2 * (P * inner * P.transpose());
  return r;
}

Designs build_designs(const std::vector<ProductRecord>& records, const std::vector<std::size_t>& rows,
                      const SurOptions& options) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Designs d;
  d.X_rating.resize(n, kRatingParams);
  d.y_rating.resize(n);
  d.X_purchase.resize(n, kPurchaseParams);
  d.y_purchase.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records.at(rows[static_cast<std::size_t>(i)]);
    const auto controls = prepare_controls(r.controls, options.log_controls);
    d.X_rating(i, 0) = 1.0;
    d.X_purchase(i, 0) = 1.0;
    d.X_purchase(i, 1) = r.average_rating;
    for (std::size_t c = 0; c < kControls; ++c) d.X_purchase(i, 2 + static_cast<Eigen::Index>(c)) = controls[c];
    for (std::size_t j = 0; j < kEmotions; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      d.X_rating(i, 1 + col) = r.emotions[j];
      d.X_purchase(i, 2 + static_cast<Eigen::Index>(kControls) + col) = r.emotions[j];
    }
    d.y_rating(i) = r.average_rating;
    d.y_purchase(i) = r.purchase_rate;
  }
  return d;
}

Designs build_designs(const std::vector<ProductRecord>& records, const SurOptions& options) {
  std::vector<std::size_t> rows(records.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return build_designs(records, rows, options);
}

double two_sided_p(double t, PValueMethod method, double dof) {
  if (!std::isfinite(t)) return 0.0;
  if (method == PValueMethod::StudentT && dof > 0) {
    boost::math::students_t dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return std::erfc(std::abs(t) / std::sqrt(2.0));
}

SurEstimate sur_fgls(const Designs& d, const SurOptions& options) {
  const auto n = d.X_rating.rows();
  const std::size_t floor = std::max<std::size_t>(options.min_records, static_cast<std::size_t>(kTotalParams));
  if (static_cast<std::size_t>(n) < floor) {
    throw Error(ErrorCode::Underdetermined,
                std::to_string(n) + " products; the system needs at least " + std::to_string(floor));
  }
  const auto eq_r = ols(d.X_rating, d.y_rating);
  const auto eq_p = ols(d.X_purchase, d.y_purchase);

  Eigen::Matrix2d sigma;
  sigma(0, 0) = eq_r.residuals.squaredNorm();
  sigma(1, 1) = eq_p.residuals.squaredNorm();
  sigma(0, 1) = sigma(1, 0) = eq_r.residuals.dot(eq_p.residuals);
  sigma /= static_cast<double>(n);
  if (options.force_diagonal_sigma) sigma(0, 1) = sigma(1, 0) = 0.0;
  const double det = sigma.determinant();
  if (!(sigma(0, 0) > 0.0) || !(sigma(1, 1) > 0.0) || !(det > 1e-14 * sigma(0, 0) * sigma(1, 1))) {
    throw Error(ErrorCode::SingularSigma, "residual covariance is singular");
  }
  const Eigen::Matrix2d w = sigma.inverse();

  const Eigen::Index kr = kRatingParams;
  const Eigen::Index kp = kPurchaseParams;
  Eigen::MatrixXd M(kr + kp, kr + kp);
  M.topLeftCorner(kr, kr) = w(0, 0) * (d.X_rating.transpose() * d.X_rating);
  M.bottomRightCorner(kp, kp) = w(1, 1) * (d.X_purchase.transpose() * d.X_purchase);
  M.topRightCorner(kr, kp) = w(0, 1) * (d.X_rating.transpose() * d.X_purchase);
  M.bottomLeftCorner(kp, kr) = M.topRightCorner(kr, kp).transpose();
  Eigen::VectorXd rhs(kr + kp);
  rhs.head(kr) = d.X_rating.transpose() * (w(0, 0) * d.y_rating + w(0, 1) * d.y_purchase);
  rhs.tail(kp) = d.X_purchase.transpose() * (w(1, 0) * d.y_rating + w(1, 1) * d.y_purchase);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(ErrorCode::RankDeficient, "stacked GLS normal matrix is not positive definite");
  }
  const Eigen::VectorXd theta = ldlt.solve(rhs);

  SurEstimate est;
  est.n = static_cast<std::size_t>(n);
  est.sigma = sigma;
  est.gamma = theta.head(kr);
  est.beta = theta.tail(kp);
  est.covariance = ldlt.solve(Eigen::MatrixXd::Identity(kr + kp, kr + kp));
  est.covariance = 0.5 * (est.covariance + est.covariance.transpose());
  est.se = est.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  est.t = theta.cwiseQuotient(est.se);
  est.p.resize(kr + kp);
  for (Eigen::Index i = 0; i < kr + kp; ++i) {
    const double dof = static_cast<double>(n - (i < kr ? kr : kp));
    est.p(i) = two_sided_p(est.t(i), options.p_values, dof);
  }
  return est;
}

SurEstimate sur_fgls(const std::vector<ProductRecord>& records, const SurOptions& options) {
  return sur_fgls(build_designs(records, options), options);
}

std::vector<std::string> product_csv_header() {
  std::vector<std::string> h = {"product_id", "average_rating", "purchase_rate"};
  for (const auto c : kControlNames) h.emplace_back(c);
  for (const auto& e : default_taxonomy().emotions()) h.push_back(e.id);
  return h;
}

std::vector<ProductRecord> read_products_csv(std::string_view text) {
  const auto table = csv::parse(text);
  if (!table.malformed.empty()) {
    throw Error(ErrorCode::Unparseable, "product CSV row " + std::to_string(table.malformed.front().row_index + 1) +
                                            ": " + table.malformed.front().reason);
  }
  const auto header = product_csv_header();
  std::vector<std::size_t> cols;
  for (const auto& name : header) cols.push_back(table.require_column(name));

  std::vector<ProductRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ProductRecord p;
    p.product_id = row[cols[0]];
    p.average_rating = parse_double(row[cols[1]], r, header[1]);
    p.purchase_rate = parse_double(row[cols[2]], r, header[2]);
    if (p.purchase_rate < 0.0 || p.purchase_rate > 1.0) {
      throw Error(ErrorCode::OutOfRange, "row " + std::to_string(r + 1) + ": purchase_rate outside [0, 1]");
    }
    for (std::size_t c = 0; c < kControls; ++c) p.controls[c] = parse_double(row[cols[3 + c]], r, header[3 + c]);
    for (std::size_t j = 0; j < kEmotions; ++j) {
      const double v = parse_double(row[cols[3 + kControls + j]], r, header[3 + kControls + j]);
      if (v < 0.0 || v > 1.0) {
        throw Error(ErrorCode::OutOfRange, "row " + std::to_string(r + 1) + ": " + header[3 + kControls + j] +
                                               " share outside [0, 1]");
      }
      p.emotions[j] = v;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string write_products_csv(const std::vector<ProductRecord>& records) {
  std::ostringstream out;
  csv::write_row(out, product_csv_header());
  std::vector<std::string> row;
  for (const auto& p : records) {
    row.clear();
    row.push_back(p.product_id);
    row.push_back(fmt(p.average_rating));
    row.push_back(fmt(p.purchase_rate));
    for (const double c : p.controls) row.push_back(fmt(c));
    for (const double e : p.emotions) row.push_back(fmt(e));
    csv::write_row(out, row);
  }
  return out.str();
}

}  // namespace lx::sur
