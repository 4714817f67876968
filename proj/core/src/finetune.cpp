#include "lx/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lx/error.hpp"

namespace lx::ft {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, Eigen::Index expect_rows, Eigen::Index expect_cols) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != expect_rows) {
    throw Error(ErrorCode::ShapeMismatch, "adapter matrix has the wrong number of rows");
  }
  Eigen::MatrixXd m(expect_rows, expect_cols);
  for (Eigen::Index i = 0; i < expect_rows; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != expect_cols) {
      throw Error(ErrorCode::ShapeMismatch, "adapter matrix row has the wrong length");
    }
    for (Eigen::Index j = 0; j < expect_cols; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": parameter and gradient shapes differ");
  }
}

void check_example(const Example& ex, Eigen::Index m, Eigen::Index n) {
  if (ex.context.size() != ex.target.size()) throw Error(ErrorCode::ShapeMismatch, "context/target length differ");
  for (std::size_t k = 0; k < ex.context.size(); ++k) {
    if (static_cast<Eigen::Index>(ex.context[k]) >= n) throw Error(ErrorCode::OutOfRange, "context index");
    if (static_cast<Eigen::Index>(ex.target[k]) >= m) throw Error(ErrorCode::OutOfRange, "target index");
  }
}

// Gradient of the mean example loss with respect to the effective weights.
double weight_gradient(const Eigen::MatrixXd& weights, const std::vector<Example>& batch, Eigen::MatrixXd* grad) {
  if (grad) grad->setZero(weights.rows(), weights.cols());
  double total = 0.0;
  for (const auto& ex : batch) {
    check_example(ex, weights.rows(), weights.cols());
    for (std::size_t k = 0; k < ex.context.size(); ++k) {
      const auto c = static_cast<Eigen::Index>(ex.context[k]);
      const auto y = static_cast<Eigen::Index>(ex.target[k]);
      Eigen::VectorXd p = softmax(weights.col(c));
      if (!(p(y) > 0.0)) throw Error(ErrorCode::ZeroProbability, "true token has zero probability");
      total -= std::log(p(y));
      if (grad) {
        p(y) -= 1.0;
        grad->col(c) += p;
      }
    }
  }
  const double count = static_cast<double>(batch.size());
  if (grad) *grad /= count;
  return total / count;
}

std::vector<Example> truncated(const std::vector<Example>& batch, std::size_t max_tokens) {
  std::vector<Example> out = batch;
  for (auto& ex : out) {
    if (ex.target.size() > max_tokens) {
      ex.target.resize(max_tokens);
      ex.context.resize(max_tokens);
    }
  }
  return out;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  auto sorted = tokens_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::InvalidConfig, "vocabulary tokens must be unique");
  }
}

std::size_t Vocabulary::index(std::string_view token) const {
  const auto it = std::find(tokens_.begin(), tokens_.end(), token);
  if (it == tokens_.end()) throw Error(ErrorCode::NotFound, "token '" + std::string(token) + "' not in vocabulary");
  return static_cast<std::size_t>(it - tokens_.begin());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) return logits;
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

double cross_entropy_loss(const std::vector<Eigen::VectorXd>& prob_steps, const std::vector<std::size_t>& true_tokens) {
  if (prob_steps.empty()) throw Error(ErrorCode::EmptyInput, "loss needs at least one step");
  if (prob_steps.size() != true_tokens.size()) throw Error(ErrorCode::LengthMismatch, "steps vs true tokens");
  double loss = 0.0;
  for (std::size_t i = 0; i < prob_steps.size(); ++i) {
    if (static_cast<Eigen::Index>(true_tokens[i]) >= prob_steps[i].size()) {
      throw Error(ErrorCode::OutOfRange, "true token index outside the step's vocabulary");
    }
    const double p = prob_steps[i](static_cast<Eigen::Index>(true_tokens[i]));
    if (!(p > 0.0)) throw Error(ErrorCode::ZeroProbability, "true token has zero probability at step " + std::to_string(i));
    loss -= std::log(p);
  }
  return loss;
}

LoraAdapter LoraAdapter::init(Eigen::Index m, Eigen::Index n, int r, double alpha, std::uint64_t seed, double sigma) {
  if (r < 1 || r > std::min(m, n)) {
    throw Error(ErrorCode::InvalidConfig, "rank " + std::to_string(r) + " must be in [1, min(m, n)]");
  }
  LoraAdapter a;
  a.r = r;
  a.alpha = alpha;
  a.A.resize(r, n);
  a.B = Eigen::MatrixXd::Zero(m, r);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (Eigen::Index i = 0; i < a.A.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.A.cols(); ++j) a.A(i, j) = gauss(rng);
  }
  return a;
}

std::string LoraAdapter::to_json() const {
  return json{{"r", r}, {"alpha", alpha}, {"A", matrix_to_json(A)}, {"B", matrix_to_json(B)}}.dump(2);
}

LoraAdapter LoraAdapter::from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    LoraAdapter a;
    a.r = j.at("r").get<int>();
    a.alpha = j.at("alpha").get<double>();
    const auto& ja = j.at("A");
    const auto& jb = j.at("B");
    if (!ja.is_array() || ja.empty() || !jb.is_array() || jb.empty()) {
      throw Error(ErrorCode::ShapeMismatch, "adapter matrices must be non-empty");
    }
    const auto n = static_cast<Eigen::Index>(ja.at(0).size());
    const auto m = static_cast<Eigen::Index>(jb.size());
    a.A = matrix_from_json(ja, a.r, n);
    a.B = matrix_from_json(jb, m, a.r);
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Unparseable, std::string("adapter JSON: ") + e.what());
  }
}

Eigen::MatrixXd effective_weights(const ToyModel& model, const LoraAdapter& adapter) {
  if (adapter.B.rows() != model.W.rows() || adapter.A.cols() != model.W.cols() || adapter.B.cols() != adapter.r ||
      adapter.A.rows() != adapter.r) {
    throw Error(ErrorCode::ShapeMismatch, "adapter does not fit the base weights");
  }
  return model.W + adapter.scale() * (adapter.B * adapter.A);
}

std::pair<std::int64_t, std::int64_t> trainable_param_count(std::int64_t m, std::int64_t n, std::int64_t r) {
  return {r * (m + n), m * n};
}

void sgd_step(Eigen::MatrixXd& params, const Eigen::MatrixXd& grads, double eta) {
  check_same_shape(params, grads, "sgd_step");
  params -= eta * grads;
}

void adamw_step(Eigen::MatrixXd& params, const Eigen::MatrixXd& grads, AdamMoments& moments, double eta,
                const AdamWConfig& c, int step_index) {
  check_same_shape(params, grads, "adamw_step");
  check_same_shape(params, moments.m, "adamw_step");
  check_same_shape(params, moments.v, "adamw_step");
  if (step_index < 1) throw Error(ErrorCode::OutOfRange, "AdamW step index starts at 1");
  params *= (1.0 - eta * c.weight_decay);
  moments.m = c.beta1 * moments.m + (1.0 - c.beta1) * grads;
  moments.v = c.beta2 * moments.v + (1.0 - c.beta2) * grads.cwiseProduct(grads);
  const double bc1 = 1.0 - std::pow(c.beta1, step_index);
  const double bc2 = 1.0 - std::pow(c.beta2, step_index);
  params.array() -= eta * (moments.m.array() / bc1) / ((moments.v.array() / bc2).sqrt() + c.epsilon);
}

double linear_lr(int step, int total_steps, double eta0) {
  if (total_steps <= 0) return eta0;
  const int s = std::clamp(step, 0, total_steps);
  return eta0 * (1.0 - static_cast<double>(s) / static_cast<double>(total_steps));
}

Example make_sequence_example(const std::vector<std::size_t>& target_tokens, std::size_t bos_context,
                              const std::vector<std::size_t>& context_of) {
  Example ex;
  ex.target = target_tokens;
  std::size_t prev = bos_context;
  for (const auto t : target_tokens) {
    ex.context.push_back(prev);
    prev = context_of.at(t);
  }
  return ex;
}

std::vector<Eigen::VectorXd> step_probabilities(const Eigen::MatrixXd& weights, const Example& example) {
  check_example(example, weights.rows(), weights.cols());
  std::vector<Eigen::VectorXd> out;
  out.reserve(example.context.size());
  for (const auto c : example.context) out.push_back(softmax(weights.col(static_cast<Eigen::Index>(c))));
  return out;
}

double dataset_loss(const ToyModel& model, const LoraAdapter& adapter, const std::vector<Example>& batch) {
  if (batch.empty()) throw Error(ErrorCode::EmptyDataset, "empty batch");
  return weight_gradient(effective_weights(model, adapter), batch, nullptr);
}

LoraGradients lora_gradients(const ToyModel& model, const LoraAdapter& adapter, const std::vector<Example>& batch) {
  if (batch.empty()) throw Error(ErrorCode::EmptyDataset, "empty batch");
  Eigen::MatrixXd G;
  LoraGradients g;
  g.loss = weight_gradient(effective_weights(model, adapter), batch, &G);
  const double s = adapter.scale();
  g.dB = s * G * adapter.A.transpose();
  g.dA = s * adapter.B.transpose() * G;
  return g;
}

double grad_check(const ToyModel& model, const LoraAdapter& adapter, const std::vector<Example>& batch, double eps) {
  const auto analytic = lora_gradients(model, adapter, batch);
  LoraAdapter probe = adapter;
  double worst = 0.0;
  auto check = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& grad) {
    for (Eigen::Index i = 0; i < param.rows(); ++i) {
      for (Eigen::Index j = 0; j < param.cols(); ++j) {
        const double keep = param(i, j);
        param(i, j) = keep + eps;
        const double up = dataset_loss(model, probe, batch);
        param(i, j) = keep - eps;
        const double down = dataset_loss(model, probe, batch);
        param(i, j) = keep;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = grad(i, j);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(a - numeric) / denom);
      }
    }
  };
  check(probe.A, analytic.dA);
  check(probe.B, analytic.dB);
  return worst;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be >= 0");
  if (total_iterations < 1) throw Error(ErrorCode::InvalidConfig, "total_iterations must be >= 1");
  if (eval_every < 1) throw Error(ErrorCode::InvalidConfig, "eval_every must be >= 1");
  if (early_stop_patience < 3 || early_stop_patience > 5) {
    throw Error(ErrorCode::InvalidConfig, "early_stop_patience must be in [3, 5]");
  }
  if (max_seq_tokens < 1) throw Error(ErrorCode::InvalidConfig, "max_seq_tokens must be >= 1");
}

TrainConfig TrainConfig::from_json(std::string_view text) {
  TrainConfig c;
  try {
    const auto j = json::parse(text);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.total_iterations = j.value("total_iterations", c.total_iterations);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.max_seq_tokens = j.value("max_seq_tokens", c.max_seq_tokens);
    const auto opt = j.value("optimizer", std::string("adamw"));
    if (opt == "adamw" || opt == "AdamW") {
      c.optimizer = Optimizer::AdamW;
    } else if (opt == "sgd" || opt == "SGD") {
      c.optimizer = Optimizer::SGD;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown optimizer '" + opt + "'");
    }
    if (j.contains("adamw")) {
      const auto& a = j.at("adamw");
      c.adamw.beta1 = a.value("beta1", c.adamw.beta1);
      c.adamw.beta2 = a.value("beta2", c.adamw.beta2);
      c.adamw.epsilon = a.value("epsilon", c.adamw.epsilon);
      c.adamw.weight_decay = a.value("weight_decay", c.adamw.weight_decay);
    }
    c.min_improvement = j.value("min_improvement", c.min_improvement);
    if (j.contains("target_loss") && !j.at("target_loss").is_null()) c.target_loss = j.at("target_loss").get<double>();
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("train config JSON: ") + e.what());
  }
  c.validate();
  return c;
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Completed:
      return "completed";
    case StopReason::EarlyStopped:
      return "early_stopped";
    case StopReason::TargetReached:
      return "target_reached";
  }
  return "unknown";
}

bool LossReport::operator==(const LossReport& o) const {
  if (train_loss != o.train_loss || stop_iteration != o.stop_iteration || stop_reason != o.stop_reason) return false;
  if (evals.size() != o.evals.size()) return false;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (evals[i].iteration != o.evals[i].iteration || evals[i].val_loss != o.evals[i].val_loss) return false;
  }
  return true;
}

std::string LossReport::to_csv() const {
  std::ostringstream out;
  out << "iteration,train_loss,val_loss\n";
  std::size_t e = 0;
  char buf[64];
  for (std::size_t t = 0; t < train_loss.size(); ++t) {
    const int iter = static_cast<int>(t) + 1;
    std::snprintf(buf, sizeof buf, "%.10g", train_loss[t]);
    out << iter << ',' << buf << ',';
    if (e < evals.size() && evals[e].iteration == iter) {
      std::snprintf(buf, sizeof buf, "%.10g", evals[e].val_loss);
      out << buf;
      ++e;
    }
    out << '\n';
  }
  return out.str();
}

TrainResult train(const std::vector<Example>& train_set, const std::vector<Example>& val_set, const ToyModel& model,
                  LoraAdapter adapter, const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  if (!model.frozen) throw Error(ErrorCode::InvalidConfig, "only adapter training is supported; freeze the base model");
  effective_weights(model, adapter);  // shape check up front

  const auto train_batch = truncated(train_set, config.max_seq_tokens);
  const auto val_batch = truncated(val_set.empty() ? train_set : val_set, config.max_seq_tokens);

  TrainResult result;
  auto& report = result.report;
  report.train_loss.reserve(static_cast<std::size_t>(config.total_iterations));
  AdamMoments mA = AdamMoments::zeros_like(adapter.A);
  AdamMoments mB = AdamMoments::zeros_like(adapter.B);
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int t = 1; t <= config.total_iterations; ++t) {
    const auto g = lora_gradients(model, adapter, train_batch);
    report.train_loss.push_back(g.loss);
    if (config.target_loss && g.loss <= *config.target_loss) {
      report.stop_iteration = t;
      report.stop_reason = StopReason::TargetReached;
      break;
    }
    const double lr = linear_lr(t - 1, config.total_iterations, config.learning_rate);
    if (config.optimizer == Optimizer::AdamW) {
      adamw_step(adapter.A, g.dA, mA, lr, config.adamw, t);
      adamw_step(adapter.B, g.dB, mB, lr, config.adamw, t);
    } else {
      sgd_step(adapter.A, g.dA, lr);
      sgd_step(adapter.B, g.dB, lr);
    }
    report.stop_iteration = t;

    if (t % config.eval_every == 0) {
      const double val = dataset_loss(model, adapter, val_batch);
      report.evals.push_back({t, val});
      if (best - val > config.min_improvement) {
        best = val;
        stale = 0;
      } else if (++stale >= config.early_stop_patience) {
        report.stop_reason = StopReason::EarlyStopped;
        break;
      }
    }
  }
  result.adapter = std::move(adapter);
  return result;
}

ToyScenario joy_present_scenario() {
  ToyScenario s;
  s.vocab = Vocabulary({"joy", "anger", "discontent", "not", "present"});
  s.contexts = Vocabulary({"<bos>", "joy", "anger", "discontent", "not", "present"});
  const Eigen::Index m = 5;
  const Eigen::Index n = 6;
  s.model.W = Eigen::MatrixXd::Zero(m, n);
  const double first[] = {0.30, 0.25, 0.20, 0.20, 0.05};
  const double after_joy[] = {0.05, 0.05, 0.05, 0.40, 0.45};
  for (Eigen::Index i = 0; i < m; ++i) {
    s.model.W(i, 0) = std::log(first[i]);
    s.model.W(i, 1) = std::log(after_joy[i]);
  }
  s.target = make_sequence_example({s.vocab.index("joy"), s.vocab.index("present")}, 0, {1, 2, 3, 4, 5});
  return s;
}

}  // namespace lx::ft
