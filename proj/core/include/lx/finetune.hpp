#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lx::ft {

class Vocabulary {
 public:
  Vocabulary() = default;
  /// Throws InvalidConfig on duplicate tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  /// Throws NotFound.
  std::size_t index(std::string_view token) const;

 private:
  std::vector<std::string> tokens_;
};

/// Max-subtracted softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// -sum ln p_i(true_i). Throws ZeroProbability, OutOfRange for a bad index, EmptyInput for no steps.
double cross_entropy_loss(const std::vector<Eigen::VectorXd>& prob_steps, const std::vector<std::size_t>& true_tokens);

/// Bigram-style model: column c of W holds the vocabulary logits after context token c.
struct ToyModel {
  Eigen::MatrixXd W;  // m x n
  bool frozen = true;

  Eigen::Index vocab_size() const noexcept { return W.rows(); }
  Eigen::Index context_size() const noexcept { return W.cols(); }
};

struct LoraAdapter {
  Eigen::MatrixXd A;  // r x n
  Eigen::MatrixXd B;  // m x r
  int r = 0;
  double alpha = 0.0;

  double scale() const noexcept { return alpha / static_cast<double>(r); }
  /// A ~ N(0, sigma^2) from the seed, B = 0. Throws InvalidConfig if r > min(m, n) or r < 1.
  static LoraAdapter init(Eigen::Index m, Eigen::Index n, int r, double alpha, std::uint64_t seed,
                          double sigma = 0.02);

  std::string to_json() const;
  static LoraAdapter from_json(std::string_view text);
};

/// W + (alpha/r) B A. Throws ShapeMismatch.
Eigen::MatrixXd effective_weights(const ToyModel& model, const LoraAdapter& adapter);

/// (r(m+n), mn)
std::pair<std::int64_t, std::int64_t> trainable_param_count(std::int64_t m, std::int64_t n, std::int64_t r);

/// param -= eta * grad. Throws ShapeMismatch.
void sgd_step(Eigen::MatrixXd& params, const Eigen::MatrixXd& grads, double eta);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

struct AdamMoments {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;

  static AdamMoments zeros_like(const Eigen::MatrixXd& p) {
    return {Eigen::MatrixXd::Zero(p.rows(), p.cols()), Eigen::MatrixXd::Zero(p.rows(), p.cols())};
  }
};

/// Decoupled weight decay followed by the bias-corrected Adam update. step_index starts at 1.
void adamw_step(Eigen::MatrixXd& params, const Eigen::MatrixXd& grads, AdamMoments& moments, double eta,
                const AdamWConfig& config, int step_index);

/// eta0 * (1 - step/total_steps)
double linear_lr(int step, int total_steps, double eta0);

/// A token sequence as (context, next-token) pairs.
struct Example {
  std::vector<std::size_t> context;
  std::vector<std::size_t> target;
};

/// Context ids are shifted targets with `bos` first: predicting t_k from t_{k-1}.
/// `context_of` maps an output-vocab index to its context index.
Example make_sequence_example(const std::vector<std::size_t>& target_tokens, std::size_t bos_context,
                              const std::vector<std::size_t>& context_of);

/// Per-step softmax distributions for one example.
std::vector<Eigen::VectorXd> step_probabilities(const Eigen::MatrixXd& weights, const Example& example);

/// Mean over examples of each example's summed cross-entropy.
double dataset_loss(const ToyModel& model, const LoraAdapter& adapter, const std::vector<Example>& batch);

struct LoraGradients {
  Eigen::MatrixXd dA;
  Eigen::MatrixXd dB;
  double loss = 0.0;
};
LoraGradients lora_gradients(const ToyModel& model, const LoraAdapter& adapter, const std::vector<Example>& batch);

/// Max relative error between analytic and central-difference gradients over every entry of A and B.
double grad_check(const ToyModel& model, const LoraAdapter& adapter, const std::vector<Example>& batch,
                  double eps = 1e-5);

enum class Optimizer { SGD, AdamW };

struct TrainConfig {
  double learning_rate = 2e-4;
  int total_iterations = 3000;
  int eval_every = 100;
  int early_stop_patience = 3;
  std::size_t max_seq_tokens = 2048;
  Optimizer optimizer = Optimizer::AdamW;
  AdamWConfig adamw;
  double min_improvement = 1e-6;
  /// Stop as soon as the training loss drops to this value.
  std::optional<double> target_loss;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
  static TrainConfig from_json(std::string_view text);
};

enum class StopReason { Completed, EarlyStopped, TargetReached };
std::string_view to_string(StopReason reason);

struct EvalPoint {
  int iteration = 0;
  double val_loss = 0.0;
};

struct LossReport {
  std::vector<double> train_loss;  // train_loss[t-1] is the loss at iteration t before its update
  std::vector<EvalPoint> evals;
  int stop_iteration = 0;
  StopReason stop_reason = StopReason::Completed;

  bool operator==(const LossReport& other) const;
  /// iteration,train_loss,val_loss with val_loss blank between evals.
  std::string to_csv() const;
};

struct TrainResult {
  LossReport report;
  LoraAdapter adapter;
};

/// Updates only the adapter; the model is read-only. Throws EmptyDataset, InvalidConfig (model not frozen).
TrainResult train(const std::vector<Example>& train_set, const std::vector<Example>& val_set, const ToyModel& model,
                  LoraAdapter adapter, const TrainConfig& config);

/// Five-word answer vocabulary with a pretrained table that gives the sequence "joy present"
/// step probabilities 0.30 and 0.45.
struct ToyScenario {
  Vocabulary vocab;     // output tokens
  Vocabulary contexts;  // <bos> followed by the output tokens
  ToyModel model;
  Example target;       // "joy present"
};
ToyScenario joy_present_scenario();

}  // namespace lx::ft
