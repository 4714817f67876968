#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lx/taxonomy.hpp"

namespace lx::metrics {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
};

struct PRF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Any 0/0 ratio is reported as 0.
PRF1 prf1(const ConfusionCounts& counts);

/// Counts for `positive` against everything else. Throws LengthMismatch.
ConfusionCounts binarize(const std::vector<Label>& preds, const std::vector<Label>& truths, Label positive);

struct MulticlassF1 {
  std::vector<double> per_class;  // same order as `classes`
  double average = 0.0;           // unweighted mean
};
/// One-vs-rest F1 per class. Throws LengthMismatch, OutOfRange for labels outside `classes`.
MulticlassF1 multiclass_f1_ovr(const std::vector<Label>& preds, const std::vector<Label>& truths,
                               const std::vector<Label>& classes);

/// Score for one perception: binary F1 on Present for emotions, OvR average over the three polarities otherwise.
double task_f1(PerceptionKind kind, const std::vector<Label>& preds, const std::vector<Label>& truths);

struct TaskScore {
  std::string task_id;
  double f1 = 0.0;
  std::int64_t test_size = 0;
};

/// Mean of f1 over tasks with test_size > 0. Throws EmptyInput if none remain.
double macro_f1(const std::vector<TaskScore>& scores);
/// Size-weighted mean over tasks with test_size > 0. Throws EmptyInput.
double weighted_f1(const std::vector<TaskScore>& scores);

/// perception,test_size,f1 followed by macro and weighted rows.
std::string scores_to_csv(const std::vector<TaskScore>& scores);

struct Annotation {
  bool present = false;
  Polarity polarity = Polarity::NeutralOrNoMention;  // ignored for emotions
  bool has_polarity = false;
};

/// Share of items where presence and, when either coder gives one, polarity both match. Throws LengthMismatch.
double intercoder_agreement(const std::vector<Annotation>& coder_a, const std::vector<Annotation>& coder_b);

}  // namespace lx::metrics
