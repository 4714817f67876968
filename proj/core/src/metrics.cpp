#include "lx/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "lx/csv.hpp"
#include "lx/error.hpp"

namespace lx::metrics {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(a) + " predictions vs " + std::to_string(b) + " truths");
  }
}

std::vector<TaskScore> nonempty(const std::vector<TaskScore>& scores) {
  std::vector<TaskScore> out;
  std::copy_if(scores.begin(), scores.end(), std::back_inserter(out), [](const TaskScore& s) { return s.test_size > 0; });
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "no task with test items");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

PRF1 prf1(const ConfusionCounts& c) {
  PRF1 r;
  r.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  r.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

ConfusionCounts binarize(const std::vector<Label>& preds, const std::vector<Label>& truths, Label positive) {
  require_same_length(preds.size(), truths.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == positive;
    const bool t = truths[i] == positive;
    if (p && t) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (t) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

MulticlassF1 multiclass_f1_ovr(const std::vector<Label>& preds, const std::vector<Label>& truths,
                               const std::vector<Label>& classes) {
  require_same_length(preds.size(), truths.size());
  if (classes.empty()) throw Error(ErrorCode::EmptyInput, "no classes");
  auto known = [&](Label l) { return std::find(classes.begin(), classes.end(), l) != classes.end(); };
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!known(preds[i]) || !known(truths[i])) {
      throw Error(ErrorCode::OutOfRange, "label outside the class list at item " + std::to_string(i));
    }
  }
  MulticlassF1 out;
  double sum = 0.0;
  for (const Label cls : classes) {
    out.per_class.push_back(prf1(binarize(preds, truths, cls)).f1);
    sum += out.per_class.back();
  }
  out.average = sum / static_cast<double>(classes.size());
  return out;
}

double task_f1(PerceptionKind kind, const std::vector<Label>& preds, const std::vector<Label>& truths) {
  if (kind == PerceptionKind::Emotion) return prf1(binarize(preds, truths, Label::Present)).f1;
  return multiclass_f1_ovr(preds, truths, {Label::Positive, Label::Negative, Label::NeutralOrNoMention}).average;
}

double macro_f1(const std::vector<TaskScore>& scores) {
  const auto kept = nonempty(scores);
  double sum = 0.0;
  for (const auto& s : kept) sum += s.f1;
  return sum / static_cast<double>(kept.size());
}

double weighted_f1(const std::vector<TaskScore>& scores) {
  const auto kept = nonempty(scores);
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : kept) {
    num += s.f1 * static_cast<double>(s.test_size);
    den += static_cast<double>(s.test_size);
  }
  return num / den;
}

std::string scores_to_csv(const std::vector<TaskScore>& scores) {
  std::ostringstream out;
  csv::write_row(out, {"perception", "test_size", "f1"});
  std::int64_t total = 0;
  for (const auto& s : scores) {
    csv::write_row(out, {s.task_id, std::to_string(s.test_size), s.test_size > 0 ? fmt(s.f1) : std::string()});
    total += s.test_size;
  }
  const bool any = std::any_of(scores.begin(), scores.end(), [](const TaskScore& s) { return s.test_size > 0; });
  if (any) {
    csv::write_row(out, {"macro_f1", std::to_string(total), fmt(macro_f1(scores))});
    csv::write_row(out, {"weighted_f1", std::to_string(total), fmt(weighted_f1(scores))});
  }
  return out.str();
}

double intercoder_agreement(const std::vector<Annotation>& a, const std::vector<Annotation>& b) {
  require_same_length(a.size(), b.size());
  if (a.empty()) throw Error(ErrorCode::EmptyInput, "no annotations");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool same = a[i].present == b[i].present;
    if (same && (a[i].has_polarity || b[i].has_polarity)) {
      same = a[i].has_polarity == b[i].has_polarity && a[i].polarity == b[i].polarity;
    }
    agree += same ? 1 : 0;
  }
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

}  // namespace lx::metrics
