#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lx/taxonomy.hpp"

namespace lx::instruct {

enum class Task { EmotionDetection, PolarityDetection, SentimentAnalysis };
enum class Source { Survey, Review };

std::string_view to_string(Task task);
std::string_view to_string(Source source);
Task task_for(PerceptionKind kind);

struct Option {
  char letter = 'A';
  Label label = Label::Present;

  bool operator==(const Option&) const = default;
};

struct Prompt {
  std::string instruction_text;
  std::vector<Option> options;
};

/// One (input text, task instruction, target output) triple.
struct InstructionRecord {
  Task task = Task::EmotionDetection;
  std::string perception_id;
  std::string instruction_text;
  std::string input_text;
  std::vector<Option> options;
  std::optional<Label> target;
  Source source = Source::Survey;
  std::string text_id;

  bool operator==(const InstructionRecord&) const = default;
};

Prompt build_emotion_prompt(const Perception& perception);
Prompt build_polarity_prompt(const Perception& theme);
Prompt build_sentiment_prompt(const Perception& aspect);
/// Dispatches on the perception kind.
Prompt build_prompt(const Perception& perception);

/// A consumer text with whatever labels are known for it.
struct LabeledText {
  std::string text_id;
  std::string text;
  std::map<std::string, Label> labels;
  Source source = Source::Survey;
};

/// Convenience: 16 emotion flags plus theme/aspect polarities keyed by id.
LabeledText make_labeled_text(std::string text_id, std::string text, const std::vector<std::uint8_t>& emotion_flags,
                              const std::map<std::string, Polarity>& polarities, const Taxonomy& taxonomy);

/// One record per (text, perception) pair with a known label, taxonomy order within each text.
std::vector<InstructionRecord> build_dataset(const std::vector<LabeledText>& texts, const Taxonomy& taxonomy);

/// Record for inference: same prompt, no target.
InstructionRecord make_inference_record(const Perception& perception, std::string text, std::string text_id = {});

struct SplitSpec {
  double train = 0.64;
  double validation = 0.16;
  double test = 0.20;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<InstructionRecord> train;
  std::vector<InstructionRecord> validation;
  std::vector<InstructionRecord> test;
  std::vector<std::string> warnings;
};

/// Part sizes for one stratum under largest-remainder rounding (ties go to the earlier part).
std::array<std::size_t, 3> split_sizes(std::size_t stratum_size, const SplitSpec& spec);

/// Partitions within each (perception, target) stratum. Throws InvalidConfig when a record has no target
/// or fractions do not sum to one. Strata under five records produce an EmptyStratum warning.
Split stratified_split(const std::vector<InstructionRecord>& records, const SplitSpec& spec);

enum class BalanceStrategy { UndersampleMajority, OversampleMinority };

struct BalanceSpec {
  BalanceStrategy strategy = BalanceStrategy::UndersampleMajority;
  std::uint64_t seed = 0;
};

/// Equalises label counts for a single perception. Throws DegenerateClass when a label has no records.
std::vector<InstructionRecord> balance(const std::vector<InstructionRecord>& records, const BalanceSpec& spec);

/// Appends externally sourced neutral records for matching perceptions, leaving other strata untouched.
std::vector<InstructionRecord> supplement_neutral(std::vector<InstructionRecord> records,
                                                  const std::vector<InstructionRecord>& external_neutral);

/// Letter text for an option label, e.g. "A". Inverse of parse_option_letter.
std::string render_option(Label label, const std::vector<Option>& options);

/// Accepts "A", "a.", "(B)", " b. ", "C) neutral"; throws Unparseable otherwise.
Label parse_option_letter(std::string_view raw_output, const std::vector<Option>& options);

enum class DecodeMode { Strict, Lenient };
/// Lenient mode maps unparseable output to NotPresent (binary) or NeutralOrNoMention (three-way).
Label decode_output(std::string_view raw_output, const std::vector<Option>& options, DecodeMode mode);

std::string to_jsonl(const std::vector<InstructionRecord>& records);
std::vector<InstructionRecord> from_jsonl(std::string_view text);

}  // namespace lx::instruct
