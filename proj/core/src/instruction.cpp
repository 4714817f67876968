#include "lx/instruction.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "lx/error.hpp"

namespace lx::instruct {

namespace {

using nlohmann::json;

std::string polarity_phrase(Label label) {
  switch (label) {
    case Label::Positive: return "positive";
    case Label::Negative: return "negative";
    default: return "neutral or not mentioned";
  }
}

Prompt three_way_prompt(const std::string& lead, const std::string& name) {
  Prompt p;
  p.options = {{'A', Label::Positive}, {'B', Label::Negative}, {'C', Label::NeutralOrNoMention}};
  std::string text = lead + " (" + name + ") in the given text. Choose from " + name +
                     " positive, negative, or neutral. Provide your answer by choosing the option letter: ";
  for (std::size_t i = 0; i < p.options.size(); ++i) {
    if (i + 1 == p.options.size()) text += "or ";
    text += std::string(1, p.options[i].letter) + ". " + name + " is " + polarity_phrase(p.options[i].label);
    text += (i + 1 == p.options.size()) ? "." : ", ";
  }
  p.instruction_text = std::move(text);
  return p;
}

void require_kind(const Perception& p, PerceptionKind kind) {
  if (p.kind != kind) {
    throw Error(ErrorCode::WrongKind, "'" + p.id + "' is " + std::string(lx::to_string(p.kind)) + ", expected " +
                                          std::string(lx::to_string(kind)));
  }
}

Task task_from_string(std::string_view s) {
  for (Task t : {Task::EmotionDetection, Task::PolarityDetection, Task::SentimentAnalysis}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown task '" + std::string(s) + "'");
}

Source source_from_string(std::string_view s) {
  if (s == "survey") return Source::Survey;
  if (s == "review") return Source::Review;
  throw Error(ErrorCode::InvalidConfig, "unknown source '" + std::string(s) + "'");
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

int label_rank(Label l) { return static_cast<int>(l); }

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::EmotionDetection: return "EmotionDetection";
    case Task::PolarityDetection: return "PolarityDetection";
    case Task::SentimentAnalysis: return "SentimentAnalysis";
  }
  return "?";
}

std::string_view to_string(Source source) { return source == Source::Survey ? "survey" : "review"; }

Task task_for(PerceptionKind kind) {
  switch (kind) {
    case PerceptionKind::Emotion: return Task::EmotionDetection;
    case PerceptionKind::EvaluationTheme: return Task::PolarityDetection;
    case PerceptionKind::SentimentAspect: return Task::SentimentAnalysis;
  }
  return Task::EmotionDetection;
}

Prompt build_emotion_prompt(const Perception& perception) {
  require_kind(perception, PerceptionKind::Emotion);
  const std::string& name = perception.display_name;
  Prompt p;
  p.instruction_text = "Detect emotion (" + name +
                       ") present or not in the given text. Provide your answer by choosing the option letter: A. " +
                       name + " is present in the text, or B. " + name + " is not present in the text.";
  p.options = {{'A', Label::Present}, {'B', Label::NotPresent}};
  return p;
}

Prompt build_polarity_prompt(const Perception& theme) {
  require_kind(theme, PerceptionKind::EvaluationTheme);
  return three_way_prompt("Determine the polarity for perception theme", theme.display_name);
}

Prompt build_sentiment_prompt(const Perception& aspect) {
  require_kind(aspect, PerceptionKind::SentimentAspect);
  return three_way_prompt("Determine the sentiment for marketing aspect", aspect.display_name);
}

Prompt build_prompt(const Perception& perception) {
  switch (perception.kind) {
    case PerceptionKind::Emotion: return build_emotion_prompt(perception);
    case PerceptionKind::EvaluationTheme: return build_polarity_prompt(perception);
    case PerceptionKind::SentimentAspect: return build_sentiment_prompt(perception);
  }
  throw Error(ErrorCode::WrongKind, perception.id);
}

LabeledText make_labeled_text(std::string text_id, std::string text, const std::vector<std::uint8_t>& emotion_flags,
                              const std::map<std::string, Polarity>& polarities, const Taxonomy& taxonomy) {
  LabeledText out{std::move(text_id), std::move(text), {}, Source::Survey};
  const auto& emotions = taxonomy.emotions();
  if (!emotion_flags.empty() && emotion_flags.size() != emotions.size()) {
    throw Error(ErrorCode::LengthMismatch, "emotion flag vector does not match the taxonomy");
  }
  for (std::size_t i = 0; i < emotion_flags.size(); ++i) {
    out.labels[emotions[i].id] = emotion_flags[i] ? Label::Present : Label::NotPresent;
  }
  for (const auto& [id, polarity] : polarities) {
    const auto& p = taxonomy.lookup(id);
    if (p.kind == PerceptionKind::Emotion) throw Error(ErrorCode::WrongKind, id + " is an emotion");
    out.labels[p.id] = to_label(polarity);
  }
  return out;
}

InstructionRecord make_inference_record(const Perception& perception, std::string text, std::string text_id) {
  auto prompt = build_prompt(perception);
  InstructionRecord r;
  r.task = task_for(perception.kind);
  r.perception_id = perception.id;
  r.instruction_text = std::move(prompt.instruction_text);
  r.input_text = std::move(text);
  r.options = std::move(prompt.options);
  r.text_id = std::move(text_id);
  return r;
}

std::vector<InstructionRecord> build_dataset(const std::vector<LabeledText>& texts, const Taxonomy& taxonomy) {
  std::vector<InstructionRecord> out;
  const auto perceptions = taxonomy.all();
  for (const auto& t : texts) {
    for (const auto& [id, label] : t.labels) {
      if (!taxonomy.find(id)) throw Error(ErrorCode::UnknownPerception, id);
    }
    for (const Perception* p : perceptions) {
      auto it = t.labels.find(p->id);
      if (it == t.labels.end()) continue;
      const auto allowed = codomain(p->kind);
      if (std::find(allowed.begin(), allowed.end(), it->second) == allowed.end()) {
        throw Error(ErrorCode::InvalidConfig, "label " + std::string(lx::to_string(it->second)) +
                                                   " is not valid for '" + p->id + "'");
      }
      auto rec = make_inference_record(*p, t.text, t.text_id);
      rec.target = it->second;
      rec.source = t.source;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  const std::array<double, 3> fractions{spec.train, spec.validation, spec.test};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double quota = static_cast<double>(n) * fractions[k];
    // Nudge before flooring so 100 * 0.64 lands on 64, not 63.999...
    sizes[k] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    remainders[k] = quota - static_cast<double>(sizes[k]);
    assigned += sizes[k];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b] + 1e-9; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) sizes[order[i % 3]] += 1;
  return sizes;
}

Split stratified_split(const std::vector<InstructionRecord>& records, const SplitSpec& spec) {
  if (spec.train < 0 || spec.validation < 0 || spec.test < 0 ||
      std::abs(spec.train + spec.validation + spec.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidConfig, "split fractions must be non-negative and sum to 1");
  }
  std::map<std::tuple<std::string, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].target) throw Error(ErrorCode::InvalidConfig, "record " + std::to_string(i) + " has no target");
    strata[{records[i].perception_id, label_rank(*records[i].target)}].push_back(i);
  }

  std::vector<int> part_of(records.size(), -1);
  Split split;
  std::uint64_t stratum_index = 0;
  for (auto& [key, members] : strata) {
    if (members.size() < 5) {
      split.warnings.push_back("EmptyStratum: " + std::get<0>(key) + "/" +
                               std::string(lx::to_string(static_cast<Label>(std::get<1>(key)))) + " has only " +
                               std::to_string(members.size()) + " records");
    }
    auto rng = stream(spec.seed, stratum_index++);
    std::shuffle(members.begin(), members.end(), rng);
    const auto sizes = split_sizes(members.size(), spec);
    std::size_t pos = 0;
    for (int part = 0; part < 3; ++part) {
      for (std::size_t k = 0; k < sizes[part]; ++k) part_of[members[pos++]] = part;
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& dest = part_of[i] == 0 ? split.train : part_of[i] == 1 ? split.validation : split.test;
    dest.push_back(records[i]);
  }
  return split;
}

std::vector<InstructionRecord> balance(const std::vector<InstructionRecord>& records, const BalanceSpec& spec) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "nothing to balance");
  const std::string& perception = records.front().perception_id;
  const Task task = records.front().task;
  for (const auto& r : records) {
    if (r.perception_id != perception) {
      throw Error(ErrorCode::InvalidConfig, "balance() expects records of a single perception");
    }
    if (!r.target) throw Error(ErrorCode::InvalidConfig, "balance() expects labelled records");
  }
  const auto labels = codomain(task == Task::EmotionDetection ? PerceptionKind::Emotion
                                                               : PerceptionKind::EvaluationTheme);
  std::vector<std::vector<std::size_t>> by_label(labels.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto pos = std::find(labels.begin(), labels.end(), *records[i].target) - labels.begin();
    if (pos == static_cast<std::ptrdiff_t>(labels.size())) {
      throw Error(ErrorCode::InvalidConfig, "label outside the task's codomain");
    }
    by_label[pos].push_back(i);
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (by_label[k].empty()) {
      throw Error(ErrorCode::DegenerateClass,
                  perception + " has no records labelled " + std::string(lx::to_string(labels[k])));
    }
  }

  std::mt19937_64 rng = stream(spec.seed, 0xBA1A);
  std::vector<InstructionRecord> out;
  if (spec.strategy == BalanceStrategy::UndersampleMajority) {
    std::size_t target = records.size();
    for (const auto& g : by_label) target = std::min(target, g.size());
    std::vector<char> keep(records.size(), 0);
    for (auto& g : by_label) {
      std::vector<std::size_t> chosen;
      std::sample(g.begin(), g.end(), std::back_inserter(chosen), target, rng);
      for (auto i : chosen) keep[i] = 1;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (keep[i]) out.push_back(records[i]);
    }
  } else {
    std::size_t target = 0;
    for (const auto& g : by_label) target = std::max(target, g.size());
    out = records;
    for (const auto& g : by_label) {
      std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
      for (std::size_t k = g.size(); k < target; ++k) out.push_back(records[g[pick(rng)]]);
    }
  }
  return out;
}

std::vector<InstructionRecord> supplement_neutral(std::vector<InstructionRecord> records,
                                                  const std::vector<InstructionRecord>& external_neutral) {
  for (const auto& r : external_neutral) {
    if (r.target != Label::NeutralOrNoMention) {
      throw Error(ErrorCode::InvalidConfig, "supplementary records must carry the neutral target");
    }
    auto rec = r;
    rec.source = Source::Review;
    records.push_back(std::move(rec));
  }
  return records;
}

std::string render_option(Label label, const std::vector<Option>& options) {
  for (const auto& o : options) {
    if (o.label == label) return std::string(1, o.letter);
  }
  throw Error(ErrorCode::InvalidConfig, "label " + std::string(lx::to_string(label)) + " is not among the options");
}

Label parse_option_letter(std::string_view raw, const std::vector<Option>& options) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t i = 0;
  while (i < raw.size() && (is_space(raw[i]) || raw[i] == '(' || raw[i] == '[' || raw[i] == '"' || raw[i] == '\'' ||
                            raw[i] == '*')) {
    ++i;
  }
  if (i < raw.size() && std::isalpha(static_cast<unsigned char>(raw[i]))) {
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(raw[i])));
    const std::size_t next = i + 1;
    // The letter must stand alone: end of output, or followed by punctuation.
    bool standalone = next >= raw.size();
    if (!standalone) {
      const char c = raw[next];
      standalone = c == '.' || c == ')' || c == ']' || c == ':' || c == ',' || c == '"' || c == '\'' || c == '*';
      if (!standalone && is_space(c)) {
        std::size_t k = next;
        while (k < raw.size() && is_space(raw[k])) ++k;
        standalone = k == raw.size();
      }
    }
    if (standalone) {
      for (const auto& o : options) {
        if (o.letter == letter) return o.label;
      }
    }
  }
  throw Error(ErrorCode::Unparseable, "no option letter in output '" + std::string(raw) + "'");
}

Label decode_output(std::string_view raw, const std::vector<Option>& options, DecodeMode mode) {
  try {
    return parse_option_letter(raw, options);
  } catch (const Error&) {
    if (mode == DecodeMode::Strict) throw;
    return options.size() == 2 ? Label::NotPresent : Label::NeutralOrNoMention;
  }
}

std::string to_jsonl(const std::vector<InstructionRecord>& records) {
  std::ostringstream out;
  for (const auto& r : records) {
    json options = json::array();
    for (const auto& o : r.options) {
      options.push_back({{"letter", std::string(1, o.letter)}, {"label", lx::to_string(o.label)}});
    }
    json j{{"task", to_string(r.task)},
           {"perception", r.perception_id},
           {"instruction", r.instruction_text},
           {"input", r.input_text},
           {"options", options},
           {"target", r.target ? json(std::string(lx::to_string(*r.target))) : json(nullptr)},
           {"source", to_string(r.source)}};
    if (!r.text_id.empty()) j["text_id"] = r.text_id;
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<InstructionRecord> from_jsonl(std::string_view text) {
  std::vector<InstructionRecord> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = json::parse(line);
      InstructionRecord r;
      r.task = task_from_string(j.at("task").get<std::string>());
      r.perception_id = j.at("perception").get<std::string>();
      r.instruction_text = j.at("instruction").get<std::string>();
      r.input_text = j.at("input").get<std::string>();
      for (const auto& o : j.at("options")) {
        const auto letter = o.at("letter").get<std::string>();
        if (letter.size() != 1) throw Error(ErrorCode::InvalidConfig, "option letter must be one character");
        r.options.push_back({letter[0], label_from_string(o.at("label").get<std::string>())});
      }
      if (j.contains("target") && !j.at("target").is_null()) {
        r.target = label_from_string(j.at("target").get<std::string>());
      }
      r.source = source_from_string(j.value("source", std::string("survey")));
      r.text_id = j.value("text_id", std::string());
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, "JSONL line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lx::instruct
