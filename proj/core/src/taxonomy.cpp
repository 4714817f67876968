#include "lx/taxonomy.hpp"

#include <array>
#include <unordered_set>

#include "json.hpp"
#include "lx/error.hpp"

namespace lx {

namespace {

using nlohmann::json;

constexpr std::array kBinaryLabels{Label::Present, Label::NotPresent};
constexpr std::array kPolarityLabels{Label::Positive, Label::Negative, Label::NeutralOrNoMention};

Perception emotion(std::string id, std::string name, std::vector<std::string> descriptors) {
  return {std::move(id), PerceptionKind::Emotion, std::move(name), std::move(descriptors)};
}

Taxonomy build_default() {
  std::vector<Perception> emotions{
      emotion("anger", "Anger", {"frustrated", "angry", "irritated"}),
      emotion("discontent", "Discontent", {"unfulfilled", "discontented"}),
      emotion("worry", "Worry", {"nervous", "worried", "tense"}),
      emotion("sadness", "Sadness", {"depressed", "sad", "miserable"}),
      emotion("fear", "Fear", {"scared", "afraid", "panicky"}),
      emotion("shame", "Shame", {"embarrassed", "ashamed", "humiliated"}),
      emotion("envy", "Envy", {"envious", "jealous"}),
      emotion("loneliness", "Loneliness", {"lonely", "homesick"}),
      emotion("romantic_love", "Romantic love", {"sexy", "romantic", "passionate"}),
      emotion("love", "Love", {"loving", "sentimental", "warm hearted"}),
      emotion("peacefulness", "Peacefulness", {"calm", "peaceful"}),
      emotion("contentment", "Contentment", {"contented", "fulfilled"}),
      emotion("optimism", "Optimism", {"optimistic", "encouraged", "hopeful"}),
      emotion("joy", "Joy", {"happy", "pleased", "joyful"}),
      emotion("excitement", "Excitement", {"excited", "thrilled", "enthusiastic"}),
      emotion("surprise", "Surprise", {"surprised", "amazed", "astonished"}),
  };
  // Descriptors of themes and aspects are topic keywords used by the lexicon backend.
  std::vector<Perception> themes{
      {"trust", PerceptionKind::EvaluationTheme, "Trust",
       {"trust", "trusted", "trustworthy", "honest", "reliable", "integrity"}},
      {"commitment", PerceptionKind::EvaluationTheme, "Commitment",
       {"committed", "commitment", "loyal", "loyalty", "indefinitely"}},
      {"recommendation", PerceptionKind::EvaluationTheme, "Recommendation",
       {"recommend", "recommended", "recommending", "recommendation"}},
  };
  std::vector<Perception> aspects{
      {"price", PerceptionKind::SentimentAspect, "Price",
       {"price", "prices", "priced", "cost", "costs", "overpriced", "value"}},
      {"product", PerceptionKind::SentimentAspect, "Product",
       {"product", "products", "quality", "performance"}},
      {"place", PerceptionKind::SentimentAspect, "Place",
       {"place", "store", "shop", "location", "delivery", "delivered"}},
      {"promotion", PerceptionKind::SentimentAspect, "Promotion",
       {"communication", "promotion", "advertising", "staff", "email", "emails"}},
  };
  return Taxonomy(std::move(emotions), std::move(themes), std::move(aspects));
}

json perception_json(const Perception& p) {
  return json{{"id", p.id},
              {"kind", to_string(p.kind)},
              {"display_name", p.display_name},
              {"descriptors", p.descriptors}};
}

Perception perception_from(const json& j) {
  Perception p;
  p.id = j.at("id").get<std::string>();
  p.kind = kind_from_string(j.at("kind").get<std::string>());
  p.display_name = j.value("display_name", p.id);
  p.descriptors = j.value("descriptors", std::vector<std::string>{});
  return p;
}

}  // namespace

std::string_view to_string(PerceptionKind kind) {
  switch (kind) {
    case PerceptionKind::Emotion: return "Emotion";
    case PerceptionKind::EvaluationTheme: return "EvaluationTheme";
    case PerceptionKind::SentimentAspect: return "SentimentAspect";
  }
  return "?";
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Present: return "Present";
    case Label::NotPresent: return "NotPresent";
    case Label::Positive: return "Positive";
    case Label::Negative: return "Negative";
    case Label::NeutralOrNoMention: return "NeutralOrNoMention";
  }
  return "?";
}

std::string_view to_string(Polarity polarity) { return to_string(to_label(polarity)); }

PerceptionKind kind_from_string(std::string_view s) {
  if (s == "Emotion") return PerceptionKind::Emotion;
  if (s == "EvaluationTheme") return PerceptionKind::EvaluationTheme;
  if (s == "SentimentAspect") return PerceptionKind::SentimentAspect;
  throw Error(ErrorCode::InvalidConfig, "unknown perception kind '" + std::string(s) + "'");
}

Label label_from_string(std::string_view s) {
  for (Label l : {Label::Present, Label::NotPresent, Label::Positive, Label::Negative,
                  Label::NeutralOrNoMention}) {
    if (to_string(l) == s) return l;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown label '" + std::string(s) + "'");
}

std::span<const Label> codomain(PerceptionKind kind) {
  if (kind == PerceptionKind::Emotion) return kBinaryLabels;
  return kPolarityLabels;
}

std::optional<Polarity> to_polarity(Label label) {
  switch (label) {
    case Label::Positive: return Polarity::Positive;
    case Label::Negative: return Polarity::Negative;
    case Label::NeutralOrNoMention: return Polarity::NeutralOrNoMention;
    default: return std::nullopt;
  }
}

Label to_label(Polarity polarity) {
  switch (polarity) {
    case Polarity::Positive: return Label::Positive;
    case Polarity::Negative: return Label::Negative;
    case Polarity::NeutralOrNoMention: return Label::NeutralOrNoMention;
  }
  return Label::NeutralOrNoMention;
}

Taxonomy::Taxonomy(std::vector<Perception> emotions, std::vector<Perception> evaluation_themes,
                   std::vector<Perception> sentiment_aspects)
    : emotions_(std::move(emotions)),
      themes_(std::move(evaluation_themes)),
      aspects_(std::move(sentiment_aspects)) {
  validate();
}

void Taxonomy::validate() const {
  std::unordered_set<std::string> seen;
  auto check = [&](const std::vector<Perception>& group, PerceptionKind expected) {
    for (const auto& p : group) {
      if (p.id.empty()) throw Error(ErrorCode::InvalidConfig, "perception with empty id");
      if (p.kind != expected) {
        throw Error(ErrorCode::InvalidConfig, "perception '" + p.id + "' listed under the wrong group");
      }
      if (!seen.insert(p.id).second) {
        throw Error(ErrorCode::InvalidConfig, "duplicate perception id '" + p.id + "'");
      }
      if (p.kind == PerceptionKind::Emotion && p.descriptors.empty()) {
        throw Error(ErrorCode::InvalidConfig, "emotion '" + p.id + "' has no descriptors");
      }
    }
  };
  check(emotions_, PerceptionKind::Emotion);
  check(themes_, PerceptionKind::EvaluationTheme);
  check(aspects_, PerceptionKind::SentimentAspect);
}

std::vector<const Perception*> Taxonomy::all() const {
  std::vector<const Perception*> out;
  out.reserve(emotions_.size() + themes_.size() + aspects_.size());
  for (const auto* group : {&emotions_, &themes_, &aspects_}) {
    for (const auto& p : *group) out.push_back(&p);
  }
  return out;
}

const Perception* Taxonomy::find(std::string_view id) const noexcept {
  if (id == "communication") id = "promotion";
  for (const auto* group : {&emotions_, &themes_, &aspects_}) {
    for (const auto& p : *group) {
      if (p.id == id) return &p;
    }
  }
  return nullptr;
}

const Perception& Taxonomy::lookup(std::string_view id) const {
  if (const auto* p = find(id)) return *p;
  throw Error(ErrorCode::UnknownPerception, "no perception with id '" + std::string(id) + "'");
}

std::optional<std::size_t> Taxonomy::emotion_index(std::string_view id) const noexcept {
  for (std::size_t i = 0; i < emotions_.size(); ++i) {
    if (emotions_[i].id == id) return i;
  }
  return std::nullopt;
}

std::string Taxonomy::to_json() const {
  json doc;
  doc["emotions"] = json::array();
  doc["evaluation_themes"] = json::array();
  doc["sentiment_aspects"] = json::array();
  for (const auto& p : emotions_) doc["emotions"].push_back(perception_json(p));
  for (const auto& p : themes_) doc["evaluation_themes"].push_back(perception_json(p));
  for (const auto& p : aspects_) doc["sentiment_aspects"].push_back(perception_json(p));
  return doc.dump(2);
}

Taxonomy Taxonomy::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("taxonomy JSON: ") + e.what());
  }
  auto group = [&](const char* key) {
    std::vector<Perception> out;
    if (doc.contains(key)) {
      for (const auto& j : doc.at(key)) out.push_back(perception_from(j));
    }
    return out;
  };
  try {
    return Taxonomy(group("emotions"), group("evaluation_themes"), group("sentiment_aspects"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("taxonomy JSON: ") + e.what());
  }
}

const Taxonomy& default_taxonomy() {
  static const Taxonomy taxonomy = build_default();
  return taxonomy;
}

}  // namespace lx
