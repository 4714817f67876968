#include "lx/scale_scoring.hpp"

#include <algorithm>
#include <map>

#include "json.hpp"
#include "lx/csv.hpp"
#include "lx/error.hpp"

namespace lx::scale {

namespace {

using nlohmann::json;

Polarity sign_polarity(std::strong_ordering cmp) {
  if (cmp < 0) return Polarity::Negative;
  if (cmp > 0) return Polarity::Positive;
  return Polarity::NeutralOrNoMention;
}

ScaleDefinition likert(std::string id, std::vector<ScaleItem> items) {
  return ScaleDefinition{std::move(id), std::move(items), 1, 7, ScoringRule::LikertMean};
}

bool parse_bool(std::string_view s) {
  std::string v(s);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes" || v == "y") return true;
  if (v == "0" || v == "false" || v == "no" || v == "n" || v.empty()) return false;
  throw Error(ErrorCode::InvalidConfig, "not a boolean: '" + std::string(s) + "'");
}

ScoringRule rule_from(std::string_view s) {
  if (s.empty() || s == "likert_mean") return ScoringRule::LikertMean;
  if (s == "nps") return ScoringRule::NetPromoter;
  throw Error(ErrorCode::InvalidConfig, "unknown scoring rule '" + std::string(s) + "'");
}

}  // namespace

void ScaleDefinition::validate() const {
  if (scale_min >= scale_max) {
    throw Error(ErrorCode::InvalidConfig, perception_id + ": scale_min must be below scale_max");
  }
  if (items.empty()) throw Error(ErrorCode::InvalidConfig, perception_id + ": scale has no items");
  if (rule == ScoringRule::NetPromoter && items.size() != 1) {
    throw Error(ErrorCode::InvalidConfig, perception_id + ": NPS scale must have exactly one item");
  }
}

int reverse_code(int raw, int scale_min, int scale_max) {
  if (raw < scale_min || raw > scale_max) {
    throw Error(ErrorCode::OutOfRange, "response " + std::to_string(raw) + " outside [" +
                                           std::to_string(scale_min) + ", " + std::to_string(scale_max) + "]");
  }
  return scale_min + scale_max - raw;
}

Rational scale_mean(const LikertResponseSet& responses, const ScaleDefinition& def) {
  def.validate();
  if (responses.values.size() != def.items.size()) {
    throw Error(ErrorCode::MismatchedDefinition,
                def.perception_id + ": expected " + std::to_string(def.items.size()) + " responses, got " +
                    std::to_string(responses.values.size()));
  }
  if (!responses.perception_id.empty() && responses.perception_id != def.perception_id) {
    throw Error(ErrorCode::MismatchedDefinition,
                "responses for '" + responses.perception_id + "' scored against '" + def.perception_id + "'");
  }
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < def.items.size(); ++i) {
    const int raw = responses.values[i];
    if (raw < def.scale_min || raw > def.scale_max) {
      throw Error(ErrorCode::MismatchedDefinition,
                  def.perception_id + ": response " + std::to_string(raw) + " outside the scale");
    }
    sum += def.items[i].reversed ? reverse_code(raw, def.scale_min, def.scale_max) : raw;
  }
  return Rational(sum, static_cast<std::int64_t>(def.items.size()));
}

Polarity polarity_from_mean(Rational mean, Rational neutral_point) {
  return sign_polarity(mean <=> neutral_point);
}

Polarity polarity_from_mean(double mean, double neutral_point) {
  if (mean < neutral_point) return Polarity::Negative;
  if (mean > neutral_point) return Polarity::Positive;
  return Polarity::NeutralOrNoMention;
}

Polarity nps_category(int score) {
  if (score < 0 || score > 10) {
    throw Error(ErrorCode::OutOfRange, "NPS score " + std::to_string(score) + " outside [0, 10]");
  }
  if (score <= 6) return Polarity::Negative;
  if (score <= 8) return Polarity::NeutralOrNoMention;
  return Polarity::Positive;
}

int aspect_code(Rational mean) { return to_int(polarity_from_mean(mean)); }
int aspect_code(double mean) { return to_int(polarity_from_mean(mean)); }

Polarity overall_sentiment(const std::array<int, 4>& aspect_codes) {
  int sum = 0;
  for (int c : aspect_codes) {
    if (c < -1 || c > 1) throw Error(ErrorCode::OutOfRange, "aspect code " + std::to_string(c));
    sum += c;
  }
  return sign_polarity(sum <=> 0);
}

std::vector<std::uint8_t> emotion_label_vector(const EmotionSelection& sel, const Taxonomy& taxonomy) {
  std::vector<std::uint8_t> flags(taxonomy.emotions().size(), 0);
  for (const auto& id : sel.selected) {
    const auto idx = taxonomy.emotion_index(id);
    if (!idx) throw Error(ErrorCode::UnknownPerception, "'" + id + "' is not an emotion");
    flags[*idx] = 1;
  }
  return flags;
}

Polarity derive_polarity(const LikertResponseSet& responses, const ScaleDefinition& def) {
  if (def.rule == ScoringRule::NetPromoter) {
    def.validate();
    if (responses.values.size() != 1) {
      throw Error(ErrorCode::MismatchedDefinition, def.perception_id + ": NPS expects one response");
    }
    return nps_category(responses.values.front());
  }
  return polarity_from_mean(scale_mean(responses, def));
}

std::vector<ScaleDefinition> default_scale_definitions() {
  std::vector<ScaleDefinition> defs;
  defs.push_back(likert("trust", {
      {"trust_1", "The product/service cannot be trusted at times.", true},
      {"trust_2", "The product/service can be counted on to do what is right.", false},
      {"trust_3", "The product/service has high integrity.", false},
  }));
  defs.push_back(likert("commitment", {
      {"commitment_1", "I am very committed to the product/service.", false},
      {"commitment_2", "I intend to use the product/service indefinitely.", false},
      {"commitment_3", "My relationship with the product/service is something I really care about.", false},
  }));
  defs.push_back(ScaleDefinition{
      "recommendation",
      {{"recommendation_1", "How likely would you recommend this product/service to a friend?", false}},
      0,
      10,
      ScoringRule::NetPromoter});
  defs.push_back(likert("price", {
      {"price_1", "The product/service I bought was overpriced.", true},
      {"price_2", "The price for the product/service was fair.", false},
      {"price_3", "In general, I am satisfied with the price I paid.", false},
  }));
  defs.push_back(likert("product", {
      {"product_1", "The quality of the product/service is as good as can be expected.", false},
      {"product_2", "I am satisfied with the product/service.", false},
      {"product_3",
       "The business that made the product/provided the service doesn't care enough about how well they perform.",
       true},
  }));
  defs.push_back(likert("place", {
      {"place_1",
       "I am satisfied with the place where I bought/used the product/service or how it was delivered.", false},
      {"place_2",
       "I have problems with or complaints about the place where I bought/used the product/service or how it was "
       "delivered.",
       true},
      {"place_3",
       "Because of the place where I bought/used the product/service or how it was delivered most of my experience "
       "was pleasant.",
       false},
  }));
  defs.push_back(likert("promotion", {
      {"promotion_1", "The communication was very annoying.", true},
      {"promotion_2", "I enjoyed the communication.", false},
      {"promotion_3", "If the communication was eliminated, I would have been better off.", true},
  }));
  return defs;
}

const ScaleDefinition& find_definition(const std::vector<ScaleDefinition>& defs, std::string_view perception_id) {
  if (perception_id == "communication") perception_id = "promotion";
  for (const auto& d : defs) {
    if (d.perception_id == perception_id) return d;
  }
  throw Error(ErrorCode::UnknownPerception, "no scale definition for '" + std::string(perception_id) + "'");
}

std::vector<ScaleDefinition> scale_definitions_from_json(std::string_view text) {
  std::vector<ScaleDefinition> out;
  try {
    const auto doc = json::parse(text);
    const auto& arr = doc.is_array() ? doc : doc.at("scales");
    for (const auto& s : arr) {
      ScaleDefinition def;
      def.perception_id = s.at("perception_id").get<std::string>();
      def.scale_min = s.value("scale_min", 1);
      def.scale_max = s.value("scale_max", 7);
      def.rule = rule_from(s.value("rule", std::string("likert_mean")));
      for (const auto& it : s.at("items")) {
        def.items.push_back({it.at("item_id").get<std::string>(), it.value("prompt_text", std::string()),
                             it.value("reversed", false)});
      }
      def.validate();
      out.push_back(std::move(def));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("scale definition JSON: ") + e.what());
  }
  return out;
}

std::string scale_definitions_to_json(const std::vector<ScaleDefinition>& defs) {
  json arr = json::array();
  for (const auto& d : defs) {
    json items = json::array();
    for (const auto& it : d.items) {
      items.push_back({{"item_id", it.item_id}, {"prompt_text", it.prompt_text}, {"reversed", it.reversed}});
    }
    arr.push_back({{"perception_id", d.perception_id},
                   {"scale_min", d.scale_min},
                   {"scale_max", d.scale_max},
                   {"rule", d.rule == ScoringRule::NetPromoter ? "nps" : "likert_mean"},
                   {"items", items}});
  }
  return json{{"scales", arr}}.dump(2);
}

std::vector<ScaleDefinition> scale_definitions_from_csv(std::string_view text) {
  const auto table = csv::parse(text);
  const auto col = [&](std::string_view name) { return table.column_index(name); };
  const std::size_t pid = table.require_column("perception_id");
  const std::size_t iid = table.require_column("item_id");
  const auto prompt = col("prompt_text");
  const auto rev = col("reversed");
  const auto smin = col("scale_min");
  const auto smax = col("scale_max");
  const auto rule = col("rule");

  std::vector<ScaleDefinition> out;
  std::map<std::string, std::size_t> index;
  for (const auto& row : table.rows) {
    const std::string& id = row.at(pid);
    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) {
      ScaleDefinition def;
      def.perception_id = id;
      if (smin && !row.at(*smin).empty()) def.scale_min = std::stoi(row.at(*smin));
      if (smax && !row.at(*smax).empty()) def.scale_max = std::stoi(row.at(*smax));
      if (rule) def.rule = rule_from(row.at(*rule));
      out.push_back(std::move(def));
    }
    out[it->second].items.push_back(
        {row.at(iid), prompt ? row.at(*prompt) : std::string(), rev ? parse_bool(row.at(*rev)) : false});
  }
  for (const auto& d : out) d.validate();
  return out;
}

}  // namespace lx::scale
