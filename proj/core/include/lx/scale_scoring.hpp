#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lx/taxonomy.hpp"

namespace lx::scale {

/// Exact fraction used for scale means so the comparison against the
/// neutral point never suffers from binary rounding.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n, std::int64_t d = 1) : num(d < 0 ? -n : n), den(d < 0 ? -d : d) {}

  double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

  friend constexpr std::strong_ordering operator<=>(Rational a, Rational b) noexcept {
    // __int128 keeps the cross products exact for any 64-bit operands.
    const __int128 lhs = static_cast<__int128>(a.num) * b.den;
    const __int128 rhs = static_cast<__int128>(b.num) * a.den;
    return lhs <=> rhs;
  }
  friend constexpr bool operator==(Rational a, Rational b) noexcept { return (a <=> b) == 0; }
};

enum class ScoringRule { LikertMean, NetPromoter };

struct ScaleItem {
  std::string item_id;
  std::string prompt_text;
  bool reversed = false;
};

struct ScaleDefinition {
  std::string perception_id;
  std::vector<ScaleItem> items;
  int scale_min = 1;
  int scale_max = 7;
  ScoringRule rule = ScoringRule::LikertMean;

  void validate() const;
};

struct LikertResponseSet {
  std::string perception_id;
  std::vector<int> values;
};

struct EmotionSelection {
  std::set<std::string> selected;
};

/// scale_min + scale_max - raw. Throws OutOfRange when raw lies outside the scale.
int reverse_code(int raw, int scale_min, int scale_max);

/// Mean after reverse-coding flagged items. Throws MismatchedDefinition.
Rational scale_mean(const LikertResponseSet& responses, const ScaleDefinition& def);

Polarity polarity_from_mean(Rational mean, Rational neutral_point = Rational(4));
Polarity polarity_from_mean(double mean, double neutral_point = 4.0);

/// Reichheld buckets on the 0..10 recommendation scale.
Polarity nps_category(int score);

int aspect_code(Rational mean);
int aspect_code(double mean);

/// Sign of the summed 4P codes.
Polarity overall_sentiment(const std::array<int, 4>& aspect_codes);

/// One flag per taxonomy emotion, taxonomy order. Throws UnknownPerception.
std::vector<std::uint8_t> emotion_label_vector(const EmotionSelection& sel, const Taxonomy& taxonomy);

/// Applies the definition's rule: mean-vs-4 thresholds, or NPS buckets on the single item.
Polarity derive_polarity(const LikertResponseSet& responses, const ScaleDefinition& def);

/// Trust, commitment, recommendation and the four aspects, with default reversal flags.
std::vector<ScaleDefinition> default_scale_definitions();
const ScaleDefinition& find_definition(const std::vector<ScaleDefinition>& defs, std::string_view perception_id);

std::vector<ScaleDefinition> scale_definitions_from_json(std::string_view text);
std::string scale_definitions_to_json(const std::vector<ScaleDefinition>& defs);
/// Columns: perception_id,item_id,prompt_text,reversed[,scale_min,scale_max,rule]
std::vector<ScaleDefinition> scale_definitions_from_csv(std::string_view text);

}  // namespace lx::scale
