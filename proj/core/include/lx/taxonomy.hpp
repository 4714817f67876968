#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lx {

enum class PerceptionKind { Emotion, EvaluationTheme, SentimentAspect };

/// Output category of a single classification.
enum class Label { Present, NotPresent, Positive, Negative, NeutralOrNoMention };

/// Three-valued evaluation polarity with its fixed integer encoding.
enum class Polarity : int { Negative = -1, NeutralOrNoMention = 0, Positive = 1 };

constexpr int to_int(Polarity p) noexcept { return static_cast<int>(p); }

std::string_view to_string(PerceptionKind kind);
std::string_view to_string(Label label);
std::string_view to_string(Polarity polarity);
PerceptionKind kind_from_string(std::string_view s);
Label label_from_string(std::string_view s);

/// Labels a perception of this kind can take, in option order.
std::span<const Label> codomain(PerceptionKind kind);

/// Polarity labels map onto Polarity; Present/NotPresent do not.
std::optional<Polarity> to_polarity(Label label);
Label to_label(Polarity polarity);

struct Perception {
  std::string id;
  PerceptionKind kind = PerceptionKind::Emotion;
  std::string display_name;
  std::vector<std::string> descriptors;

  bool operator==(const Perception&) const = default;
};

class Taxonomy {
 public:
  Taxonomy() = default;
  Taxonomy(std::vector<Perception> emotions, std::vector<Perception> evaluation_themes,
           std::vector<Perception> sentiment_aspects);

  const std::vector<Perception>& emotions() const noexcept { return emotions_; }
  const std::vector<Perception>& evaluation_themes() const noexcept { return themes_; }
  const std::vector<Perception>& sentiment_aspects() const noexcept { return aspects_; }

  /// Emotions, then themes, then aspects.
  std::vector<const Perception*> all() const;

  /// Throws Error{UnknownPerception}. Accepts the "communication" alias for promotion.
  const Perception& lookup(std::string_view id) const;
  const Perception* find(std::string_view id) const noexcept;

  /// Position of an emotion id within emotions(), or nullopt.
  std::optional<std::size_t> emotion_index(std::string_view id) const noexcept;

  std::string to_json() const;
  static Taxonomy from_json(std::string_view text);

  bool operator==(const Taxonomy&) const = default;

 private:
  void validate() const;

  std::vector<Perception> emotions_;
  std::vector<Perception> themes_;
  std::vector<Perception> aspects_;
};

/// Sixteen consumption emotions with their descriptor words, three evaluation
/// themes and the 4P sentiment aspects.
const Taxonomy& default_taxonomy();

inline const Perception& lookup(const Taxonomy& taxonomy, std::string_view id) {
  return taxonomy.lookup(id);
}

}  // namespace lx
