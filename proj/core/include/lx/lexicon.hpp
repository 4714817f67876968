#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lx/taxonomy.hpp"

namespace lx::lexicon {

/// Lower-cased ASCII word tokens; apostrophes inside words are kept ("doesn't").
std::vector<std::string> words(std::string_view text);

/// Sentences split on . ! ? ; and newlines.
std::vector<std::string_view> sentences(std::string_view text);

/// +1 for words in the built-in positive list, -1 for the negative list, else 0.
int valence(std::string_view word);

/// Deterministic offline classifier.
///  - Emotion: Present iff a descriptor (single or multi-word) occurs as consecutive words.
///  - Theme/aspect: valence summed over sentences mentioning one of the perception's keywords,
///    with negators ("not", "never", "don't", ...) flipping the next three words. Sign decides.
Label lexicon_classify(std::string_view text, const Perception& perception);

/// Looks the perception up first; throws UnknownPerception.
Label lexicon_classify(std::string_view text, std::string_view perception_id, const Taxonomy& taxonomy);

}  // namespace lx::lexicon
