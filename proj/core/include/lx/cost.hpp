#pragma once

#include <cstdint>
#include <string>

namespace lx::cost {

/// Dollars for a token volume at per-million list prices. Unrounded.
double estimate_cost(std::int64_t input_tokens, std::int64_t output_tokens, double price_per_1m_input,
                     double price_per_1m_output);

/// Half-up rounding to cents, e.g. "$1.10".
std::string format_usd(double dollars);

/// Word-based token estimate for pre-flight costing (1.34 tokens per word).
std::int64_t estimate_tokens_from_words(std::int64_t words);
inline constexpr double kTokensPerWord = 1.34;

/// Output tokens per text assumed by the corpus projection: 40,804 output tokens over
/// 2,523 texts is about 16 per text.
inline constexpr double kDefaultOutputTokensPerText = 16.0;

/// Projected cost of running `texts` of a given average size through a priced backend.
double project_corpus_cost(std::int64_t texts, double avg_input_tokens, double avg_output_tokens,
                           double price_per_1m_input, double price_per_1m_output);

}  // namespace lx::cost
