#include "lx/cost.hpp"

#include <cmath>
#include <cstdio>

#include "lx/error.hpp"

namespace lx::cost {

double estimate_cost(std::int64_t input_tokens, std::int64_t output_tokens, double price_in, double price_out) {
  if (input_tokens < 0 || output_tokens < 0) throw Error(ErrorCode::OutOfRange, "token counts must be >= 0");
  if (price_in < 0 || price_out < 0) throw Error(ErrorCode::OutOfRange, "prices must be >= 0");
  return static_cast<double>(input_tokens) / 1e6 * price_in + static_cast<double>(output_tokens) / 1e6 * price_out;
}

std::string format_usd(double dollars) {
  const double cents = std::floor(dollars * 100.0 + 0.5 + 1e-9);
  char buf[64];
  std::snprintf(buf, sizeof buf, "$%.2f", cents / 100.0);
  return buf;
}

std::int64_t estimate_tokens_from_words(std::int64_t words) {
  return std::llround(static_cast<double>(words) * kTokensPerWord);
}

double project_corpus_cost(std::int64_t texts, double avg_input_tokens, double avg_output_tokens, double price_in,
                           double price_out) {
  if (texts < 0 || avg_input_tokens < 0 || avg_output_tokens < 0) {
    throw Error(ErrorCode::OutOfRange, "corpus projection needs non-negative sizes");
  }
  const double in = static_cast<double>(texts) * avg_input_tokens;
  const double out = static_cast<double>(texts) * avg_output_tokens;
  return in / 1e6 * price_in + out / 1e6 * price_out;
}

}  // namespace lx::cost
