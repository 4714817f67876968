#include "lx/lexicon.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace lx::lexicon {

namespace {

constexpr std::array<std::string_view, 36> kPositive{
    "good",      "great",     "excellent", "amazing",  "awesome",   "fair",      "reasonable", "love",
    "loved",     "like",      "liked",     "happy",    "satisfied", "pleasant",  "best",       "wonderful",
    "fantastic", "perfect",   "nice",      "friendly", "helpful",   "affordable", "worth",     "impressed",
    "outstanding", "enjoyed", "enjoy",     "recommend", "recommended", "trust",  "reliable",   "honest",
    "committed", "loyal",     "quick",     "fast"};

constexpr std::array<std::string_view, 34> kNegative{
    "bad",      "poor",        "terrible",  "awful",   "horrible",     "worst",       "overpriced", "expensive",
    "unfair",   "rude",        "annoying",  "annoyed", "disappointed", "disappointing", "broken",   "slow",
    "late",     "dirty",       "problem",   "problems", "complaint",   "complaints",  "waste",      "unreliable",
    "dishonest", "untrustworthy", "scam",   "hate",    "hated",        "useless",     "faulty",     "unhelpful",
    "mediocre", "ripoff"};

constexpr std::array<std::string_view, 16> kNegators{
    "not",   "no",      "never",  "don't",    "doesn't", "didn't",  "won't", "wouldn't",
    "isn't", "wasn't",  "aren't", "weren't",  "can't",   "cannot",  "couldn't", "hardly"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& list, std::string_view w) {
  return std::find(list.begin(), list.end(), w) != list.end();
}

bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
}

}  // namespace

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if ((ch == '\'' ) && !cur.empty()) {
      cur.push_back('\'');
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::vector<std::string_view> sentences(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '.' || text[i] == '!' || text[i] == '?' || text[i] == ';' ||
        text[i] == '\n') {
      if (i > start) out.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

int valence(std::string_view word) {
  if (contains(kPositive, word)) return 1;
  if (contains(kNegative, word)) return -1;
  return 0;
}

Label lexicon_classify(std::string_view text, const Perception& perception) {
  std::vector<std::vector<std::string>> keywords;
  keywords.reserve(perception.descriptors.size());
  for (const auto& d : perception.descriptors) keywords.push_back(words(d));

  if (perception.kind == PerceptionKind::Emotion) {
    const auto tokens = words(text);
    for (const auto& k : keywords) {
      if (contains_phrase(tokens, k)) return Label::Present;
    }
    return Label::NotPresent;
  }

  int score = 0;
  for (auto sentence : sentences(text)) {
    const auto tokens = words(sentence);
    const bool on_topic = std::any_of(keywords.begin(), keywords.end(),
                                      [&](const auto& k) { return contains_phrase(tokens, k); });
    if (!on_topic) continue;
    int negate_for = 0;
    for (const auto& w : tokens) {
      if (contains(kNegators, w)) {
        negate_for = 3;
        continue;
      }
      const int v = valence(w);
      score += negate_for > 0 ? -v : v;
      if (negate_for > 0) --negate_for;
    }
  }
  if (score > 0) return Label::Positive;
  if (score < 0) return Label::Negative;
  return Label::NeutralOrNoMention;
}

Label lexicon_classify(std::string_view text, std::string_view perception_id, const Taxonomy& taxonomy) {
  return lexicon_classify(text, taxonomy.lookup(perception_id));
}

}  // namespace lx::lexicon
