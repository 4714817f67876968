#include <gtest/gtest.h>

#include "lx/lexicon.hpp"

using namespace lx;
using namespace lx::lexicon;

TEST(Lexicon, Words) {
  EXPECT_EQ(words("I don't LIKE it!"), (std::vector<std::string>{"i", "don't", "like", "it"}));
  EXPECT_TRUE(words("").empty());
}

TEST(Lexicon, Sentences) {
  const auto s = sentences("Good price. Bad shipping! Okay?");
  EXPECT_EQ(s.size(), 3u);
}

TEST(Lexicon, DescriptorScan) {
  const auto& tax = default_taxonomy();
  const std::string text = "I was irritated and sad";
  EXPECT_EQ(lexicon_classify(text, tax.lookup("anger")), Label::Present);
  EXPECT_EQ(lexicon_classify(text, tax.lookup("sadness")), Label::Present);
  EXPECT_EQ(lexicon_classify(text, tax.lookup("joy")), Label::NotPresent);
}

TEST(Lexicon, MultiWordDescriptor) {
  EXPECT_EQ(lexicon_classify("such a warm hearted gift", "love", default_taxonomy()), Label::Present);
  EXPECT_EQ(lexicon_classify("warm and hearted", "love", default_taxonomy()), Label::NotPresent);
}

TEST(Lexicon, ThemePolarityWithNegation) {
  const auto& tax = default_taxonomy();
  EXPECT_EQ(lexicon_classify("I trust this brand, it is great.", tax.lookup("trust")), Label::Positive);
  EXPECT_EQ(lexicon_classify("The price is not good.", tax.lookup("price")), Label::Negative);
  EXPECT_EQ(lexicon_classify("Shipping was fast.", tax.lookup("price")), Label::NeutralOrNoMention);
}

TEST(Lexicon, EmptyTextIsNeutral) {
  for (const auto* p : default_taxonomy().all()) {
    const auto l = lexicon_classify("", *p);
    EXPECT_TRUE(l == Label::NotPresent || l == Label::NeutralOrNoMention);
  }
}
