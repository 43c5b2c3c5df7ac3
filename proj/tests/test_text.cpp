#include <gtest/gtest.h>

#include "dsg/detail/default_data.hpp"
#include "dsg/detail/util.hpp"
#include "dsg/text.hpp"

using namespace dsg;

namespace {

std::string data_file(const std::string& rel) {
  return detail::read_file(std::string(DSG_SOURCE_DIR) + "/data/" + rel);
}

}  // namespace

TEST(PorterStem, ReferenceVocabulary) {
  const std::pair<const char*, const char*> cases[] = {
      {"caresses", "caress"},   {"ponies", "poni"},         {"ties", "ti"},
      {"caress", "caress"},     {"cats", "cat"},            {"feed", "feed"},
      {"agreed", "agre"},       {"plastered", "plaster"},   {"motoring", "motor"},
      {"sing", "sing"},         {"conflated", "conflat"},   {"troubled", "troubl"},
      {"sized", "size"},        {"hopping", "hop"},         {"tanned", "tan"},
      {"falling", "fall"},      {"hissing", "hiss"},        {"fizzed", "fizz"},
      {"failing", "fail"},      {"filing", "file"},         {"happy", "happi"},
      {"sky", "sky"},           {"relational", "relat"},    {"conditional", "condit"},
      {"rational", "ration"},   {"digitizer", "digit"},     {"operator", "oper"},
      {"feudalism", "feudal"},  {"decisiveness", "decis"},  {"hopefulness", "hope"},
      {"callousness", "callous"}, {"triplicate", "triplic"}, {"formative", "form"},
      {"formalize", "formal"},  {"electrical", "electr"},   {"hopeful", "hope"},
      {"goodness", "good"},     {"revival", "reviv"},       {"allowance", "allow"},
      {"inference", "infer"},   {"airliner", "airlin"},     {"gyroscopic", "gyroscop"},
      {"adjustable", "adjust"}, {"defensible", "defens"},   {"irritant", "irrit"},
      {"replacement", "replac"}, {"adjustment", "adjust"},  {"dependent", "depend"},
      {"adoption", "adopt"},    {"communism", "commun"},    {"activate", "activ"},
      {"effective", "effect"},  {"bowdlerize", "bowdler"},  {"probate", "probat"},
      {"rate", "rate"},         {"cease", "ceas"},          {"controll", "control"},
      {"roll", "roll"},         {"generalizations", "gener"}, {"oscillators", "oscil"},
      {"motorcycle", "motorcycl"}, {"motorcycles", "motorcycl"}, {"is", "is"}, {"a", "a"}};
  for (const auto& [word, stem] : cases) EXPECT_EQ(porter_stem(word), stem) << word;
}

TEST(ContentTokens, DropsStopWordsAndStems) {
  EXPECT_EQ(content_tokens("Is there a motorcycle?"), (std::set<std::string>{"motorcycl"}));
  EXPECT_EQ(content_tokens("Is the motorcycle BLUE?"), (std::set<std::string>{"motorcycl", "blue"}));
  EXPECT_EQ(content_tokens("Are the cats sleeping on the couch?"),
            (std::set<std::string>{"cat", "sleep", "couch"}));
  EXPECT_TRUE(content_tokens("is it there?").empty());
  EXPECT_EQ(content_tokens("a café, 2 signs"), (std::set<std::string>{"café", "2", "sign"}));
}

TEST(StopWords, FileAndEmbeddedListAgree) {
  auto from_file = parse_stopwords(data_file("stopwords.txt"));
  EXPECT_EQ(from_file, default_stopwords());
  EXPECT_TRUE(from_file.count("the"));
  EXPECT_FALSE(from_file.count("motorcycle"));
  EXPECT_EQ(parse_stopwords("# comment\n  The \n\nof\n"), (StopWords{"the", "of"}));
}

// The header under include/ is generated from data/ by tools/embed_data.cmake.
TEST(EmbeddedData, MatchesDataDirectory) {
  namespace e = detail::embedded;
  EXPECT_EQ(e::tuple_preamble, data_file("preambles/tuple.txt"));
  EXPECT_EQ(e::question_preamble, data_file("preambles/question.txt"));
  EXPECT_EQ(e::dependency_preamble, data_file("preambles/dependency.txt"));
  EXPECT_EQ(e::precision_preamble, data_file("judge/precision.txt"));
  EXPECT_EQ(e::recall_preamble, data_file("judge/recall.txt"));
  EXPECT_EQ(e::uniqueness_preamble, data_file("judge/uniqueness.txt"));
  EXPECT_EQ(e::stopwords, data_file("stopwords.txt"));
}

TEST(Format3, HalfEvenRounding) {
  EXPECT_EQ(detail::format3(0.5), "0.500");
  EXPECT_EQ(detail::format3(1.0), "1.000");
  EXPECT_EQ(detail::format3(0.0), "0.000");
  EXPECT_EQ(detail::format3(2.0 / 3.0), "0.667");
  EXPECT_EQ(detail::format3(0.0625), "0.062");
  EXPECT_EQ(detail::format3(0.1875), "0.188");
  EXPECT_EQ(detail::format3(-0.0625), "-0.062");
  EXPECT_EQ(detail::format3(0.4375), "0.438");
}
