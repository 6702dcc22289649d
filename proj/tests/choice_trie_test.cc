// Copyright 2026 The choicegate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "choicegate/choice_trie.h"

#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.h"

namespace choicegate {
namespace {

using testing::BruteForcePasses;
using testing::CharVocab;
using testing::EosPaths;

ChoiceTrie CharTrie(const std::vector<std::string>& labels, const Vocabulary& vocab) {
  auto choices = ChoiceSet::Create(labels);
  EXPECT_TRUE(choices.ok());
  auto trie = ChoiceTrie::Build(*choices, vocab);
  EXPECT_TRUE(trie.ok()) << trie.status();
  return *std::move(trie);
}

TEST(ChoiceSetTest, RejectsDuplicatesAndEmpty) {
  EXPECT_FALSE(ChoiceSet::Create({"a", "a"}).ok());
  EXPECT_FALSE(ChoiceSet::Create({}).ok());
  EXPECT_FALSE(ChoiceSet::Create({"a", ""}).ok());
  EXPECT_FALSE(ChoiceSet::Create({"a", "b\xff"}).ok());
  auto c = ChoiceSet::Create({"x", "y"});
  ASSERT_TRUE(c.ok());
  EXPECT_EQ(c->Joined(), "x\ny");
  EXPECT_EQ(*c->Find("y"), 1);
}

TEST(ChoiceTrieTest, CountsOnSmallSet) {
  Vocabulary v = CharVocab("abcd");
  ChoiceTrie t = CharTrie({"ab", "ac", "d"}, v);
  EXPECT_EQ(t.node(ChoiceTrie::kRoot).choice_count, 3);
  NodeId a = t.NodeAt(0, 1);
  EXPECT_EQ(t.node(a).choice_count, 2);
  auto allowed = t.AllowedTokens(ChoiceTrie::kRoot);
  ASSERT_TRUE(allowed.ok());
  EXPECT_EQ(*allowed, (std::vector<TokenId>{*v.Find("a"), *v.Find("d")}));
}

TEST(ChoiceTrieTest, SingleChoice) {
  Vocabulary v = CharVocab("x");
  ChoiceTrie t = CharTrie({"x"}, v);
  EXPECT_EQ(t.node(ChoiceTrie::kRoot).choice_count, 1);
  EXPECT_EQ(t.ForwardPassCount(PassMode::kTruncated), 0);
  EXPECT_EQ(t.ForwardPassCount(PassMode::kYesNo), 1);
  auto tp = t.Truncation(0);
  ASSERT_TRUE(tp.ok());
  EXPECT_EQ(tp->included_len, 1);
}

TEST(ChoiceTrieTest, PrefixContainmentUsesEosEdge) {
  Vocabulary v = *Vocabulary::Create({{"Gull", 1}, {" X", 2}}, 0);
  ChoiceTrie t = CharTrie({"Gull", "Gull X"}, v);
  NodeId gull = t.NodeAt(0, 1);
  EXPECT_EQ(t.node(gull).terminal_choice, 0);
  EXPECT_EQ(*t.AllowedTokens(gull), (std::vector<TokenId>{0, 2}));
  EXPECT_EQ(t.path(0), (TokenSequence{1, 0}));
  EXPECT_EQ(t.path(1), (TokenSequence{1, 2, 0}));
  // "Gull" is only unique once eos is chosen.
  EXPECT_EQ(t.Truncation(0)->included_len, 2);
  EXPECT_EQ(t.Truncation(1)->included_len, 2);
}

TEST(ChoiceTrieTest, SingleChildNodeHasSingletonAllowedSet) {
  Vocabulary v = CharVocab("abcdexyz");
  ChoiceTrie t = CharTrie({"abc", "abd", "xyz"}, v);
  EXPECT_EQ(t.AllowedTokens(t.NodeAt(2, 1))->size(), 1u);
}

TEST(ChoiceTrieTest, ToySetAccounting) {
  Vocabulary v = CharVocab("abcdexyz");
  ChoiceTrie t = CharTrie({"abc", "abd", "xyz"}, v);
  EXPECT_EQ(t.ForwardPassCount(PassMode::kFull), 5);
  EXPECT_EQ(t.ForwardPassCount(PassMode::kTruncated), 3);
  EXPECT_EQ(t.ForwardPassCount(PassMode::kYesNo), 3);
  EXPECT_EQ(t.Truncation(2)->included_len, 1);
  EXPECT_EQ(t.Truncation(0)->included_len, 3);
  std::vector<TokenSequence> truncated;
  for (NodeId n : t.TruncatedPassNodes()) truncated.push_back(t.Prefix(n));
  EXPECT_EQ(truncated, (std::vector<TokenSequence>{
                           {}, {*v.Find("a")}, {*v.Find("a"), *v.Find("b")}}));
}

TEST(ChoiceTrieTest, BaltimoreOrioleTruncatesAfterTwoTokens) {
  // Only Baltimore Oriole continues "B altimore", so its last two factors drop.
  Vocabulary v = *Vocabulary::Create(
      {{"B", 1}, {"altimore", 2}, {" Ori", 3}, {"ole", 4}, {"rown", 5}, {" Thr", 6},
       {"asher", 7}, {"ewick", 8}, {" Wren", 9}},
      0);
  ChoiceTrie t = CharTrie({"Baltimore Oriole", "Brown Thrasher", "Bewick Wren"}, v);
  ASSERT_EQ(t.path(0), (TokenSequence{1, 2, 3, 4, 0}));
  EXPECT_EQ(t.Truncation(0)->included_len, 2);
}

TEST(ChoiceTrieTest, FromTokenPathsValidates) {
  EXPECT_FALSE(ChoiceTrie::FromTokenPaths({{1}, {1}}, 0).ok());
  EXPECT_FALSE(ChoiceTrie::FromTokenPaths({{}}, 0).ok());
  EXPECT_FALSE(ChoiceTrie::FromTokenPaths({{1, 0}}, 0).ok());
  EXPECT_TRUE(ChoiceTrie::FromTokenPaths({{1}, {1, 2}}, 0).ok());
}

TEST(ChoiceTrieTest, RejectsLabelsTheVocabularyCannotCover) {
  Vocabulary v = CharVocab("ab");
  auto choices = *ChoiceSet::Create({"abz"});
  EXPECT_FALSE(ChoiceTrie::Build(choices, v).ok());
}

TEST(PassReportTest, SpeedupAndTable) {
  EXPECT_DOUBLE_EQ(*SpeedupPercent(687, 47), (687.0 - 47.0) / 47.0 * 100.0);
  EXPECT_FALSE(SpeedupPercent(5, 0).has_value());
  Vocabulary v = CharVocab("abcdexyz");
  PassReport r = MakePassReport("toy", CharTrie({"abc", "abd", "xyz"}, v));
  EXPECT_EQ(r.full, 5);
  EXPECT_EQ(r.yes_no, 3);
  EXPECT_EQ(r.truncated, 3);
  std::string table = RenderPassTable({r});
  EXPECT_NE(table.find("toy"), std::string::npos);
  EXPECT_NE(table.find("(+67%)"), std::string::npos) << table;
}

TEST(ChoiceTrieProperty, AccountingMatchesBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    auto inst = testing::RandomInstance(rng);
    auto oracle = BruteForcePasses(inst.eos_paths, inst.vocab->eos_id());
    EXPECT_EQ(inst.trie->ForwardPassCount(PassMode::kFull), oracle.full);
    EXPECT_EQ(inst.trie->ForwardPassCount(PassMode::kTruncated), oracle.truncated);
    EXPECT_EQ(inst.trie->ForwardPassCount(PassMode::kYesNo), oracle.yes_no);
    EXPECT_LE(oracle.truncated, oracle.full);
    for (size_t c = 0; c < inst.label_tokens.size(); ++c) {
      EXPECT_EQ(inst.trie->path(static_cast<ChoiceId>(c)), inst.eos_paths[c]);
    }
  }
}

TEST(ChoiceTrieProperty, ChoiceCountsMatchPathEnumeration) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = testing::RandomInstance(rng);
    const ChoiceTrie& t = *inst.trie;
    for (NodeId n = 0; n < static_cast<NodeId>(t.num_nodes()); ++n) {
      TokenSequence prefix = t.Prefix(n);
      int count = 0;
      for (const auto& p : inst.eos_paths) {
        if (p.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), p.begin())) {
          ++count;
        }
      }
      EXPECT_EQ(t.node(n).choice_count, count);
    }
  }
}

TEST(ChoiceTrieTest, CubWithRealVocabulary) {
  auto vocab = LoadVocabulary(CHOICEGATE_DATA_DIR "/vocab/cl100k_cub200.json");
  ASSERT_TRUE(vocab.ok()) << vocab.status();
  auto choices = LoadChoiceList(CHOICEGATE_DATA_DIR "/choices/cub200.txt");
  ASSERT_TRUE(choices.ok()) << choices.status();
  ASSERT_EQ(choices->size(), 200u);
  auto trie = ChoiceTrie::Build(*choices, *vocab);
  ASSERT_TRUE(trie.ok()) << trie.status();
  PassReport r = MakePassReport("CUB", *trie);
  EXPECT_EQ(r.yes_no, 200);
  EXPECT_LE(r.truncated, r.full);
  EXPECT_LT(r.truncated, r.yes_no);
  std::vector<TokenSequence> tokens;
  for (const auto& l : choices->labels()) tokens.push_back(*Encode(*vocab, l));
  auto oracle = BruteForcePasses(EosPaths(tokens, vocab->eos_id()), vocab->eos_id());
  EXPECT_EQ(r.full, oracle.full);
  EXPECT_EQ(r.truncated, oracle.truncated);
}

}  // namespace
}  // namespace choicegate
