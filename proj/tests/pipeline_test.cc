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

#include "choicegate/pipeline.h"

#include <cmath>

#include "choicegate/json_util.h"
#include "gtest/gtest.h"
#include "pipeline_fixtures.h"
#include "test_util.h"

namespace choicegate {
namespace {

using testing::BirdChoices;
using testing::BirdConfig;
using testing::BirdVocab;
using testing::RecordingBackend;

class PipelineTest : public ::testing::Test {
 protected:
  Vocabulary vocab = BirdVocab();
  ChoiceSet choices = BirdChoices();
  ChoiceTrie trie = *ChoiceTrie::Build(choices, vocab);

  std::unique_ptr<MockBackend> Mock(MockTable table) {
    table.uniform_fallback = true;
    return *MockBackend::Create(std::move(table), vocab);
  }
  Pipeline Make(RunConfig cfg, LMBackend& backend) {
    auto p = Pipeline::Create(std::move(cfg), choices, backend, vocab);
    EXPECT_TRUE(p.ok()) << p.status();
    return *std::move(p);
  }
  Example Ex(std::string id, ChoiceId truth) { return {id, "img_" + id, truth, std::nullopt}; }
};

TEST_F(PipelineTest, ChoiceBaselineFollowsImageConditionedTable) {
  MockTable t;
  for (ChoiceId c = 0; c < 4; ++c) {
    testing::RigPath(t, trie, c, {.image = "img_e" + std::to_string(c)}, 0.9);
  }
  auto mock = Mock(std::move(t));
  Pipeline p = Make(BirdConfig(Method::kChoice), *mock);
  for (ChoiceId c = 0; c < 4; ++c) {
    RunRecord r = p.Run(Ex("e" + std::to_string(c), c), testing::BasePrompt());
    ASSERT_EQ(r.status, RecordStatus::kOk) << r.error;
    EXPECT_EQ(r.prediction, c);
    EXPECT_FALSE(r.stage1_text.has_value());
    EXPECT_EQ(r.passes_used, trie.ForwardPassCount(PassMode::kTruncated));
  }
}

TEST_F(PipelineTest, SingleChoiceWinsWithoutBackend) {
  auto one = *ChoiceSet::Create({"Ivory Gull"});
  testing::DownBackend down;
  auto p = Pipeline::Create(BirdConfig(Method::kChoice), one, down, vocab);
  ASSERT_TRUE(p.ok());
  RunRecord r = p->Run(Ex("e", 0), testing::BasePrompt());
  ASSERT_EQ(r.status, RecordStatus::kOk) << r.error;
  EXPECT_EQ(r.prediction, 0);
  EXPECT_EQ(down.forward_passes(), 0);
}

TEST_F(PipelineTest, OutageBecomesFailedRecord) {
  testing::DownBackend down;
  for (Method m : {Method::kChoice, Method::kNlg2Choice, Method::kNlg2Nlg2Choice,
                   Method::kYesNo, Method::kRetrievalTrunc}) {
    Pipeline p = Make(BirdConfig(m), down);
    RunRecord r = p.Run(Ex("e", 1), testing::BasePrompt());
    EXPECT_EQ(r.status, RecordStatus::kFailed) << MethodName(m);
    EXPECT_FALSE(r.prediction.has_value());
    EXPECT_NE(r.error.find("server down"), std::string::npos);
  }
}

TEST_F(PipelineTest, StageTwoIsTextOnly) {
  MockTable t;
  t.generations.push_back({{.image = "img_e"}, "It is a gull."});
  t.generations.push_back({{.prompt_contains = "Rephrase"}, "A gull."});
  auto mock = Mock(std::move(t));
  for (Method m : {Method::kNlg2Choice, Method::kNlg2ChoiceOpen, Method::kNlg2Nlg2Choice,
                   Method::kRetrievalTrunc}) {
    RecordingBackend rec(*mock);
    Pipeline p = Make(BirdConfig(m), rec);
    RunRecord r = p.Run(Ex("e", 0), testing::BasePrompt());
    ASSERT_EQ(r.status, RecordStatus::kOk) << r.error;
    ASSERT_FALSE(rec.generations.empty());
    EXPECT_EQ(rec.generations[0].image, "img_e");
    for (size_t i = 1; i < rec.generations.size(); ++i) {
      EXPECT_FALSE(rec.generations[i].image.has_value());
    }
    ASSERT_FALSE(rec.queries.empty());
    for (const auto& q : rec.queries) {
      EXPECT_FALSE(q.image.has_value()) << MethodName(m);
      EXPECT_NE(q.prompt_text->find("Response: "), std::string::npos);
    }
  }
}

TEST_F(PipelineTest, OpenVariantDropsSteeringSuffix) {
  MockTable t;
  t.default_text = "gull";
  auto mock = Mock(std::move(t));
  RecordingBackend steered(*mock), open(*mock);
  Make(BirdConfig(Method::kNlg2Choice), steered).Run(Ex("e", 0), testing::BasePrompt());
  Make(BirdConfig(Method::kNlg2ChoiceOpen), open).Run(Ex("e", 0), testing::BasePrompt());
  EXPECT_EQ(steered.generations[0].prompt,
            "What is the species of the bird in this image? Answer with species only.");
  EXPECT_EQ(open.generations[0].prompt, "What is the species of the bird in this image?");
}

TEST_F(PipelineTest, CotPrefixIsKeptInStageOneText) {
  MockTable t;
  t.default_text = " it is a gull.";
  auto mock = Mock(std::move(t));
  RunConfig cfg = BirdConfig(Method::kNlg2Choice);
  cfg.cot = "Let's think step by step.";
  RunRecord r = Make(cfg, *mock).Run(Ex("e", 0), testing::BasePrompt());
  ASSERT_EQ(r.status, RecordStatus::kOk) << r.error;
  EXPECT_EQ(r.stage1_text, "Let's think step by step. it is a gull.");
}

TEST_F(PipelineTest, RefusalAndEmptyTextStillPredict) {
  MockTable t;
  t.generations.push_back({{.image = "img_refuse"}, "I'm sorry, I can't help with that."});
  t.generations.push_back({{.image = "img_empty"}, "  \n"});
  auto mock = Mock(std::move(t));
  RecordingBackend rec(*mock);
  Pipeline p = Make(BirdConfig(Method::kNlg2Choice), rec);
  RunRecord refuse = p.Run(Ex("refuse", 0), testing::BasePrompt());
  ASSERT_EQ(refuse.status, RecordStatus::kOk) << refuse.error;
  EXPECT_TRUE(choices.Contains(*refuse.prediction));
  rec.queries.clear();
  RunRecord empty = p.Run(Ex("empty", 0), testing::BasePrompt());
  ASSERT_EQ(empty.status, RecordStatus::kOk) << empty.error;
  EXPECT_TRUE(choices.Contains(*empty.prediction));
  EXPECT_EQ(empty.stage1_text, "  \n");
  EXPECT_EQ(empty.flags, std::vector<std::string>{"empty_stage1"});
  EXPECT_NE(rec.queries[0].prompt_text->find("Response: (no response)"), std::string::npos);
}

TEST_F(PipelineTest, IvoryGullOverRealCubList) {
  auto real_vocab = LoadVocabulary(CHOICEGATE_DATA_DIR "/vocab/cl100k_cub200.json");
  ASSERT_TRUE(real_vocab.ok());
  auto cub = LoadChoiceList(CHOICEGATE_DATA_DIR "/choices/cub200.txt");
  ASSERT_TRUE(cub.ok());
  auto cub_trie = *ChoiceTrie::Build(*cub, *real_vocab);
  const ChoiceId ivory = *cub->Find("Ivory Gull");
  MockTable t;
  t.uniform_fallback = true;
  t.generations.push_back({{.image = "gull.jpg"}, "This bird is a small gull with ivory plumage"});
  testing::RigPath(t, cub_trie, ivory, {.prompt_contains = "ivory plumage"}, 0.8);
  auto mock = *MockBackend::Create(std::move(t), *real_vocab);
  auto p = Pipeline::Create(BirdConfig(Method::kNlg2Choice), *cub, *mock, *real_vocab);
  ASSERT_TRUE(p.ok()) << p.status();
  RunRecord r = p->Run({"x", "gull.jpg", ivory, std::nullopt}, testing::BasePrompt());
  ASSERT_EQ(r.status, RecordStatus::kOk) << r.error;
  EXPECT_EQ(cub->label(*r.prediction), "Ivory Gull");
  EXPECT_EQ(r.passes_used, cub_trie.ForwardPassCount(PassMode::kTruncated));
}

TEST_F(PipelineTest, OneRoundEqualsNlg2ChoiceAndIdentityRephraseKeepsChoice) {
  MockTable t;
  t.generations.push_back({{.image = "img_e"}, "Painted Bunting, surely"});
  // The rephrase echoes the response it receives.
  t.generations.push_back({{.prompt_contains = "Response: Painted Bunting, surely"},
                           "Painted Bunting, surely"});
  testing::RigPath(t, trie, 3, {.prompt_contains = "Response: Painted Bunting"}, 0.7);
  auto mock = Mock(std::move(t));
  Pipeline p = Make(BirdConfig(Method::kNlg2Nlg2Choice), *mock);
  RunRecord base = p.ClassifyNlg2Choice(Ex("e", 3), testing::BasePrompt());
  RunRecord one = p.ClassifyMultiRound(Ex("e", 3), testing::BasePrompt(), 1);
  RunRecord two = p.ClassifyMultiRound(Ex("e", 3), testing::BasePrompt(), 2);
  ASSERT_EQ(two.status, RecordStatus::kOk) << two.error;
  EXPECT_EQ(base.ToJson(), one.ToJson());
  EXPECT_EQ(two.rephrases, std::vector<std::string>{"Painted Bunting, surely"});
  EXPECT_EQ(two.prediction, one.prediction);
  EXPECT_EQ(two.prediction, 3);
  EXPECT_EQ(two.scores->log_scores, one.scores->log_scores);
  RunRecord too_many = p.ClassifyMultiRound(Ex("e", 3), testing::BasePrompt(), 9);
  EXPECT_EQ(too_many.status, RecordStatus::kFailed);
}

TEST_F(PipelineTest, YesNoUsesOnePassPerPair) {
  MockTable t;
  for (ChoiceId c = 0; c < 3; ++c) {
    t.distributions.push_back(
        {{.prompt = "Is this a " + choices.label(c) + "?"}, {}, {{207, 0.1 * (c + 1)}, {208, 0.2}}});
  }
  auto mock = Mock(std::move(t));
  auto three = *ChoiceSet::Create({"Ivory Gull", "Herring Gull", "Scarlet Tanager"});
  RecordingBackend rec(*mock);
  auto p = *Pipeline::Create(BirdConfig(Method::kYesNo), three, rec, vocab);
  std::vector<RunRecord> rows = {p.Run(Ex("a", 0), testing::BasePrompt()),
                                 p.Run(Ex("b", 1), testing::BasePrompt())};
  EXPECT_EQ(rec.forward_passes(), 6);
  for (const auto& q : rec.queries) EXPECT_TRUE(q.image.has_value());
  ASSERT_TRUE(rows[0].yes_no.has_value());
  EXPECT_NEAR((*rows[0].yes_no)[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR((*rows[0].yes_no)[1], 0.5, 1e-12);
  EXPECT_NEAR((*rows[0].yes_no)[2], 0.6, 1e-12);
  EXPECT_FALSE(rows[0].prediction.has_value());
  EXPECT_FALSE(rows[0].stage1_text.has_value());
}

TEST_F(PipelineTest, RetrievalScoresMatchTruncatedAccounting) {
  MockTable t;
  for (ChoiceId c = 0; c < 4; ++c) {
    t.generations.push_back({{.image = "img_e" + std::to_string(c)}, "It is a " + choices.label(c)});
    testing::RigPath(t, trie, c, {.prompt_contains = "It is a " + choices.label(c)}, 0.95);
  }
  auto mock = Mock(std::move(t));
  Pipeline p = Make(BirdConfig(Method::kRetrievalTrunc), *mock);
  std::vector<RunRecord> records;
  for (ChoiceId c = 0; c < 4; ++c) {
    mock->ResetCounters();
    RunRecord r = p.Run(Ex("e" + std::to_string(c), c), testing::BasePrompt());
    ASSERT_EQ(r.status, RecordStatus::kOk) << r.error;
    EXPECT_EQ(mock->forward_passes(), trie.ForwardPassCount(PassMode::kTruncated));
    EXPECT_EQ(r.passes_used, mock->forward_passes());
    EXPECT_FALSE(r.prediction.has_value());
    records.push_back(r);
  }
  ScoreMatrix m = ScoreMatrixFromRecords(records, "q04");
  ASSERT_EQ(m.rows.size(), 4u);
  for (size_t i = 0; i < 4; ++i) EXPECT_EQ(ArgmaxChoice(m.rows[i]), static_cast<ChoiceId>(i));
}

TEST_F(PipelineTest, GreedySelectorRecordsPrediction) {
  MockTable t;
  t.default_text = "x";
  testing::RigPath(t, trie, 2, {}, 0.9);
  auto mock = Mock(std::move(t));
  RunConfig cfg = BirdConfig(Method::kNlg2Choice);
  cfg.selector = Selector::kGreedy;
  RunRecord r = Make(cfg, *mock).Run(Ex("e", 2), testing::BasePrompt());
  ASSERT_EQ(r.status, RecordStatus::kOk) << r.error;
  EXPECT_EQ(r.prediction, 2);
  EXPECT_EQ(r.passes_used, GreedyPassCount(trie, 2));
}

TEST_F(PipelineTest, SubsetRestrictsPredictionAndPrompts) {
  MockTable t;
  t.default_text = "Ivory Gull";
  testing::RigPath(t, trie, 0, {}, 0.99);  // favors a label outside the subset
  auto mock = Mock(std::move(t));
  RecordingBackend rec(*mock);
  RunConfig cfg = BirdConfig(Method::kNlg2Choice);
  cfg.steering = SteeringMode::kChoiceList;
  Pipeline p = Make(cfg, rec);
  Example e{"e", "img", 2, std::vector<ChoiceId>{3, 2}};
  RunRecord r = p.Run(e, testing::BasePrompt());
  ASSERT_EQ(r.status, RecordStatus::kOk) << r.error;
  ASSERT_TRUE(r.prediction == 2 || r.prediction == 3);
  EXPECT_EQ(r.scores->log_scores.size(), 4u);
  EXPECT_EQ(r.scores->log_scores[0], testing::kNegInf);
  EXPECT_EQ(r.scores->log_scores[1], testing::kNegInf);
  EXPECT_EQ(rec.generations[0].prompt.find("Ivory"), std::string::npos);
  EXPECT_NE(rec.generations[0].prompt.find("Scarlet Tanager\nPainted Bunting"),
            std::string::npos);
}

TEST_F(PipelineTest, CreateRejectsBadConfigs) {
  auto mock = Mock({});
  RunConfig cot = BirdConfig(Method::kChoice);
  cot.cot = "First,";
  EXPECT_FALSE(Pipeline::Create(cot, choices, *mock, vocab).ok());
  RunConfig yn = BirdConfig(Method::kYesNo);
  yn.yes_no_template = "Is it?";
  EXPECT_FALSE(Pipeline::Create(yn, choices, *mock, vocab).ok());
  RunConfig rounds = BirdConfig(Method::kNlg2Nlg2Choice);
  rounds.rounds = 0;
  EXPECT_FALSE(Pipeline::Create(rounds, choices, *mock, vocab).ok());
  RunConfig tokens = BirdConfig(Method::kNlg2Choice);
  tokens.max_new_tokens = 0;
  EXPECT_FALSE(Pipeline::Create(tokens, choices, *mock, vocab).ok());
}

TEST(MethodTest, NamesAndCategories) {
  for (Method m : {Method::kChoice, Method::kNlg2Choice, Method::kNlg2ChoiceOpen,
                   Method::kNlg2Nlg2Choice, Method::kYesNo, Method::kRetrievalTrunc}) {
    EXPECT_EQ(ParseMethod(MethodName(m)), m);
  }
  EXPECT_TRUE(IsClassification(Method::kChoice));
  EXPECT_FALSE(IsClassification(Method::kYesNo));
  EXPECT_FALSE(IsClassification(Method::kRetrievalTrunc));
  EXPECT_FALSE(HasGenerationStage(Method::kChoice));
  EXPECT_TRUE(HasGenerationStage(Method::kRetrievalTrunc));
  EXPECT_EQ(ParseSelector(SelectorName(Selector::kGreedy)), Selector::kGreedy);
}

TEST(RunConfigTest, HashTracksResultFieldsOnly) {
  RunConfig a = BirdConfig(Method::kNlg2Choice);
  RunConfig b = a;
  b.jobs = 8;
  b.record_timestamps = true;
  EXPECT_EQ(a.Hash("mock:x"), b.Hash("mock:x"));
  EXPECT_NE(a.Hash("mock:x"), a.Hash("mock:y"));
  b.max_new_tokens = 64;
  EXPECT_NE(a.Hash("mock:x"), b.Hash("mock:x"));
}

TEST(RunRecordTest, JsonRoundTrip) {
  RunRecord r;
  r.example_id = "e1";
  r.prompt_id = "q01";
  r.method = Method::kRetrievalTrunc;
  r.flags = {"empty_stage1"};
  r.stage1_text = "";
  r.rephrases = {"a", "b"};
  r.scores = ChoiceScores{{-0.5, testing::kNegInf}, Normalization::kPerStepRenormalized, 3};
  r.passes_used = 3;
  auto back = RunRecord::FromJson(Json::parse(r.ToJson().dump()));
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(back->ToJson(), r.ToJson());
  EXPECT_EQ(back->scores->log_scores[1], testing::kNegInf);
}

TEST(ManifestTest, LoadsLabelsByNameOrId) {
  testing::TempDir dir;
  auto choices = BirdChoices();
  ASSERT_TRUE(WriteFile(dir.File("m.jsonl"),
                        "{\"id\":\"a\",\"image\":\"a.jpg\",\"label\":\"Herring Gull\"}\n"
                        "{\"id\":\"b\",\"image\":\"b.jpg\",\"label\":3}\n")
                  .ok());
  auto ex = LoadManifest(dir.File("m.jsonl"), choices);
  ASSERT_TRUE(ex.ok()) << ex.status();
  EXPECT_EQ((*ex)[0].ground_truth, 1);
  EXPECT_EQ((*ex)[1].ground_truth, 3);

  ASSERT_TRUE(WriteFile(dir.File("s.jsonl"),
                        "{\"example_id\":\"a\",\"choices\":[\"Herring Gull\",\"Ivory Gull\"]}\n"
                        "{\"example_id\":\"b\",\"choices\":[\"Painted Bunting\"]}\n")
                  .ok());
  ASSERT_TRUE(AttachChoiceSubsets(dir.File("s.jsonl"), choices, *ex).ok());
  EXPECT_EQ((*ex)[1].choice_subset, std::vector<ChoiceId>{3});

  ASSERT_TRUE(WriteFile(dir.File("bad_subset.jsonl"),
                        "{\"example_id\":\"a\",\"choices\":[\"Ivory Gull\"]}\n"
                        "{\"example_id\":\"b\",\"choices\":[\"Painted Bunting\"]}\n")
                  .ok());
  EXPECT_FALSE(AttachChoiceSubsets(dir.File("bad_subset.jsonl"), choices, *ex).ok());
}

TEST(ManifestTest, RejectsBadLines) {
  testing::TempDir dir;
  auto choices = BirdChoices();
  ASSERT_TRUE(WriteFile(dir.File("dup.jsonl"),
                        "{\"id\":\"a\",\"image\":\"x\",\"label\":0}\n"
                        "{\"id\":\"a\",\"image\":\"y\",\"label\":1}\n")
                  .ok());
  EXPECT_FALSE(LoadManifest(dir.File("dup.jsonl"), choices).ok());
  ASSERT_TRUE(WriteFile(dir.File("unknown.jsonl"),
                        "{\"id\":\"a\",\"image\":\"x\",\"label\":\"Blue Jay\"}\n")
                  .ok());
  auto s = LoadManifest(dir.File("unknown.jsonl"), choices);
  ASSERT_FALSE(s.ok());
  EXPECT_NE(s.status().message().find(":1"), absl::string_view::npos) << s.status();
  ASSERT_TRUE(WriteFile(dir.File("range.jsonl"),
                        "{\"id\":\"a\",\"image\":\"x\",\"label\":9}\n").ok());
  EXPECT_FALSE(LoadManifest(dir.File("range.jsonl"), choices).ok());
}

}  // namespace
}  // namespace choicegate
