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

// A temporary four-bird world on disk for driving the command line in-process.

#ifndef CHOICEGATE_TESTS_CLI_WORLD_H_
#define CHOICEGATE_TESTS_CLI_WORLD_H_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "choicegate/json_util.h"
#include "pipeline_fixtures.h"
#include "test_util.h"

namespace choicegate::testing {

inline std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void Spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

inline CliResult RunCli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

// Three images of a four-class bird world. The mock answers stage 1 per image
// and puts 0.9 on the named bird whenever the selection prompt quotes it.
class CliWorld {
 public:
  CliWorld() {
    const ChoiceSet choices = BirdChoices();
    std::string list;
    for (ChoiceId c = 0; c < static_cast<ChoiceId>(choices.size()); ++c) {
      list += choices.label(c) + "\n";
    }
    Spit(dir_.File("choices.txt"), list);
    Spit(dir_.File("profile.json"),
         R"({"name": "birds", "type": "species", "domain": "bird",
             "choice_list_path": "choices.txt", "genus_map_path": "genus.json"})");
    Spit(dir_.File("genus.json"),
         R"({"Ivory Gull": "Gull", "Herring Gull": "Gull",
             "Scarlet Tanager": "Tanager", "Painted Bunting": "Bunting"})");
    Spit(dir_.File("templates.json"),
         R"([{"id": "q01", "body": "What {type} is this {domain}?"},
             {"id": "q02", "body": "What is the {type} of this {domain}?"}])");
    Spit(dir_.File("vocab.json"), BirdVocab().ToJson());
    Spit(dir_.File("manifest.jsonl"),
         "{\"id\": \"e0\", \"image\": \"img0.jpg\", \"label\": \"Scarlet Tanager\"}\n"
         "{\"id\": \"e1\", \"image\": \"img1.jpg\", \"label\": \"Herring Gull\"}\n"
         "{\"id\": \"e2\", \"image\": \"img2.jpg\", \"label\": \"Painted Bunting\"}\n");
    Spit(dir_.File("subsets.jsonl"),
         "{\"example_id\": \"e0\", \"choices\": [\"Scarlet Tanager\", \"Ivory Gull\"]}\n"
         "{\"example_id\": \"e1\", \"choices\": [\"Herring Gull\", \"Painted Bunting\"]}\n"
         "{\"example_id\": \"e2\", \"choices\": [\"Painted Bunting\", \"Ivory Gull\"]}\n");
    Spit(dir_.File("labels.jsonl"),
         "{\"example_id\": \"e0\", \"nlg\": \"It is a Scarlet Tanager.\", \"span\": [8, 23],"
         " \"resolution\": \"answer\", \"answer\": \"Scarlet Tanager\"}\n"
         "{\"example_id\": \"e1\", \"nlg\": \"I cannot tell.\", \"span\": null,"
         " \"resolution\": \"refused\", \"answer\": null}\n"
         "{\"example_id\": \"e2\", \"nlg\": \"It is a Painted Bunting.\", \"span\": [8, 23],"
         " \"resolution\": \"answer\", \"answer\": \"Painted Bunting\"}\n");

    const Vocabulary vocab = BirdVocab();
    auto trie = *ChoiceTrie::Build(choices, vocab);
    MockTable table;
    table.vocab = vocab;
    table.uniform_fallback = true;
    table.generations = {{{std::nullopt, std::nullopt, "img0.jpg"}, "It is a Scarlet Tanager."},
                         {{std::nullopt, std::nullopt, "img1.jpg"}, "I cannot tell."},
                         {{std::nullopt, std::nullopt, "img2.jpg"}, "It is a Painted Bunting."}};
    for (const char* name : {"Scarlet Tanager", "Painted Bunting"}) {
      MockMatcher m;
      m.prompt_contains = std::string("Response: It is a ") + name;
      RigPath(table, trie, *choices.Find(name), m, 0.9);
    }
    Spit(dir_.File("mock.json"), table.ToJson().dump(2));

    table.generations.clear();
    Spit(dir_.File("mute.json"), table.ToJson().dump(2));
  }

  std::string File(const std::string& name) const { return dir_.File(name); }
  void Put(const std::string& name, const std::string& text) const { Spit(dir_.File(name), text); }

  std::vector<std::string> Classify(const std::string& out, const std::string& method,
                                    const std::string& mock = "mock.json") const {
    return {"classify",   "--profile",   File("profile.json"),   "--vocab",
            File("vocab.json"), "--mock", File(mock),           "--method",
            method,       "--templates", File("templates.json"), "--manifest",
            File("manifest.jsonl"), "--out", File(out)};
  }

 private:
  TempDir dir_;
};

}  // namespace choicegate::testing

#endif  // CHOICEGATE_TESTS_CLI_WORLD_H_
