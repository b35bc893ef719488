// Copyright 2026 The mixdial Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mixdial/generator_config.hpp"
#include "mixdial/knowledge_base.hpp"
#include "mixdial/ontology.hpp"
#include "mixdial/session.hpp"
#include "mixdial/templates.hpp"
#include "mixdial/vocab.hpp"

namespace mixdial {

/// Everything produced by one generator run.
struct GeneratedCorpus {
  GeneratorConfig config;
  Ontology ontology;
  TransitionRules rules;
  KnowledgeBase kb;
  std::vector<Template> templates;
  CorpusSplit split;
};

/// KB -> templates -> simulated sessions. Fully determined by (config, ontology, rules).
GeneratedCorpus generate_corpus(const GeneratorConfig& config, const Ontology& ontology,
                                const TransitionRules& rules);

/// Single-type template of the given type (used for the external corpora).
Template single_type_template(DialogType type, const KnowledgeBase& kb, const Ontology& ontology,
                              std::uint64_t seed);

/// Every token that may appear in corpus text, serialized states, acts,
/// knowledge or placeholders.
Vocabulary build_vocabulary(const GeneratedCorpus& corpus);
Vocabulary build_vocabulary(const KnowledgeBase& kb, const Ontology& ontology,
                            const CorpusSplit& split);

/// Directory layout: ontology.json, rules.json, generator.json, kb.json,
/// templates.jsonl, vocab.txt, manifest.json plus the session files.
void write_generated(const GeneratedCorpus& corpus, const std::filesystem::path& dir);

struct CorpusBundle {
  Ontology ontology;
  KnowledgeBase kb;
  CorpusSplit split;
  Vocabulary vocab;
  std::string manifest_hash;  // hash of manifest.json, for provenance chains
  std::uint64_t seed = 0;
};
CorpusBundle read_bundle(const std::filesystem::path& dir);

}  // namespace mixdial
