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

#include "mixdial/generator_config.hpp"
#include "mixdial/knowledge_base.hpp"
#include "mixdial/ontology.hpp"
#include "mixdial/session.hpp"
#include "mixdial/templates.hpp"

namespace mixdial {

/// Plays both roles of a template-guided dialog: the user agent follows the
/// sub-scenarios in order, the wizard agent answers from the knowledge base.
/// Emits gold acts, per-turn deltas and cumulative states.
///
/// Throws DataError when the template names an entity missing from the KB.
DialogSession simulate_dialog(const Template& t, const KnowledgeBase& kb, const Ontology& ontology,
                              const GeneratorConfig& config, std::uint64_t seed);

}  // namespace mixdial
