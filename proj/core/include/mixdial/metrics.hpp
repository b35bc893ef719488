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

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixdial/linearize.hpp"
#include "mixdial/ontology.hpp"
#include "mixdial/schema.hpp"
#include "mixdial/session.hpp"
#include "mixdial/tasks.hpp"
#include "mixdial/text.hpp"

namespace mixdial {

// ---------------------------------------------------------------------------
// State and act accuracies. All throw DataError on length mismatch.

double joint_accuracy(std::span<const DialogState> preds, std::span<const DialogState> golds);

enum class SlotKeys {
  present,   // keys present in prediction or gold
  ontology,  // present keys plus every semi/profile slot of the ontology
};
/// Per-turn fraction of keys whose values agree (absent = "none"), averaged over turns.
double slot_accuracy(std::span<const DialogState> preds, std::span<const DialogState> golds, const Ontology& ontology,
                     SlotKeys keys = SlotKeys::present);
/// Slot accuracy of a single turn.
double turn_slot_accuracy(const DialogState& pred, const DialogState& gold, const Ontology& ontology,
                          SlotKeys keys = SlotKeys::present);

/// Missing headers count as wrong.
double type_accuracy(std::span<const std::optional<StateHeader>> preds, std::span<const StateHeader> golds);
double domain_accuracy(std::span<const std::optional<StateHeader>> preds, std::span<const StateHeader> golds);

double act_accuracy(std::span<const DialogAct> preds, std::span<const DialogAct> golds);

// ---------------------------------------------------------------------------
// Text metrics. All throw DataError on an empty corpus or length mismatch.

/// Corpus BLEU with uniform weights over orders 1..n. Without smoothing the
/// score is 0 when any order has no match; smoothing adds one to every
/// order's match and total counts.
double bleu(std::span<const Tokens> hyps, std::span<const Tokens> refs, int n, bool smoothing = false);

/// Exact-match METEOR of one segment.
double meteor_segment(std::span<const std::string> hyp, std::span<const std::string> ref);
/// Mean segment METEOR.
double meteor(std::span<const Tokens> hyps, std::span<const Tokens> refs);

/// Unigram alignment with the most matches and, among those, the fewest chunks.
struct Alignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  bool exact = true;  // false when the search budget ran out
};
Alignment align_exact(std::span<const std::string> hyp, std::span<const std::string> ref);

struct CiderResult {
  double score = 0;
  std::vector<double> segments;
  /// Every reference n-gram occurs in every reference, so all idf weights vanish.
  bool degenerate = false;
};
/// CIDEr-D: n = 1..4 tf-idf cosine with clipped hypothesis weights and a
/// Gaussian length penalty (sigma 6), averaged over n and scaled by 10.
CiderResult cider(std::span<const Tokens> hyps, std::span<const Tokens> refs);

struct DistinctResult {
  double value = 0;
  std::size_t unique = 0;
  std::size_t total = 0;
  bool flagged = false;  // no n-grams at all
};
/// Unique n-grams over all sequences / total n-grams over all sequences.
DistinctResult distinct_n(std::span<const Tokens> corpus, int n);
/// Mean of per-sequence Distinct-n over sequences that have n-grams.
double distinct_n_per_utterance(std::span<const Tokens> corpus, int n);

// ---------------------------------------------------------------------------
// Knowledge accuracy

struct InformationAccuracy {
  double value = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
};
/// correct / total informed values; 0 when nothing was informed.
InformationAccuracy hallucination_accuracy(std::span<const PredictionRecord> records);
/// 0 without a completed order, else the session's information accuracy.
double success_score(std::span<const PredictionRecord> session_records, std::size_t completed_orders);

// ---------------------------------------------------------------------------
// Reports

struct MetricsOptions {
  bool bleu_smoothing = false;
  std::vector<int> bleu_orders = {1, 2};
  std::vector<int> distinct_orders = {1, 2};
};

struct MetricsReport {
  std::string task;
  std::string variant;
  std::map<std::string, double> metrics;
  std::map<std::string, std::map<std::string, double>> sessions;
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> flags;
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& doc);
};

/// Gold lookup for records ("<session id>#<turn>").
class GoldIndex {
 public:
  explicit GoldIndex(std::span<const DialogSession> sessions);
  const Turn& turn(const PredictionRecord& record) const;
  const DialogSession& session(const std::string& id) const;

 private:
  std::map<std::string, const DialogSession*> sessions_;
};

/// Scores records of one task. DST records of both modes may be mixed; the
/// rollout mode is the headline and oracle-state metrics get an "oracle." prefix.
MetricsReport score_records(Task task, std::span<const PredictionRecord> records, const GoldIndex& gold,
                            const Ontology& ontology, const MetricsOptions& options = {});

/// Column headers of the summary tables.
const std::vector<std::string>& dst_dap_columns();
const std::vector<std::string>& generation_columns();

/// Plain-text tables, one row per variant label.
std::string render_dst_dap_table(const std::vector<std::pair<std::string, std::map<std::string, MetricsReport>>>& rows);
std::string render_generation_table(Task task,
                                    const std::vector<std::pair<std::string, std::map<std::string, MetricsReport>>>& rows);

}  // namespace mixdial
