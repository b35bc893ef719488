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

#include "mixdial/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "mixdial/errors.hpp"

namespace mixdial {

using nlohmann::json;

namespace {

void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DataError(std::string(what) + ": " + std::to_string(a) + " predictions for " + std::to_string(b) +
                    " references");
}

void check_corpus(std::size_t a, std::size_t b, const char* what) {
  check_aligned(a, b, what);
  if (a == 0) throw DataError(std::string(what) + ": empty corpus");
}

using Key = std::pair<std::string, std::string>;

std::map<Key, std::string> keyed(const DialogState& s) {
  std::map<Key, std::string> out;
  for (const auto& t : flatten_state(s)) out[{t.domain, t.path}] = t.value;
  return out;
}

const std::set<Key>& ontology_keys(const Ontology& ontology) {
  thread_local const Ontology* cached = nullptr;
  thread_local std::set<Key> keys;
  if (cached != &ontology) {
    keys.clear();
    for (const auto& d : ontology.domains()) {
      if (d.name == kGeneralDomain) {
        for (const auto& slot : d.informable) keys.insert({d.name, std::string(kProfileSection) + "/" + slot});
      } else {
        for (const auto& slot : d.slots())
          if (d.is_semi_slot(slot)) keys.insert({d.name, std::string(kSemiSection) + "/" + slot});
      }
    }
    cached = &ontology;
  }
  return keys;
}

std::string act_key(const ActItem& i) { return i.domain + "\x1f" + i.intent + "\x1f" + i.slot + "\x1f" + fold_value(i.value); }

std::set<std::string> act_set(const DialogAct& a) {
  std::set<std::string> out;
  for (const auto& i : a.items) out.insert(act_key(i));
  return out;
}

using Counts = std::map<Tokens, std::size_t>;

Counts ngrams(std::span<const std::string> s, int n) {
  Counts c;
  const auto k = static_cast<std::size_t>(n);
  if (s.size() < k) return c;
  for (std::size_t i = 0; i + k <= s.size(); ++i) ++c[Tokens(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(i + k))];
  return c;
}

}  // namespace

double joint_accuracy(std::span<const DialogState> preds, std::span<const DialogState> golds) {
  check_aligned(preds.size(), golds.size(), "joint_accuracy");
  if (preds.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) ok += flatten_state(preds[i]) == flatten_state(golds[i]);
  return double(ok) / double(preds.size());
}

double turn_slot_accuracy(const DialogState& pred, const DialogState& gold, const Ontology& ontology, SlotKeys rule) {
  const auto p = keyed(pred);
  const auto g = keyed(gold);
  std::set<Key> keys;
  for (const auto& [k, _] : p) keys.insert(k);
  for (const auto& [k, _] : g) keys.insert(k);
  if (rule == SlotKeys::ontology) {
    const auto& fixed = ontology_keys(ontology);
    keys.insert(fixed.begin(), fixed.end());
  }
  if (keys.empty()) return 1.0;
  std::size_t ok = 0;
  for (const auto& k : keys) {
    auto pi = p.find(k);
    auto gi = g.find(k);
    const std::string pv = pi == p.end() ? std::string(SequenceGrammar::kNone) : pi->second;
    const std::string gv = gi == g.end() ? std::string(SequenceGrammar::kNone) : gi->second;
    ok += pv == gv;
  }
  return double(ok) / double(keys.size());
}

double slot_accuracy(std::span<const DialogState> preds, std::span<const DialogState> golds, const Ontology& ontology,
                     SlotKeys rule) {
  check_aligned(preds.size(), golds.size(), "slot_accuracy");
  if (preds.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += turn_slot_accuracy(preds[i], golds[i], ontology, rule);
  return sum / double(preds.size());
}

double type_accuracy(std::span<const std::optional<StateHeader>> preds, std::span<const StateHeader> golds) {
  check_aligned(preds.size(), golds.size(), "type_accuracy");
  if (preds.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i] && preds[i]->type && preds[i]->type == golds[i].type;
  return double(ok) / double(preds.size());
}

double domain_accuracy(std::span<const std::optional<StateHeader>> preds, std::span<const StateHeader> golds) {
  check_aligned(preds.size(), golds.size(), "domain_accuracy");
  if (preds.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    ok += preds[i] && !preds[i]->domain.empty() && preds[i]->domain == golds[i].domain;
  return double(ok) / double(preds.size());
}

double act_accuracy(std::span<const DialogAct> preds, std::span<const DialogAct> golds) {
  check_aligned(preds.size(), golds.size(), "act_accuracy");
  if (preds.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) ok += act_set(preds[i]) == act_set(golds[i]);
  return double(ok) / double(preds.size());
}

double bleu(std::span<const Tokens> hyps, std::span<const Tokens> refs, int n, bool smoothing) {
  check_corpus(hyps.size(), refs.size(), "bleu");
  if (n < 1) throw ConfigError("bleu: order must be at least 1");
  std::vector<double> matched(static_cast<std::size_t>(n), 0.0), total(static_cast<std::size_t>(n), 0.0);
  double c = 0, r = 0;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    c += double(hyps[s].size());
    r += double(refs[s].size());
    for (int k = 1; k <= n; ++k) {
      const Counts h = ngrams(hyps[s], k);
      const Counts rc = ngrams(refs[s], k);
      for (const auto& [g, cnt] : h) {
        auto it = rc.find(g);
        matched[static_cast<std::size_t>(k - 1)] += double(std::min(cnt, it == rc.end() ? 0 : it->second));
        total[static_cast<std::size_t>(k - 1)] += double(cnt);
      }
    }
  }
  if (c == 0) return 0.0;
  double log_sum = 0;
  for (int k = 0; k < n; ++k) {
    double m = matched[static_cast<std::size_t>(k)], t = total[static_cast<std::size_t>(k)];
    if (smoothing) {
      m += 1;
      t += 1;
    }
    if (m == 0 || t == 0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / n);
}

namespace {

struct AlignSearch {
  std::span<const std::string> hyp;
  std::span<const std::string> ref;
  std::map<std::string, std::size_t> skips_left;  // hyp occurrences that must stay unaligned
  std::vector<int> link;                          // hyp position -> ref position or -1
  std::vector<bool> used;
  std::size_t best = 0;
  std::vector<int> best_link;
  std::size_t nodes = 0;
  std::size_t budget = 200000;
  bool exhausted = false;

  void dfs(std::size_t i, std::size_t chunks) {
    if (chunks >= best) return;
    if (++nodes > budget) {
      exhausted = true;
      return;
    }
    if (i == hyp.size()) {
      best = chunks;
      best_link = link;
      return;
    }
    const bool prev_linked = i > 0 && link[i - 1] >= 0;
    // Extending the previous chunk first finds good bounds early.
    if (prev_linked) {
      const std::size_t j = static_cast<std::size_t>(link[i - 1]) + 1;
      if (j < ref.size() && !used[j] && ref[j] == hyp[i]) {
        link[i] = static_cast<int>(j);
        used[j] = true;
        dfs(i + 1, chunks);
        used[j] = false;
        link[i] = -1;
        if (exhausted) return;
      }
    }
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (used[j] || ref[j] != hyp[i]) continue;
      if (prev_linked && j == static_cast<std::size_t>(link[i - 1]) + 1) continue;
      link[i] = static_cast<int>(j);
      used[j] = true;
      dfs(i + 1, chunks + 1);
      used[j] = false;
      link[i] = -1;
      if (exhausted) return;
    }
    auto it = skips_left.find(hyp[i]);
    if (it != skips_left.end() && it->second > 0) {
      --it->second;
      dfs(i + 1, chunks);
      ++it->second;
    }
  }
};

std::size_t count_chunks(const std::vector<int>& link) {
  std::size_t chunks = 0;
  for (std::size_t i = 0; i < link.size(); ++i) {
    if (link[i] < 0) continue;
    if (i > 0 && link[i - 1] >= 0 && link[i - 1] + 1 == link[i]) continue;
    ++chunks;
  }
  return chunks;
}

// Repeated longest common substring; a maximal matching with few chunks.
std::vector<int> greedy_link(std::span<const std::string> hyp, std::span<const std::string> ref) {
  std::vector<int> link(hyp.size(), -1);
  std::vector<bool> used(ref.size(), false);
  while (true) {
    std::size_t best_len = 0, bi = 0, bj = 0;
    for (std::size_t i = 0; i < hyp.size(); ++i)
      for (std::size_t j = 0; j < ref.size(); ++j) {
        std::size_t L = 0;
        while (i + L < hyp.size() && j + L < ref.size() && link[i + L] < 0 && !used[j + L] && hyp[i + L] == ref[j + L])
          ++L;
        if (L > best_len) {
          best_len = L;
          bi = i;
          bj = j;
        }
      }
    if (best_len == 0) break;
    for (std::size_t k = 0; k < best_len; ++k) {
      link[bi + k] = static_cast<int>(bj + k);
      used[bj + k] = true;
    }
  }
  return link;
}

}  // namespace

Alignment align_exact(std::span<const std::string> hyp, std::span<const std::string> ref) {
  std::map<std::string, std::size_t> hc, rc;
  for (const auto& t : hyp) ++hc[t];
  for (const auto& t : ref) ++rc[t];
  Alignment a;
  AlignSearch s;
  s.hyp = hyp;
  s.ref = ref;
  s.link.assign(hyp.size(), -1);
  s.used.assign(ref.size(), false);
  for (const auto& [t, n] : hc) {
    auto it = rc.find(t);
    const std::size_t m = it == rc.end() ? 0 : std::min(n, it->second);
    a.matches += m;
    s.skips_left[t] = n - m;
  }
  if (a.matches == 0) return a;
  s.best_link = greedy_link(hyp, ref);
  s.best = count_chunks(s.best_link);
  s.dfs(0, 0);
  a.chunks = s.best;
  a.exact = !s.exhausted;
  return a;
}

double meteor_segment(std::span<const std::string> hyp, std::span<const std::string> ref) {
  if (hyp.empty() || ref.empty()) return 0.0;
  const Alignment a = align_exact(hyp, ref);
  if (a.matches == 0) return 0.0;
  const double m = double(a.matches);
  const double P = m / double(hyp.size());
  const double R = m / double(ref.size());
  const double f = 10.0 * P * R / (R + 9.0 * P);
  const double frag = double(a.chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return f * (1.0 - penalty);
}

double meteor(std::span<const Tokens> hyps, std::span<const Tokens> refs) {
  check_corpus(hyps.size(), refs.size(), "meteor");
  double sum = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) sum += meteor_segment(hyps[i], refs[i]);
  return sum / double(hyps.size());
}

CiderResult cider(std::span<const Tokens> hyps, std::span<const Tokens> refs) {
  check_corpus(hyps.size(), refs.size(), "cider");
  constexpr int kMaxN = 4;
  constexpr double kSigma = 6.0;
  const double N = double(refs.size());
  std::vector<std::map<Tokens, double>> df(kMaxN);
  for (const auto& r : refs)
    for (int n = 1; n <= kMaxN; ++n)
      for (const auto& [g, _] : ngrams(r, n)) df[static_cast<std::size_t>(n - 1)][g] += 1.0;
  const double log_n = std::log(N);

  CiderResult out;
  bool any_weight = false;
  for (int n = 1; n <= kMaxN && !any_weight; ++n)
    for (const auto& [g, d] : df[static_cast<std::size_t>(n - 1)])
      if (log_n - std::log(std::max(1.0, d)) > 0) {
        any_weight = true;
        break;
      }
  out.degenerate = !any_weight;

  double total = 0;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    double seg = 0;
    for (int n = 1; n <= kMaxN; ++n) {
      const auto& dn = df[static_cast<std::size_t>(n - 1)];
      auto weights = [&](std::span<const std::string> t) {
        std::map<Tokens, double> v;
        for (const auto& [g, c] : ngrams(t, n)) {
          auto it = dn.find(g);
          const double d = it == dn.end() ? 0.0 : it->second;
          v[g] = double(c) * (log_n - std::log(std::max(1.0, d)));
        }
        return v;
      };
      const auto vh = weights(hyps[s]);
      const auto vr = weights(refs[s]);
      double dot = 0, nh = 0, nr = 0;
      for (const auto& [g, w] : vh) {
        nh += w * w;
        auto it = vr.find(g);
        if (it != vr.end()) dot += std::min(w, it->second) * it->second;
      }
      for (const auto& [g, w] : vr) nr += w * w;
      if (nh == 0 || nr == 0) continue;
      const double delta = double(hyps[s].size()) - double(refs[s].size());
      seg += dot / (std::sqrt(nh) * std::sqrt(nr)) * std::exp(-(delta * delta) / (2 * kSigma * kSigma));
    }
    seg = seg / kMaxN * 10.0;
    out.segments.push_back(seg);
    total += seg;
  }
  out.score = total / double(hyps.size());
  return out;
}

DistinctResult distinct_n(std::span<const Tokens> corpus, int n) {
  if (corpus.empty()) throw DataError("distinct_n: empty corpus");
  if (n < 1) throw ConfigError("distinct_n: order must be at least 1");
  std::set<Tokens> unique;
  DistinctResult r;
  for (const auto& s : corpus)
    for (const auto& [g, c] : ngrams(s, n)) {
      unique.insert(g);
      r.total += c;
    }
  r.unique = unique.size();
  r.flagged = r.total == 0;
  r.value = r.total ? double(r.unique) / double(r.total) : 0.0;
  return r;
}

double distinct_n_per_utterance(std::span<const Tokens> corpus, int n) {
  double sum = 0;
  std::size_t counted = 0;
  for (const auto& s : corpus) {
    const auto d = distinct_n(std::span<const Tokens>(&s, 1), n);
    if (d.total == 0) continue;
    sum += d.value;
    ++counted;
  }
  return counted ? sum / double(counted) : 0.0;
}

InformationAccuracy hallucination_accuracy(std::span<const PredictionRecord> records) {
  InformationAccuracy a;
  for (const auto& r : records)
    for (const auto& m : r.mentions) {
      ++a.total;
      a.correct += m.correct;
    }
  a.value = a.total ? double(a.correct) / double(a.total) : 0.0;
  return a;
}

double success_score(std::span<const PredictionRecord> records, std::size_t completed_orders) {
  if (completed_orders == 0) return 0.0;
  return hallucination_accuracy(records).value;
}

// ---------------------------------------------------------------------------

json MetricsReport::to_json() const {
  return {{"task", task},     {"variant", variant}, {"metrics", metrics}, {"sessions", sessions},
          {"counts", counts}, {"flags", flags},     {"config", config}};
}

MetricsReport MetricsReport::from_json(const json& doc) {
  MetricsReport r;
  try {
    r.task = doc.at("task").get<std::string>();
    r.variant = doc.value("variant", std::string{});
    r.metrics = doc.at("metrics").get<std::map<std::string, double>>();
    r.sessions = doc.value("sessions", std::map<std::string, std::map<std::string, double>>{});
    r.counts = doc.value("counts", std::map<std::string, std::size_t>{});
    r.flags = doc.value("flags", std::vector<std::string>{});
    r.config = doc.value("config", json::object());
  } catch (const json::exception& e) {
    throw DataError(std::string("metrics report: ") + e.what());
  }
  return r;
}

GoldIndex::GoldIndex(std::span<const DialogSession> sessions) {
  for (const auto& s : sessions) sessions_[s.id] = &s;
}

const DialogSession& GoldIndex::session(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw DataError("no gold session '" + id + "'");
  return *it->second;
}

const Turn& GoldIndex::turn(const PredictionRecord& r) const {
  const DialogSession& s = session(r.session_id);
  if (r.turn >= s.turns.size() || s.turns[r.turn].speaker != Speaker::wizard)
    throw DataError("record " + r.gold + " does not point at a wizard turn");
  return s.turns[r.turn];
}

namespace {

void score_dst_mode(const std::string& prefix, std::span<const PredictionRecord> recs, const GoldIndex& gold,
                    const Ontology& ontology, MetricsReport& rep) {
  std::vector<DialogState> preds, golds;
  std::vector<std::optional<StateHeader>> ph;
  std::vector<StateHeader> gh;
  std::size_t unparseable = 0, dropped = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per;  // session -> (joint ok, turns)
  for (const auto& r : recs) {
    const Turn& t = gold.turn(r);
    preds.push_back(r.state);
    golds.push_back(t.state);
    ph.push_back(r.header);
    gh.push_back({t.type, t.domain});
    unparseable += !r.report.markers_found;
    dropped += r.report.dropped;
    auto& p = per[r.session_id];
    p.first += flatten_state(r.state) == flatten_state(t.state);
    ++p.second;
  }
  rep.metrics[prefix + "type_acc"] = type_accuracy(ph, gh);
  rep.metrics[prefix + "domain_acc"] = domain_accuracy(ph, gh);
  rep.metrics[prefix + "slot_acc"] = slot_accuracy(preds, golds, ontology, SlotKeys::present);
  rep.metrics[prefix + "slot_acc_ontology"] = slot_accuracy(preds, golds, ontology, SlotKeys::ontology);
  rep.metrics[prefix + "joint_acc"] = joint_accuracy(preds, golds);
  rep.counts[prefix + "turns"] = recs.size();
  rep.counts[prefix + "sessions"] = per.size();
  rep.counts[prefix + "unparseable"] = unparseable;
  rep.counts[prefix + "dropped_segments"] = dropped;
  for (const auto& [id, p] : per) rep.sessions[id][prefix + "joint_acc"] = double(p.first) / double(p.second);
}

void score_generation(std::span<const PredictionRecord> recs, const GoldIndex& gold, const MetricsOptions& opt,
                      MetricsReport& rep) {
  std::vector<Tokens> hyps, refs;
  std::map<std::string, std::vector<PredictionRecord>> per;
  std::size_t unresolved = 0;
  for (const auto& r : recs) {
    hyps.push_back(r.response);
    refs.push_back(gold.turn(r).utterance);
    per[r.session_id].push_back(r);
    unresolved += r.unresolved_placeholders;
  }
  for (int n : opt.bleu_orders) rep.metrics["bleu" + std::to_string(n)] = bleu(hyps, refs, n, opt.bleu_smoothing);
  rep.metrics["meteor"] = meteor(hyps, refs);
  const auto c = cider(hyps, refs);
  rep.metrics["cider"] = c.score;
  if (c.degenerate) rep.flags.push_back("cider: degenerate reference corpus");
  for (int n : opt.distinct_orders) {
    const auto d = distinct_n(hyps, n);
    rep.metrics["dist" + std::to_string(n)] = d.value;
    rep.metrics["dist" + std::to_string(n) + "_utterance"] = distinct_n_per_utterance(hyps, n);
    if (d.flagged) rep.flags.push_back("dist" + std::to_string(n) + ": no n-grams");
  }
  const auto h = hallucination_accuracy(recs);
  rep.metrics["hallu"] = h.value;
  if (h.total == 0) rep.flags.push_back("hallu: no informed values");
  double success = 0;
  for (const auto& [id, rs] : per) {
    const auto& s = gold.session(id);
    const double sc = success_score(rs, s.completed_orders);
    success += sc;
    rep.sessions[id]["success"] = sc;
    rep.sessions[id]["hallu"] = hallucination_accuracy(rs).value;
  }
  rep.metrics["success"] = per.empty() ? 0.0 : success / double(per.size());
  rep.counts["turns"] = recs.size();
  rep.counts["sessions"] = per.size();
  rep.counts["mentions"] = h.total;
  rep.counts["unresolved_placeholders"] = unresolved;
}

}  // namespace

MetricsReport score_records(Task task, std::span<const PredictionRecord> records, const GoldIndex& gold,
                            const Ontology& ontology, const MetricsOptions& options) {
  MetricsReport rep;
  rep.task = std::string(to_string(task));
  rep.config = {{"bleu_smoothing", options.bleu_smoothing},
                {"bleu_orders", options.bleu_orders},
                {"distinct_orders", options.distinct_orders},
                {"meteor", "exact-match"},
                {"cider", "cider-d"}};
  for (const auto& r : records)
    if (r.task != task) throw DataError("record " + r.gold + " belongs to task " + std::string(to_string(r.task)));
  if (records.empty()) throw DataError("score_records: no records for task " + rep.task);

  switch (task) {
    case Task::dst: {
      std::vector<PredictionRecord> rollout, oracle;
      for (const auto& r : records) (r.mode == "oracle-state" ? oracle : rollout).push_back(r);
      if (!rollout.empty()) score_dst_mode("", rollout, gold, ontology, rep);
      if (!oracle.empty()) score_dst_mode(rollout.empty() ? "" : "oracle.", oracle, gold, ontology, rep);
      if (!rollout.empty() && !oracle.empty()) {
        std::map<std::string, std::pair<std::vector<PredictionRecord>, std::vector<PredictionRecord>>> by;
        for (const auto& r : rollout) by[r.session_id].first.push_back(r);
        for (const auto& r : oracle) by[r.session_id].second.push_back(r);
        std::size_t diverged = 0;
        for (const auto& [id, p] : by)
          if (auto d = first_divergence(p.first, p.second)) {
            ++diverged;
            rep.sessions[id]["first_divergence"] = double(*d);
          }
        rep.counts["diverged_sessions"] = diverged;
      }
      break;
    }
    case Task::dap: {
      std::vector<DialogAct> preds, golds;
      std::vector<Tokens> hyps, refs;
      std::size_t unparseable = 0;
      for (const auto& r : records) {
        const Turn& t = gold.turn(r);
        preds.push_back(r.act);
        golds.push_back(t.act);
        hyps.push_back(serialize_act(r.act));
        refs.push_back(serialize_act(t.act));
        unparseable += !r.report.markers_found;
      }
      rep.metrics["act_acc"] = act_accuracy(preds, golds);
      for (int n : options.bleu_orders)
        rep.metrics["bleu" + std::to_string(n)] = bleu(hyps, refs, n, options.bleu_smoothing);
      rep.counts["turns"] = records.size();
      rep.counts["unparseable"] = unparseable;
      break;
    }
    case Task::rg:
    case Task::e2e:
      score_generation(records, gold, options, rep);
      break;
  }
  for (const auto& [k, v] : rep.metrics)
    if (!std::isfinite(v)) throw DataError("metric " + k + " is not finite");
  return rep;
}

const std::vector<std::string>& dst_dap_columns() {
  static const std::vector<std::string> c = {"Type Acc.", "Domain Acc.", "Slot Acc.", "Joint Acc.", "Act Acc.",
                                             "BLEU-1/2"};
  return c;
}

const std::vector<std::string>& generation_columns() {
  static const std::vector<std::string> c = {"BLEU-1/2", "METEOR", "CIDER", "Dist-1/2", "Hallu.", "Suc."};
  return c;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string cell(const std::map<std::string, MetricsReport>& reports, const std::string& task,
                 std::initializer_list<const char*> keys) {
  auto it = reports.find(task);
  if (it == reports.end()) return "-";
  std::string out;
  for (const char* k : keys) {
    auto m = it->second.metrics.find(k);
    if (!out.empty()) out += "/";
    out += m == it->second.metrics.end() ? "-" : fmt(m->second);
  }
  return out;
}

std::string render(const std::string& first, const std::vector<std::string>& columns,
                   const std::vector<std::pair<std::string, std::vector<std::string>>>& rows) {
  std::vector<std::size_t> width(columns.size() + 1);
  width[0] = first.size();
  for (std::size_t c = 0; c < columns.size(); ++c) width[c + 1] = columns[c].size();
  for (const auto& [label, cells] : rows) {
    width[0] = std::max(width[0], label.size());
    for (std::size_t c = 0; c < cells.size(); ++c) width[c + 1] = std::max(width[c + 1], cells[c].size());
  }
  auto line = [&](const std::string& a, const std::vector<std::string>& cs) {
    std::string s = "| " + a + std::string(width[0] - a.size(), ' ') + " |";
    for (std::size_t c = 0; c < cs.size(); ++c) s += " " + cs[c] + std::string(width[c + 1] - cs[c].size(), ' ') + " |";
    return s + "\n";
  };
  std::string out = line(first, columns);
  out += "|";
  for (std::size_t w : width) out += std::string(w + 2, '-') + "|";
  out += "\n";
  for (const auto& [label, cells] : rows) out += line(label, cells);
  return out;
}

}  // namespace

std::string render_dst_dap_table(const std::vector<std::pair<std::string, std::map<std::string, MetricsReport>>>& rows) {
  std::vector<std::pair<std::string, std::vector<std::string>>> body;
  for (const auto& [label, reps] : rows)
    body.push_back({label,
                    {cell(reps, "dst", {"type_acc"}), cell(reps, "dst", {"domain_acc"}), cell(reps, "dst", {"slot_acc"}),
                     cell(reps, "dst", {"joint_acc"}), cell(reps, "dap", {"act_acc"}),
                     cell(reps, "dap", {"bleu1", "bleu2"})}});
  return render("Model", dst_dap_columns(), body);
}

std::string render_generation_table(Task task,
                                    const std::vector<std::pair<std::string, std::map<std::string, MetricsReport>>>& rows) {
  const std::string t(to_string(task));
  std::vector<std::pair<std::string, std::vector<std::string>>> body;
  for (const auto& [label, reps] : rows)
    body.push_back({label,
                    {cell(reps, t, {"bleu1", "bleu2"}), cell(reps, t, {"meteor"}), cell(reps, t, {"cider"}),
                     cell(reps, t, {"dist1", "dist2"}), cell(reps, t, {"hallu"}), cell(reps, t, {"success"})}});
  return render("Model", generation_columns(), body);
}

}  // namespace mixdial
