// Copyright 2026 The qintent Authors.
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
#include "qintent/evaluation.h"

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "qintent/error.h"
#include "qintent/text.h"

namespace qintent {

using json = nlohmann::json;

Metrics Metrics::FromCounts(const Counts &counts) {
  Metrics m;
  m.counts = counts;
  const double predicted = counts.tp + counts.fp;
  const double support = counts.tp + counts.fn;
  m.precision = predicted > 0 ? counts.tp / predicted : 0.0;
  m.recall = support > 0 ? counts.tp / support : 0.0;
  m.f1 = m.precision + m.recall > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

namespace {

MetricsView Finish(const std::vector<Counts> &cells) {
  MetricsView view;
  Counts pooled;
  for (const Counts &c : cells) {
    view.per_entity.push_back(Metrics::FromCounts(c));
    pooled += c;
  }
  view.micro = Metrics::FromCounts(pooled);
  return view;
}

void CheckSameIds(const AnnotationStore &gold, const AnnotationStore &pred) {
  std::vector<std::string> only_gold, only_pred;
  for (const auto &[id, a] : gold) {
    if (!pred.count(id)) only_gold.push_back(id);
  }
  for (const auto &[id, a] : pred) {
    if (!gold.count(id)) only_pred.push_back(id);
  }
  if (only_gold.empty() && only_pred.empty()) return;
  std::string msg = "query ids differ;";
  if (!only_gold.empty()) msg += " only in gold: " + Join(only_gold, ",") + ";";
  if (!only_pred.empty()) msg += " only in pred: " + Join(only_pred, ",") + ";";
  throw Error(ErrorKind::kIdMismatch, msg);
}

}  // namespace

EvalReport ComputeMetrics(const AnnotationStore &gold, const AnnotationStore &pred,
                          const EntityRegistry &registry, const FrequencyMap &frequencies) {
  CheckSameIds(gold, pred);
  const size_t num_e = registry.size();
  std::vector<Counts> plain(num_e), weighted(num_e);
  for (const auto &[id, gold_ann] : gold) {
    const Annotation &pred_ann = pred.at(id);
    auto fit = frequencies.find(id);
    const double w = fit == frequencies.end() ? 1.0 : static_cast<double>(fit->second);
    for (size_t e = 0; e < num_e; ++e) {
      const EntityId entity(static_cast<int>(e));
      const bool g = gold_ann.Contains(entity);
      const bool p = pred_ann.Contains(entity);
      if (g && p) {
        plain[e].tp += 1;
        weighted[e].tp += w;
      } else if (p) {
        plain[e].fp += 1;
        weighted[e].fp += w;
      } else if (g) {
        plain[e].fn += 1;
        weighted[e].fn += w;
      }
    }
    for (const auto &[entity, c] : gold_ann.entries()) {
      if (static_cast<size_t>(entity.index()) >= num_e) {
        throw Error(ErrorKind::kOutOfRange, "gold entity outside registry");
      }
    }
    for (const auto &[entity, c] : pred_ann.entries()) {
      if (static_cast<size_t>(entity.index()) >= num_e) {
        throw Error(ErrorKind::kOutOfRange, "predicted entity outside registry");
      }
    }
  }
  EvalReport report;
  report.entity_ids = registry.Ids();
  report.unweighted = Finish(plain);
  report.weighted = Finish(weighted);
  return report;
}

std::optional<double> RelativeGain(double candidate, double baseline) {
  if (baseline == 0.0) return std::nullopt;
  return (candidate - baseline) / baseline * 100.0;
}

namespace {

MetricGain Gain(const Metrics &c, const Metrics &b) {
  return {RelativeGain(c.precision, b.precision), RelativeGain(c.recall, b.recall),
          RelativeGain(c.f1, b.f1)};
}

GainView Gain(const MetricsView &c, const MetricsView &b) {
  GainView out;
  for (size_t e = 0; e < c.per_entity.size(); ++e) {
    out.per_entity.push_back(Gain(c.per_entity[e], b.per_entity[e]));
  }
  out.micro = Gain(c.micro, b.micro);
  return out;
}

}  // namespace

GainReport RelativeGain(const EvalReport &candidate, const EvalReport &baseline) {
  if (candidate.entity_ids != baseline.entity_ids) {
    throw Error(ErrorKind::kRegistryMismatch, "reports cover different entities");
  }
  GainReport out;
  out.entity_ids = candidate.entity_ids;
  out.unweighted = Gain(candidate.unweighted, baseline.unweighted);
  out.weighted = Gain(candidate.weighted, baseline.weighted);
  return out;
}

double MatchedResult::headline() const {
  const Metrics &micro = report.view(weighted).micro;
  return mode == MatchMode::kMatchPrecision ? micro.recall : micro.precision;
}

MatchedResult MatchedOperatingPoint(const std::vector<std::string> &query_ids,
                                    const std::vector<std::vector<double>> &probs,
                                    const AnnotationStore &gold,
                                    const EvalReport &baseline, MatchMode mode,
                                    const EntityRegistry &registry,
                                    const FrequencyMap *frequencies) {
  if (query_ids.empty() || probs.empty()) {
    throw Error(ErrorKind::kEmpty, "matched operating point needs queries");
  }
  if (query_ids.size() != probs.size()) {
    throw Error(ErrorKind::kShapeMismatch, "one probability row per query required");
  }
  const size_t num_e = registry.size();
  if (baseline.entity_ids != registry.Ids()) {
    throw Error(ErrorKind::kRegistryMismatch, "baseline report registry differs");
  }
  MatchedResult result;
  result.mode = mode;
  result.weighted = frequencies != nullptr;
  const MetricsView &base = baseline.view(result.weighted);

  std::vector<std::vector<uint8_t>> labels;
  std::vector<double> weights;
  AnnotationStore gold_subset;
  for (size_t i = 0; i < query_ids.size(); ++i) {
    auto it = gold.find(query_ids[i]);
    if (it == gold.end()) {
      throw Error(ErrorKind::kIdMismatch, "no gold annotation for " + query_ids[i]);
    }
    if (probs[i].size() != num_e) {
      throw Error(ErrorKind::kShapeMismatch, "probability row length differs from registry");
    }
    labels.push_back(LabelIndicator(it->second, num_e, Confidence::kLow));
    gold_subset[query_ids[i]] = it->second;
    if (frequencies) {
      auto f = frequencies->find(query_ids[i]);
      weights.push_back(f == frequencies->end() ? 1.0 : static_cast<double>(f->second));
    }
  }

  TuneMode tune;
  tune.kind = mode == MatchMode::kMatchRecall ? TuneKind::kMatchRecall
                                              : TuneKind::kMatchPrecision;
  for (size_t e = 0; e < num_e; ++e) {
    const Metrics &b = base.per_entity[e];
    if (mode == MatchMode::kMatchRecall) {
      tune.targets.push_back(b.recall);
    } else {
      const bool predicted = b.counts.tp + b.counts.fp > 0;
      tune.targets.push_back(predicted ? b.precision : 1.0);
    }
  }
  result.targets = tune.targets;
  result.choices = TuneThresholds(probs, labels, weights, tune);

  AnnotationStore pred;
  for (size_t i = 0; i < query_ids.size(); ++i) {
    Annotation a;
    for (size_t e = 0; e < num_e; ++e) {
      if (probs[i][e] >= result.choices[e].threshold) {
        a.Set(EntityId(static_cast<int>(e)), Confidence::kHigh);
      }
    }
    pred[query_ids[i]] = std::move(a);
  }
  result.report = ComputeMetrics(gold_subset, pred, registry,
                                 frequencies ? *frequencies : FrequencyMap{});
  result.report.reference = baseline.reference;
  return result;
}

namespace {

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

json MetricsJson(const Metrics &m) {
  return {{"tp", m.counts.tp},        {"fp", m.counts.fp},
          {"fn", m.counts.fn},        {"precision", m.precision},
          {"recall", m.recall},       {"f1", m.f1}};
}

json GainJson(const MetricGain &g) {
  auto val = [](const std::optional<double> &v) -> json {
    return v ? json(*v) : json("undefined");
  };
  return {{"precision", val(g.precision)}, {"recall", val(g.recall)}, {"f1", val(g.f1)}};
}

}  // namespace

void WriteReportTable(std::ostream &out, const EvalReport &report) {
  size_t width = 6;
  for (const auto &id : report.entity_ids) width = std::max(width, id.size());
  auto row = [&](const std::string &name, const Metrics &u, const Metrics &w) {
    out << std::left << std::setw(static_cast<int>(width)) << name << std::right;
    for (const Metrics *m : {&u, &w}) {
      out << "  " << std::setw(7) << Fixed(m->precision) << ' ' << std::setw(7)
          << Fixed(m->recall) << ' ' << std::setw(7) << Fixed(m->f1);
    }
    out << '\n';
  };
  out << std::left << std::setw(static_cast<int>(width)) << "entity" << std::right;
  for (const char *tag : {"", "w"}) {
    out << "  " << std::setw(7) << std::string(tag) + "P" << ' ' << std::setw(7)
        << std::string(tag) + "R" << ' ' << std::setw(7) << std::string(tag) + "F1";
  }
  out << '\n';
  for (size_t e = 0; e < report.entity_ids.size(); ++e) {
    row(report.entity_ids[e], report.unweighted.per_entity[e], report.weighted.per_entity[e]);
  }
  row("micro", report.unweighted.micro, report.weighted.micro);
}

void WriteReportJsonl(std::ostream &out, const EvalReport &report) {
  for (size_t e = 0; e < report.entity_ids.size(); ++e) {
    out << json{{"entity", report.entity_ids[e]},
                {"reference", report.reference},
                {"candidate", report.candidate},
                {"unweighted", MetricsJson(report.unweighted.per_entity[e])},
                {"weighted", MetricsJson(report.weighted.per_entity[e])}}
               .dump()
        << '\n';
  }
  out << json{{"entity", "micro"},
              {"reference", report.reference},
              {"candidate", report.candidate},
              {"unweighted", MetricsJson(report.unweighted.micro)},
              {"weighted", MetricsJson(report.weighted.micro)}}
             .dump()
      << '\n';
}

void WriteGainJsonl(std::ostream &out, const GainReport &gains) {
  for (size_t e = 0; e < gains.entity_ids.size(); ++e) {
    out << json{{"entity", gains.entity_ids[e]},
                {"unweighted", GainJson(gains.unweighted.per_entity[e])},
                {"weighted", GainJson(gains.weighted.per_entity[e])}}
               .dump()
        << '\n';
  }
  out << json{{"entity", "micro"},
              {"unweighted", GainJson(gains.unweighted.micro)},
              {"weighted", GainJson(gains.weighted.micro)}}
             .dump()
      << '\n';
}

}  // namespace qintent
