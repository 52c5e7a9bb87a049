#include "hilmeme/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <tuple>

#include "hilmeme/error.hpp"

namespace hilmeme::analytics {

namespace {

void require_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("length mismatch: " + std::to_string(x.size()) + " vs " +
                              std::to_string(y.size()),
                          {{"y", "must have the same length as x"}});
  }
  if (x.size() < 2) {
    throw ValidationError("at least 2 observations required", {{"x", "n < 2"}});
  }
}

double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

// Exact test; a computed variance can be a rounding residue for equal reals.
bool is_constant(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

SystemReport system_report(std::span<const SegmentJudgement> judgements, std::string_view system_id) {
  SystemReport r;
  r.system_id = system_id;
  double sum = 0.0;
  for (const auto& j : judgements) {
    if (j.system_id != system_id) continue;
    ++r.n_judgements;
    sum += scoring::segment_normalized(j);
    r.tally = scoring::update_tally(r.tally, j);
    for (const auto& m : j.mwe_judgements) {
      for (auto a : m.aspects.members()) ++r.aspect_freq[static_cast<std::size_t>(a)];
    }
  }
  if (r.n_judgements == 0) {
    throw ValidationError("no judgements for system '" + std::string(system_id) + "'",
                          {{"system_id", std::string(system_id)}});
  }
  r.mean_norm = sum / static_cast<double>(r.n_judgements);
  return r;
}

std::vector<SystemReport> system_reports(std::span<const SegmentJudgement> judgements) {
  std::set<std::string> systems;
  for (const auto& j : judgements) systems.insert(j.system_id);
  std::vector<SystemReport> out;
  for (const auto& s : systems) out.push_back(system_report(judgements, s));
  return out;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Pearson: return "pearson";
    case Method::Spearman: return "spearman";
    case Method::Kendall: return "kendall";
  }
  return "unknown";
}

std::string_view to_string(Level l) { return l == Level::System ? "system" : "segment"; }

Method parse_method(std::string_view name) {
  for (auto m : {Method::Pearson, Method::Spearman, Method::Kendall}) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("unknown correlation method '" + std::string(name) + "'",
                        {{"method", "expected pearson, spearman or kendall"}});
}

Level parse_level(std::string_view name) {
  if (name == "system") return Level::System;
  if (name == "segment") return Level::Segment;
  throw ValidationError("unknown correlation level '" + std::string(name) + "'",
                        {{"level", "expected system or segment"}});
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const bool x_const = is_constant(x);
  if (x_const || is_constant(y)) {
    throw ValidationError("constant vector: correlation undefined",
                          {{x_const ? "x" : "y", "zero variance"}});
  }
  return clamp_unit(sxy / std::sqrt(sxx * syy));
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share rank mean(i+1 .. j+1)
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y);
  auto rx = fractional_ranks(x);
  auto ry = fractional_ranks(y);
  return pearson(rx, ry);
}

double kendall(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y);
  const std::size_t n = x.size();
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int sx = sign(x[j] - x[i]);
      const int sy = sign(y[j] - y[i]);
      if (sx == 0) ++ties_x;
      if (sy == 0) ++ties_y;
      if (sx == 0 || sy == 0) continue;
      if (sx == sy) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const long long pairs = static_cast<long long>(n * (n - 1) / 2);
  const long long dx = pairs - ties_x;
  const long long dy = pairs - ties_y;
  if (dx == 0 || dy == 0) {
    throw ValidationError("all-tied vector: tau-b undefined", {{dx == 0 ? "x" : "y", "all tied"}});
  }
  const double denom = std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
  return clamp_unit(static_cast<double>(concordant - discordant) / denom);
}

double correlate(Method m, std::span<const double> x, std::span<const double> y) {
  switch (m) {
    case Method::Pearson: return pearson(x, y);
    case Method::Spearman: return spearman(x, y);
    case Method::Kendall: return kendall(x, y);
  }
  return 0.0;
}

ScoreMap system_level_scores(std::span<const SegmentJudgement> judgements) {
  ScoreMap out;
  for (const auto& r : system_reports(judgements)) out[{r.system_id, ""}] = r.mean_norm;
  return out;
}

ScoreMap segment_level_scores(std::span<const SegmentJudgement> judgements) {
  std::map<ScoreKey, std::pair<double, std::size_t>> acc;
  for (const auto& j : judgements) {
    auto& [sum, count] = acc[{j.system_id, j.item_id}];
    sum += scoring::segment_normalized(j);
    ++count;
  }
  ScoreMap out;
  for (const auto& [key, v] : acc) out[key] = v.first / static_cast<double>(v.second);
  return out;
}

CorrelationResult metric_correlation(const ScoreMap& human, const ScoreMap& metric, Level level,
                                     Method method) {
  CorrelationResult r;
  r.method = method;
  r.level = level;
  std::vector<double> hx, my;
  for (const auto& [key, h] : human) {
    auto it = metric.find(key);
    if (it == metric.end()) {
      ++r.human_only;
      continue;
    }
    hx.push_back(h);
    my.push_back(it->second);
  }
  r.metric_only = metric.size() - hx.size();
  r.n = hx.size();
  if (r.n < 2) {
    throw ValidationError("insufficient overlap: " + std::to_string(r.n) +
                              " shared keys between human and metric scores (need 2)",
                          {{"metric", "key sets share fewer than 2 keys"}});
  }
  r.coefficient = correlate(method, hx, my);
  return r;
}

AgreementReport agreement(std::span<const SegmentJudgement> judgements) {
  std::map<std::string, std::map<corpus::WorkUnit, const SegmentJudgement*>> by_assessor;
  for (const auto& j : judgements) {
    by_assessor[j.assessor_id].emplace(corpus::WorkUnit{j.item_id, j.system_id}, &j);
  }
  if (by_assessor.size() < 2) {
    throw ValidationError("agreement needs at least 2 assessors", {{"judgements", "single assessor"}});
  }

  AgreementReport rep;
  double score_sum = 0.0, cat_sum = 0.0;
  std::size_t score_pairs = 0, cat_pairs = 0;
  for (auto a = by_assessor.begin(); a != by_assessor.end(); ++a) {
    for (auto b = std::next(a); b != by_assessor.end(); ++b) {
      std::vector<double> sa, sb;
      std::size_t matches = 0, spans = 0;
      for (const auto& [unit, ja] : a->second) {
        auto it = b->second.find(unit);
        if (it == b->second.end()) continue;
        const auto* jb = it->second;
        sa.push_back(scoring::segment_normalized(*ja));
        sb.push_back(scoring::segment_normalized(*jb));
        for (const auto& ma : ja->mwe_judgements) {
          for (const auto& mb : jb->mwe_judgements) {
            if (mb.span_id != ma.span_id) continue;
            ++spans;
            if (mb.category == ma.category) ++matches;
          }
        }
      }
      if (sa.size() < 2) {
        rep.skipped.push_back({a->first, b->first,
                               "fewer than 2 shared units (" + std::to_string(sa.size()) + ")"});
        continue;
      }
      ++rep.pairs_used;
      try {
        score_sum += pearson(sa, sb);
        ++score_pairs;
      } catch (const ValidationError&) {
        rep.skipped.push_back({a->first, b->first, "constant scores: pearson undefined"});
      }
      if (spans > 0) {
        cat_sum += static_cast<double>(matches) / static_cast<double>(spans);
        ++cat_pairs;
      }
    }
  }
  if (rep.pairs_used == 0) {
    throw ValidationError("no assessor pair shares at least 2 units", {{"judgements", "no co-judged units"}});
  }
  if (score_pairs > 0) rep.score_agreement = score_sum / static_cast<double>(score_pairs);
  if (cat_pairs > 0) rep.category_agreement = cat_sum / static_cast<double>(cat_pairs);
  return rep;
}

std::string_view to_string(TermKind k) {
  switch (k) {
    case TermKind::Reference: return "reference";
    case TermKind::Alternative: return "alternative";
    case TermKind::Plain: return "plain";
  }
  return "unknown";
}

std::vector<TermBankEntry> extract_term_bank(std::span<const SegmentJudgement> judgements,
                                             std::span<const corpus::EvaluationItem> items,
                                             double plain_threshold) {
  using Key = std::tuple<std::string, std::string, TermKind>;
  std::map<Key, std::vector<std::string>> merged;

  std::map<std::string, const corpus::EvaluationItem*> by_id;
  for (const auto& item : items) {
    by_id.emplace(item.item_id, &item);
    for (const auto& span : item.mwe_spans) {
      for (const auto& ref : span.reference_renderings) {
        auto target = corpus::normalize_whitespace(ref);
        if (target.empty()) continue;
        merged[{corpus::normalize_whitespace(span.surface), target, TermKind::Reference}].push_back(
            "corpus:" + item.item_id + "/" + span.span_id);
      }
    }
  }

  for (const auto& j : judgements) {
    auto it = by_id.find(j.item_id);
    if (it == by_id.end()) continue;
    for (const auto& m : j.mwe_judgements) {
      const auto* span = it->second->find_span(m.span_id);
      if (!span || !m.captured_rendering) continue;
      TermKind kind;
      if (m.category == scoring::MweCategory::AltMwe) {
        kind = TermKind::Alternative;
      } else if (m.category == scoring::MweCategory::NonMwe && m.score >= plain_threshold) {
        kind = TermKind::Plain;
      } else {
        continue;
      }
      auto target = corpus::normalize_whitespace(*m.captured_rendering);
      if (target.empty()) continue;
      merged[{corpus::normalize_whitespace(span->surface), target, kind}].push_back(
          j.assessor_id + "/" + j.item_id + "/" + j.system_id + "/" + m.span_id);
    }
  }

  std::vector<TermBankEntry> out;
  out.reserve(merged.size());
  for (auto& [key, evidence] : merged) {
    std::sort(evidence.begin(), evidence.end());
    TermBankEntry e;
    std::tie(e.source_mwe, e.target_rendering, e.kind) = key;
    e.count = evidence.size();
    e.evidence = std::move(evidence);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace hilmeme::analytics
