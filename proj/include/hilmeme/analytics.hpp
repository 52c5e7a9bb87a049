#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hilmeme/corpus.hpp"
#include "hilmeme/scoring.hpp"

namespace hilmeme::analytics {

using scoring::SegmentJudgement;

struct SystemReport {
  std::string system_id;
  std::size_t n_judgements = 0;
  double mean_norm = 0.0;
  scoring::Tally tally;
  /// Indexed by scoring::Aspect (Sem, Gra, Idi, Amb).
  std::array<std::size_t, 4> aspect_freq{};

  bool operator==(const SystemReport&) const = default;
};

/// Aggregates every judgement of `system_id`. Normalized scores are recomputed
/// from the stored judgements. Throws ValidationError when there are none.
SystemReport system_report(std::span<const SegmentJudgement> judgements, std::string_view system_id);

/// One report per judged system, sorted by system_id.
std::vector<SystemReport> system_reports(std::span<const SegmentJudgement> judgements);

// ---------------------------------------------------------------------------
// Correlation

enum class Method { Pearson, Spearman, Kendall };
enum class Level { System, Segment };

std::string_view to_string(Method m);
std::string_view to_string(Level l);
Method parse_method(std::string_view name);
Level parse_level(std::string_view name);

/// Sample Pearson product-moment coefficient. Throws ValidationError on a
/// length mismatch, fewer than 2 points, or a constant vector.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; ties share the average of the positions they occupy.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Pearson of fractional ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Tau-b. Throws ValidationError on length mismatch, n < 2, or an all-tied vector.
double kendall(std::span<const double> x, std::span<const double> y);

double correlate(Method m, std::span<const double> x, std::span<const double> y);

/// Key of a human or metric score: system-level keys leave item_id empty.
struct ScoreKey {
  std::string system_id;
  std::string item_id;

  auto operator<=>(const ScoreKey&) const = default;
};

using ScoreMap = std::map<ScoreKey, double>;

struct CorrelationResult {
  Method method = Method::Pearson;
  Level level = Level::System;
  double coefficient = 0.0;
  std::size_t n = 0;
  /// Keys present on one side only.
  std::size_t human_only = 0;
  std::size_t metric_only = 0;
};

/// Per-system mean normalized score (item_id empty).
ScoreMap system_level_scores(std::span<const SegmentJudgement> judgements);

/// Per-(system, item) normalized score averaged over assessors.
ScoreMap segment_level_scores(std::span<const SegmentJudgement> judgements);

/// Correlates over the sorted key intersection. Throws ValidationError when
/// fewer than 2 keys are shared.
CorrelationResult metric_correlation(const ScoreMap& human, const ScoreMap& metric, Level level,
                                     Method method);

// ---------------------------------------------------------------------------
// Agreement

struct SkippedPair {
  std::string assessor_a;
  std::string assessor_b;
  std::string reason;
};

struct AgreementReport {
  /// Mean pairwise Pearson of normalized scores; absent when no pair has
  /// non-constant score vectors.
  std::optional<double> score_agreement;
  /// Mean over pairs of the exact category match rate on co-judged spans.
  std::optional<double> category_agreement;
  std::size_t pairs_used = 0;
  std::vector<SkippedPair> skipped;
};

/// Throws ValidationError when no assessor pair shares at least 2 units.
AgreementReport agreement(std::span<const SegmentJudgement> judgements);

// ---------------------------------------------------------------------------
// Term bank

enum class TermKind { Reference, Alternative, Plain };

std::string_view to_string(TermKind k);

struct TermBankEntry {
  std::string source_mwe;
  std::string target_rendering;
  TermKind kind = TermKind::Reference;
  std::size_t count = 0;
  /// Sorted. Judgement evidence is "assessor/item/system/span"; reference
  /// entries cite their corpus annotation as "corpus:item/span".
  std::vector<std::string> evidence;

  bool operator==(const TermBankEntry&) const = default;
};

/// Reference renderings from the corpus, AltMwe captures, and NonMwe captures
/// scored at or above `plain_threshold`, merged by (source, rendering, kind)
/// and sorted by that key.
std::vector<TermBankEntry> extract_term_bank(std::span<const SegmentJudgement> judgements,
                                             std::span<const corpus::EvaluationItem> items,
                                             double plain_threshold = 8.0);

}  // namespace hilmeme::analytics
