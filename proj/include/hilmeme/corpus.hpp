#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hilmeme::corpus {

/// A highlighted multi-word expression in a source segment, addressed by
/// token offsets [token_start, token_end).
struct MweSpan {
  std::string span_id;
  std::size_t token_start = 0;
  std::size_t token_end = 0;
  std::string surface;
  std::vector<std::string> reference_renderings;

  bool operator==(const MweSpan&) const = default;
};

struct EvaluationItem {
  std::string item_id;
  std::string source_text;
  std::vector<std::string> source_tokens;
  std::string reference_text;
  std::vector<MweSpan> mwe_spans;
  std::optional<std::string> domain_tag;

  const MweSpan* find_span(std::string_view span_id) const;

  bool operator==(const EvaluationItem&) const = default;
};

struct SystemOutput {
  std::string system_id;
  std::string item_id;
  std::string hypothesis_text;

  bool operator==(const SystemOutput&) const = default;
};

/// One (item, system output) pair awaiting judgement.
struct WorkUnit {
  std::string item_id;
  std::string system_id;

  auto operator<=>(const WorkUnit&) const = default;
};

enum class Format { Tsv, JsonLines };

Format parse_format(std::string_view name);

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  EmptyItemId,
  EmptySpanId,
  DuplicateSpanId,
  EmptySpan,
  SpanOutOfBounds,
  OverlappingSpans,
  EmptyReferenceRenderings,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::vector<std::string> span_ids;
  std::string message;
};

/// Lists every type-invariant violation of `item`; empty means valid.
/// Spans that are empty or out of bounds are excluded from the overlap check,
/// so one corrupted field yields one violation class.
std::vector<Violation> validate_item(const EvaluationItem& item);

// ---------------------------------------------------------------------------
// Ingestion

std::vector<std::string> whitespace_tokenize(std::string_view text);

/// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// True when `surface` matches the tokens it covers, either space-joined or
/// (for unsegmented scripts) concatenated with all whitespace removed.
bool surface_matches_tokens(std::string_view surface, const std::vector<std::string>& tokens,
                            std::size_t begin, std::size_t end);

/// Parses a corpus file. Items come back in file order with every invariant
/// checked; the first failure throws ParseError with its 1-based line.
/// Blank lines are skipped. A TSV header row starting with "item_id" is skipped.
std::vector<EvaluationItem> ingest_corpus(std::string_view content, Format format);

/// Inverse of ingest_corpus. TSV cannot carry explicit tokens, so items whose
/// tokens differ from the whitespace split are rejected in that format.
std::string serialize_corpus(const std::vector<EvaluationItem>& items, Format format);

/// System output file: json-lines {system_id, item_id, hypothesis}.
std::vector<SystemOutput> ingest_outputs(std::string_view content);
std::string serialize_outputs(const std::vector<SystemOutput>& outputs);

// ---------------------------------------------------------------------------
// Binding

struct CoverageGap {
  std::string system_id;
  std::vector<std::string> missing_item_ids;
};

struct Binding {
  /// Systems sorted by id, items in corpus order within each system.
  std::vector<WorkUnit> queue;
  std::vector<CoverageGap> gaps;
};

/// Binds outputs to items. Throws ValidationError on an output naming an
/// unknown item or on a duplicated (system_id, item_id).
Binding bind_outputs(const std::vector<EvaluationItem>& items,
                     const std::vector<SystemOutput>& outputs);

}  // namespace hilmeme::corpus
