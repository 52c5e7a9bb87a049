#include "hilmeme/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "hilmeme/error.hpp"
#include "hilmeme/json_io.hpp"
#include "json.hpp"

namespace hilmeme::corpus {

using nlohmann::json;

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end,
                 std::string_view sep) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += sep;
    out += tokens[i];
  }
  return out;
}

std::string strip_all_space(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (!is_space(c)) out += c;
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view content) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string_view::npos) {
      if (pos < content.size()) lines.emplace_back(content.substr(pos));
      break;
    }
    lines.emplace_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  for (auto& line : lines) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  return lines;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), is_space);
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::size_t require_index(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw ParseError(line, std::string("field '") + key + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

std::vector<MweSpan> parse_spans(const json& mwes, std::size_t line) {
  if (!mwes.is_array()) throw ParseError(line, "field 'mwes' must be an array");
  std::vector<MweSpan> spans;
  for (const auto& m : mwes) {
    if (!m.is_object()) throw ParseError(line, "mwe entry must be an object");
    MweSpan span;
    span.span_id = require_string(m, "id", line);
    span.token_start = require_index(m, "start", line);
    span.token_end = require_index(m, "end", line);
    if (auto it = m.find("surface"); it != m.end()) {
      if (!it->is_string()) throw ParseError(line, "field 'surface' must be a string");
      span.surface = it->get<std::string>();
    }
    auto refs = m.find("refs");
    if (refs == m.end() || !refs->is_array()) {
      throw ParseError(line, "mwe '" + span.span_id + "': field 'refs' must be an array");
    }
    for (const auto& r : *refs) {
      if (!r.is_string()) throw ParseError(line, "mwe '" + span.span_id + "': refs must be strings");
      span.reference_renderings.push_back(r.get<std::string>());
    }
    spans.push_back(std::move(span));
  }
  return spans;
}

json spans_to_json(const std::vector<MweSpan>& spans) {
  json arr = json::array();
  for (const auto& s : spans) {
    arr.push_back({{"id", s.span_id},
                   {"start", s.token_start},
                   {"end", s.token_end},
                   {"surface", s.surface},
                   {"refs", s.reference_renderings}});
  }
  return arr;
}

// Violations become ParseErrors at ingestion; the message leads with the
// violation class so callers can match on it.
void check_item(EvaluationItem& item, std::size_t line) {
  for (auto& span : item.mwe_spans) {
    if (span.surface.empty() && span.token_start < span.token_end &&
        span.token_end <= item.source_tokens.size()) {
      span.surface = join(item.source_tokens, span.token_start, span.token_end, " ");
    }
  }
  auto violations = validate_item(item);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw ParseError(line, "item '" + item.item_id + "': " + v.message);
  }
  for (const auto& span : item.mwe_spans) {
    if (!surface_matches_tokens(span.surface, item.source_tokens, span.token_start,
                                span.token_end)) {
      throw ParseError(line, "item '" + item.item_id + "': surface mismatch for span '" +
                                 span.span_id + "': '" + span.surface + "' vs tokens '" +
                                 join(item.source_tokens, span.token_start, span.token_end, " ") +
                                 "'");
    }
  }
}

EvaluationItem record_from_json(const json& rec, std::size_t line) {
  if (!rec.is_object()) throw ParseError(line, "record must be a json object");
  EvaluationItem item;
  item.item_id = require_string(rec, "item_id", line);
  item.source_text = require_string(rec, "source", line);
  item.reference_text = require_string(rec, "reference", line);
  if (auto it = rec.find("tokens"); it != rec.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError(line, "field 'tokens' must be an array");
    for (const auto& t : *it) {
      if (!t.is_string()) throw ParseError(line, "tokens must be strings");
      item.source_tokens.push_back(t.get<std::string>());
    }
  } else {
    item.source_tokens = whitespace_tokenize(item.source_text);
  }
  if (auto it = rec.find("mwes"); it != rec.end()) item.mwe_spans = parse_spans(*it, line);
  if (auto it = rec.find("domain"); it != rec.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError(line, "field 'domain' must be a string");
    item.domain_tag = it->get<std::string>();
  }
  return item;
}

EvaluationItem parse_json_record(const std::string& text, std::size_t line) {
  json rec;
  try {
    rec = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line, std::string("malformed json: ") + e.what());
  }
  return record_from_json(rec, line);
}

json record_to_json(const EvaluationItem& item) {
  json rec = {{"item_id", item.item_id},
              {"source", item.source_text},
              {"reference", item.reference_text},
              {"tokens", item.source_tokens},
              {"mwes", spans_to_json(item.mwe_spans)}};
  if (item.domain_tag) rec["domain"] = *item.domain_tag;
  return rec;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t pos = 0;
  while (true) {
    auto tab = line.find('\t', pos);
    cols.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  return cols;
}

EvaluationItem parse_tsv_record(const std::string& text, std::size_t line) {
  auto cols = split_tabs(text);
  if (cols.size() < 4 || cols.size() > 5) {
    throw ParseError(line, "expected 4 or 5 tab-separated columns, got " +
                               std::to_string(cols.size()));
  }
  EvaluationItem item;
  item.item_id = cols[0];
  item.source_text = cols[1];
  item.reference_text = cols[2];
  item.source_tokens = whitespace_tokenize(item.source_text);
  json mwes;
  try {
    mwes = cols[3].empty() ? json::array() : json::parse(cols[3]);
  } catch (const json::parse_error& e) {
    throw ParseError(line, std::string("malformed mwes column: ") + e.what());
  }
  item.mwe_spans = parse_spans(mwes, line);
  if (cols.size() == 5 && !cols[4].empty()) item.domain_tag = cols[4];
  return item;
}

bool has_tab_or_newline(std::string_view s) {
  return s.find_first_of("\t\n\r") != std::string_view::npos;
}

}  // namespace

const MweSpan* EvaluationItem::find_span(std::string_view span_id) const {
  for (const auto& s : mwe_spans) {
    if (s.span_id == span_id) return &s;
  }
  return nullptr;
}

Format parse_format(std::string_view name) {
  if (name == "tsv") return Format::Tsv;
  if (name == "jsonl" || name == "json-lines" || name == "jsonlines") return Format::JsonLines;
  throw ValidationError("unknown corpus format '" + std::string(name) + "'",
                        {{"format", "expected tsv or jsonl"}});
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::EmptyItemId: return "empty item_id";
    case ViolationKind::EmptySpanId: return "empty span_id";
    case ViolationKind::DuplicateSpanId: return "duplicate span_id";
    case ViolationKind::EmptySpan: return "empty span";
    case ViolationKind::SpanOutOfBounds: return "span out of bounds";
    case ViolationKind::OverlappingSpans: return "overlapping spans";
    case ViolationKind::EmptyReferenceRenderings: return "empty reference_renderings";
  }
  return "unknown";
}

std::vector<Violation> validate_item(const EvaluationItem& item) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind kind, std::vector<std::string> ids, std::string detail) {
    std::string msg(to_string(kind));
    if (!detail.empty()) msg += ": " + detail;
    out.push_back({kind, std::move(ids), std::move(msg)});
  };

  if (item.item_id.empty()) add(ViolationKind::EmptyItemId, {}, "");

  const std::size_t n_tokens = item.source_tokens.size();
  std::set<std::string> seen_ids;
  std::vector<const MweSpan*> in_bounds;
  for (const auto& span : item.mwe_spans) {
    if (span.span_id.empty()) {
      add(ViolationKind::EmptySpanId, {}, "");
    } else if (!seen_ids.insert(span.span_id).second) {
      add(ViolationKind::DuplicateSpanId, {span.span_id}, "'" + span.span_id + "'");
    }
    const std::string range =
        "'" + span.span_id + "' (" + std::to_string(span.token_start) + ", " +
        std::to_string(span.token_end) + ")";
    if (span.token_start >= span.token_end) {
      add(ViolationKind::EmptySpan, {span.span_id}, range);
    } else if (span.token_end > n_tokens) {
      add(ViolationKind::SpanOutOfBounds, {span.span_id},
          range + " exceeds " + std::to_string(n_tokens) + " tokens");
    } else {
      in_bounds.push_back(&span);
    }
    if (span.reference_renderings.empty()) {
      add(ViolationKind::EmptyReferenceRenderings, {span.span_id}, "'" + span.span_id + "'");
    }
  }

  for (std::size_t i = 0; i < in_bounds.size(); ++i) {
    for (std::size_t j = i + 1; j < in_bounds.size(); ++j) {
      const auto& a = *in_bounds[i];
      const auto& b = *in_bounds[j];
      if (a.token_start < b.token_end && b.token_start < a.token_end) {
        add(ViolationKind::OverlappingSpans, {a.span_id, b.span_id},
            "'" + a.span_id + "' and '" + b.span_id + "'");
      }
    }
  }
  return out;
}

std::vector<std::string> whitespace_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string normalize_whitespace(std::string_view text) {
  auto tokens = whitespace_tokenize(text);
  return join(tokens, 0, tokens.size(), " ");
}

bool surface_matches_tokens(std::string_view surface, const std::vector<std::string>& tokens,
                            std::size_t begin, std::size_t end) {
  if (begin >= end || end > tokens.size()) return false;
  if (normalize_whitespace(surface) == join(tokens, begin, end, " ")) return true;
  return strip_all_space(surface) == strip_all_space(join(tokens, begin, end, ""));
}

std::vector<EvaluationItem> ingest_corpus(std::string_view content, Format format) {
  std::vector<EvaluationItem> items;
  std::set<std::string> ids;
  auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& text = lines[i];
    const std::size_t line_no = i + 1;
    if (is_blank(text)) continue;
    if (format == Format::Tsv && items.empty() && text.rfind("item_id\t", 0) == 0) continue;
    auto item = format == Format::Tsv ? parse_tsv_record(text, line_no)
                                      : parse_json_record(text, line_no);
    check_item(item, line_no);
    if (!ids.insert(item.item_id).second) {
      throw ParseError(line_no, "duplicate item_id '" + item.item_id + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::string serialize_corpus(const std::vector<EvaluationItem>& items, Format format) {
  std::ostringstream out;
  for (const auto& item : items) {
    if (format == Format::JsonLines) {
      out << record_to_json(item).dump() << '\n';
      continue;
    }
    if (item.source_tokens != whitespace_tokenize(item.source_text)) {
      throw ValidationError("item '" + item.item_id + "' has explicit tokens; TSV cannot carry them",
                            {{"tokens", "use json-lines"}});
    }
    if (has_tab_or_newline(item.item_id) || has_tab_or_newline(item.source_text) ||
        has_tab_or_newline(item.reference_text) ||
        (item.domain_tag && has_tab_or_newline(*item.domain_tag))) {
      throw ValidationError("item '" + item.item_id + "' contains tabs or newlines",
                            {{"item", "not representable in TSV"}});
    }
    out << item.item_id << '\t' << item.source_text << '\t' << item.reference_text << '\t'
        << spans_to_json(item.mwe_spans).dump();
    if (item.domain_tag) out << '\t' << *item.domain_tag;
    out << '\n';
  }
  return out.str();
}

std::vector<SystemOutput> ingest_outputs(std::string_view content) {
  std::vector<SystemOutput> outputs;
  auto lines = split_lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const std::size_t line_no = i + 1;
    json rec;
    try {
      rec = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed json: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError(line_no, "record must be a json object");
    outputs.push_back({require_string(rec, "system_id", line_no),
                       require_string(rec, "item_id", line_no),
                       require_string(rec, "hypothesis", line_no)});
    if (outputs.back().system_id.empty()) throw ParseError(line_no, "empty system_id");
  }
  return outputs;
}

std::string serialize_outputs(const std::vector<SystemOutput>& outputs) {
  std::ostringstream out;
  for (const auto& o : outputs) {
    out << json{{"system_id", o.system_id}, {"item_id", o.item_id}, {"hypothesis", o.hypothesis_text}}
               .dump()
        << '\n';
  }
  return out.str();
}

Binding bind_outputs(const std::vector<EvaluationItem>& items,
                     const std::vector<SystemOutput>& outputs) {
  std::set<std::string> known;
  for (const auto& item : items) known.insert(item.item_id);

  std::map<std::string, std::set<std::string>> covered;
  for (const auto& o : outputs) {
    if (!known.count(o.item_id)) {
      throw ValidationError("output of system '" + o.system_id + "' references unknown item_id '" +
                                o.item_id + "'",
                            {{"item_id", o.item_id}});
    }
    if (!covered[o.system_id].insert(o.item_id).second) {
      throw ValidationError("duplicate output for (system_id '" + o.system_id + "', item_id '" +
                                o.item_id + "')",
                            {{"system_id", o.system_id}, {"item_id", o.item_id}});
    }
  }

  Binding binding;
  for (const auto& [system_id, item_ids] : covered) {
    CoverageGap gap{system_id, {}};
    for (const auto& item : items) {
      if (item_ids.count(item.item_id)) {
        binding.queue.push_back({item.item_id, system_id});
      } else {
        gap.missing_item_ids.push_back(item.item_id);
      }
    }
    if (!gap.missing_item_ids.empty()) binding.gaps.push_back(std::move(gap));
  }
  return binding;
}

}  // namespace hilmeme::corpus

namespace hilmeme::io {

json to_json(const corpus::EvaluationItem& item) { return corpus::record_to_json(item); }

corpus::EvaluationItem item_from_json(const json& rec) {
  auto item = corpus::record_from_json(rec, 0);
  corpus::check_item(item, 0);
  return item;
}

}  // namespace hilmeme::io
