#include "hilmeme/scoring.hpp"

#include <cmath>
#include <map>

#include "hilmeme/corpus.hpp"

namespace hilmeme::scoring {

namespace {

bool in_range(double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; }

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

GeneralScore::GeneralScore(double value) : value_(value) {
  if (!in_range(value, 0.0, kMaxScore)) {
    throw ValidationError("general score " + format_value(value) + " outside [0, 10]",
                          {{"general", "must be within [0, 10]"}});
  }
}

std::string_view to_string(MweCategory category) {
  switch (category) {
    case MweCategory::RefMwe: return "ref-mwe";
    case MweCategory::AltMwe: return "alt-mwe";
    case MweCategory::NonMwe: return "non-mwe";
    case MweCategory::Null: return "null";
  }
  return "unknown";
}

std::optional<MweCategory> parse_category(std::string_view name) {
  for (auto c : kAllCategories) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Aspect aspect) {
  switch (aspect) {
    case Aspect::Sem: return "sem";
    case Aspect::Gra: return "gra";
    case Aspect::Idi: return "idi";
    case Aspect::Amb: return "amb";
  }
  return "unknown";
}

std::optional<Aspect> parse_aspect(std::string_view name) {
  for (auto a : kAllAspects) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

std::vector<Aspect> AspectSet::members() const {
  std::vector<Aspect> out;
  for (auto a : kAllAspects) {
    if (contains(a)) out.push_back(a);
  }
  return out;
}

double category_score(MweCategory category, std::optional<double> assessor_score) {
  if (category == MweCategory::NonMwe) {
    if (!assessor_score) {
      throw ValidationError("non-MWE category requires an assessor score",
                            {{"score", "required for non-mwe"}});
    }
    if (!in_range(*assessor_score, 0.0, kMaxScore)) {
      throw ValidationError("assessor score " + format_value(*assessor_score) + " outside [0, 10]",
                            {{"score", "must be within [0, 10]"}});
    }
    return *assessor_score;
  }
  if (assessor_score) {
    throw ValidationError(std::string("category ") + std::string(to_string(category)) +
                              " has a fixed score; assessor score not accepted",
                          {{"score", "not accepted for fixed-score category"}});
  }
  switch (category) {
    case MweCategory::RefMwe:
    case MweCategory::AltMwe: return kMaxScore;
    case MweCategory::Null: return 0.0;
    case MweCategory::NonMwe: break;
  }
  return 0.0;
}

double quantize(double value) { return std::round(value * 100.0) / 100.0; }

std::vector<FieldError> check_mwe_judgement(const MweJudgement& mwe, const std::string& prefix) {
  std::vector<FieldError> errors;
  auto add = [&](const std::string& field, std::string msg) {
    errors.push_back({prefix + "." + field, "span '" + mwe.span_id + "': " + std::move(msg)});
  };
  switch (mwe.category) {
    case MweCategory::RefMwe:
      if (mwe.score != kMaxScore) add("score", "ref-mwe score must be 10");
      break;
    case MweCategory::AltMwe:
      if (mwe.score != kMaxScore) add("score", "alt-mwe score must be 10");
      if (!mwe.captured_rendering || mwe.captured_rendering->empty()) {
        add("rendering", "alt-mwe requires the alternative rendering");
      }
      break;
    case MweCategory::NonMwe:
      if (!in_range(mwe.score, 0.0, kMaxScore)) add("score", "non-mwe score must be within [0, 10]");
      break;
    case MweCategory::Null:
      if (mwe.score != 0.0) add("score", "null score must be 0");
      break;
  }
  if (!in_range(mwe.weight, 0.0, 1.0)) add("weight", "weight must be within [0, 1]");
  return errors;
}

std::vector<FieldError> check_judgement(const SegmentJudgement& judgement,
                                        const corpus::EvaluationItem& item) {
  std::vector<FieldError> errors;
  if (judgement.item_id != item.item_id) {
    errors.push_back({"item_id", "judgement for '" + judgement.item_id + "' does not match item '" +
                                     item.item_id + "'"});
  }
  if (!in_range(judgement.general.value(), 0.0, kMaxScore)) {
    errors.push_back({"general", "must be within [0, 10]"});
  }
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < judgement.mwe_judgements.size(); ++i) {
    const auto& mwe = judgement.mwe_judgements[i];
    const std::string prefix = "mwes[" + std::to_string(i) + "]";
    if (++seen[mwe.span_id] > 1) {
      errors.push_back({prefix + ".span_id", "span '" + mwe.span_id + "' judged more than once"});
    }
    if (!item.find_span(mwe.span_id)) {
      errors.push_back({prefix + ".span_id", "span '" + mwe.span_id + "' is not in item '" +
                                                 item.item_id + "'"});
    }
    auto more = check_mwe_judgement(mwe, prefix);
    errors.insert(errors.end(), more.begin(), more.end());
  }
  for (const auto& span : item.mwe_spans) {
    if (!seen.count(span.span_id)) {
      errors.push_back({"mwes", "span '" + span.span_id + "' has no judgement"});
    }
  }
  return errors;
}

void require_valid(const SegmentJudgement& judgement, const corpus::EvaluationItem& item) {
  auto errors = check_judgement(judgement, item);
  if (!errors.empty()) {
    std::string msg = "invalid judgement for item '" + item.item_id + "': " + errors.front().message;
    if (errors.size() > 1) msg += " (+" + std::to_string(errors.size() - 1) + " more)";
    throw ValidationError(msg, std::move(errors));
  }
}

double segment_raw_score(const SegmentJudgement& judgement) {
  const auto& mwes = judgement.mwe_judgements;
  if (mwes.empty()) return judgement.general.value();
  double sum = 0.0;
  for (const auto& m : mwes) sum += m.weight * m.score;
  return judgement.general.value() + sum / static_cast<double>(mwes.size());
}

double segment_max_points(const SegmentJudgement& judgement) {
  const auto& mwes = judgement.mwe_judgements;
  if (mwes.empty()) return kMaxScore;
  double sum = 0.0;
  for (const auto& m : mwes) sum += m.weight * kMaxScore;
  return kMaxScore + sum / static_cast<double>(mwes.size());
}

double normalize(double raw, double max) {
  if (!(max >= kMaxScore)) {
    throw ValidationError("Point_Max " + format_value(max) + " below the step-I ceiling of 10",
                          {{"max", "must be >= 10"}});
  }
  if (!(raw <= max) || raw < 0.0) {
    throw ValidationError("raw score " + format_value(raw) + " outside [0, " + format_value(max) +
                              "]; upstream judgement is corrupt",
                          {{"raw", "must be within [0, max]"}});
  }
  return raw / max;
}

double segment_normalized(const SegmentJudgement& judgement) {
  return normalize(segment_raw_score(judgement), segment_max_points(judgement));
}

Tally update_tally(Tally tally, const SegmentJudgement& judgement) {
  for (const auto& m : judgement.mwe_judgements) {
    switch (m.category) {
      case MweCategory::RefMwe: ++tally.alpha; break;
      case MweCategory::AltMwe: ++tally.beta; break;
      case MweCategory::NonMwe: ++tally.gamma; break;
      case MweCategory::Null: ++tally.theta; break;
    }
  }
  return tally;
}

Tally tally_all(std::span<const SegmentJudgement> judgements) {
  Tally t;
  for (const auto& j : judgements) t = update_tally(t, j);
  return t;
}

}  // namespace hilmeme::scoring
