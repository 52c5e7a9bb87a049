#include "hilmeme/json_io.hpp"

#include <cstdio>
#include <sstream>

#include "hilmeme/error.hpp"

namespace hilmeme::io {

namespace {

std::string kind_of(const json& v) { return v.type_name(); }

// Collects field errors while reading one object so a rejected payload
// reports all of its problems at once.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix, std::vector<FieldError>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {}

  std::string path(std::string_view key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
  }

  void fail(std::string_view key, std::string message) {
    errors_.push_back({path(key), std::move(message)});
  }

  const json* find(std::string_view key) const {
    auto it = obj_.find(key);
    return (it == obj_.end() || it->is_null()) ? nullptr : &*it;
  }

  std::string string(std::string_view key, bool required = true) {
    const json* v = find(key);
    if (!v) {
      if (required) fail(key, "missing");
      return {};
    }
    if (!v->is_string()) {
      fail(key, "expected string, got " + kind_of(*v));
      return {};
    }
    return v->get<std::string>();
  }

  std::optional<double> number(std::string_view key, bool required = true) {
    const json* v = find(key);
    if (!v) {
      if (required) fail(key, "missing");
      return std::nullopt;
    }
    if (!v->is_number()) {
      fail(key, "expected number, got " + kind_of(*v));
      return std::nullopt;
    }
    return v->get<double>();
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<FieldError>& errors_;
};

scoring::MweJudgement mwe_from_json(const json& m, const std::string& prefix,
                                    std::vector<FieldError>& errors) {
  scoring::MweJudgement out;
  if (!m.is_object()) {
    errors.push_back({prefix, "expected object"});
    return out;
  }
  FieldReader r(m, prefix, errors);
  out.span_id = r.string("span_id");
  const std::string who = "span '" + out.span_id + "': ";
  const std::string cat_name = r.string("category");
  auto category = scoring::parse_category(cat_name);
  if (!category) {
    if (!cat_name.empty()) r.fail("category", who + "unknown category '" + cat_name + "'");
  } else {
    out.category = *category;
  }

  auto raw_score = r.number("score", false);
  if (raw_score) raw_score = scoring::quantize(*raw_score);
  if (category) {
    std::optional<double> assessor_score;
    if (*category == scoring::MweCategory::NonMwe) {
      assessor_score = raw_score;
    } else if (raw_score && *raw_score != scoring::category_score(*category, std::nullopt)) {
      r.fail("score", who + std::string(scoring::to_string(*category)) + " has a fixed score of " +
                          (*category == scoring::MweCategory::Null ? "0" : "10"));
    }
    try {
      out.score = scoring::category_score(*category, assessor_score);
    } catch (const ValidationError& e) {
      r.fail("score", who + e.what());
    }
  }

  if (const json* aspects = r.find("aspects")) {
    if (!aspects->is_array()) {
      r.fail("aspects", who + "expected array");
    } else {
      for (const auto& a : *aspects) {
        auto parsed = a.is_string() ? scoring::parse_aspect(a.get<std::string>()) : std::nullopt;
        if (!parsed) {
          r.fail("aspects", who + "unknown aspect " + a.dump());
        } else {
          out.aspects.insert(*parsed);
        }
      }
    }
  }

  if (auto w = r.number("weight")) {
    out.weight = scoring::quantize(*w);
    if (!(out.weight >= 0.0 && out.weight <= 1.0)) r.fail("weight", who + "must be within [0, 1]");
  }

  if (const json* rendering = r.find("rendering")) {
    if (!rendering->is_string()) {
      r.fail("rendering", who + "expected string");
    } else if (!rendering->get<std::string>().empty()) {
      out.captured_rendering = rendering->get<std::string>();
    }
  }
  if (category == scoring::MweCategory::AltMwe && !out.captured_rendering) {
    r.fail("rendering", who + "alt-mwe requires the alternative rendering");
  }
  return out;
}

std::string fmt_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string tsv_field(const std::string& s) {
  std::string out;
  for (char c : s) out += (c == '\t' || c == '\n' || c == '\r') ? ' ' : c;
  return out;
}

}  // namespace

json to_json(const corpus::SystemOutput& o) {
  return {{"system_id", o.system_id}, {"item_id", o.item_id}, {"hypothesis", o.hypothesis_text}};
}

corpus::SystemOutput output_from_json(const json& rec) {
  std::vector<FieldError> errors;
  if (!rec.is_object()) throw ValidationError("system output must be an object");
  FieldReader r(rec, "", errors);
  corpus::SystemOutput o{r.string("system_id"), r.string("item_id"), r.string("hypothesis")};
  if (!errors.empty()) throw ValidationError("invalid system output", std::move(errors));
  return o;
}

json to_json(const scoring::MweJudgement& m) {
  json aspects = json::array();
  for (auto a : m.aspects.members()) aspects.push_back(std::string(scoring::to_string(a)));
  json out = {{"span_id", m.span_id},
              {"category", std::string(scoring::to_string(m.category))},
              {"score", m.score},
              {"aspects", std::move(aspects)},
              {"weight", m.weight}};
  if (m.captured_rendering) out["rendering"] = *m.captured_rendering;
  return out;
}

json to_json(const scoring::SegmentJudgement& j) {
  json mwes = json::array();
  for (const auto& m : j.mwe_judgements) mwes.push_back(to_json(m));
  return {{"item_id", j.item_id},
          {"system_id", j.system_id},
          {"assessor_id", j.assessor_id},
          {"general", j.general.value()},
          {"submitted_at", j.submitted_at},
          {"mwes", std::move(mwes)}};
}

scoring::SegmentJudgement judgement_from_json(const json& j) {
  if (!j.is_object()) {
    throw ValidationError("judgement must be a json object", {{"judgement", "expected object"}});
  }
  std::vector<FieldError> errors;
  FieldReader r(j, "", errors);
  scoring::SegmentJudgement out;
  out.item_id = r.string("item_id");
  out.system_id = r.string("system_id");
  out.assessor_id = r.string("assessor_id");
  out.submitted_at = r.string("submitted_at", false);
  if (auto g = r.number("general")) {
    try {
      out.general = scoring::GeneralScore(scoring::quantize(*g));
    } catch (const ValidationError&) {
      r.fail("general", "must be within [0, 10]");
    }
  }
  if (const json* mwes = r.find("mwes")) {
    if (!mwes->is_array()) {
      r.fail("mwes", "expected array");
    } else {
      for (std::size_t i = 0; i < mwes->size(); ++i) {
        out.mwe_judgements.push_back(
            mwe_from_json((*mwes)[i], "mwes[" + std::to_string(i) + "]", errors));
      }
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid judgement: " + errors.front().field + ": " + errors.front().message;
    throw ValidationError(msg, std::move(errors));
  }
  return out;
}

json to_json(const PracticeItem& p) {
  return {{"item", to_json(p.item)}, {"output", to_json(p.output)}, {"gold", to_json(p.gold)}};
}

PracticeItem practice_from_json(const json& j) {
  if (!j.is_object() || !j.contains("item") || !j.contains("output") || !j.contains("gold")) {
    throw ValidationError("practice item needs item, output and gold",
                          {{"practice", "expected {item, output, gold}"}});
  }
  PracticeItem p;
  p.item = item_from_json(j.at("item"));
  p.output = output_from_json(j.at("output"));
  p.gold = judgement_from_json(j.at("gold"));
  return p;
}

json to_json(const Campaign& c) {
  json items = json::array();
  for (const auto& i : c.items) items.push_back(to_json(i));
  json outputs = json::array();
  for (const auto& o : c.outputs) outputs.push_back(to_json(o));
  json practice = json::array();
  for (const auto& p : c.practice_items) practice.push_back(to_json(p));
  return {{"schema_version", kSchemaVersion},
          {"campaign_id", c.campaign_id},
          {"assessors", c.assessors},
          {"shuffle_seed", c.shuffle_seed},
          {"practice_gating", c.practice_gating},
          {"plain_threshold", c.plain_threshold},
          {"phi_elicitation", "per-mwe"},
          {"items", std::move(items)},
          {"outputs", std::move(outputs)},
          {"practice", std::move(practice)}};
}

Campaign campaign_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("campaign must be a json object");
  Campaign c;
  std::vector<FieldError> errors;
  FieldReader r(j, "", errors);
  c.campaign_id = r.string("campaign_id");
  if (const json* a = r.find("assessors")) {
    if (!a->is_array()) {
      r.fail("assessors", "expected array");
    } else {
      for (const auto& v : *a) {
        if (v.is_string()) {
          c.assessors.push_back(v.get<std::string>());
        } else {
          r.fail("assessors", "assessor ids must be strings");
        }
      }
    }
  }
  if (const json* s = r.find("shuffle_seed")) {
    if (s->is_number_unsigned() || (s->is_number_integer() && s->get<long long>() >= 0)) {
      c.shuffle_seed = s->get<std::uint64_t>();
    } else {
      r.fail("shuffle_seed", "expected non-negative integer");
    }
  }
  if (const json* g = r.find("practice_gating")) {
    if (g->is_boolean()) {
      c.practice_gating = g->get<bool>();
    } else {
      r.fail("practice_gating", "expected boolean");
    }
  }
  if (auto t = r.number("plain_threshold", false)) c.plain_threshold = *t;
  if (const json* phi = r.find("phi_elicitation")) {
    if (!phi->is_string() || phi->get<std::string>() != "per-mwe") {
      r.fail("phi_elicitation", "only 'per-mwe' is supported");
    }
  }

  auto each = [&](const char* key, auto&& fn) {
    const json* arr = r.find(key);
    if (!arr) return;
    if (!arr->is_array()) {
      r.fail(key, "expected array");
      return;
    }
    for (std::size_t i = 0; i < arr->size(); ++i) {
      try {
        fn((*arr)[i]);
      } catch (const ValidationError& e) {
        for (const auto& fe : e.fields()) {
          errors.push_back({std::string(key) + "[" + std::to_string(i) + "]." + fe.field, fe.message});
        }
        if (e.fields().empty()) errors.push_back({std::string(key) + "[" + std::to_string(i) + "]", e.what()});
      } catch (const Error& e) {
        errors.push_back({std::string(key) + "[" + std::to_string(i) + "]", e.what()});
      }
    }
  };
  each("items", [&](const json& v) { c.items.push_back(item_from_json(v)); });
  each("outputs", [&](const json& v) { c.outputs.push_back(output_from_json(v)); });
  std::vector<PracticeItem> practice;
  each("practice", [&](const json& v) { practice.push_back(practice_from_json(v)); });
  if (!r.find("practice")) {
    r.fail("practice", "missing");
  } else if (r.find("practice")->is_array() && r.find("practice")->size() != kPracticeCount) {
    r.fail("practice", "exactly 3 practice items required, got " +
                           std::to_string(r.find("practice")->size()));
  }
  if (practice.size() == kPracticeCount) {
    std::move(practice.begin(), practice.end(), c.practice_items.begin());
  }

  if (!errors.empty()) {
    std::string msg = "invalid campaign: " + errors.front().field + ": " + errors.front().message;
    throw ValidationError(msg, std::move(errors));
  }
  validate_campaign(c);
  return c;
}

json to_json(const session::PracticeFeedback& fb) {
  json matches = json::array();
  for (const auto& [span, ok] : fb.category_matches) {
    matches.push_back({{"span_id", span}, {"match", ok}});
  }
  return {{"general_delta", fb.general_delta}, {"category_matches", std::move(matches)}};
}

json event_payload(const session::Event& e) {
  if (const auto* p = std::get_if<session::event::SubmitPractice>(&e)) {
    return {{"judgement", to_json(p->judgement)}};
  }
  if (const auto* a = std::get_if<session::event::SubmitAssessment>(&e)) {
    return {{"judgement", to_json(a->judgement)}};
  }
  return json::object();
}

session::Event event_from_wire(std::string_view kind, const json& payload) {
  auto judgement = [&]() {
    if (!payload.is_object() || !payload.contains("judgement")) {
      throw ValidationError("submission requires a judgement", {{"judgement", "missing"}});
    }
    return judgement_from_json(payload.at("judgement"));
  };
  if (kind == "accept_consent") return session::event::AcceptConsent{};
  if (kind == "decline_consent") return session::event::DeclineConsent{};
  if (kind == "finish_introduction") return session::event::FinishIntroduction{};
  if (kind == "submit_practice") return session::event::SubmitPractice{judgement()};
  if (kind == "submit_assessment") return session::event::SubmitAssessment{judgement()};
  throw ValidationError("unknown event kind '" + std::string(kind) + "'",
                        {{"event", "expected accept_consent, decline_consent, finish_introduction, "
                                   "submit_practice or submit_assessment"}});
}

std::string report_csv(std::span<const analytics::SystemReport> reports) {
  std::ostringstream out;
  out << "system_id,n,mean_norm,alpha,beta,gamma,theta,sem,gra,idi,amb\n";
  for (const auto& r : reports) {
    out << csv_field(r.system_id) << ',' << r.n_judgements << ',' << fmt_fixed(r.mean_norm, 6) << ','
        << r.tally.alpha << ',' << r.tally.beta << ',' << r.tally.gamma << ',' << r.tally.theta;
    for (auto c : r.aspect_freq) out << ',' << c;
    out << '\n';
  }
  return out.str();
}

json to_json(const scoring::Tally& t) {
  return {{"alpha", t.alpha}, {"beta", t.beta}, {"gamma", t.gamma}, {"theta", t.theta}};
}

json to_json(const analytics::SystemReport& r) {
  json aspects = json::object();
  for (auto a : scoring::kAllAspects) {
    aspects[std::string(scoring::to_string(a))] = r.aspect_freq[static_cast<std::size_t>(a)];
  }
  return {{"system_id", r.system_id},
          {"n", r.n_judgements},
          {"mean_norm", r.mean_norm},
          {"tally", to_json(r.tally)},
          {"aspect_freq", std::move(aspects)}};
}

json to_json(const analytics::AgreementReport& a) {
  json skipped = json::array();
  for (const auto& s : a.skipped) {
    skipped.push_back({{"assessors", {s.assessor_a, s.assessor_b}}, {"reason", s.reason}});
  }
  return {{"score_agreement", a.score_agreement ? json(*a.score_agreement) : json()},
          {"category_agreement", a.category_agreement ? json(*a.category_agreement) : json()},
          {"pairs_used", a.pairs_used},
          {"skipped", std::move(skipped)}};
}

json to_json(const analytics::CorrelationResult& c) {
  return {{"schema_version", kSchemaVersion},
          {"method", std::string(analytics::to_string(c.method))},
          {"level", std::string(analytics::to_string(c.level))},
          {"coefficient", c.coefficient},
          {"n", c.n},
          {"human_only", c.human_only},
          {"metric_only", c.metric_only}};
}

json to_json(const analytics::TermBankEntry& e) {
  return {{"source_mwe", e.source_mwe},
          {"target_rendering", e.target_rendering},
          {"kind", std::string(analytics::to_string(e.kind))},
          {"count", e.count},
          {"evidence", e.evidence}};
}

std::string termbank_tsv(std::span<const analytics::TermBankEntry> entries) {
  std::ostringstream out;
  out << "source_mwe\ttarget_rendering\tkind\tcount\n";
  for (const auto& e : entries) {
    out << tsv_field(e.source_mwe) << '\t' << tsv_field(e.target_rendering) << '\t'
        << analytics::to_string(e.kind) << '\t' << e.count << '\n';
  }
  return out.str();
}

}  // namespace hilmeme::io
