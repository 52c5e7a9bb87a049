#include "hilmeme/service.hpp"

#include <atomic>

#include "hilmeme/error.hpp"
#include "httplib.h"

namespace hilmeme::service {

namespace {

constexpr const char* kConsentText =
    "You are invited to judge machine translation output. Your judgements are stored under an "
    "opaque assessor token; no personal data is recorded. Accept to continue or decline to leave.";

constexpr const char* kIntroductionText =
    "Each unit shows a source segment with highlighted multi-word expressions, a reference "
    "translation and a candidate translation. You will answer three questions per unit. The "
    "first three units are practice with feedback.";

json step_prompts() {
  return {
      {"step1",
       {{"question", "Overall, how good is the candidate translation?"},
        {"guidance", {"Fluency: does it read as well-formed, grammatical target-language text?",
                      "Adequacy: does it carry all of the meaning in the source and reference?"}},
        {"scale", {0, 10}}}},
      {"step2",
       {{"question", "For each highlighted expression, how was it rendered?"},
        {"choices",
         {{{"category", "ref-mwe"}, {"label", "matches a reference expression"}, {"score", 10}},
          {{"category", "alt-mwe"}, {"label", "another correct multi-word expression (type it)"},
           {"score", 10}},
          {{"category", "non-mwe"}, {"label", "conveyed with ordinary wording (score it, optionally type it)"},
           {"scale", {0, 10}}},
          {{"category", "null"}, {"label", "missing or left untranslated"}, {"score", 0}}}}}},
      {"step3",
       {{"question", "Why is each highlighted expression hard, and how much does it matter here?"},
        {"aspects", {"sem", "gra", "idi", "amb"}},
        {"aspect_labels",
         {{"sem", "semantics"}, {"gra", "grammar"}, {"idi", "idiomaticity"}, {"amb", "ambiguity"}}},
        {"weight_scale", {0, 1}}}}};
}

std::string marked_source(const corpus::EvaluationItem& item) {
  std::string out;
  for (std::size_t i = 0; i < item.source_tokens.size(); ++i) {
    if (i > 0) out += ' ';
    for (const auto& s : item.mwe_spans) {
      if (s.token_start == i) out += "[[";
    }
    out += item.source_tokens[i];
    for (const auto& s : item.mwe_spans) {
      if (s.token_end == i + 1) out += "]]";
    }
  }
  return out;
}

json unit_json(const session::CurrentUnit& u) {
  json mwes = json::array();
  for (const auto& s : u.item.mwe_spans) {
    mwes.push_back({{"span_id", s.span_id}, {"start", s.token_start}, {"end", s.token_end},
                    {"surface", s.surface}});
  }
  return {{"item_id", u.item.item_id},
          {"system_id", u.output.system_id},
          {"source", u.item.source_text},
          {"source_tokens", u.item.source_tokens},
          {"source_marked", marked_source(u.item)},
          {"mwes", std::move(mwes)},
          {"reference", u.item.reference_text},
          {"hypothesis", u.output.hypothesis_text}};
}

std::string state_kind(const session::SessionState& s) {
  static constexpr const char* kinds[] = {"consent", "introduction", "practice",
                                          "assessment", "complete", "declined"};
  return kinds[s.index()];
}

std::optional<double> threshold_param(const httplib::Request& req) {
  if (!req.has_param("plain_threshold")) return std::nullopt;
  try {
    return std::stod(req.get_param_value("plain_threshold"));
  } catch (const std::exception&) {
    throw ValidationError("plain_threshold must be a number", {{"plain_threshold", "not a number"}});
  }
}

json parse_body(const httplib::Request& req) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("request body is not json: ") + e.what(), {{"body", "malformed json"}});
  }
  if (!body.is_object()) throw ValidationError("request body must be a json object", {{"body", "expected object"}});
  return body;
}

}  // namespace

std::vector<scoring::SegmentJudgement> judgements_of(const JudgementSnapshot& snapshot) {
  std::vector<scoring::SegmentJudgement> out;
  out.reserve(snapshot->size());
  for (const auto& r : *snapshot) out.push_back(r.judgement);
  return out;
}

json campaign_report_json(const CampaignStore& store) {
  const auto judgements = judgements_of(store.snapshot());
  const auto reports = analytics::system_reports(judgements);
  json systems = json::array();
  for (const auto& r : reports) systems.push_back(io::to_json(r));
  json out = {{"schema_version", io::kSchemaVersion},
              {"campaign_id", store.id()},
              {"n_judgements", judgements.size()},
              {"systems", std::move(systems)},
              {"tally", io::to_json(scoring::tally_all(judgements))}};
  try {
    out["agreement"] = io::to_json(analytics::agreement(judgements));
  } catch (const ValidationError& e) {
    out["agreement"] = nullptr;
    out["agreement_error"] = e.what();
  }
  return out;
}

std::string campaign_report_csv(const CampaignStore& store) {
  const auto judgements = judgements_of(store.snapshot());
  const auto reports = analytics::system_reports(judgements);
  return io::report_csv(reports);
}

std::vector<analytics::TermBankEntry> campaign_term_bank(const CampaignStore& store,
                                                         std::optional<double> plain_threshold) {
  const auto campaign = store.campaign();
  const auto judgements = judgements_of(store.snapshot());
  return analytics::extract_term_bank(judgements, campaign.items,
                                      plain_threshold.value_or(campaign.plain_threshold));
}

json term_bank_json(const CampaignStore& store, std::optional<double> plain_threshold) {
  json entries = json::array();
  for (const auto& e : campaign_term_bank(store, plain_threshold)) entries.push_back(io::to_json(e));
  return {{"schema_version", io::kSchemaVersion},
          {"campaign_id", store.id()},
          {"entries", std::move(entries)}};
}

analytics::CorrelationResult campaign_correlation(const CampaignStore& store, std::string_view metric,
                                                  analytics::Level level, analytics::Method method) {
  const auto judgements = judgements_of(store.snapshot());
  const auto human = level == analytics::Level::System ? analytics::system_level_scores(judgements)
                                                       : analytics::segment_level_scores(judgements);
  return analytics::metric_correlation(human, store.metric_scores(metric, level), level, method);
}

json render_payload(const CampaignStore& store, const session::Session& s) {
  const auto campaign = store.campaign();
  json out = {{"session_token", s.session_id},
              {"campaign_id", s.campaign_id},
              {"assessor_id", s.assessor_id},
              {"state", session::state_name(s.state)},
              {"state_kind", state_kind(s.state)},
              {"next_seq", store.next_seq(s.session_id)},
              {"unit", nullptr}};
  if (std::holds_alternative<session::state::Consent>(s.state)) {
    out["prompts"] = {{"consent", kConsentText}};
    out["expected_events"] = {"accept_consent", "decline_consent"};
  } else if (std::holds_alternative<session::state::Introduction>(s.state)) {
    out["prompts"] = {{"introduction", kIntroductionText}};
    out["expected_events"] = {"finish_introduction"};
  } else if (auto unit = session::current_unit(campaign, s)) {
    out["prompts"] = step_prompts();
    out["unit"] = unit_json(*unit);
    out["progress"] = {{"practice", unit->practice}, {"index", unit->index}, {"total", unit->total}};
    out["expected_events"] = {unit->practice ? "submit_practice" : "submit_assessment"};
    if (unit->practice && !s.practice_feedback.empty()) {
      out["last_feedback"] = io::to_json(s.practice_feedback.back());
    }
  } else {
    out["expected_events"] = json::array();
    out["progress"] = {{"practice", false}, {"index", s.submissions.size()}, {"total", s.queue.size()}};
  }
  return out;
}

json error_body(const Error& e) {
  json fields = json::array();
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    for (const auto& f : v->fields()) fields.push_back({{"field", f.field}, {"message", f.message}});
  }
  return {{"error", e.code()}, {"message", e.what()}, {"fields", std::move(fields)}};
}

int http_status(const Error& e) {
  if (dynamic_cast<const NotFoundError*>(&e)) return 404;
  if (dynamic_cast<const ConflictError*>(&e)) return 409;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e)) return 422;
  return 500;
}

struct HttpService::Impl {
  Store& store;
  httplib::Server server;

  explicit Impl(Store& s) : store(s) { routes(); }

  template <typename Fn>
  auto guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        res.status = http_status(e);
        res.set_content(error_body(e).dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", "internal"}, {"message", e.what()}, {"fields", json::array()}}.dump(),
                        "application/json");
      }
    };
  }

  static void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void routes() {
    server.Post("/campaigns", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const std::string token = body.value("client_token", std::string());
      auto campaign = campaign_from_request(body);
      auto id = store.create_campaign(std::move(campaign), token);
      send_json(res, {{"campaign_id", id}}, 201);
    }));

    server.Post(R"(/campaigns/([^/]+)/sessions)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto& c = store.campaign(req.matches[1].str());
                  const json body = parse_body(req);
                  if (!body.is_object() || !body.contains("assessor_id") || !body["assessor_id"].is_string()) {
                    throw ValidationError("assessor_id required", {{"assessor_id", "missing"}});
                  }
                  auto s = c.start_session(body["assessor_id"].get<std::string>());
                  send_json(res, render_payload(c, s), 201);
                }));

    server.Get(R"(/sessions/([^/]+)/current)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string token = req.matches[1].str();
                 auto& c = store.campaign_for_session(token);
                 send_json(res, render_payload(c, *c.find_session(token)));
               }));

    server.Post(R"(/sessions/([^/]+)/submit)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string token = req.matches[1].str();
                  auto& c = store.campaign_for_session(token);
                  const json body = parse_body(req);
                  if (!body.is_object() || !body.contains("event") || !body["event"].is_string()) {
                    throw ValidationError("event required", {{"event", "missing"}});
                  }
                  std::optional<std::uint64_t> seq;
                  if (auto it = body.find("seq"); it != body.end() && !it->is_null()) {
                    if (!it->is_number_unsigned()) {
                      throw ValidationError("seq must be a non-negative integer", {{"seq", "invalid"}});
                    }
                    seq = it->get<std::uint64_t>();
                  }
                  auto ev = io::event_from_wire(body["event"].get<std::string>(), body);
                  auto result = c.submit(token, seq, std::move(ev));
                  json out = render_payload(c, result.session);
                  out["duplicate"] = result.duplicate;
                  if (result.feedback) out["feedback"] = io::to_json(*result.feedback);
                  send_json(res, out);
                }));

    server.Get(R"(/campaigns/([^/]+)/report)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto& c = store.campaign(req.matches[1].str());
                 if (req.get_param_value("format") == "csv") {
                   res.set_content(campaign_report_csv(c), "text/csv");
                 } else {
                   send_json(res, campaign_report_json(c));
                 }
               }));

    server.Get(R"(/campaigns/([^/]+)/termbank)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto& c = store.campaign(req.matches[1].str());
                 const auto threshold = threshold_param(req);
                 if (req.get_param_value("format") == "tsv") {
                   res.set_content(io::termbank_tsv(campaign_term_bank(c, threshold)),
                                   "text/tab-separated-values");
                 } else {
                   send_json(res, term_bank_json(c, threshold));
                 }
               }));

    server.Get(R"(/campaigns/([^/]+)/judgements)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto& c = store.campaign(req.matches[1].str());
                 res.set_content(judgements_jsonl(*c.snapshot()), "application/x-ndjson");
               }));
  }
};

HttpService::HttpService(Store& store) : impl_(std::make_unique<Impl>(store)) {}
HttpService::~HttpService() = default;

bool HttpService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpService::serve() { return impl_->server.listen_after_bind(); }

void HttpService::stop() { impl_->server.stop(); }

}  // namespace hilmeme::service
