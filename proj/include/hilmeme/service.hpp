#pragma once

#include <memory>
#include <string>

#include "hilmeme/store.hpp"

namespace hilmeme::service {

// Report builders shared by the CLI and the HTTP endpoints. Each reads one
// judgement snapshot, so output is a pure function of the judgement log.

/// {schema_version, campaign_id, n_judgements, systems: [...], tally, agreement | agreement_error}
json campaign_report_json(const CampaignStore& store);
std::string campaign_report_csv(const CampaignStore& store);

std::vector<analytics::TermBankEntry> campaign_term_bank(const CampaignStore& store,
                                                         std::optional<double> plain_threshold = {});
json term_bank_json(const CampaignStore& store, std::optional<double> plain_threshold = {});

/// Human scores at `level` against the stored metric scores of `metric`.
analytics::CorrelationResult campaign_correlation(const CampaignStore& store, std::string_view metric,
                                                  analytics::Level level, analytics::Method method);

std::vector<scoring::SegmentJudgement> judgements_of(const JudgementSnapshot& snapshot);

/// What the annotator UI renders for a session: state, progress, prompts for
/// the current screen, and the unit (source with spans marked, reference,
/// hypothesis) when one is active. `next_seq` is the seq the client should
/// send with its next submission.
json render_payload(const CampaignStore& store, const session::Session& session);

/// Error body: {"error": code, "message": ..., "fields": [{field, message}]}.
json error_body(const Error& e);
int http_status(const Error& e);

/// HTTP front end over a Store:
///   POST /campaigns                      body: campaign request (+ client_token)
///   POST /campaigns/{id}/sessions        body: {assessor_id}
///   GET  /sessions/{token}/current
///   POST /sessions/{token}/submit        body: {seq?, event, judgement?}
///   GET  /campaigns/{id}/report          ?format=csv for CSV
///   GET  /campaigns/{id}/termbank        ?format=tsv, ?plain_threshold=
///   GET  /campaigns/{id}/judgements      json-lines
class HttpService {
 public:
  explicit HttpService(Store& store);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds and serves until stop(); returns false if the bind fails.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it; call serve() afterwards.
  int bind_any_port(const std::string& host);
  bool serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hilmeme::service
