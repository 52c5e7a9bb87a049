#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "hilmeme/analytics.hpp"
#include "hilmeme/campaign.hpp"
#include "hilmeme/json_io.hpp"
#include "hilmeme/session.hpp"

namespace hilmeme::service {

namespace fs = std::filesystem;
using nlohmann::json;

/// One stored assessment judgement. `seq` is strictly increasing per campaign.
struct JudgementRecord {
  std::uint64_t seq = 0;
  std::string campaign_id;
  scoring::SegmentJudgement judgement;
  int schema_version = io::kSchemaVersion;

  bool operator==(const JudgementRecord&) const = default;
};

json to_json(const JudgementRecord& r);
JudgementRecord judgement_record_from_json(const json& j);

/// json-lines, one JudgementRecord per line, in seq order.
std::string judgements_jsonl(const std::vector<JudgementRecord>& records);
std::vector<JudgementRecord> parse_judgements_jsonl(std::string_view content);

/// Session event log line: {session_id, seq, event_kind, payload, timestamp}.
/// seq starts at 0 with event_kind "start" (payload {assessor_id}).
struct EventRecord {
  std::string session_id;
  std::uint64_t seq = 0;
  std::string event_kind;
  json payload;
  std::string timestamp;
};

json to_json(const EventRecord& r);
EventRecord event_record_from_json(const json& j);

struct SubmitResult {
  session::Session session;
  /// True when the client seq had already been applied (retry).
  bool duplicate = false;
  std::optional<session::PracticeFeedback> feedback;
};

struct MetricScore {
  std::string metric;
  std::string system_id;
  std::string item_id;  // empty at system level
  double score = 0.0;
};

using JudgementSnapshot = std::shared_ptr<const std::vector<JudgementRecord>>;

/// Durable state of one campaign under <data-dir>/campaigns/<id>/:
///   campaign.json   definition (rewritten atomically, only before any session)
///   events.jsonl    session event log
///   imports.jsonl   imported judgement records
///   metrics.jsonl   automatic metric scores
/// Opening replays the logs. A torn final line (crash mid-append) is dropped;
/// any other undecodable or inapplicable record is reported as corruption.
class CampaignStore {
 public:
  static std::unique_ptr<CampaignStore> create(const fs::path& dir, Campaign campaign,
                                               std::string client_token);
  static std::unique_ptr<CampaignStore> open(const fs::path& dir);

  const std::string& id() const noexcept { return id_; }
  Campaign campaign() const;
  const std::string& client_token() const noexcept { return client_token_; }

  /// Replace corpus data. Rejected with ConflictError once a session exists.
  void add_items(std::vector<corpus::EvaluationItem> items);
  void add_outputs(std::vector<corpus::SystemOutput> outputs);

  /// Returns the assessor's existing session or starts (and logs) a new one.
  session::Session start_session(std::string_view assessor_id);
  std::optional<session::Session> find_session(std::string_view session_id) const;
  std::vector<session::Session> sessions() const;
  /// Seq the session's next event will carry.
  std::uint64_t next_seq(std::string_view session_id) const;

  /// Applies `event` as the session's next seq. With `client_seq` set, an
  /// already-applied seq returns the current session unchanged and a future
  /// seq is a ConflictError. The event is on disk before this returns.
  SubmitResult submit(std::string_view session_id, std::optional<std::uint64_t> client_seq,
                      session::Event event);

  /// Appends judgements not produced by a session (re-import of an export).
  /// Each must be valid for its item and reference an existing output.
  std::vector<JudgementRecord> import_judgements(std::vector<scoring::SegmentJudgement> judgements);

  void add_metric_scores(std::string_view metric, const std::vector<MetricScore>& scores);
  analytics::ScoreMap metric_scores(std::string_view metric, analytics::Level level) const;
  std::vector<std::string> metric_names() const;

  /// Immutable view of the judgement log ordered by seq.
  JudgementSnapshot snapshot() const;
  std::vector<EventRecord> event_log() const;

 private:
  CampaignStore(fs::path dir, Campaign campaign, std::string client_token);
  void write_definition() const;
  void replay();
  void apply_event(const EventRecord& rec);
  void append_line(const fs::path& file, const json& line);
  void publish(JudgementRecord rec);

  fs::path dir_;
  std::string id_;
  std::string client_token_;

  mutable std::mutex mu_;
  Campaign campaign_;
  std::map<std::string, session::Session> sessions_;
  std::map<std::string, std::string> session_by_assessor_;
  std::map<std::string, std::uint64_t> last_seq_;
  std::vector<EventRecord> events_;
  std::vector<MetricScore> metrics_;
  std::uint64_t next_judgement_seq_ = 0;
  JudgementSnapshot judgements_;
  // Replay collects records here and publishes once at the end.
  bool replaying_ = false;
  std::vector<JudgementRecord> replayed_;
};

/// All campaigns under one data directory.
class Store {
 public:
  explicit Store(fs::path data_dir);

  const fs::path& data_dir() const noexcept { return data_dir_; }

  /// Idempotent on identical (definition, client_token); otherwise an
  /// existing campaign_id is a ConflictError.
  std::string create_campaign(Campaign campaign, std::string client_token = {});

  CampaignStore& campaign(std::string_view campaign_id);
  /// Finds the campaign owning a session token.
  CampaignStore& campaign_for_session(std::string_view session_id);
  std::vector<std::string> campaign_ids() const;

 private:
  fs::path data_dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::unique_ptr<CampaignStore>, std::less<>> campaigns_;
};

/// Builds a campaign from a creation request:
///   {campaign_id?, assessors, shuffle_seed?, practice_gating?, plain_threshold?,
///    practice: [3 x {item, output, gold}], corpus?: "<file>", corpus_format?: "jsonl"|"tsv",
///    outputs?: "<file>"}
/// Without campaign_id, one is derived from the request content.
Campaign campaign_from_request(const json& request);

/// Metric score input: json-lines {system_id, item_id?, score}.
std::vector<MetricScore> parse_metric_scores(std::string_view content, std::string_view metric);

/// Current UTC time as ISO-8601 with milliseconds.
std::string utc_timestamp();

}  // namespace hilmeme::service
