#include "hilmeme/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "hilmeme/error.hpp"

namespace hilmeme::service {

namespace {

constexpr const char* kDefinitionFile = "campaign.json";
constexpr const char* kEventsFile = "events.jsonl";
constexpr const char* kImportsFile = "imports.jsonl";
constexpr const char* kMetricsFile = "metrics.jsonl";

class CorruptStoreError : public Error {
 public:
  explicit CorruptStoreError(const std::string& message) : Error("corrupt_store", message) {}
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reads a json-lines log. A final line without its newline is a torn append:
// kept if it decodes, otherwise cut off the file so later appends start clean.
std::vector<json> read_log(const fs::path& p) {
  std::vector<json> out;
  if (!fs::exists(p)) return out;
  const std::string content = read_file(p);
  std::size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    ++line_no;
    const auto nl = content.find('\n', pos);
    const bool torn = nl == std::string::npos;
    const std::string line = content.substr(pos, torn ? std::string::npos : nl - pos);
    json parsed;
    bool ok = true;
    try {
      parsed = json::parse(line);
    } catch (const json::parse_error&) {
      ok = false;
    }
    if (torn) {
      if (ok) {
        std::ofstream(p, std::ios::app | std::ios::binary) << '\n';
        out.push_back(std::move(parsed));
      } else {
        fs::resize_file(p, pos);
      }
      break;
    }
    if (!ok && line.find_first_not_of(" \t\r") != std::string::npos) {
      throw CorruptStoreError(p.string() + ": undecodable record at line " + std::to_string(line_no));
    }
    if (ok) out.push_back(std::move(parsed));
    pos = nl + 1;
  }
  return out;
}

void write_atomically(const fs::path& p, const std::string& content) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw Error("io_error", "cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string random_token() {
  std::random_device rd;
  std::uint64_t hi = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  std::uint64_t lo = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Records

json to_json(const JudgementRecord& r) {
  return {{"schema_version", r.schema_version},
          {"seq", r.seq},
          {"campaign_id", r.campaign_id},
          {"judgement", io::to_json(r.judgement)}};
}

JudgementRecord judgement_record_from_json(const json& j) {
  if (!j.is_object() || !j.contains("seq") || !j.contains("judgement") || !j.contains("campaign_id")) {
    throw ValidationError("judgement record needs schema_version, seq, campaign_id and judgement");
  }
  JudgementRecord r;
  r.schema_version = j.value("schema_version", io::kSchemaVersion);
  if (r.schema_version != io::kSchemaVersion) {
    throw ValidationError("unsupported schema_version " + std::to_string(r.schema_version),
                          {{"schema_version", "expected 1"}});
  }
  if (!j.at("seq").is_number_unsigned() && !j.at("seq").is_number_integer()) {
    throw ValidationError("seq must be an integer", {{"seq", "expected integer"}});
  }
  r.seq = j.at("seq").get<std::uint64_t>();
  r.campaign_id = j.at("campaign_id").get<std::string>();
  r.judgement = io::judgement_from_json(j.at("judgement"));
  return r;
}

std::string judgements_jsonl(const std::vector<JudgementRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

std::vector<JudgementRecord> parse_judgements_jsonl(std::string_view content) {
  std::vector<JudgementRecord> out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(judgement_record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed json: ") + e.what());
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

json to_json(const EventRecord& r) {
  return {{"session_id", r.session_id},
          {"seq", r.seq},
          {"event_kind", r.event_kind},
          {"payload", r.payload},
          {"timestamp", r.timestamp}};
}

EventRecord event_record_from_json(const json& j) {
  EventRecord r;
  try {
    r.session_id = j.at("session_id").get<std::string>();
    r.seq = j.at("seq").get<std::uint64_t>();
    r.event_kind = j.at("event_kind").get<std::string>();
    r.payload = j.value("payload", json::object());
    r.timestamp = j.value("timestamp", std::string());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed event record: ") + e.what());
  }
  return r;
}

std::string utc_timestamp() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

// ---------------------------------------------------------------------------
// CampaignStore

CampaignStore::CampaignStore(fs::path dir, Campaign campaign, std::string client_token)
    : dir_(std::move(dir)),
      id_(campaign.campaign_id),
      client_token_(std::move(client_token)),
      campaign_(std::move(campaign)),
      judgements_(std::make_shared<const std::vector<JudgementRecord>>()) {}

std::unique_ptr<CampaignStore> CampaignStore::create(const fs::path& dir, Campaign campaign,
                                                     std::string client_token) {
  validate_campaign(campaign);
  fs::create_directories(dir);
  std::unique_ptr<CampaignStore> store(
      new CampaignStore(dir, std::move(campaign), std::move(client_token)));
  store->write_definition();
  return store;
}

std::unique_ptr<CampaignStore> CampaignStore::open(const fs::path& dir) {
  json def;
  try {
    def = json::parse(read_file(dir / kDefinitionFile));
  } catch (const json::parse_error& e) {
    throw CorruptStoreError((dir / kDefinitionFile).string() + ": " + e.what());
  }
  auto campaign = io::campaign_from_json(def.at("campaign"));
  std::unique_ptr<CampaignStore> store(
      new CampaignStore(dir, std::move(campaign), def.value("client_token", std::string())));
  store->replay();
  return store;
}

void CampaignStore::write_definition() const {
  json def = {{"schema_version", io::kSchemaVersion},
              {"client_token", client_token_},
              {"campaign", io::to_json(campaign_)}};
  write_atomically(dir_ / kDefinitionFile, def.dump(2) + "\n");
}

void CampaignStore::replay() {
  replaying_ = true;
  for (const auto& line : read_log(dir_ / kEventsFile)) {
    EventRecord rec;
    try {
      rec = event_record_from_json(line);
      apply_event(rec);
    } catch (const CorruptStoreError&) {
      throw;
    } catch (const Error& e) {
      throw CorruptStoreError("campaign '" + id_ + "': event log does not replay: " + e.what());
    }
  }
  for (const auto& line : read_log(dir_ / kImportsFile)) {
    try {
      auto rec = judgement_record_from_json(line);
      next_judgement_seq_ = std::max(next_judgement_seq_, rec.seq + 1);
      publish(std::move(rec));
    } catch (const Error& e) {
      throw CorruptStoreError("campaign '" + id_ + "': import log: " + e.what());
    }
  }
  for (const auto& line : read_log(dir_ / kMetricsFile)) {
    metrics_.push_back({line.value("metric", std::string()), line.value("system_id", std::string()),
                        line.value("item_id", std::string()), line.value("score", 0.0)});
  }
  std::stable_sort(replayed_.begin(), replayed_.end(),
                   [](const auto& a, const auto& b) { return a.seq < b.seq; });
  judgements_ = std::make_shared<const std::vector<JudgementRecord>>(std::move(replayed_));
  replayed_.clear();
  replaying_ = false;
}

// Applies one event record to in-memory state. Used by replay and, after the
// record is on disk, by submit.
void CampaignStore::apply_event(const EventRecord& rec) {
  if (rec.event_kind == "start") {
    if (rec.seq != 0 || sessions_.count(rec.session_id)) {
      throw CorruptStoreError("session '" + rec.session_id + "' started twice");
    }
    auto s = session::start_session(campaign_, rec.payload.value("assessor_id", std::string()),
                                    rec.session_id);
    session_by_assessor_[s.assessor_id] = s.session_id;
    last_seq_[s.session_id] = 0;
    sessions_.emplace(s.session_id, std::move(s));
    events_.push_back(rec);
    return;
  }
  auto it = sessions_.find(rec.session_id);
  if (it == sessions_.end()) throw CorruptStoreError("event for unknown session '" + rec.session_id + "'");
  if (rec.seq != last_seq_[rec.session_id] + 1) {
    throw CorruptStoreError("session '" + rec.session_id + "': seq " + std::to_string(rec.seq) +
                            " out of order");
  }
  auto ev = io::event_from_wire(rec.event_kind, rec.payload);
  auto next = session::advance(campaign_, it->second, ev);
  if (std::holds_alternative<session::event::SubmitAssessment>(ev)) {
    JudgementRecord jr;
    jr.seq = rec.payload.at("judgement_seq").get<std::uint64_t>();
    jr.campaign_id = id_;
    jr.judgement = next.submissions.back();
    next_judgement_seq_ = std::max(next_judgement_seq_, jr.seq + 1);
    publish(std::move(jr));
  }
  it->second = std::move(next);
  last_seq_[rec.session_id] = rec.seq;
  events_.push_back(rec);
}

void CampaignStore::append_line(const fs::path& file, const json& line) {
  const std::string text = line.dump() + "\n";
  int fd = ::open(file.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error("io_error", "cannot open " + file.string());
  const char* p = text.data();
  std::size_t left = text.size();
  while (left > 0) {
    ssize_t n = ::write(fd, p, left);
    if (n <= 0) {
      ::close(fd);
      throw Error("io_error", "write failed on " + file.string());
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

void CampaignStore::publish(JudgementRecord rec) {
  if (replaying_) {
    replayed_.push_back(std::move(rec));
    return;
  }
  auto next = std::make_shared<std::vector<JudgementRecord>>(*judgements_);
  const bool in_order = next->empty() || next->back().seq < rec.seq;
  next->push_back(std::move(rec));
  if (!in_order) {
    std::sort(next->begin(), next->end(),
              [](const auto& a, const auto& b) { return a.seq < b.seq; });
  }
  judgements_ = std::move(next);
}

Campaign CampaignStore::campaign() const {
  std::lock_guard lock(mu_);
  return campaign_;
}

void CampaignStore::add_items(std::vector<corpus::EvaluationItem> items) {
  std::lock_guard lock(mu_);
  if (!sessions_.empty()) throw ConflictError("campaign '" + id_ + "' already has sessions");
  Campaign next = campaign_;
  next.items.insert(next.items.end(), std::make_move_iterator(items.begin()),
                    std::make_move_iterator(items.end()));
  validate_campaign(next);
  campaign_ = std::move(next);
  write_definition();
}

void CampaignStore::add_outputs(std::vector<corpus::SystemOutput> outputs) {
  std::lock_guard lock(mu_);
  if (!sessions_.empty()) throw ConflictError("campaign '" + id_ + "' already has sessions");
  Campaign next = campaign_;
  next.outputs.insert(next.outputs.end(), std::make_move_iterator(outputs.begin()),
                      std::make_move_iterator(outputs.end()));
  validate_campaign(next);
  campaign_ = std::move(next);
  write_definition();
}

session::Session CampaignStore::start_session(std::string_view assessor_id) {
  std::lock_guard lock(mu_);
  if (auto it = session_by_assessor_.find(std::string(assessor_id)); it != session_by_assessor_.end()) {
    return sessions_.at(it->second);
  }
  if (!campaign_.has_assessor(assessor_id)) {
    throw NotFoundError("assessor '" + std::string(assessor_id) + "' is not registered in campaign '" +
                        id_ + "'");
  }
  EventRecord rec{random_token(), 0, "start", {{"assessor_id", assessor_id}}, utc_timestamp()};
  append_line(dir_ / kEventsFile, to_json(rec));
  apply_event(rec);
  return sessions_.at(rec.session_id);
}

std::optional<session::Session> CampaignStore::find_session(std::string_view session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(std::string(session_id));
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::vector<session::Session> CampaignStore::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<session::Session> out;
  for (const auto& [_, s] : sessions_) out.push_back(s);
  return out;
}

std::uint64_t CampaignStore::next_seq(std::string_view session_id) const {
  std::lock_guard lock(mu_);
  auto it = last_seq_.find(std::string(session_id));
  if (it == last_seq_.end()) throw NotFoundError("unknown session '" + std::string(session_id) + "'");
  return it->second + 1;
}

SubmitResult CampaignStore::submit(std::string_view session_id,
                                   std::optional<std::uint64_t> client_seq, session::Event event) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(std::string(session_id));
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + std::string(session_id) + "'");
  const std::uint64_t next_seq = last_seq_[it->first] + 1;
  if (client_seq) {
    if (*client_seq < next_seq) return {it->second, true, std::nullopt};
    if (*client_seq > next_seq) {
      throw ConflictError("seq " + std::to_string(*client_seq) + " is ahead of the session (expected " +
                          std::to_string(next_seq) + ")");
    }
  }

  const std::string now = utc_timestamp();
  auto stamp = [&](scoring::SegmentJudgement& j) {
    if (j.submitted_at.empty()) j.submitted_at = now;
  };
  if (auto* p = std::get_if<session::event::SubmitPractice>(&event)) stamp(p->judgement);
  if (auto* a = std::get_if<session::event::SubmitAssessment>(&event)) stamp(a->judgement);

  // Dry run so nothing invalid reaches the log.
  session::advance(campaign_, it->second, event);

  EventRecord rec{it->first, next_seq, std::string(session::event_kind(event)),
                  io::event_payload(event), now};
  if (std::holds_alternative<session::event::SubmitAssessment>(event)) {
    rec.payload["judgement_seq"] = next_judgement_seq_;
  }
  append_line(dir_ / kEventsFile, to_json(rec));
  apply_event(rec);

  SubmitResult result{it->second, false, std::nullopt};
  if (std::holds_alternative<session::event::SubmitPractice>(event)) {
    result.feedback = it->second.practice_feedback.back();
  }
  return result;
}

std::vector<JudgementRecord> CampaignStore::import_judgements(
    std::vector<scoring::SegmentJudgement> judgements) {
  std::lock_guard lock(mu_);
  for (const auto& j : judgements) {
    const auto* item = campaign_.find_item(j.item_id);
    if (!item) throw ValidationError("judgement references unknown item '" + j.item_id + "'",
                                     {{"item_id", j.item_id}});
    if (!campaign_.find_output(j.item_id, j.system_id)) {
      throw ValidationError("no output of system '" + j.system_id + "' for item '" + j.item_id + "'",
                            {{"system_id", j.system_id}});
    }
    scoring::require_valid(j, *item);
  }
  std::vector<JudgementRecord> written;
  for (auto& j : judgements) {
    JudgementRecord rec{next_judgement_seq_, id_, std::move(j), io::kSchemaVersion};
    append_line(dir_ / kImportsFile, to_json(rec));
    ++next_judgement_seq_;
    written.push_back(rec);
    publish(std::move(rec));
  }
  return written;
}

void CampaignStore::add_metric_scores(std::string_view metric, const std::vector<MetricScore>& scores) {
  std::lock_guard lock(mu_);
  for (const auto& s : scores) {
    json line = {{"metric", metric}, {"system_id", s.system_id}, {"score", s.score}};
    if (!s.item_id.empty()) line["item_id"] = s.item_id;
    append_line(dir_ / kMetricsFile, line);
    metrics_.push_back({std::string(metric), s.system_id, s.item_id, s.score});
  }
}

analytics::ScoreMap CampaignStore::metric_scores(std::string_view metric, analytics::Level level) const {
  std::lock_guard lock(mu_);
  analytics::ScoreMap out;
  for (const auto& m : metrics_) {
    if (m.metric != metric) continue;
    const bool segment = !m.item_id.empty();
    if (segment != (level == analytics::Level::Segment)) continue;
    out[{m.system_id, m.item_id}] = m.score;
  }
  return out;
}

std::vector<std::string> CampaignStore::metric_names() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> names;
  for (const auto& m : metrics_) {
    if (std::find(names.begin(), names.end(), m.metric) == names.end()) names.push_back(m.metric);
  }
  std::sort(names.begin(), names.end());
  return names;
}

JudgementSnapshot CampaignStore::snapshot() const {
  std::lock_guard lock(mu_);
  return judgements_;
}

std::vector<EventRecord> CampaignStore::event_log() const {
  std::lock_guard lock(mu_);
  return events_;
}

// ---------------------------------------------------------------------------
// Store

Store::Store(fs::path data_dir) : data_dir_(std::move(data_dir)) {
  const fs::path root = data_dir_ / "campaigns";
  fs::create_directories(root);
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / kDefinitionFile)) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    auto c = CampaignStore::open(d);
    campaigns_.emplace(c->id(), std::move(c));
  }
}

std::string Store::create_campaign(Campaign campaign, std::string client_token) {
  std::unique_lock lock(mu_);
  if (auto it = campaigns_.find(campaign.campaign_id); it != campaigns_.end()) {
    if (it->second->client_token() == client_token && it->second->campaign() == campaign) {
      return campaign.campaign_id;
    }
    throw ConflictError("campaign '" + campaign.campaign_id + "' already exists");
  }
  if (campaign.campaign_id.find_first_of("/\\") != std::string::npos || campaign.campaign_id == "." ||
      campaign.campaign_id == "..") {
    throw ValidationError("campaign_id must be a plain name", {{"campaign_id", campaign.campaign_id}});
  }
  const auto id = campaign.campaign_id;
  auto store = CampaignStore::create(data_dir_ / "campaigns" / id, std::move(campaign),
                                     std::move(client_token));
  campaigns_.emplace(id, std::move(store));
  return id;
}

CampaignStore& Store::campaign(std::string_view campaign_id) {
  std::shared_lock lock(mu_);
  auto it = campaigns_.find(campaign_id);
  if (it == campaigns_.end()) throw NotFoundError("unknown campaign '" + std::string(campaign_id) + "'");
  return *it->second;
}

CampaignStore& Store::campaign_for_session(std::string_view session_id) {
  std::shared_lock lock(mu_);
  for (auto& [_, c] : campaigns_) {
    if (c->find_session(session_id)) return *c;
  }
  throw NotFoundError("unknown session '" + std::string(session_id) + "'");
}

std::vector<std::string> Store::campaign_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : campaigns_) ids.push_back(id);
  return ids;
}

// ---------------------------------------------------------------------------

Campaign campaign_from_request(const json& request) {
  if (!request.is_object()) throw ValidationError("campaign request must be a json object");
  json def = request;
  def.erase("corpus");
  def.erase("corpus_format");
  def.erase("client_token");
  if (!def.contains("items")) def["items"] = json::array();
  if (!def.contains("outputs") || def["outputs"].is_string()) def["outputs"] = json::array();

  if (auto it = request.find("corpus"); it != request.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("corpus must be file content", {{"corpus", "expected string"}});
    auto format = corpus::parse_format(request.value("corpus_format", std::string("jsonl")));
    for (const auto& item : corpus::ingest_corpus(it->get<std::string>(), format)) {
      def["items"].push_back(io::to_json(item));
    }
  }
  if (auto it = request.find("outputs"); it != request.end() && it->is_string()) {
    for (const auto& o : corpus::ingest_outputs(it->get<std::string>())) {
      def["outputs"].push_back(io::to_json(o));
    }
  }
  if (!def.contains("campaign_id") || def["campaign_id"].is_null() ||
      def["campaign_id"].get<std::string>().empty()) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "c%012llx",
                  static_cast<unsigned long long>(fnv1a(def.dump()) & 0xffffffffffffULL));
    def["campaign_id"] = buf;
  }
  return io::campaign_from_json(def);
}

std::vector<MetricScore> parse_metric_scores(std::string_view content, std::string_view metric) {
  std::vector<MetricScore> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed json: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("system_id") || !rec["system_id"].is_string() ||
        !rec.contains("score") || !rec["score"].is_number()) {
      throw ParseError(line_no, "metric record needs string system_id and numeric score");
    }
    MetricScore s{std::string(metric), rec["system_id"].get<std::string>(), "", rec["score"].get<double>()};
    if (auto it = rec.find("item_id"); it != rec.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError(line_no, "item_id must be a string");
      s.item_id = it->get<std::string>();
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hilmeme::service
