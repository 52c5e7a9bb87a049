#include <algorithm>
#include <filesystem>
#include <random>
#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "hilmeme/error.hpp"
#include "hilmeme/service.hpp"
#include "hilmeme/store.hpp"

using namespace hilmeme;
using namespace hilmeme::service;
using scoring::MweCategory;
namespace fs = std::filesystem;

namespace {

scoring::SegmentJudgement answer_for(const Campaign& c, const session::Session& s, std::mt19937_64& rng) {
  auto cu = session::current_unit(c, s);
  REQUIRE(cu.has_value());
  if (cu->practice) {
    auto j = c.practice_items[cu->index].gold;
    j.assessor_id = s.assessor_id;
    return j;
  }
  return testing::random_judgement(cu->item, cu->output.system_id, s.assessor_id, rng);
}

session::Event next_event(const Campaign& c, const session::Session& s, std::mt19937_64& rng) {
  return std::visit(
      [&](const auto& st) -> session::Event {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, session::state::Consent>) {
          return session::event::AcceptConsent{};
        } else if constexpr (std::is_same_v<T, session::state::Introduction>) {
          return session::event::FinishIntroduction{};
        } else if constexpr (std::is_same_v<T, session::state::Practice>) {
          return session::event::SubmitPractice{answer_for(c, s, rng)};
        } else {
          return session::event::SubmitAssessment{answer_for(c, s, rng)};
        }
      },
      s.state);
}

/// Runs `steps` events per assessor, interleaved.
void drive(CampaignStore& store, int steps, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  const auto c = store.campaign();
  for (int k = 0; k < steps; ++k) {
    for (const auto& a : c.assessors) {
      auto s = store.start_session(a);
      if (std::holds_alternative<session::state::Complete>(s.state)) continue;
      store.submit(s.session_id, std::nullopt, next_event(c, s, rng));
    }
  }
}

std::vector<JudgementRecord> records(const CampaignStore& s) { return *s.snapshot(); }

std::vector<std::size_t> line_boundaries(const std::string& content) {
  std::vector<std::size_t> out{0};
  for (std::size_t i = 0; i < content.size(); ++i)
    if (content[i] == '\n') out.push_back(i + 1);
  return out;
}

}  // namespace

TEST_CASE("create, reopen, identical state") {
  testing::TempDir tmp;
  {
    Store store(tmp.path);
    CHECK(store.create_campaign(testing::make_campaign()) == "demo");
    drive(store.campaign("demo"), 20);
  }
  Store first(tmp.path);
  Store second(tmp.path);
  auto& a = first.campaign("demo");
  auto& b = second.campaign("demo");
  CHECK(records(a) == records(b));
  CHECK(a.sessions() == b.sessions());
  CHECK(records(a).size() == 16);  // both assessors complete: 8 units each
  for (const auto& s : a.sessions()) CHECK(std::holds_alternative<session::state::Complete>(s.state));
  CHECK(campaign_report_csv(a) == campaign_report_csv(b));
  CHECK(campaign_report_json(a).dump() == campaign_report_json(b).dump());
  CHECK(io::termbank_tsv(campaign_term_bank(a)) == io::termbank_tsv(campaign_term_bank(b)));

  // Seq strictly increasing.
  auto rs = records(a);
  for (std::size_t k = 1; k < rs.size(); ++k) CHECK(rs[k - 1].seq < rs[k].seq);
}

TEST_CASE("campaign creation is idempotent per client token") {
  testing::TempDir tmp;
  Store store(tmp.path);
  CHECK(store.create_campaign(testing::make_campaign(), "tok") == "demo");
  CHECK(store.create_campaign(testing::make_campaign(), "tok") == "demo");
  CHECK_THROWS_AS(store.create_campaign(testing::make_campaign(), "other"), ConflictError);
  auto changed = testing::make_campaign();
  changed.shuffle_seed = 7;
  CHECK_THROWS_AS(store.create_campaign(changed, "tok"), ConflictError);
  auto bad = testing::make_campaign("../escape");
  CHECK_THROWS_AS(store.create_campaign(bad), ValidationError);
  CHECK_THROWS_AS(store.campaign("nope"), NotFoundError);
}

TEST_CASE("retrying a submit with the same seq is at most once") {
  testing::TempDir tmp;
  Store store(tmp.path);
  store.create_campaign(testing::make_campaign());
  auto& cs = store.campaign("demo");
  const auto c = cs.campaign();
  auto start = cs.start_session("alice");
  CHECK(cs.next_seq(start.session_id) == 1);
  // Replay the same steps through the store.
  cs.submit(start.session_id, 1, session::event::AcceptConsent{});
  cs.submit(start.session_id, 2, session::event::FinishIntroduction{});
  for (std::uint64_t k = 0; k < 3; ++k) {
    auto j = c.practice_items[k].gold;
    j.assessor_id = "alice";
    auto r = cs.submit(start.session_id, 3 + k, session::event::SubmitPractice{j});
    CHECK(r.feedback.has_value());
  }
  const auto head = cs.find_session(start.session_id)->queue[0];
  auto j = testing::uniform_judgement(*c.find_item(head.item_id), head.system_id, "alice", 6, MweCategory::Null);
  auto first = cs.submit(start.session_id, 6, session::event::SubmitAssessment{j});
  CHECK_FALSE(first.duplicate);
  auto again = cs.submit(start.session_id, 6, session::event::SubmitAssessment{j});
  CHECK(again.duplicate);
  CHECK(again.session == first.session);
  CHECK(records(cs).size() == 1);
  CHECK_THROWS_AS(cs.submit(start.session_id, 9, session::event::SubmitAssessment{j}), ConflictError);

  Store reopened(tmp.path);
  CHECK(records(reopened.campaign("demo")).size() == 1);
}

TEST_CASE("rejected events are not persisted") {
  testing::TempDir tmp;
  Store store(tmp.path);
  store.create_campaign(testing::make_campaign());
  auto& cs = store.campaign("demo");
  auto s = cs.start_session("alice");
  const auto before = testing::read_file(tmp.path / "campaigns/demo/events.jsonl");
  CHECK_THROWS_AS(cs.submit(s.session_id, std::nullopt, session::event::FinishIntroduction{}), ConflictError);
  CHECK(testing::read_file(tmp.path / "campaigns/demo/events.jsonl") == before);
  CHECK(cs.next_seq(s.session_id) == 1);
}

TEST_CASE("start_session returns the existing session") {
  testing::TempDir tmp;
  Store store(tmp.path);
  store.create_campaign(testing::make_campaign());
  auto& cs = store.campaign("demo");
  auto a = cs.start_session("alice");
  CHECK(cs.start_session("alice").session_id == a.session_id);
  CHECK(a.session_id.size() == 32);
  CHECK(&store.campaign_for_session(a.session_id) == &cs);
  CHECK_THROWS_AS(cs.start_session("mallory"), NotFoundError);
  CHECK_THROWS_AS(store.campaign_for_session("missing"), NotFoundError);
}

TEST_CASE("corpus data is frozen once a session exists") {
  testing::TempDir tmp;
  Store store(tmp.path);
  auto c = testing::make_campaign();
  c.outputs.clear();
  store.create_campaign(c);
  auto& cs = store.campaign("demo");
  cs.add_outputs(corpus::ingest_outputs(testing::outputs_jsonl()));
  CHECK(cs.campaign().work_units().size() == 8);
  CHECK_THROWS_AS(cs.add_outputs({{"sysC", "nope", "h"}}), ValidationError);
  cs.start_session("alice");
  CHECK_THROWS_AS(cs.add_outputs({{"sysC", "i1", "h"}}), ConflictError);

  Store reopened(tmp.path);
  CHECK(reopened.campaign("demo").campaign().outputs.size() == 8);
}

TEST_CASE("truncation at any record boundary or mid-line replays") {
  testing::TempDir tmp;
  {
    Store store(tmp.path);
    store.create_campaign(testing::make_campaign());
    drive(store.campaign("demo"), 9);
  }
  const fs::path events = tmp.path / "campaigns/demo/events.jsonl";
  const std::string full = testing::read_file(events);
  const auto bounds = line_boundaries(full);
  REQUIRE(bounds.size() > 10);

  std::vector<std::size_t> cuts = bounds;
  std::mt19937_64 rng(17);
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    cuts.push_back(bounds[k] + 1 + rng() % (bounds[k + 1] - bounds[k] - 1));
    cuts.push_back(bounds[k + 1] - 1);
  }

  for (auto cut : cuts) {
    CAPTURE(cut);
    testing::TempDir copy;
    fs::copy(tmp.path, copy.path, fs::copy_options::recursive);
    const fs::path log = copy.path / "campaigns/demo/events.jsonl";
    testing::write_file(log, full.substr(0, cut));

    // Complete lines before the cut survive; a partial tail is dropped unless
    // only its newline was lost.
    const auto kept = std::count(full.begin(), full.begin() + static_cast<long>(cut), '\n') +
                      (cut < full.size() && full[cut] == '\n' ? 1 : 0);
    Store store(copy.path);
    auto& cs = store.campaign("demo");
    CHECK(static_cast<long>(cs.event_log().size()) == kept);
    for (const auto& r : records(cs)) {
      CHECK(scoring::check_judgement(r.judgement, *cs.campaign().find_item(r.judgement.item_id)).empty());
    }
    for (const auto& s : cs.sessions()) CHECK(s.submissions.size() <= s.queue.size());

    // The store keeps working after recovery, and a second open agrees.
    drive(cs, 30, cut);
    for (const auto& s : cs.sessions()) CHECK(std::holds_alternative<session::state::Complete>(s.state));
    Store again(copy.path);
    CHECK(records(again.campaign("demo")) == records(cs));
  }
}

TEST_CASE("a corrupt record in the middle of a log is reported") {
  testing::TempDir tmp;
  {
    Store store(tmp.path);
    store.create_campaign(testing::make_campaign());
    drive(store.campaign("demo"), 3);
  }
  const fs::path events = tmp.path / "campaigns/demo/events.jsonl";
  auto content = testing::read_file(events);
  content.insert(line_boundaries(content)[2], "{garbage\n");
  testing::write_file(events, content);
  try {
    Store store(tmp.path);
    FAIL("expected corrupt_store");
  } catch (const Error& e) {
    CHECK(e.code() == "corrupt_store");
  }
}

TEST_CASE("export then import reproduces the judgement multiset") {
  testing::TempDir tmp;
  Store store(tmp.path);
  store.create_campaign(testing::make_campaign("src"));
  drive(store.campaign("src"), 20);
  const auto exported = judgements_jsonl(records(store.campaign("src")));

  store.create_campaign(testing::make_campaign("dst"));
  auto parsed = parse_judgements_jsonl(exported);
  std::vector<scoring::SegmentJudgement> js;
  for (const auto& r : parsed) js.push_back(r.judgement);
  store.campaign("dst").import_judgements(js);

  auto sorted = [](std::vector<scoring::SegmentJudgement> v) {
    auto key = [](const auto& j) { return std::tie(j.assessor_id, j.system_id, j.item_id); };
    std::sort(v.begin(), v.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
    return v;
  };
  CHECK(sorted(judgements_of(store.campaign("dst").snapshot())) ==
        sorted(judgements_of(store.campaign("src").snapshot())));
  CHECK(campaign_report_csv(store.campaign("dst")) == campaign_report_csv(store.campaign("src")));

  Store reopened(tmp.path);
  CHECK(records(reopened.campaign("dst")) == records(store.campaign("dst")));

  auto broken = js.front();
  broken.mwe_judgements.clear();
  if (!js.front().mwe_judgements.empty()) {
    CHECK_THROWS_AS(store.campaign("dst").import_judgements({broken}), ValidationError);
  }
}

TEST_CASE("metric scores") {
  testing::TempDir tmp;
  Store store(tmp.path);
  store.create_campaign(testing::make_campaign());
  auto& cs = store.campaign("demo");
  cs.add_metric_scores("bleu", parse_metric_scores(R"({"system_id":"sysA","score":31.5}
{"system_id":"sysB","score":20}
{"system_id":"sysA","item_id":"i1","score":0.4})",
                                                   "bleu"));
  CHECK(cs.metric_scores("bleu", analytics::Level::System).size() == 2);
  CHECK(cs.metric_scores("bleu", analytics::Level::Segment).size() == 1);
  CHECK(cs.metric_names() == std::vector<std::string>{"bleu"});
  CHECK_THROWS_AS(parse_metric_scores(R"({"system_id":"a"})", "bleu"), ParseError);

  Store reopened(tmp.path);
  CHECK(reopened.campaign("demo").metric_scores("bleu", analytics::Level::System) ==
        cs.metric_scores("bleu", analytics::Level::System));
}

TEST_CASE("concurrent sessions and snapshot readers") {
  testing::TempDir tmp;
  Store store(tmp.path);
  auto c = testing::make_campaign();
  for (int k = 0; k < 6; ++k) c.assessors.push_back("extra" + std::to_string(k));
  store.create_campaign(c);
  auto& cs = store.campaign("demo");

  std::vector<std::thread> workers;
  for (const auto& a : c.assessors) {
    workers.emplace_back([&cs, &c, a] {
      std::mt19937_64 rng(std::hash<std::string>{}(a));
      auto s = cs.start_session(a);
      while (!std::holds_alternative<session::state::Complete>(s.state)) {
        s = cs.submit(s.session_id, std::nullopt, next_event(c, s, rng)).session;
      }
    });
  }
  std::thread reader([&cs] {
    for (int k = 0; k < 200; ++k) {
      auto snap = cs.snapshot();
      for (std::size_t i = 1; i < snap->size(); ++i) CHECK((*snap)[i - 1].seq < (*snap)[i].seq);
      (void)campaign_report_csv(cs);
    }
  });
  for (auto& w : workers) w.join();
  reader.join();
  CHECK(records(cs).size() == 8 * c.assessors.size());

  Store reopened(tmp.path);
  CHECK(records(reopened.campaign("demo")) == records(cs));
}
