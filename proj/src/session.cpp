#include "hilmeme/session.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "hilmeme/error.hpp"

namespace hilmeme::session {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Unbiased draw in [0, bound) by rejection; std::uniform_int_distribution is
// implementation-defined and would break cross-platform determinism.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

[[noreturn]] void illegal(const SessionState& s, const Event& e) {
  throw ConflictError("illegal transition: " + std::string(event_kind(e)) + " in state " +
                      state_name(s));
}

void check_assessor(const scoring::SegmentJudgement& j, const Session& s) {
  if (j.assessor_id != s.assessor_id) {
    throw ValidationError("judgement assessor '" + j.assessor_id + "' does not own session '" +
                              s.session_id + "'",
                          {{"assessor_id", "must be '" + s.assessor_id + "'"}});
  }
}

void check_unit(const scoring::SegmentJudgement& j, std::string_view item_id,
                std::string_view system_id) {
  if (j.item_id != item_id || j.system_id != system_id) {
    throw ConflictError("submission for (" + j.item_id + ", " + j.system_id +
                        ") but the current unit is (" + std::string(item_id) + ", " +
                        std::string(system_id) + ")");
  }
}

SessionState after_practice(std::size_t completed, const Session& s) {
  if (completed < kPracticeCount) return state::Practice{completed};
  if (s.queue.empty()) return state::Complete{};
  return state::Assessment{0};
}

}  // namespace

std::string state_name(const SessionState& s) {
  struct Namer {
    std::string operator()(const state::Consent&) const { return "consent"; }
    std::string operator()(const state::Introduction&) const { return "introduction"; }
    std::string operator()(const state::Practice& p) const {
      return "practice(" + std::to_string(p.completed) + ")";
    }
    std::string operator()(const state::Assessment& a) const {
      return "assessment(" + std::to_string(a.next_index) + ")";
    }
    std::string operator()(const state::Complete&) const { return "complete"; }
    std::string operator()(const state::Declined&) const { return "declined"; }
  };
  return std::visit(Namer{}, s);
}

std::string_view event_kind(const Event& e) {
  switch (e.index()) {
    case 0: return "accept_consent";
    case 1: return "decline_consent";
    case 2: return "finish_introduction";
    case 3: return "submit_practice";
    case 4: return "submit_assessment";
  }
  return "unknown";
}

double PracticeFeedback::match_rate() const {
  if (category_matches.empty()) return 1.0;
  auto hits = std::count_if(category_matches.begin(), category_matches.end(),
                            [](const auto& m) { return m.second; });
  return static_cast<double>(hits) / static_cast<double>(category_matches.size());
}

bool PracticeFeedback::passes_gate() const {
  // 3 * hits >= 2 * n avoids comparing against a rounded 2/3.
  auto hits = std::count_if(category_matches.begin(), category_matches.end(),
                            [](const auto& m) { return m.second; });
  return general_delta <= 2.0 &&
         3 * static_cast<std::size_t>(hits) >= 2 * category_matches.size();
}

std::vector<corpus::WorkUnit> shuffled_queue(std::vector<corpus::WorkUnit> units,
                                             std::uint64_t seed, std::string_view assessor_id) {
  std::sort(units.begin(), units.end());
  const std::uint64_t h = fnv1a(assessor_id);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  std::mt19937_64 rng(seq);
  for (std::size_t i = units.size(); i > 1; --i) {
    std::swap(units[i - 1], units[bounded(rng, i)]);
  }
  return units;
}

Session start_session(const Campaign& campaign, std::string_view assessor_id,
                      std::string session_id) {
  if (!campaign.has_assessor(assessor_id)) {
    throw NotFoundError("assessor '" + std::string(assessor_id) + "' is not registered in campaign '" +
                        campaign.campaign_id + "'");
  }
  Session s;
  s.session_id = session_id.empty() ? campaign.campaign_id + "/" + std::string(assessor_id)
                                    : std::move(session_id);
  s.assessor_id = assessor_id;
  s.campaign_id = campaign.campaign_id;
  s.queue = shuffled_queue(campaign.work_units(), campaign.shuffle_seed, assessor_id);
  return s;
}

PracticeFeedback check_practice(const scoring::SegmentJudgement& judgement,
                                const PracticeItem& gold) {
  std::map<std::string, scoring::MweCategory> given;
  for (const auto& m : judgement.mwe_judgements) given.emplace(m.span_id, m.category);
  std::set<std::string> gold_ids;
  for (const auto& m : gold.gold.mwe_judgements) gold_ids.insert(m.span_id);

  std::set<std::string> given_ids;
  for (const auto& [id, _] : given) given_ids.insert(id);
  if (given_ids != gold_ids || given.size() != judgement.mwe_judgements.size()) {
    throw ValidationError("practice judgement spans do not match the gold spans",
                          {{"mwes", "span mismatch"}});
  }

  PracticeFeedback fb;
  fb.general_delta = std::fabs(judgement.general.value() - gold.gold.general.value());
  for (const auto& m : gold.gold.mwe_judgements) {
    fb.category_matches.emplace_back(m.span_id, given.at(m.span_id) == m.category);
  }
  return fb;
}

Session advance(const Campaign& campaign, Session session, const Event& ev) {
  const SessionState current = session.state;

  if (std::holds_alternative<state::Consent>(current)) {
    if (std::holds_alternative<event::AcceptConsent>(ev)) {
      session.state = state::Introduction{};
    } else if (std::holds_alternative<event::DeclineConsent>(ev)) {
      session.state = state::Declined{};
    } else {
      illegal(current, ev);
    }
    return session;
  }

  if (std::holds_alternative<state::Introduction>(current)) {
    if (!std::holds_alternative<event::FinishIntroduction>(ev)) illegal(current, ev);
    session.state = state::Practice{0};
    return session;
  }

  if (const auto* p = std::get_if<state::Practice>(&current)) {
    const auto* submit = std::get_if<event::SubmitPractice>(&ev);
    if (!submit) illegal(current, ev);
    const auto& practice = campaign.practice_items.at(p->completed);
    const auto& j = submit->judgement;
    check_unit(j, practice.item.item_id, practice.output.system_id);
    check_assessor(j, session);
    scoring::require_valid(j, practice.item);
    auto feedback = check_practice(j, practice);
    if (campaign.practice_gating && !feedback.passes_gate()) {
      throw ValidationError("practice answer outside the gating tolerance; please retry",
                            {{"general", "delta " + std::to_string(feedback.general_delta)},
                             {"mwes", "category match rate " +
                                          std::to_string(feedback.match_rate())}});
    }
    session.practice_submissions.push_back(j);
    session.practice_feedback.push_back(std::move(feedback));
    session.state = after_practice(p->completed + 1, session);
    return session;
  }

  if (const auto* a = std::get_if<state::Assessment>(&current)) {
    const auto* submit = std::get_if<event::SubmitAssessment>(&ev);
    if (!submit) illegal(current, ev);
    const auto& unit = session.queue.at(a->next_index);
    const auto& j = submit->judgement;
    check_unit(j, unit.item_id, unit.system_id);
    check_assessor(j, session);
    const auto* item = campaign.find_item(unit.item_id);
    if (!item) throw NotFoundError("item '" + unit.item_id + "' missing from campaign");
    scoring::require_valid(j, *item);
    session.submissions.push_back(j);
    const std::size_t next = a->next_index + 1;
    if (next == session.queue.size()) {
      session.state = state::Complete{};
    } else {
      session.state = state::Assessment{next};
    }
    return session;
  }

  // Complete and Declined absorb nothing: every event is rejected.
  illegal(current, ev);
}

std::optional<CurrentUnit> current_unit(const Campaign& campaign, const Session& session) {
  if (const auto* p = std::get_if<state::Practice>(&session.state)) {
    const auto& practice = campaign.practice_items.at(p->completed);
    return CurrentUnit{practice.item, practice.output, true, p->completed, kPracticeCount};
  }
  if (const auto* a = std::get_if<state::Assessment>(&session.state)) {
    const auto& unit = session.queue.at(a->next_index);
    const auto* item = campaign.find_item(unit.item_id);
    const auto* output = campaign.find_output(unit.item_id, unit.system_id);
    if (!item || !output) return std::nullopt;
    return CurrentUnit{*item, *output, false, a->next_index, session.queue.size()};
  }
  return std::nullopt;
}

Session replay(const Campaign& campaign, std::string_view assessor_id, std::string session_id,
               const std::vector<Event>& events) {
  auto s = start_session(campaign, assessor_id, std::move(session_id));
  for (const auto& e : events) s = advance(campaign, std::move(s), e);
  return s;
}

}  // namespace hilmeme::session
