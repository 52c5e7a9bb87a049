#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hilmeme/campaign.hpp"

namespace hilmeme::session {

// Workflow: Consent -> Introduction -> Practice(0..3) -> Assessment(0..N) -> Complete.
// Declining consent ends in Declined. Complete and Declined are absorbing.
namespace state {
struct Consent {
  bool operator==(const Consent&) const = default;
};
struct Introduction {
  bool operator==(const Introduction&) const = default;
};
struct Practice {
  std::size_t completed = 0;
  bool operator==(const Practice&) const = default;
};
struct Assessment {
  std::size_t next_index = 0;
  bool operator==(const Assessment&) const = default;
};
struct Complete {
  bool operator==(const Complete&) const = default;
};
struct Declined {
  bool operator==(const Declined&) const = default;
};
}  // namespace state

using SessionState = std::variant<state::Consent, state::Introduction, state::Practice,
                                  state::Assessment, state::Complete, state::Declined>;

std::string state_name(const SessionState& s);

namespace event {
struct AcceptConsent {};
struct DeclineConsent {};
struct FinishIntroduction {};
struct SubmitPractice {
  scoring::SegmentJudgement judgement;
};
struct SubmitAssessment {
  scoring::SegmentJudgement judgement;
};
}  // namespace event

using Event = std::variant<event::AcceptConsent, event::DeclineConsent, event::FinishIntroduction,
                           event::SubmitPractice, event::SubmitAssessment>;

/// Wire kinds: accept_consent, decline_consent, finish_introduction,
/// submit_practice, submit_assessment.
std::string_view event_kind(const Event& e);

struct PracticeFeedback {
  double general_delta = 0.0;
  /// (span_id, categories equal) in gold span order.
  std::vector<std::pair<std::string, bool>> category_matches;

  double match_rate() const;
  /// Gate used only when a campaign enables practice gating.
  bool passes_gate() const;

  bool operator==(const PracticeFeedback&) const = default;
};

struct Session {
  std::string session_id;
  std::string assessor_id;
  std::string campaign_id;
  SessionState state = state::Consent{};
  std::vector<corpus::WorkUnit> queue;
  /// Assessment judgements, in queue order; append-only.
  std::vector<scoring::SegmentJudgement> submissions;
  std::vector<scoring::SegmentJudgement> practice_submissions;
  std::vector<PracticeFeedback> practice_feedback;

  bool operator==(const Session&) const = default;
};

/// Seeded Fisher-Yates over the canonically sorted unit set. A pure function
/// of (seed, assessor_id, unit set); stable across platforms.
std::vector<corpus::WorkUnit> shuffled_queue(std::vector<corpus::WorkUnit> units,
                                             std::uint64_t seed, std::string_view assessor_id);

/// Every assessor is assigned every work unit. Throws NotFoundError for an
/// unregistered assessor.
Session start_session(const Campaign& campaign, std::string_view assessor_id,
                      std::string session_id = {});

/// Applies one event. Throws ConflictError for an illegal transition or a
/// submission that is not for the unit at the head of the queue, and
/// ValidationError for an incomplete or malformed judgement (or a failed
/// practice gate, when gating is enabled).
Session advance(const Campaign& campaign, Session session, const Event& event);

/// Advisory comparison against the practice gold. Throws ValidationError when
/// the judgement's spans differ from the gold's.
PracticeFeedback check_practice(const scoring::SegmentJudgement& judgement,
                                const PracticeItem& gold);

struct CurrentUnit {
  corpus::EvaluationItem item;
  corpus::SystemOutput output;
  bool practice = false;
  std::size_t index = 0;
  std::size_t total = 0;
};

/// The k-th practice unit in Practice(k), the queue head in Assessment,
/// nothing otherwise.
std::optional<CurrentUnit> current_unit(const Campaign& campaign, const Session& session);

/// Rebuilds a session from its start parameters and event sequence.
Session replay(const Campaign& campaign, std::string_view assessor_id, std::string session_id,
               const std::vector<Event>& events);

}  // namespace hilmeme::session
