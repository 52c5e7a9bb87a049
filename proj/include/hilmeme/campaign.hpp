#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hilmeme/corpus.hpp"
#include "hilmeme/scoring.hpp"

namespace hilmeme {

/// A practice question: an item, one output for it, and the gold judgement
/// used for advisory feedback.
struct PracticeItem {
  corpus::EvaluationItem item;
  corpus::SystemOutput output;
  scoring::SegmentJudgement gold;

  bool operator==(const PracticeItem&) const = default;
};

inline constexpr std::size_t kPracticeCount = 3;
inline constexpr double kDefaultPlainThreshold = 8.0;

struct Campaign {
  std::string campaign_id;
  std::vector<corpus::EvaluationItem> items;
  std::vector<corpus::SystemOutput> outputs;
  std::array<PracticeItem, kPracticeCount> practice_items;
  std::vector<std::string> assessors;
  std::uint64_t shuffle_seed = 0;
  /// Off by default: practice feedback is advisory.
  bool practice_gating = false;
  double plain_threshold = kDefaultPlainThreshold;
  // phi is elicited per MWE; there is no other policy.

  const corpus::EvaluationItem* find_item(std::string_view item_id) const;
  const corpus::SystemOutput* find_output(std::string_view item_id,
                                          std::string_view system_id) const;
  bool has_assessor(std::string_view assessor_id) const;

  /// All (item, system) units with an output, in bind_outputs order.
  std::vector<corpus::WorkUnit> work_units() const;

  bool operator==(const Campaign&) const = default;
};

/// Checks every campaign-level invariant: item validity and uniqueness, output
/// binding, practice items (valid item, output for that item, gold covering
/// every span) and a non-empty, duplicate-free assessor list.
/// Throws ValidationError listing all problems.
void validate_campaign(const Campaign& campaign);

}  // namespace hilmeme
