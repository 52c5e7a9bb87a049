#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hilmeme/error.hpp"

namespace hilmeme::corpus {
struct EvaluationItem;
}

namespace hilmeme::scoring {

inline constexpr double kMaxScore = 10.0;

/// Step I: a single 0-10 value the assessor gives while weighing both
/// fluency and adequacy.
class GeneralScore {
 public:
  GeneralScore() = default;
  /// Throws ValidationError outside [0, 10].
  explicit GeneralScore(double value);

  double value() const noexcept { return value_; }

  bool operator==(const GeneralScore&) const = default;

 private:
  double value_ = 0.0;
};

/// Step II classification. Counters: RefMwe->alpha, AltMwe->beta, NonMwe->gamma, Null->theta.
enum class MweCategory : std::uint8_t { RefMwe, AltMwe, NonMwe, Null };

inline constexpr MweCategory kAllCategories[] = {MweCategory::RefMwe, MweCategory::AltMwe,
                                                 MweCategory::NonMwe, MweCategory::Null};

/// Wire names: "ref-mwe", "alt-mwe", "non-mwe", "null".
std::string_view to_string(MweCategory category);
std::optional<MweCategory> parse_category(std::string_view name);

/// Step III difficulty aspects.
enum class Aspect : std::uint8_t { Sem, Gra, Idi, Amb };

inline constexpr Aspect kAllAspects[] = {Aspect::Sem, Aspect::Gra, Aspect::Idi, Aspect::Amb};

std::string_view to_string(Aspect aspect);
std::optional<Aspect> parse_aspect(std::string_view name);

class AspectSet {
 public:
  AspectSet() = default;
  AspectSet(std::initializer_list<Aspect> aspects) {
    for (auto a : aspects) insert(a);
  }

  void insert(Aspect a) noexcept { bits_ |= bit(a); }
  void erase(Aspect a) noexcept { bits_ &= static_cast<std::uint8_t>(~bit(a)); }
  bool contains(Aspect a) const noexcept { return (bits_ & bit(a)) != 0; }
  bool empty() const noexcept { return bits_ == 0; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }
  std::uint8_t bits() const noexcept { return bits_; }

  /// Members in canonical Sem, Gra, Idi, Amb order.
  std::vector<Aspect> members() const;

  bool operator==(const AspectSet&) const = default;

 private:
  static constexpr std::uint8_t bit(Aspect a) noexcept {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(a));
  }
  std::uint8_t bits_ = 0;
};

/// Steps II and III for one highlighted span. `weight` is the assessor's 0-1
/// degree; aspects are descriptive and never enter the arithmetic.
struct MweJudgement {
  std::string span_id;
  MweCategory category = MweCategory::Null;
  double score = 0.0;
  AspectSet aspects;
  double weight = 0.0;
  std::optional<std::string> captured_rendering;

  bool operator==(const MweJudgement&) const = default;
};

struct SegmentJudgement {
  std::string item_id;
  std::string system_id;
  std::string assessor_id;
  GeneralScore general;
  std::vector<MweJudgement> mwe_judgements;
  std::string submitted_at;

  bool operator==(const SegmentJudgement&) const = default;
};

struct Tally {
  std::uint64_t alpha = 0;
  std::uint64_t beta = 0;
  std::uint64_t gamma = 0;
  std::uint64_t theta = 0;

  std::uint64_t total() const noexcept { return alpha + beta + gamma + theta; }

  bool operator==(const Tally&) const = default;
};

/// Fixed-score table. `assessor_score` must be present exactly for NonMwe.
/// Throws ValidationError on any contract breach.
double category_score(MweCategory category, std::optional<double> assessor_score);

/// Rounds to the stored 2-decimal precision.
double quantize(double value);

/// Field-level problems in one MweJudgement (score rule, weight range,
/// missing capture). `prefix` names the field path, e.g. "mwes[2]".
std::vector<FieldError> check_mwe_judgement(const MweJudgement& mwe, const std::string& prefix);

/// Every problem with `judgement` for `item`: MweJudgement rules plus the
/// span bijection (missing, unknown and duplicate span_ids).
std::vector<FieldError> check_judgement(const SegmentJudgement& judgement,
                                        const corpus::EvaluationItem& item);

/// Throws ValidationError listing every field from check_judgement.
void require_valid(const SegmentJudgement& judgement, const corpus::EvaluationItem& item);

/// general + mean over MWEs of weight * score; general alone when there are no MWEs.
double segment_raw_score(const SegmentJudgement& judgement);

/// 10 + mean over MWEs of weight * 10; 10 when there are no MWEs.
double segment_max_points(const SegmentJudgement& judgement);

/// raw / max. Throws ValidationError when max < 10 or raw > max.
double normalize(double raw, double max);

/// normalize(segment_raw_score(j), segment_max_points(j)).
double segment_normalized(const SegmentJudgement& judgement);

Tally update_tally(Tally tally, const SegmentJudgement& judgement);
Tally tally_all(std::span<const SegmentJudgement> judgements);

}  // namespace hilmeme::scoring
