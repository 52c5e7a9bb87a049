#pragma once

// Wire formats shared by the CLI, the HTTP service and the persisted logs.

#include <span>
#include <string>
#include <vector>

#include "hilmeme/analytics.hpp"
#include "hilmeme/campaign.hpp"
#include "hilmeme/session.hpp"
#include "json.hpp"

namespace hilmeme::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Corpus records: {item_id, source, reference, tokens, mwes: [{id, start, end, surface, refs}], domain}
json to_json(const corpus::EvaluationItem& item);
/// Parses and checks one corpus record; throws ParseError (line 0).
corpus::EvaluationItem item_from_json(const json& rec);

json to_json(const corpus::SystemOutput& output);
corpus::SystemOutput output_from_json(const json& rec);

// Judgements: {item_id, system_id, assessor_id, general, submitted_at,
//              mwes: [{span_id, category, score, aspects, weight, rendering}]}
// `score` may be omitted for ref-mwe / alt-mwe / null; when present it must
// equal the fixed score. Scores and weights are quantized to 2 decimals.
json to_json(const scoring::MweJudgement& mwe);
json to_json(const scoring::SegmentJudgement& judgement);
/// Collects every field problem before throwing a single ValidationError.
scoring::SegmentJudgement judgement_from_json(const json& j);

json to_json(const PracticeItem& practice);
PracticeItem practice_from_json(const json& j);

/// Full campaign definition (config + data). Validates before returning.
json to_json(const Campaign& campaign);
Campaign campaign_from_json(const json& j);

json to_json(const session::PracticeFeedback& feedback);

/// Event payloads: {} for the three workflow events, {"judgement": ...} for submissions.
json event_payload(const session::Event& event);
session::Event event_from_wire(std::string_view kind, const json& payload);

// ---------------------------------------------------------------------------
// Exports

/// CSV header: system_id,n,mean_norm,alpha,beta,gamma,theta,sem,gra,idi,amb
std::string report_csv(std::span<const analytics::SystemReport> reports);

json to_json(const analytics::SystemReport& report);
json to_json(const scoring::Tally& tally);
json to_json(const analytics::AgreementReport& agreement);
json to_json(const analytics::CorrelationResult& result);
json to_json(const analytics::TermBankEntry& entry);

/// TSV header: source_mwe, target_rendering, kind, count
std::string termbank_tsv(std::span<const analytics::TermBankEntry> entries);

}  // namespace hilmeme::io
