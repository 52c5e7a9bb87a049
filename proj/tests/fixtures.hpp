#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hilmeme/campaign.hpp"
#include "hilmeme/session.hpp"

namespace hilmeme::testing {

/// Four items (one with no MWEs, one with two), systems "sysA" and "sysB"
/// covering every item, three practice items, assessors alice and bob.
Campaign make_campaign(std::string campaign_id = "demo");

/// Corpus and output files equivalent to make_campaign() items/outputs.
std::string corpus_jsonl();
std::string outputs_jsonl();
/// Config json (assessors, seed, practice) for campaign_from_request / CLI.
std::string config_json(const std::string& campaign_id = "demo");

/// Judges every span of `item` with `category`; NonMwe gets `non_mwe_score`,
/// AltMwe gets a capture "alt:<span_id>".
scoring::SegmentJudgement uniform_judgement(const corpus::EvaluationItem& item,
                                            const std::string& system_id,
                                            const std::string& assessor_id, double general,
                                            scoring::MweCategory category, double weight = 1.0,
                                            double non_mwe_score = 5.0);

/// Random valid judgement of `item` (random categories, scores, weights, aspects).
scoring::SegmentJudgement random_judgement(const corpus::EvaluationItem& item,
                                           const std::string& system_id,
                                           const std::string& assessor_id, std::mt19937_64& rng);

/// Item with `n_spans` synthetic single-token spans over a 2*n+1 token source.
corpus::EvaluationItem synthetic_item(const std::string& item_id, std::size_t n_spans);

/// Drives a fresh session through consent, introduction and the three
/// practice items (submitting each gold answer).
session::Session through_practice(const Campaign& campaign, const std::string& assessor_id);

struct TempDir {
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path path;
};

void write_file(const std::filesystem::path& p, const std::string& content);
std::string read_file(const std::filesystem::path& p);

}  // namespace hilmeme::testing
