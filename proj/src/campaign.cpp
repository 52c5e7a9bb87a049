#include "hilmeme/campaign.hpp"

#include <algorithm>
#include <set>

#include "hilmeme/error.hpp"

namespace hilmeme {

const corpus::EvaluationItem* Campaign::find_item(std::string_view item_id) const {
  for (const auto& item : items) {
    if (item.item_id == item_id) return &item;
  }
  return nullptr;
}

const corpus::SystemOutput* Campaign::find_output(std::string_view item_id,
                                                  std::string_view system_id) const {
  for (const auto& o : outputs) {
    if (o.item_id == item_id && o.system_id == system_id) return &o;
  }
  return nullptr;
}

bool Campaign::has_assessor(std::string_view assessor_id) const {
  return std::find(assessors.begin(), assessors.end(), assessor_id) != assessors.end();
}

std::vector<corpus::WorkUnit> Campaign::work_units() const {
  return corpus::bind_outputs(items, outputs).queue;
}

void validate_campaign(const Campaign& campaign) {
  std::vector<FieldError> errors;
  if (campaign.campaign_id.empty()) errors.push_back({"campaign_id", "must not be empty"});

  std::set<std::string> ids;
  for (std::size_t i = 0; i < campaign.items.size(); ++i) {
    const auto& item = campaign.items[i];
    const std::string prefix = "items[" + std::to_string(i) + "]";
    if (!ids.insert(item.item_id).second) {
      errors.push_back({prefix + ".item_id", "duplicate item_id '" + item.item_id + "'"});
    }
    for (const auto& v : corpus::validate_item(item)) {
      errors.push_back({prefix, "item '" + item.item_id + "': " + v.message});
    }
  }
  try {
    corpus::bind_outputs(campaign.items, campaign.outputs);
  } catch (const ValidationError& e) {
    errors.push_back({"outputs", e.what()});
  }

  for (std::size_t i = 0; i < campaign.practice_items.size(); ++i) {
    const auto& p = campaign.practice_items[i];
    const std::string prefix = "practice[" + std::to_string(i) + "]";
    for (const auto& v : corpus::validate_item(p.item)) {
      errors.push_back({prefix + ".item", v.message});
    }
    if (p.output.item_id != p.item.item_id) {
      errors.push_back({prefix + ".output", "output does not reference the practice item"});
    }
    if (p.gold.item_id != p.item.item_id || p.gold.system_id != p.output.system_id) {
      errors.push_back({prefix + ".gold", "gold judgement does not reference the practice unit"});
    }
    for (auto& fe : scoring::check_judgement(p.gold, p.item)) {
      errors.push_back({prefix + ".gold." + fe.field, fe.message});
    }
  }

  if (campaign.assessors.empty()) errors.push_back({"assessors", "at least one assessor required"});
  std::set<std::string> assessors;
  for (const auto& a : campaign.assessors) {
    if (a.empty()) errors.push_back({"assessors", "empty assessor id"});
    if (!assessors.insert(a).second) errors.push_back({"assessors", "duplicate assessor '" + a + "'"});
  }
  if (!(campaign.plain_threshold >= 0.0 && campaign.plain_threshold <= scoring::kMaxScore)) {
    errors.push_back({"plain_threshold", "must be within [0, 10]"});
  }

  if (!errors.empty()) {
    std::string msg = "invalid campaign '" + campaign.campaign_id + "': " + errors.front().field +
                      ": " + errors.front().message;
    throw ValidationError(msg, std::move(errors));
  }
}

}  // namespace hilmeme
