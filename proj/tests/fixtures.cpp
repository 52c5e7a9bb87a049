#include "fixtures.hpp"

#include <fstream>
#include <sstream>

#include "hilmeme/json_io.hpp"

namespace hilmeme::testing {

namespace fs = std::filesystem;
using nlohmann::json;
using scoring::MweCategory;

namespace {

const char* const kCorpus =
    R"({"item_id":"i1","source":"he finally kicked the bucket last night","reference":"er hat gestern Abend endlich den Löffel abgegeben","mwes":[{"id":"m1","start":2,"end":5,"surface":"kicked the bucket","refs":["den Löffel abgegeben"]}],"domain":"idiom"}
{"item_id":"i2","source":"she spilled the beans and hit the road","reference":"sie plauderte alles aus und machte sich auf den Weg","mwes":[{"id":"m1","start":1,"end":4,"surface":"spilled the beans","refs":["plauderte alles aus","verriet das Geheimnis"]},{"id":"m2","start":5,"end":8,"surface":"hit the road","refs":["machte sich auf den Weg"]}]}
{"item_id":"i3","source":"the weather is nice today","reference":"das Wetter ist heute schön","mwes":[]}
{"item_id":"i4","source":"he took part in the race","reference":"er nahm am Rennen teil","mwes":[{"id":"m1","start":1,"end":4,"surface":"took part in","refs":["nahm teil an"]}]}
)";

const char* const kOutputs =
    R"({"system_id":"sysA","item_id":"i1","hypothesis":"er hat gestern Abend endlich den Löffel abgegeben"}
{"system_id":"sysA","item_id":"i2","hypothesis":"sie verschüttete die Bohnen und ging los"}
{"system_id":"sysA","item_id":"i3","hypothesis":"das Wetter ist heute schön"}
{"system_id":"sysA","item_id":"i4","hypothesis":"er nahm am Rennen teil"}
{"system_id":"sysB","item_id":"i1","hypothesis":"er trat gestern endlich den Eimer"}
{"system_id":"sysB","item_id":"i2","hypothesis":"sie verriet das Geheimnis und machte sich auf den Weg"}
{"system_id":"sysB","item_id":"i3","hypothesis":"Wetter heute gut"}
{"system_id":"sysB","item_id":"i4","hypothesis":"er beteiligte sich am Rennen"}
)";

PracticeItem practice(const std::string& id, const std::string& source, std::size_t start,
                      std::size_t end, const std::string& ref, const std::string& hypothesis,
                      double gold_general, MweCategory gold_category) {
  PracticeItem p;
  p.item.item_id = id;
  p.item.source_text = source;
  p.item.source_tokens = corpus::whitespace_tokenize(source);
  p.item.reference_text = ref;
  corpus::MweSpan span;
  span.span_id = "m1";
  span.token_start = start;
  span.token_end = end;
  for (std::size_t i = start; i < end; ++i) {
    if (i > start) span.surface += ' ';
    span.surface += p.item.source_tokens[i];
  }
  span.reference_renderings = {ref};
  p.item.mwe_spans = {span};
  p.output = {"practice", id, hypothesis};
  p.gold = uniform_judgement(p.item, "practice", "gold", gold_general, gold_category, 0.5, 6.0);
  return p;
}

}  // namespace

Campaign make_campaign(std::string campaign_id) {
  Campaign c;
  c.campaign_id = std::move(campaign_id);
  c.items = corpus::ingest_corpus(kCorpus, corpus::Format::JsonLines);
  c.outputs = corpus::ingest_outputs(kOutputs);
  c.practice_items = {
      practice("p1", "it is raining cats and dogs", 3, 6, "es regnet in Strömen",
               "es regnet in Strömen", 10.0, MweCategory::RefMwe),
      practice("p2", "break a leg tonight", 0, 3, "Hals- und Beinbruch", "brich dir ein Bein",
               4.0, MweCategory::NonMwe),
      practice("p3", "once in a blue moon we meet", 0, 5, "alle Jubeljahre",
               "wir treffen uns", 3.0, MweCategory::Null),
  };
  c.assessors = {"alice", "bob"};
  c.shuffle_seed = 42;
  validate_campaign(c);
  return c;
}

std::string corpus_jsonl() { return kCorpus; }
std::string outputs_jsonl() { return kOutputs; }

std::string config_json(const std::string& campaign_id) {
  auto c = make_campaign(campaign_id);
  json practice = json::array();
  for (const auto& p : c.practice_items) practice.push_back(io::to_json(p));
  return json{{"campaign_id", campaign_id},
              {"assessors", c.assessors},
              {"shuffle_seed", c.shuffle_seed},
              {"practice", practice}}
      .dump(2);
}

scoring::SegmentJudgement uniform_judgement(const corpus::EvaluationItem& item,
                                            const std::string& system_id,
                                            const std::string& assessor_id, double general,
                                            MweCategory category, double weight,
                                            double non_mwe_score) {
  scoring::SegmentJudgement j;
  j.item_id = item.item_id;
  j.system_id = system_id;
  j.assessor_id = assessor_id;
  j.general = scoring::GeneralScore(general);
  j.submitted_at = "2026-01-01T00:00:00.000Z";
  for (const auto& span : item.mwe_spans) {
    scoring::MweJudgement m;
    m.span_id = span.span_id;
    m.category = category;
    m.score = scoring::category_score(
        category, category == MweCategory::NonMwe ? std::optional(non_mwe_score) : std::nullopt);
    m.weight = weight;
    if (category == MweCategory::AltMwe) m.captured_rendering = "alt:" + span.span_id;
    j.mwe_judgements.push_back(m);
  }
  return j;
}

scoring::SegmentJudgement random_judgement(const corpus::EvaluationItem& item,
                                           const std::string& system_id,
                                           const std::string& assessor_id, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ten(0.0, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> cat(0, 3);
  std::uniform_int_distribution<int> bits(0, 15);
  scoring::SegmentJudgement j;
  j.item_id = item.item_id;
  j.system_id = system_id;
  j.assessor_id = assessor_id;
  j.general = scoring::GeneralScore(scoring::quantize(ten(rng)));
  j.submitted_at = "2026-01-01T00:00:00.000Z";
  for (const auto& span : item.mwe_spans) {
    scoring::MweJudgement m;
    m.span_id = span.span_id;
    m.category = scoring::kAllCategories[cat(rng)];
    m.score = scoring::category_score(
        m.category,
        m.category == MweCategory::NonMwe ? std::optional(scoring::quantize(ten(rng))) : std::nullopt);
    m.weight = scoring::quantize(unit(rng));
    const int mask = bits(rng);
    for (auto a : scoring::kAllAspects) {
      if (mask & (1 << static_cast<int>(a))) m.aspects.insert(a);
    }
    if (m.category == MweCategory::AltMwe) m.captured_rendering = "alt rendering " + span.span_id;
    j.mwe_judgements.push_back(m);
  }
  return j;
}

corpus::EvaluationItem synthetic_item(const std::string& item_id, std::size_t n_spans) {
  corpus::EvaluationItem item;
  item.item_id = item_id;
  for (std::size_t i = 0; i < 2 * n_spans + 1; ++i) item.source_tokens.push_back("w" + std::to_string(i));
  for (std::size_t i = 0; i < item.source_tokens.size(); ++i) {
    if (i > 0) item.source_text += ' ';
    item.source_text += item.source_tokens[i];
  }
  item.reference_text = "ref";
  for (std::size_t k = 0; k < n_spans; ++k) {
    corpus::MweSpan s;
    s.span_id = "m" + std::to_string(k);
    s.token_start = 2 * k + 1;
    s.token_end = 2 * k + 2;
    s.surface = item.source_tokens[s.token_start];
    s.reference_renderings = {"r" + std::to_string(k)};
    item.mwe_spans.push_back(s);
  }
  return item;
}

session::Session through_practice(const Campaign& campaign, const std::string& assessor_id) {
  auto s = session::start_session(campaign, assessor_id);
  s = session::advance(campaign, s, session::event::AcceptConsent{});
  s = session::advance(campaign, s, session::event::FinishIntroduction{});
  for (const auto& p : campaign.practice_items) {
    auto j = p.gold;
    j.assessor_id = assessor_id;
    s = session::advance(campaign, s, session::event::SubmitPractice{j});
  }
  return s;
}

TempDir::TempDir() {
  static int counter = 0;
  std::random_device rd;
  path = fs::temp_directory_path() /
         ("hilmeme-test-" + std::to_string(rd()) + "-" + std::to_string(++counter));
  fs::create_directories(path);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path, ec);
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hilmeme::testing
