#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "hilmeme/error.hpp"
#include "hilmeme/scoring.hpp"

using namespace hilmeme;
using namespace hilmeme::scoring;

namespace {

MweJudgement mwe(std::string id, MweCategory c, double weight, std::optional<double> score = {}) {
  MweJudgement m;
  m.span_id = std::move(id);
  m.category = c;
  m.score = category_score(c, score);
  m.weight = weight;
  if (c == MweCategory::AltMwe) m.captured_rendering = "alt";
  return m;
}

SegmentJudgement seg(double general, std::vector<MweJudgement> mwes) {
  SegmentJudgement j;
  j.item_id = "i";
  j.system_id = "s";
  j.assessor_id = "a";
  j.general = GeneralScore(general);
  j.mwe_judgements = std::move(mwes);
  return j;
}

}  // namespace

TEST_CASE("general score range") {
  CHECK(GeneralScore(0).value() == 0);
  CHECK(GeneralScore(10).value() == 10);
  CHECK_THROWS_AS(GeneralScore(-0.01), ValidationError);
  CHECK_THROWS_AS(GeneralScore(10.01), ValidationError);
  CHECK_THROWS_AS(GeneralScore(std::nan("")), ValidationError);
}

TEST_CASE("category_score fixed table") {
  CHECK(category_score(MweCategory::RefMwe, {}) == 10.0);
  CHECK(category_score(MweCategory::AltMwe, {}) == 10.0);
  CHECK(category_score(MweCategory::Null, {}) == 0.0);
  CHECK(category_score(MweCategory::NonMwe, 7.0) == 7.0);
  CHECK(category_score(MweCategory::NonMwe, 0.0) == 0.0);
  CHECK(category_score(MweCategory::NonMwe, 10.0) == 10.0);
}

TEST_CASE("category_score contract breaches") {
  for (auto c : {MweCategory::RefMwe, MweCategory::AltMwe, MweCategory::Null}) {
    CAPTURE(to_string(c));
    CHECK_THROWS_AS(category_score(c, 5.0), ValidationError);
  }
  CHECK_THROWS_AS(category_score(MweCategory::NonMwe, std::nullopt), ValidationError);
  CHECK_THROWS_AS(category_score(MweCategory::NonMwe, 10.5), ValidationError);
  CHECK_THROWS_AS(category_score(MweCategory::NonMwe, -1.0), ValidationError);
}

TEST_CASE("category and aspect wire names round trip") {
  for (auto c : kAllCategories) CHECK(parse_category(to_string(c)) == c);
  for (auto a : kAllAspects) CHECK(parse_aspect(to_string(a)) == a);
  CHECK_FALSE(parse_category("maybe").has_value());
  CHECK_FALSE(parse_aspect("xyz").has_value());
}

TEST_CASE("aspect set semantics") {
  AspectSet s{Aspect::Sem, Aspect::Sem, Aspect::Amb};
  CHECK(s.size() == 2);
  CHECK(s.contains(Aspect::Amb));
  CHECK_FALSE(s.contains(Aspect::Gra));
  s.erase(Aspect::Sem);
  CHECK(s.members() == std::vector<Aspect>{Aspect::Amb});
}

TEST_CASE("raw score examples") {
  CHECK(segment_raw_score(seg(10, {mwe("m", MweCategory::RefMwe, 1.0)})) == doctest::Approx(20).epsilon(1e-12));
  CHECK(segment_raw_score(seg(6, {mwe("m", MweCategory::NonMwe, 0.5, 8.0)})) ==
        doctest::Approx(10).epsilon(1e-12));
  CHECK(segment_raw_score(seg(5, {})) == 5.0);
  CHECK(segment_raw_score(seg(4, {mwe("a", MweCategory::Null, 1.0), mwe("b", MweCategory::RefMwe, 0.2)})) ==
        doctest::Approx(5).epsilon(1e-12));
}

TEST_CASE("max points examples") {
  CHECK(segment_max_points(seg(3, {})) == 10.0);
  CHECK(segment_max_points(seg(3, {mwe("m", MweCategory::Null, 1.0)})) == 20.0);
  CHECK(segment_max_points(seg(3, {mwe("a", MweCategory::Null, 0.5), mwe("b", MweCategory::Null, 0.3)})) ==
        doctest::Approx(14).epsilon(1e-12));
}

TEST_CASE("normalize examples") {
  CHECK(normalize(20, 20) == 1.0);
  CHECK(std::abs(normalize(10, 15) - 2.0 / 3.0) <= 1e-9);
  CHECK(normalize(0, 10) == 0.0);
  CHECK_THROWS_AS(normalize(12, 10), ValidationError);
  CHECK_THROWS_AS(normalize(5, 9), ValidationError);
  CHECK(std::abs(segment_normalized(seg(6, {mwe("m", MweCategory::NonMwe, 0.5, 8.0)})) - 0.6666666666666666) <=
        1e-9);
}

TEST_CASE("quantize keeps two decimals") {
  CHECK(quantize(0.333333) == 0.33);
  CHECK(quantize(7.005000001) == 7.01);
  CHECK(quantize(10.0) == 10.0);
}

TEST_CASE("normalized score properties on random judgements") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> bump(0.01, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    auto item = testing::synthetic_item("x", rng() % 4);
    auto j = testing::random_judgement(item, "s", "a", rng);
    const double norm = segment_normalized(j);
    CHECK(norm >= 0.0);
    CHECK(norm <= 1.0);

    // Equal to 1 exactly when general is 10 and every weighted MWE scores 10.
    bool perfect = j.general.value() == 10.0;
    for (const auto& m : j.mwe_judgements) perfect = perfect && (m.weight == 0.0 || m.score == 10.0);
    CHECK((norm == 1.0) == perfect);

    // Monotone in general.
    auto up = j;
    up.general = GeneralScore(std::min(10.0, j.general.value() + bump(rng)));
    CHECK(segment_normalized(up) >= norm);

    // Monotone in each NonMwe score; category changes that raise the score too.
    for (std::size_t k = 0; k < j.mwe_judgements.size(); ++k) {
      auto higher = j;
      auto& m = higher.mwe_judgements[k];
      if (m.category == MweCategory::NonMwe) {
        m.score = std::min(10.0, m.score + bump(rng));
      } else if (m.category == MweCategory::Null) {
        m.category = MweCategory::RefMwe;
        m.score = 10.0;
      }
      CHECK(segment_normalized(higher) >= norm);
    }

    // Zero weights annihilate the MWE term.
    auto flat = j;
    for (auto& m : flat.mwe_judgements) m.weight = 0.0;
    CHECK(std::abs(segment_normalized(flat) - j.general.value() / 10.0) <= 1e-12);

    // Aspects never affect scores.
    auto tagged = j;
    for (auto& m : tagged.mwe_judgements) {
      m.aspects = AspectSet{};
      if (rng() % 2) m.aspects.insert(Aspect::Idi);
      if (rng() % 2) m.aspects.insert(Aspect::Gra);
    }
    CHECK(segment_raw_score(tagged) == segment_raw_score(j));
    CHECK(segment_max_points(tagged) == segment_max_points(j));
    CHECK(segment_normalized(tagged) == norm);
  }
}

TEST_CASE("tally examples") {
  auto one_ref = seg(5, {mwe("m", MweCategory::RefMwe, 1)});
  CHECK(update_tally({}, one_ref) == Tally{1, 0, 0, 0});
  auto null_alt = seg(5, {mwe("a", MweCategory::Null, 1), mwe("b", MweCategory::AltMwe, 1)});
  CHECK(update_tally(Tally{2, 0, 1, 0}, null_alt) == Tally{2, 1, 1, 1});
  CHECK(update_tally(Tally{3, 1, 4, 1}, seg(5, {})) == Tally{3, 1, 4, 1});
}

TEST_CASE("tally conservation and order independence") {
  std::mt19937_64 rng(3);
  std::vector<SegmentJudgement> js;
  std::size_t total = 0;
  for (int k = 0; k < 60; ++k) {
    auto item = testing::synthetic_item("x" + std::to_string(k), rng() % 4);
    js.push_back(testing::random_judgement(item, "s", "a", rng));
    total += js.back().mwe_judgements.size();
  }
  const auto reference = tally_all(js);
  CHECK(reference.total() == total);
  for (int r = 0; r < 20; ++r) {
    std::shuffle(js.begin(), js.end(), rng);
    CHECK(tally_all(js) == reference);
  }
}

TEST_CASE("judgement completeness against its item") {
  const auto campaign = testing::make_campaign();
  const auto& item = *campaign.find_item("i2");  // spans m1, m2
  auto j = testing::uniform_judgement(item, "sysA", "alice", 7, MweCategory::RefMwe);
  CHECK(check_judgement(j, item).empty());

  SUBCASE("missing span") {
    j.mwe_judgements.pop_back();
    auto errs = check_judgement(j, item);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].message.find("m2") != std::string::npos);
    CHECK_THROWS_AS(require_valid(j, item), ValidationError);
  }
  SUBCASE("unknown span") {
    j.mwe_judgements[1].span_id = "zz";
    auto errs = check_judgement(j, item);
    CHECK(errs.size() == 2);  // zz unknown, m2 missing
  }
  SUBCASE("duplicate span") {
    j.mwe_judgements[1].span_id = "m1";
    CHECK_FALSE(check_judgement(j, item).empty());
  }
  SUBCASE("wrong item") {
    j.item_id = "i1";
    CHECK_FALSE(check_judgement(j, item).empty());
  }
  SUBCASE("fixed category with a different score") {
    j.mwe_judgements[0].score = 7;
    auto errs = check_judgement(j, item);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].field == "mwes[0].score");
  }
  SUBCASE("alt-mwe without a capture") {
    j.mwe_judgements[0].category = MweCategory::AltMwe;
    j.mwe_judgements[0].captured_rendering = "";
    auto errs = check_judgement(j, item);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].message.find("m1") != std::string::npos);
  }
  SUBCASE("weight out of range") {
    j.mwe_judgements[1].weight = 1.5;
    auto errs = check_judgement(j, item);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].field == "mwes[1].weight");
  }
}
