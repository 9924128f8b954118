#include <random>
#include <string>

#include <gtest/gtest.h>

#include "rpusim/model.hpp"
#include "test_support.hpp"

namespace rpusim {
namespace {

using testing::read_text;
using testing::scenario_dir;

nlohmann::json seq2_doc() { return nlohmann::json::parse(read_text(scenario_dir() + "/seq2.json")); }

std::string error_path(const nlohmann::json& doc) {
  try {
    load_scenario(doc.dump());
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<no error>";
}

TEST(LoadScenario, Seq2FieldsReadBack) {
  const auto s = testing::seq2();
  EXPECT_EQ(s.sequence.size(), 2u);
  EXPECT_EQ(s.library.size(), 2u);
  EXPECT_DOUBLE_EQ(s.rpu.storage_rate, 1.0);
  EXPECT_DOUBLE_EQ(s.rpu.network_rate, 0.2);
  EXPECT_DOUBLE_EQ(s.rpu.default_reconfig_ms, 15.0);
  EXPECT_DOUBLE_EQ(s.table("T0").volume, 16.0);
  EXPECT_DOUBLE_EQ(s.table("T1").volume, 6.0);
  EXPECT_DOUBLE_EQ(s.module("accA").proc_rate, 2.0);
  EXPECT_EQ(s.module("accB").reconfig_ms, 15.0);
  const auto& q0 = s.sequence[0];
  EXPECT_EQ(q0.table_id, "T0");
  EXPECT_DOUBLE_EQ(q0.gap_after_ms, 2.0);
  ASSERT_EQ(q0.invocations.size(), 2u);
  EXPECT_EQ(q0.invocations[0].accelerator_id, "accA");
  EXPECT_DOUBLE_EQ(q0.invocations[0].selectivity, 0.5);
  EXPECT_DOUBLE_EQ(q0.invocations[0].volume_multiplier, 1.0);
  EXPECT_EQ(q0.invocations[1].accelerator_id, "accB");
  EXPECT_DOUBLE_EQ(q0.invocations[1].selectivity, 0.8);
  EXPECT_EQ(s.sequence[1].invocations[0].accelerator_id, "accA");
}

TEST(LoadScenario, Seq2SmallIsScaled) {
  const auto s = testing::seq2_small();
  EXPECT_DOUBLE_EQ(s.scale_factor, 0.25);
  EXPECT_DOUBLE_EQ(s.table("T0").volume, 4.0);
  EXPECT_DOUBLE_EQ(s.table("T1").volume, 1.5);
  EXPECT_DOUBLE_EQ(s.table("T0").unscaled_volume, 16.0);
}

TEST(LoadScenario, EmptySequenceRejected) {
  auto doc = seq2_doc();
  doc["sequence"] = nlohmann::json::array();
  try {
    load_scenario(doc.dump());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.path(), "sequence");
    EXPECT_NE(std::string(e.what()).find("sequence non-empty"), std::string::npos);
  }
}

TEST(LoadScenario, SelectivityOutOfRange) {
  auto doc = seq2_doc();
  doc["sequence"][0]["invocations"][1]["selectivity"] = 1.2;
  EXPECT_EQ(error_path(doc), "sequence[0].invocations[1].selectivity");
  doc["sequence"][0]["invocations"][1]["selectivity"] = -0.1;
  EXPECT_EQ(error_path(doc), "sequence[0].invocations[1].selectivity");
}

TEST(LoadScenario, ValidationErrorsCarryPaths) {
  {
    auto doc = seq2_doc();
    doc["rpu"]["pr_region_count"] = 2;
    EXPECT_EQ(error_path(doc), "rpu.pr_region_count");
  }
  {
    auto doc = seq2_doc();
    doc["rpu"]["network_rate"] = -1;
    EXPECT_EQ(error_path(doc), "rpu.network_rate");
  }
  {
    auto doc = seq2_doc();
    doc["sequence"][1]["table"] = "nope";
    EXPECT_EQ(error_path(doc), "sequence[1].table");
  }
  {
    auto doc = seq2_doc();
    doc["sequence"][1]["invocations"][0]["accelerator"] = "accZ";
    EXPECT_EQ(error_path(doc), "sequence[1].invocations[0].accelerator");
  }
  {
    // accB only supports compare_lt.
    auto doc = seq2_doc();
    doc["sequence"][1]["invocations"][0]["accelerator"] = "accB";
    EXPECT_EQ(error_path(doc), "sequence[1].invocations[0].predicate");
  }
  {
    auto doc = seq2_doc();
    doc["library"][0]["proc_rate"] = 0;
    EXPECT_EQ(error_path(doc), "library[0].proc_rate");
  }
  {
    auto doc = seq2_doc();
    doc["library"][1]["id"] = "accA";
    EXPECT_EQ(error_path(doc), "library[1].id");
  }
  {
    auto doc = seq2_doc();
    doc["scale_factor"] = 0;
    EXPECT_EQ(error_path(doc), "scale_factor");
  }
  {
    auto doc = seq2_doc();
    doc["sequence"][0]["invocations"] = nlohmann::json::array();
    EXPECT_EQ(error_path(doc), "sequence[0].invocations");
  }
  {
    auto doc = seq2_doc();
    doc["sequence"][0]["invocations"][0]["volume_multiplier"] = 0;
    EXPECT_EQ(error_path(doc), "sequence[0].invocations[0].volume_multiplier");
  }
}

TEST(LoadScenario, UnknownKeysRejected) {
  auto doc = seq2_doc();
  doc["rpu"]["turbo"] = true;
  EXPECT_EQ(error_path(doc), "rpu.turbo");
  doc = seq2_doc();
  doc["sequence"][0]["invocations"][0]["cost"] = 1;
  EXPECT_EQ(error_path(doc), "sequence[0].invocations[0].cost");
  doc = seq2_doc();
  doc["extra"] = 1;
  EXPECT_EQ(error_path(doc), "extra");
}

TEST(LoadScenario, MissingKeyAndWrongType) {
  auto doc = seq2_doc();
  doc["rpu"].erase("storage_rate");
  EXPECT_EQ(error_path(doc), "rpu.storage_rate");
  doc = seq2_doc();
  doc["tables"][0]["volume"] = "big";
  EXPECT_EQ(error_path(doc), "tables[0].volume");
}

TEST(LoadScenario, MalformedDocumentIsParseError) {
  EXPECT_THROW(load_scenario("{\"rpu\": "), ParseError);
  auto doc = seq2_doc();
  doc["sequence"][0]["invocations"][0]["predicate"] = "A > > 3";
  EXPECT_THROW(load_scenario(doc.dump()), ParseError);
}

TEST(LoadScenario, DependencyProblemsRejected) {
  auto doc = seq2_doc();
  auto& invs = doc["sequence"][0]["invocations"];
  invs[0]["produces"] = {"x"};
  invs[0]["reads"] = {"y"};
  invs[1]["produces"] = {"y"};
  invs[1]["reads"] = {"x"};
  EXPECT_EQ(error_path(doc), "sequence[0].invocations");

  doc = seq2_doc();
  doc["sequence"][0]["invocations"][0]["produces"] = {"A"};
  EXPECT_EQ(error_path(doc), "sequence[0].invocations[0].produces");
}

TEST(ScenarioProperty, ScalingMultipliesVolumesOnly) {
  std::mt19937_64 rng(11);
  const auto base = testing::seq2();
  for (int i = 0; i < 200; ++i) {
    const double f = std::uniform_real_distribution<double>(0.01, 10.0)(rng);
    auto doc = seq2_doc();
    doc["scale_factor"] = f;
    const auto s = load_scenario(doc.dump());
    for (std::size_t t = 0; t < s.tables.size(); ++t)
      EXPECT_EQ(s.tables[t].volume, f * base.tables[t].volume);
    EXPECT_EQ(s.library, base.library);
    EXPECT_EQ(s.rpu, base.rpu);
    EXPECT_EQ(with_scale_factor(base, f), s);
  }
}

TEST(ScenarioProperty, SerializeRoundTrip) {
  auto files = testing::corpus_files();
  files.push_back(scenario_dir() + "/seq2.json");
  files.push_back(scenario_dir() + "/seq2-small.json");
  for (const auto& f : files) {
    const auto s = testing::load_file(f.string());
    EXPECT_EQ(load_scenario(serialize_scenario(s)), s) << f;
  }
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto s = testing::random_scenario(rng);
    EXPECT_EQ(load_scenario(serialize_scenario(s)), s);
  }
}

// A scenario whose Q0 has an arithmetic producer followed by a filter on the
// derived attribute.
Scenario derived_scenario() {
  auto doc = seq2_doc();
  doc["library"].push_back({{"id", "accM"},
                            {"supported_ops",
                             {{{"kind", "arith_mul"}, {"operand_type", "int32"}},
                              {{"kind", "compare_gt"}, {"operand_type", "int32"}}}},
                            {"proc_rate", 1}});
  doc["sequence"][0]["invocations"] = {
      {{"accelerator", "accM"}, {"predicate", "p * q > 0"}, {"selectivity", 1.0},
       {"volume_multiplier", 1.5}, {"reads", {"p", "q"}}, {"produces", {"rev"}}},
      {{"accelerator", "accA"}, {"predicate", "rev > 10"}, {"selectivity", 0.2}, {"reads", {"rev"}}}};
  return load_scenario(doc.dump());
}

TEST(ValidateSchedule, IdentityIsOk) {
  const auto s = testing::seq2();
  EXPECT_TRUE(validate_schedule(s, identity_schedule(s)).empty());
}

TEST(ValidateSchedule, DependencyViolation) {
  const auto s = derived_scenario();
  Schedule sch = identity_schedule(s);
  sch.queries[0].order = {1, 0};
  const auto v = validate_schedule(s, sch);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "dependency");
  EXPECT_EQ(v[0].query, 0u);
}

TEST(ValidateSchedule, NotABijection) {
  const auto s = testing::seq2();
  Schedule sch = identity_schedule(s);
  sch.queries[0].order = {0, 0};
  const auto v = validate_schedule(s, sch);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "not a bijection");

  sch.queries[0].order = {0, 2};
  EXPECT_EQ(validate_schedule(s, sch).at(0).kind, "not a bijection");
  sch.queries[0].order = {0};
  EXPECT_EQ(validate_schedule(s, sch).at(0).kind, "not a bijection");
}

TEST(ValidateSchedule, SizeAndUnknownPrefetch) {
  const auto s = testing::seq2();
  Schedule sch = identity_schedule(s);
  sch.queries[0].prefetch = "accZ";
  EXPECT_EQ(validate_schedule(s, sch).at(0).kind, "unknown module");
  sch.queries.pop_back();
  EXPECT_EQ(validate_schedule(s, sch).at(0).kind, "size");
}

TEST(ScheduleDocument, ReadsBareAndWrapped) {
  const auto s = testing::seq2();
  Schedule sch = identity_schedule(s);
  sch.queries[0].order = {1, 0};
  sch.queries[0].prefetch = "accA";
  const auto doc = to_json(sch, s);
  EXPECT_EQ(load_schedule(doc.dump()), sch);
  EXPECT_EQ(load_schedule(nlohmann::json{{"schedule", doc}, {"total_ms", 1}}.dump()), sch);
  EXPECT_THROW(load_schedule("[1,"), ParseError);
  EXPECT_THROW(load_schedule(R"({"queries":[{"order":[-1]}]})"), ValidationError);
}

}  // namespace
}  // namespace rpusim
