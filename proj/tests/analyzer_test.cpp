#include <random>

#include <gtest/gtest.h>

#include "rpusim/analyzer.hpp"
#include "test_support.hpp"

namespace rpusim {
namespace {

QuerySpec single(const std::string& id, const std::string& module, const std::string& predicate) {
  QuerySpec q;
  q.id = id;
  q.table_id = "T0";
  q.invocations.push_back({module, parse_predicate(predicate), 0.5, 1.0, {}, {"A"}});
  return q;
}

TEST(Templatize, LiteralBecomesParameter) {
  const auto t = templatize(single("Q0", "accA", "A > 100"));
  ASSERT_EQ(t.invocations.size(), 1u);
  EXPECT_EQ(print_predicate(t.invocations[0].predicate), "A > ?p0");
  EXPECT_EQ(t.invocations[0].shapes,
            (std::set<OperatorShape>{{OpKind::compare_gt, OperandType::int32}}));
}

TEST(Templatize, DifferentConstantsSameTemplate) {
  const auto a = templatize(single("Q0", "accA", "A > 100"));
  const auto b = templatize(single("Q1", "accA", "A > 200"));
  EXPECT_TRUE(a.same_shape(b));
  EXPECT_FALSE(a.same_shape(templatize(single("Q2", "accA", "A >= 200"))));
}

TEST(Templatize, ParameterizedPredicateUnchanged) {
  const auto q = single("Q0", "accA", "A > ?limit");
  const auto t = templatize(q);
  EXPECT_EQ(t.invocations[0].predicate, q.invocations[0].predicate);
}

TEST(Templatize, FreshNamesAvoidExistingParameters) {
  QuerySpec q = single("Q0", "accA", "A > ?p0");
  q.invocations.push_back({"accA", parse_predicate("x * 3 < 7"), 1.0, 1.0, {}, {"x"}});
  const auto t = templatize(q);
  EXPECT_EQ(print_predicate(t.invocations[0].predicate), "A > ?p0");
  EXPECT_EQ(print_predicate(t.invocations[1].predicate), "x * ?p1 < ?p2");
}

QuerySpec as_query(const QueryTemplate& t) {
  QuerySpec q;
  q.id = t.query_id;
  for (const auto& it : t.invocations) q.invocations.push_back({it.accelerator_id, it.predicate, 1.0, 1.0, {}, {}});
  return q;
}

TEST(TemplatizeProperty, IdempotentAndLiteralInvariant) {
  std::mt19937_64 rng(21);
  for (int iter = 0; iter < 200; ++iter) {
    const auto s = testing::random_scenario(rng);
    for (const auto& q : s.sequence) {
      const auto t = templatize(q);
      EXPECT_EQ(templatize(as_query(t)), t);

      // Changing literal values only leaves the template unchanged.
      QuerySpec changed = q;
      for (auto& inv : changed.invocations)
        detail::for_each_operand(inv.predicate, [&](Operand& o) {
          if (auto* lit = std::get_if<Literal>(&o))
            if (auto* v = std::get_if<std::int64_t>(&lit->value)) *v += 1 + static_cast<std::int64_t>(rng() % 50);
        });
      EXPECT_EQ(templatize(changed), t);
    }
  }
}

TEST(FindCommonAccelerators, Seq2) {
  const auto reuse = find_common_accelerators(testing::seq2());
  ASSERT_EQ(reuse.size(), 1u);
  EXPECT_EQ(reuse[0].from, 0u);
  EXPECT_EQ(reuse[0].to, 1u);
  EXPECT_EQ(reuse[0].modules, (std::set<std::string>{"accA"}));
}

TEST(FindCommonAccelerators, DisjointAndIdentical) {
  auto s = testing::seq2();
  s.sequence[1].invocations[0].accelerator_id = "accB";
  s.sequence[1].invocations[0].predicate = parse_predicate("B < 3");
  s.sequence[0].invocations.pop_back();
  EXPECT_TRUE(find_common_accelerators(s).at(0).modules.empty());

  auto t = testing::seq2();
  t.sequence[1] = t.sequence[0];
  t.sequence[1].id = "Q1";
  EXPECT_EQ(find_common_accelerators(t).at(0).modules, (std::set<std::string>{"accA", "accB"}));
}

TEST(GenerateHints, Seq2) {
  const auto s = testing::seq2();
  const auto hints = generate_hints(s, find_common_accelerators(s));
  ASSERT_EQ(hints.size(), 1u);
  EXPECT_EQ(hints[0].next_first_module, "accA");
  EXPECT_EQ(hints[0].reusable_modules, (std::set<std::string>{"accA"}));
  EXPECT_DOUBLE_EQ(hints[0].expected_gap_ms, 2.0);
}

TEST(GenerateHints, PairCounts) {
  auto s = testing::seq2();
  s.sequence.resize(1);
  EXPECT_TRUE(generate_hints(s, find_common_accelerators(s)).empty());

  auto t = testing::seq2();
  auto q2 = t.sequence[1];
  q2.id = "Q2";
  t.sequence.push_back(q2);
  EXPECT_EQ(generate_hints(t, find_common_accelerators(t)).size(), 2u);
}

TEST(GenerateHints, FollowsGivenSchedule) {
  auto s = testing::seq2();
  auto q2 = s.sequence[0];
  q2.id = "Q2";
  s.sequence.push_back(q2);
  Schedule sch = identity_schedule(s);
  sch.queries[2].order = {1, 0};
  const auto hints = generate_hints(s, find_common_accelerators(s), &sch);
  EXPECT_EQ(hints[1].next_first_module, "accB");
  // Default order is lowest selectivity first: accA (0.5) before accB (0.8).
  EXPECT_EQ(generate_hints(s, find_common_accelerators(s))[1].next_first_module, "accA");
}

TEST(HintProperty, ModulesExistInLibrary) {
  std::mt19937_64 rng(8);
  for (int iter = 0; iter < 300; ++iter) {
    const auto s = testing::random_scenario(rng);
    const auto reuse = find_common_accelerators(s);
    const auto hints = generate_hints(s, reuse);
    ASSERT_EQ(hints.size(), s.sequence.size() - 1);
    for (const auto& h : hints) {
      EXPECT_TRUE(s.has_module(h.next_first_module));
      for (const auto& m : h.reusable_modules) {
        EXPECT_TRUE(s.has_module(m));
        auto uses = [&](const QuerySpec& q) {
          return std::any_of(q.invocations.begin(), q.invocations.end(),
                             [&](const Invocation& inv) { return inv.accelerator_id == m; });
        };
        EXPECT_TRUE(uses(s.sequence[h.from]) && uses(s.sequence[h.to]));
      }
    }
  }
}

TEST(HintDocument, Serializes) {
  const auto s = testing::seq2();
  const auto doc = to_json(generate_hints(s, find_common_accelerators(s)), s);
  ASSERT_EQ(doc.size(), 1u);
  EXPECT_EQ(doc[0]["from"], "Q0");
  EXPECT_EQ(doc[0]["to"], "Q1");
  EXPECT_EQ(doc[0]["next_first_module"], "accA");
  EXPECT_EQ(doc[0]["reusable_modules"], nlohmann::json::array({"accA"}));
  EXPECT_EQ(doc[0]["expected_gap_ms"], 2.0);
}

}  // namespace
}  // namespace rpusim
