#pragma once

// Sequence analysis: predicate templates, accelerators shared by consecutive
// queries, and the hints passed to the RPU.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpusim/model.hpp"
#include "rpusim/predicate.hpp"

namespace rpusim {

struct InvocationTemplate {
  std::string accelerator_id;
  std::set<OperatorShape> shapes;
  PredicateAst predicate;  // literals replaced by parameters

  bool operator==(const InvocationTemplate&) const = default;
};

struct QueryTemplate {
  std::string query_id;
  std::vector<InvocationTemplate> invocations;

  /// Structural equality ignoring the query id.
  bool same_shape(const QueryTemplate& other) const { return invocations == other.invocations; }
  bool operator==(const QueryTemplate&) const = default;
};

/// Replaces every literal with a fresh parameter p0, p1, ... numbered in
/// traversal order across the query's invocations. Names already used by
/// existing parameters are skipped, so templatizing a template is a no-op.
inline QueryTemplate templatize(const QuerySpec& q) {
  std::set<std::string> taken;
  for (const auto& inv : q.invocations) {
    PredicateAst p = inv.predicate;
    detail::for_each_operand(p, [&](Operand& o) {
      if (const auto* par = std::get_if<Parameter>(&o)) taken.insert(par->name);
    });
  }

  std::size_t next = 0;
  auto fresh = [&] {
    std::string name;
    do name = "p" + std::to_string(next++);
    while (taken.count(name));
    taken.insert(name);
    return name;
  };

  QueryTemplate out{q.id, {}};
  for (const auto& inv : q.invocations) {
    InvocationTemplate it{inv.accelerator_id, required_shapes(inv.predicate), inv.predicate};
    detail::for_each_operand(it.predicate, [&](Operand& o) {
      if (const auto* lit = std::get_if<Literal>(&o)) o = Parameter{fresh(), lit->type};
    });
    out.invocations.push_back(std::move(it));
  }
  return out;
}

/// Accelerators shared by one pair of consecutive queries.
struct PairReuse {
  std::size_t from = 0;  // Q_i
  std::size_t to = 0;    // Q_{i+1}
  std::set<std::string> modules;

  bool operator==(const PairReuse&) const = default;
};

/// Reuse is keyed on module identity. A module counts as shared only if
/// it serves every operator shape the next query asks of it, which holds
/// for any validated scenario.
inline std::vector<PairReuse> find_common_accelerators(const Scenario& s) {
  std::vector<QueryTemplate> templates;
  for (const auto& q : s.sequence) templates.push_back(templatize(q));

  std::vector<PairReuse> out;
  for (std::size_t i = 0; i + 1 < templates.size(); ++i) {
    std::set<std::string> a, b;
    for (const auto& it : templates[i].invocations) a.insert(it.accelerator_id);
    for (const auto& it : templates[i + 1].invocations) b.insert(it.accelerator_id);
    PairReuse r{i, i + 1, {}};
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(r.modules, r.modules.end()));
    std::erase_if(r.modules, [&](const std::string& id) {
      const auto& m = s.module(id);
      return std::any_of(templates[i + 1].invocations.begin(), templates[i + 1].invocations.end(),
                         [&](const InvocationTemplate& it) {
                           return it.accelerator_id == id &&
                                  !std::includes(m.supported_ops.begin(), m.supported_ops.end(),
                                                 it.shapes.begin(), it.shapes.end());
                         });
    });
    out.push_back(std::move(r));
  }
  return out;
}

struct Hint {
  std::size_t from = 0;
  std::size_t to = 0;
  std::string next_first_module;
  std::set<std::string> reusable_modules;
  double expected_gap_ms = 0.0;

  bool operator==(const Hint&) const = default;
};

/// One hint per consecutive pair. The first module of Q_{i+1} is read from
/// `sch` when given, otherwise from the lowest-selectivity-first order.
inline std::vector<Hint> generate_hints(const Scenario& s, const std::vector<PairReuse>& reuse,
                                        const Schedule* sch = nullptr) {
  std::vector<Hint> out;
  for (std::size_t i = 0; i + 1 < s.sequence.size(); ++i) {
    const auto& next = s.sequence[i + 1];
    std::size_t first = 0;
    if (sch) first = sch->queries.at(i + 1).order.at(0);
    else first = selectivity_order(next).value().front();

    Hint h;
    h.from = i;
    h.to = i + 1;
    h.next_first_module = next.invocations[first].accelerator_id;
    for (const auto& r : reuse)
      if (r.from == i) h.reusable_modules = r.modules;
    h.expected_gap_ms = s.sequence[i].gap_after_ms;
    out.push_back(std::move(h));
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<Hint>& hints, const Scenario& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& h : hints)
    out.push_back({{"from", s.sequence.at(h.from).id},
                   {"to", s.sequence.at(h.to).id},
                   {"next_first_module", h.next_first_module},
                   {"reusable_modules", h.reusable_modules},
                   {"expected_gap_ms", h.expected_gap_ms}});
  return out;
}

}  // namespace rpusim
