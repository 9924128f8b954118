#pragma once

// Schedule construction: the local lowest-selectivity-first baseline,
// speculative reconfiguration (I), accelerator reordering (II), their
// combination, automatic selection, and an exhaustive oracle for small
// instances.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rpusim/analyzer.hpp"
#include "rpusim/emulator.hpp"
#include "rpusim/error.hpp"
#include "rpusim/model.hpp"

namespace rpusim {

enum class Strategy { baseline, spec_reconfig, reorder, combined, auto_select, oracle };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::baseline: return "baseline";
    case Strategy::spec_reconfig: return "spec_reconfig";
    case Strategy::reorder: return "reorder";
    case Strategy::combined: return "combined";
    case Strategy::auto_select: return "auto";
    case Strategy::oracle: return "oracle";
  }
  return "?";
}

inline std::optional<Strategy> strategy_from_string(std::string_view s) {
  for (auto st : {Strategy::baseline, Strategy::spec_reconfig, Strategy::reorder, Strategy::combined,
                  Strategy::auto_select, Strategy::oracle})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

/// Candidates evaluated by Strategy::auto_select, in tie-break order.
inline constexpr std::array<Strategy, 4> kAutoCandidates{Strategy::baseline, Strategy::spec_reconfig,
                                                         Strategy::reorder, Strategy::combined};

struct StrategyOutcome {
  Strategy strategy = Strategy::baseline;  // for auto: the candidate that won
  Schedule schedule;
  double total_ms = 0.0;
  double baseline_ms = 0.0;
  double improvement_pct = 0.0;
  std::size_t reconfigurations = 0;
  std::vector<Hint> hints;
};

inline double improvement_pct(double baseline_ms, double total_ms) {
  return baseline_ms > 0 ? 100.0 * (baseline_ms - total_ms) / baseline_ms : 0.0;
}

/// Per query: ready invocations in ascending selectivity; a dependent
/// invocation never precedes its producer. No prefetch directives.
inline Schedule plan_baseline(const Scenario& s) {
  Schedule sch;
  for (const auto& q : s.sequence) {
    auto order = selectivity_order(q);
    if (!order) throw ValidationError("sequence", q.id + ": dependency cycle");
    sch.queries.push_back({std::move(*order), std::nullopt});
  }
  return sch;
}

/// Optimization I. After Q_i, prefetch the hinted first module of Q_{i+1}
/// unless it is the module Q_i leaves loaded.
inline Schedule apply_speculative(const Scenario& s, const Schedule& base, const std::vector<Hint>& hints) {
  Schedule out = base;
  for (const auto& h : hints) {
    auto& plan = out.queries.at(h.from);
    const auto& last = s.sequence.at(h.from).invocations.at(plan.order.back()).accelerator_id;
    plan.prefetch = h.next_first_module != last ? std::optional<std::string>(h.next_first_module)
                                                : std::nullopt;
  }
  return out;
}

namespace detail {

/// `order` with position `from` moved to the end, if the result still
/// respects the query's dependencies.
inline std::optional<std::vector<std::size_t>> move_to_end(const QuerySpec& q, std::vector<std::size_t> order,
                                                           std::size_t from) {
  const std::size_t k = order[from];
  const auto deps = dependencies(q);
  for (std::size_t j = 0; j < deps.size(); ++j)
    if (j != k && std::find(deps[j].begin(), deps[j].end(), k) != deps[j].end()) return std::nullopt;
  order.erase(order.begin() + static_cast<std::ptrdiff_t>(from));
  order.push_back(k);
  return order;
}

}  // namespace detail

/// Optimization II. For each pair whose next query starts with a reusable
/// module, move an invocation of that module to the end of Q_i so the module
/// stays loaded. The rest of Q_i keeps its relative order. Pairs are handled
/// back to front, so each pair sees the final order of its successor.
inline Schedule apply_reorder(const Scenario& s, const Schedule& base, const std::vector<Hint>& hints) {
  Schedule out = base;
  for (auto h = hints.rbegin(); h != hints.rend(); ++h) {
    const auto& q = s.sequence.at(h->from);
    const auto& next = s.sequence.at(h->to);
    const auto& target = next.invocations.at(out.queries.at(h->to).order.front()).accelerator_id;
    if (!h->reusable_modules.count(target)) continue;

    auto& order = out.queries.at(h->from).order;
    if (q.invocations[order.back()].accelerator_id == target) continue;
    // Latest candidate first: fewest positions disturbed.
    for (std::size_t pos = order.size(); pos-- > 0;) {
      if (q.invocations[order[pos]].accelerator_id != target) continue;
      if (auto moved = detail::move_to_end(q, order, pos)) {
        order = std::move(*moved);
        break;
      }
    }
  }
  return out;
}

inline Schedule plan_strategy(const Scenario& s, Strategy st) {
  const auto reuse = find_common_accelerators(s);
  const Schedule base = plan_baseline(s);
  switch (st) {
    case Strategy::baseline: return base;
    case Strategy::spec_reconfig: return apply_speculative(s, base, generate_hints(s, reuse, &base));
    case Strategy::reorder: return apply_reorder(s, base, generate_hints(s, reuse, &base));
    case Strategy::combined: {
      const Schedule reordered = apply_reorder(s, base, generate_hints(s, reuse, &base));
      return apply_speculative(s, reordered, generate_hints(s, reuse, &reordered));
    }
    default: break;
  }
  throw std::invalid_argument("plan_strategy: not a fixed strategy: " + std::string(to_string(st)));
}

namespace detail {

inline constexpr double kTieTolerance = 1e-9;

/// Lower total wins; within tolerance fewer reconfigurations win; otherwise
/// the earlier candidate stays.
inline bool better(const StrategyOutcome& cand, const StrategyOutcome& best) {
  if (cand.total_ms < best.total_ms - kTieTolerance) return true;
  if (cand.total_ms > best.total_ms + kTieTolerance) return false;
  return cand.reconfigurations < best.reconfigurations;
}

}  // namespace detail

/// Exhaustive search over every legal invocation order per query and every
/// prefetch choice (none or any library module) per pair. Limited to at most
/// 4 queries and 8 invocations in total.
inline StrategyOutcome exhaustive_oracle(const Scenario& s) {
  std::size_t invocations = 0;
  for (const auto& q : s.sequence) invocations += q.invocations.size();
  if (s.sequence.size() > 4 || invocations > 8)
    throw InstanceTooLarge("exhaustive oracle limited to 4 queries and 8 invocations (got " +
                           std::to_string(s.sequence.size()) + " queries, " + std::to_string(invocations) +
                           " invocations)");

  std::vector<std::vector<std::vector<std::size_t>>> orders;
  for (const auto& q : s.sequence) {
    std::vector<std::size_t> perm(q.invocations.size());
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
    const auto deps = dependencies(q);
    std::vector<std::vector<std::size_t>> legal;
    do {
      std::vector<std::size_t> position(perm.size());
      for (std::size_t p = 0; p < perm.size(); ++p) position[perm[p]] = p;
      bool ok = true;
      for (std::size_t k = 0; ok && k < deps.size(); ++k)
        for (std::size_t j : deps[k]) ok = ok && position[j] < position[k];
      if (ok) legal.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    orders.push_back(std::move(legal));
  }

  std::vector<std::optional<std::string>> prefetches{std::nullopt};
  for (const auto& m : s.library) prefetches.emplace_back(m.id);

  const double baseline = execute_schedule(s, plan_baseline(s)).total_ms;
  StrategyOutcome best;
  bool found = false;
  Schedule current;
  current.queries.resize(s.sequence.size());

  std::function<void(std::size_t)> search = [&](std::size_t i) {
    if (i == s.sequence.size()) {
      const auto report = execute_schedule(s, current);
      StrategyOutcome cand{Strategy::oracle, current, report.total_ms, baseline,
                           improvement_pct(baseline, report.total_ms), report.reconfigurations, {}};
      if (!found || detail::better(cand, best)) {
        best = std::move(cand);
        found = true;
      }
      return;
    }
    const bool last = i + 1 == s.sequence.size();
    for (const auto& order : orders[i]) {
      current.queries[i].order = order;
      if (last) {
        current.queries[i].prefetch.reset();
        search(i + 1);
        continue;
      }
      for (const auto& pf : prefetches) {
        current.queries[i].prefetch = pf;
        search(i + 1);
      }
    }
  };
  search(0);
  return best;
}

/// Fixed strategies return their schedule with the emulated total. Auto
/// emulates baseline, I, II and I+II and keeps the best.
inline StrategyOutcome optimize(const Scenario& s, Strategy st) {
  if (st == Strategy::oracle) return exhaustive_oracle(s);

  const auto reuse = find_common_accelerators(s);
  const double baseline = execute_schedule(s, plan_baseline(s)).total_ms;

  auto evaluate = [&](Strategy fixed) {
    StrategyOutcome o;
    o.strategy = fixed;
    o.schedule = plan_strategy(s, fixed);
    const auto report = execute_schedule(s, o.schedule);
    o.total_ms = report.total_ms;
    o.baseline_ms = baseline;
    o.improvement_pct = improvement_pct(baseline, o.total_ms);
    o.reconfigurations = report.reconfigurations;
    o.hints = generate_hints(s, reuse, &o.schedule);
    return o;
  };

  if (st != Strategy::auto_select) return evaluate(st);

  std::optional<StrategyOutcome> best;
  for (Strategy cand : kAutoCandidates) {
    auto o = evaluate(cand);
    if (!best || detail::better(o, *best)) best = std::move(o);
  }
  return *best;
}

inline nlohmann::json to_json(const StrategyOutcome& o, const Scenario& s) {
  return {{"strategy", to_string(o.strategy)},
          {"total_ms", o.total_ms},
          {"baseline_ms", o.baseline_ms},
          {"improvement_pct", o.improvement_pct},
          {"reconfigurations", o.reconfigurations},
          {"schedule", to_json(o.schedule, s)},
          {"hints", to_json(o.hints, s)}};
}

}  // namespace rpusim
