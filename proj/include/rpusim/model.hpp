#pragma once

// Scenario model: RPU configuration, accelerator library, tables and the
// query sequence, plus the Schedule that optimizers emit.
//
// Units are abstract: volumes in volume-units, durations in ms, rates in
// volume-units per ms. Selectivity is the pass fraction (0 drops everything).

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rpusim/error.hpp"
#include "rpusim/predicate.hpp"

namespace rpusim {

struct RpuConfig {
  double storage_rate = 1.0;
  double network_rate = 1.0;
  double default_reconfig_ms = 15.0;
  int pr_region_count = 1;

  bool operator==(const RpuConfig&) const = default;
};

struct AcceleratorModule {
  std::string id;
  std::set<OperatorShape> supported_ops;
  double proc_rate = 1.0;
  std::optional<double> reconfig_ms;

  bool supports(const OperatorShape& s) const { return supported_ops.count(s) != 0; }
  bool operator==(const AcceleratorModule&) const = default;
};

struct TableDef {
  std::string id;
  double volume = 0.0;           // scaled by Scenario::scale_factor
  double unscaled_volume = 0.0;  // as written in the document

  bool operator==(const TableDef&) const = default;
};

struct Invocation {
  std::string accelerator_id;
  PredicateAst predicate;
  double selectivity = 1.0;
  double volume_multiplier = 1.0;
  std::vector<std::string> produces;
  std::vector<std::string> reads;

  bool operator==(const Invocation&) const = default;
};

struct QuerySpec {
  std::string id;
  std::string table_id;
  std::vector<Invocation> invocations;
  double gap_after_ms = 0.0;

  bool operator==(const QuerySpec&) const = default;
};

struct Scenario {
  RpuConfig rpu;
  std::vector<TableDef> tables;
  std::vector<AcceleratorModule> library;
  std::vector<QuerySpec> sequence;
  double scale_factor = 1.0;

  const TableDef& table(std::string_view id) const {
    for (const auto& t : tables)
      if (t.id == id) return t;
    throw ValidationError("tables", "unknown table '" + std::string(id) + "'");
  }

  const AcceleratorModule& module(std::string_view id) const {
    for (const auto& m : library)
      if (m.id == id) return m;
    throw ValidationError("library", "unknown accelerator '" + std::string(id) + "'");
  }

  bool has_module(std::string_view id) const {
    return std::any_of(library.begin(), library.end(), [&](const auto& m) { return m.id == id; });
  }

  bool operator==(const Scenario&) const = default;
};

/// Per-query part of a schedule. The prefetch, when present, starts
/// reconfiguring `prefetch` as soon as the PR region is free after this
/// query's last invocation.
struct QueryPlan {
  std::vector<std::size_t> order;
  std::optional<std::string> prefetch;

  bool operator==(const QueryPlan&) const = default;
};

struct Schedule {
  std::vector<QueryPlan> queries;

  bool operator==(const Schedule&) const = default;
};

// ---------------------------------------------------------------------------
// Data dependencies between invocations of one query

/// deps[k] lists the invocations that produce an attribute invocation k reads.
inline std::vector<std::vector<std::size_t>> dependencies(const QuerySpec& q) {
  std::map<std::string, std::size_t> producer;
  for (std::size_t j = 0; j < q.invocations.size(); ++j)
    for (const auto& a : q.invocations[j].produces) producer.emplace(a, j);

  std::vector<std::vector<std::size_t>> deps(q.invocations.size());
  for (std::size_t k = 0; k < q.invocations.size(); ++k)
    for (const auto& a : q.invocations[k].reads)
      if (auto it = producer.find(a); it != producer.end() && it->second != k)
        deps[k].push_back(it->second);
  for (auto& d : deps) {
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
  }
  return deps;
}

/// Topological order that always picks the ready invocation with the lowest
/// selectivity (ties by written position). Returns nullopt on a cycle.
inline std::optional<std::vector<std::size_t>> selectivity_order(const QuerySpec& q) {
  const auto deps = dependencies(q);
  const std::size_t n = q.invocations.size();
  std::vector<bool> placed(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (order.size() < n) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < n; ++k) {
      if (placed[k]) continue;
      const bool ready =
          std::all_of(deps[k].begin(), deps[k].end(), [&](std::size_t j) { return placed[j]; });
      if (!ready) continue;
      if (!best || q.invocations[k].selectivity < q.invocations[*best].selectivity) best = k;
    }
    if (!best) return std::nullopt;
    placed[*best] = true;
    order.push_back(*best);
  }
  return order;
}

// ---------------------------------------------------------------------------
// Scenario validation

/// Checks every invariant; throws ValidationError naming the offending path.
inline void validate_scenario(const Scenario& s) {
  const auto& r = s.rpu;
  if (!(r.storage_rate > 0)) throw ValidationError("rpu.storage_rate", "must be > 0");
  if (!(r.network_rate > 0)) throw ValidationError("rpu.network_rate", "must be > 0");
  if (!(r.default_reconfig_ms >= 0))
    throw ValidationError("rpu.default_reconfig_ms", "must be >= 0");
  if (r.pr_region_count != 1)
    throw ValidationError("rpu.pr_region_count", "only a single PR region is modelled (must be 1)");
  if (!(s.scale_factor > 0)) throw ValidationError("scale_factor", "must be > 0");

  std::set<std::string> table_ids;
  for (std::size_t i = 0; i < s.tables.size(); ++i) {
    const auto path = "tables[" + std::to_string(i) + "]";
    const auto& t = s.tables[i];
    if (!table_ids.insert(t.id).second) throw ValidationError(path + ".id", "duplicate id '" + t.id + "'");
    if (!(t.unscaled_volume >= 0)) throw ValidationError(path + ".volume", "must be >= 0");
  }

  std::set<std::string> module_ids;
  for (std::size_t i = 0; i < s.library.size(); ++i) {
    const auto path = "library[" + std::to_string(i) + "]";
    const auto& m = s.library[i];
    if (!module_ids.insert(m.id).second) throw ValidationError(path + ".id", "duplicate id '" + m.id + "'");
    if (m.supported_ops.empty()) throw ValidationError(path + ".supported_ops", "must be non-empty");
    if (!(m.proc_rate > 0)) throw ValidationError(path + ".proc_rate", "must be > 0");
    if (m.reconfig_ms && !(*m.reconfig_ms >= 0)) throw ValidationError(path + ".reconfig_ms", "must be >= 0");
  }

  if (s.sequence.empty()) throw ValidationError("sequence", "sequence non-empty");
  std::set<std::string> query_ids;
  for (std::size_t i = 0; i < s.sequence.size(); ++i) {
    const auto path = "sequence[" + std::to_string(i) + "]";
    const auto& q = s.sequence[i];
    if (!query_ids.insert(q.id).second) throw ValidationError(path + ".id", "duplicate id '" + q.id + "'");
    if (!table_ids.count(q.table_id))
      throw ValidationError(path + ".table", "unknown table '" + q.table_id + "'");
    if (!(q.gap_after_ms >= 0)) throw ValidationError(path + ".gap_after_ms", "must be >= 0");
    if (q.invocations.empty()) throw ValidationError(path + ".invocations", "invocations non-empty");

    std::set<std::string> produced;
    for (std::size_t k = 0; k < q.invocations.size(); ++k) {
      const auto ipath = path + ".invocations[" + std::to_string(k) + "]";
      const auto& inv = q.invocations[k];
      if (!(inv.selectivity >= 0 && inv.selectivity <= 1))
        throw ValidationError(ipath + ".selectivity", "selectivity must lie in [0, 1]");
      if (!(inv.volume_multiplier > 0))
        throw ValidationError(ipath + ".volume_multiplier", "must be > 0");
      if (!module_ids.count(inv.accelerator_id))
        throw ValidationError(ipath + ".accelerator", "unknown accelerator '" + inv.accelerator_id + "'");
      const auto& m = s.module(inv.accelerator_id);
      for (const auto& shape : required_shapes(inv.predicate))
        if (!m.supports(shape))
          throw ValidationError(ipath + ".predicate",
                                "accelerator '" + m.id + "' does not support " +
                                    std::string(to_string(shape.kind)) + "/" +
                                    std::string(to_string(shape.operand_type)));
      for (const auto& a : inv.produces) {
        if (!produced.insert(a).second)
          throw ValidationError(ipath + ".produces", "attribute '" + a + "' produced twice");
        if (std::find(inv.reads.begin(), inv.reads.end(), a) != inv.reads.end())
          throw ValidationError(ipath + ".produces", "attribute '" + a + "' both read and produced");
      }
    }
    if (!selectivity_order(q)) throw ValidationError(path + ".invocations", "dependency cycle");
  }
}

// ---------------------------------------------------------------------------
// Schedule validation

struct Violation {
  std::size_t query = 0;
  std::string kind;  // "size", "not a bijection", "dependency", "unknown module"
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Empty result means the schedule is legal for `s`.
inline std::vector<Violation> validate_schedule(const Scenario& s, const Schedule& sch) {
  std::vector<Violation> out;
  if (sch.queries.size() != s.sequence.size()) {
    out.push_back({0, "size",
                   "schedule has " + std::to_string(sch.queries.size()) + " queries, sequence has " +
                       std::to_string(s.sequence.size())});
    return out;
  }
  for (std::size_t i = 0; i < s.sequence.size(); ++i) {
    const auto& q = s.sequence[i];
    const auto& plan = sch.queries[i];
    const std::size_t n = q.invocations.size();

    std::vector<std::size_t> position(n, n);
    bool bijective = plan.order.size() == n;
    for (std::size_t p = 0; bijective && p < plan.order.size(); ++p) {
      const std::size_t k = plan.order[p];
      if (k >= n || position[k] != n) bijective = false;
      else position[k] = p;
    }
    if (!bijective) {
      out.push_back({i, "not a bijection", q.id + ": order is not a bijection on invocation indices"});
    } else {
      const auto deps = dependencies(q);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j : deps[k])
          if (position[j] > position[k])
            out.push_back({i, "dependency",
                           q.id + ": dependency violated, invocation " + std::to_string(k) +
                               " placed before its producer " + std::to_string(j)});
    }
    if (plan.prefetch && !s.has_module(*plan.prefetch))
      out.push_back({i, "unknown module", q.id + ": prefetch of unknown module '" + *plan.prefetch + "'"});
  }
  return out;
}

inline Schedule identity_schedule(const Scenario& s) {
  Schedule sch;
  for (const auto& q : s.sequence) {
    QueryPlan p;
    for (std::size_t k = 0; k < q.invocations.size(); ++k) p.order.push_back(k);
    sch.queries.push_back(std::move(p));
  }
  return sch;
}

/// Returns a copy with a different scale factor applied to the table volumes.
inline Scenario with_scale_factor(Scenario s, double factor) {
  if (!(factor > 0)) throw ValidationError("scale_factor", "must be > 0");
  s.scale_factor = factor;
  for (auto& t : s.tables) t.volume = t.unscaled_volume * factor;
  return s;
}

/// Returns a copy with every inter-query gap set to `gap_ms`.
inline Scenario with_gap(Scenario s, double gap_ms) {
  if (!(gap_ms >= 0)) throw ValidationError("gap_after_ms", "must be >= 0");
  for (auto& q : s.sequence) q.gap_after_ms = gap_ms;
  return s;
}

// ---------------------------------------------------------------------------
// JSON document <-> Scenario

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ValidationError(path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError(path.empty() ? key : path + "." + key, "unknown key");
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(path.empty() ? key : path + "." + key, "missing key");
  return *it;
}

inline double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError(path, "expected a number");
  return v.get<double>();
}

inline std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ValidationError(path, "expected a string");
  return v.get<std::string>();
}

inline const json& get_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError(path, "expected an array");
  return v;
}

inline std::vector<std::string> get_strings(const json& v, const std::string& path) {
  std::vector<std::string> out;
  const auto& arr = get_array(v, path);
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(get_string(arr[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Scenario scenario_from_json(const json& doc) {
  Scenario s;
  check_keys(doc, "", {"rpu", "tables", "library", "sequence", "scale_factor"});

  const auto& rpu = require(doc, "", "rpu");
  check_keys(rpu, "rpu", {"storage_rate", "network_rate", "default_reconfig_ms", "pr_region_count"});
  s.rpu.storage_rate = get_number(require(rpu, "rpu", "storage_rate"), "rpu.storage_rate");
  s.rpu.network_rate = get_number(require(rpu, "rpu", "network_rate"), "rpu.network_rate");
  s.rpu.default_reconfig_ms =
      get_number(require(rpu, "rpu", "default_reconfig_ms"), "rpu.default_reconfig_ms");
  {
    const auto& prc = require(rpu, "rpu", "pr_region_count");
    if (!prc.is_number_integer()) throw ValidationError("rpu.pr_region_count", "expected an integer");
    s.rpu.pr_region_count = prc.get<int>();
  }

  if (auto it = doc.find("scale_factor"); it != doc.end())
    s.scale_factor = get_number(*it, "scale_factor");

  const auto& tables = get_array(require(doc, "", "tables"), "tables");
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto path = "tables[" + std::to_string(i) + "]";
    check_keys(tables[i], path, {"id", "volume"});
    TableDef t;
    t.id = get_string(require(tables[i], path, "id"), path + ".id");
    t.unscaled_volume = get_number(require(tables[i], path, "volume"), path + ".volume");
    s.tables.push_back(std::move(t));
  }

  const auto& lib = get_array(require(doc, "", "library"), "library");
  for (std::size_t i = 0; i < lib.size(); ++i) {
    const auto path = "library[" + std::to_string(i) + "]";
    check_keys(lib[i], path, {"id", "supported_ops", "proc_rate", "reconfig_ms"});
    AcceleratorModule m;
    m.id = get_string(require(lib[i], path, "id"), path + ".id");
    const auto& ops = get_array(require(lib[i], path, "supported_ops"), path + ".supported_ops");
    for (std::size_t j = 0; j < ops.size(); ++j) {
      const auto opath = path + ".supported_ops[" + std::to_string(j) + "]";
      check_keys(ops[j], opath, {"kind", "operand_type"});
      const auto kind_s = get_string(require(ops[j], opath, "kind"), opath + ".kind");
      const auto type_s = get_string(require(ops[j], opath, "operand_type"), opath + ".operand_type");
      auto kind = op_kind_from_string(kind_s);
      auto type = operand_type_from_string(type_s);
      if (!kind) throw ValidationError(opath + ".kind", "unknown operator kind '" + kind_s + "'");
      if (!type) throw ValidationError(opath + ".operand_type", "unknown operand type '" + type_s + "'");
      m.supported_ops.insert({*kind, *type});
    }
    m.proc_rate = get_number(require(lib[i], path, "proc_rate"), path + ".proc_rate");
    if (auto it = lib[i].find("reconfig_ms"); it != lib[i].end() && !it->is_null())
      m.reconfig_ms = get_number(*it, path + ".reconfig_ms");
    s.library.push_back(std::move(m));
  }

  const auto& seq = get_array(require(doc, "", "sequence"), "sequence");
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto path = "sequence[" + std::to_string(i) + "]";
    check_keys(seq[i], path, {"id", "table", "invocations", "gap_after_ms"});
    QuerySpec q;
    q.id = get_string(require(seq[i], path, "id"), path + ".id");
    q.table_id = get_string(require(seq[i], path, "table"), path + ".table");
    if (auto it = seq[i].find("gap_after_ms"); it != seq[i].end())
      q.gap_after_ms = get_number(*it, path + ".gap_after_ms");
    const auto& invs = get_array(require(seq[i], path, "invocations"), path + ".invocations");
    for (std::size_t k = 0; k < invs.size(); ++k) {
      const auto ipath = path + ".invocations[" + std::to_string(k) + "]";
      check_keys(invs[k], ipath,
                 {"accelerator", "predicate", "selectivity", "volume_multiplier", "reads", "produces"});
      Invocation inv;
      inv.accelerator_id = get_string(require(invs[k], ipath, "accelerator"), ipath + ".accelerator");
      const auto text = get_string(require(invs[k], ipath, "predicate"), ipath + ".predicate");
      try {
        inv.predicate = parse_predicate(text);
      } catch (const ParseError& e) {
        throw ParseError(ipath + ".predicate: " + e.what());
      }
      inv.selectivity = get_number(require(invs[k], ipath, "selectivity"), ipath + ".selectivity");
      if (auto it = invs[k].find("volume_multiplier"); it != invs[k].end())
        inv.volume_multiplier = get_number(*it, ipath + ".volume_multiplier");
      inv.reads = get_strings(require(invs[k], ipath, "reads"), ipath + ".reads");
      if (auto it = invs[k].find("produces"); it != invs[k].end())
        inv.produces = get_strings(*it, ipath + ".produces");
      q.invocations.push_back(std::move(inv));
    }
    s.sequence.push_back(std::move(q));
  }

  for (auto& t : s.tables) t.volume = t.unscaled_volume * s.scale_factor;
  validate_scenario(s);
  return s;
}

}  // namespace detail

/// Parses and validates a scenario document. Table volumes in the result are
/// already multiplied by the document's scale_factor.
inline Scenario load_scenario(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed scenario document: ") + e.what());
  }
  return detail::scenario_from_json(doc);
}

inline nlohmann::json to_json(const Scenario& s) {
  using nlohmann::json;
  json doc;
  doc["rpu"] = {{"storage_rate", s.rpu.storage_rate},
                {"network_rate", s.rpu.network_rate},
                {"default_reconfig_ms", s.rpu.default_reconfig_ms},
                {"pr_region_count", s.rpu.pr_region_count}};
  doc["tables"] = json::array();
  for (const auto& t : s.tables) doc["tables"].push_back({{"id", t.id}, {"volume", t.unscaled_volume}});
  doc["library"] = json::array();
  for (const auto& m : s.library) {
    json ops = json::array();
    for (const auto& op : m.supported_ops)
      ops.push_back({{"kind", to_string(op.kind)}, {"operand_type", to_string(op.operand_type)}});
    json jm = {{"id", m.id}, {"supported_ops", ops}, {"proc_rate", m.proc_rate}};
    if (m.reconfig_ms) jm["reconfig_ms"] = *m.reconfig_ms;
    doc["library"].push_back(std::move(jm));
  }
  doc["sequence"] = json::array();
  for (const auto& q : s.sequence) {
    json invs = json::array();
    for (const auto& inv : q.invocations) {
      json ji = {{"accelerator", inv.accelerator_id},
                 {"predicate", print_predicate(inv.predicate)},
                 {"selectivity", inv.selectivity},
                 {"volume_multiplier", inv.volume_multiplier},
                 {"reads", inv.reads}};
      if (!inv.produces.empty()) ji["produces"] = inv.produces;
      invs.push_back(std::move(ji));
    }
    doc["sequence"].push_back(
        {{"id", q.id}, {"table", q.table_id}, {"invocations", invs}, {"gap_after_ms", q.gap_after_ms}});
  }
  doc["scale_factor"] = s.scale_factor;
  return doc;
}

inline std::string serialize_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// JSON document <-> Schedule
//
//   {"queries": [{"order": [1, 0], "prefetch": "accA"}, {"order": [0]}]}

inline nlohmann::json to_json(const Schedule& sch, const Scenario& s) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < sch.queries.size(); ++i) {
    const auto& p = sch.queries[i];
    nlohmann::json jq = {{"order", p.order}};
    if (i < s.sequence.size()) jq["query"] = s.sequence[i].id;
    jq["prefetch"] = p.prefetch ? nlohmann::json(*p.prefetch) : nlohmann::json(nullptr);
    out.push_back(std::move(jq));
  }
  return {{"queries", out}};
}

/// Accepts either a bare schedule object or any document with a "schedule"
/// member (e.g. optimizer output).
inline Schedule schedule_from_json(const nlohmann::json& doc) {
  const nlohmann::json& root = doc.contains("schedule") ? doc.at("schedule") : doc;
  detail::check_keys(root, "schedule", {"queries"});
  const auto& qs = detail::get_array(detail::require(root, "schedule", "queries"), "schedule.queries");
  Schedule sch;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const auto path = "schedule.queries[" + std::to_string(i) + "]";
    detail::check_keys(qs[i], path, {"order", "prefetch", "query"});
    QueryPlan p;
    const auto& order = detail::get_array(detail::require(qs[i], path, "order"), path + ".order");
    for (const auto& v : order) {
      if (!v.is_number_unsigned()) throw ValidationError(path + ".order", "expected non-negative integers");
      p.order.push_back(v.get<std::size_t>());
    }
    if (auto it = qs[i].find("prefetch"); it != qs[i].end() && !it->is_null())
      p.prefetch = detail::get_string(*it, path + ".prefetch");
    sch.queries.push_back(std::move(p));
  }
  return sch;
}

inline Schedule load_schedule(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed schedule document: ") + e.what());
  }
  return schedule_from_json(doc);
}

}  // namespace rpusim
