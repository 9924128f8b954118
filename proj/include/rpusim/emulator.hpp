#pragma once

// Discrete-event emulation of a query sequence on the RPU.
//
// Three resources: the storage stream (scans), the single PR region
// (reconfigurations and accelerator runs) and the network (result transfer).
// Each query becomes a small task graph; tasks start once their predecessors
// have completed (plus an optional lag) and their resource is free. Resource
// queues are served strictly in task-creation order.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "rpusim/costmodel.hpp"
#include "rpusim/model.hpp"

namespace rpusim {

enum class Lane { scan, reconfig, accel, transfer };

inline std::string_view to_string(Lane l) {
  switch (l) {
    case Lane::scan: return "scan";
    case Lane::reconfig: return "reconfig";
    case Lane::accel: return "accel";
    case Lane::transfer: return "transfer";
  }
  return "?";
}

inline constexpr std::string_view kSpeculativeQuery = "speculative";

struct Span {
  Lane lane = Lane::scan;
  std::string label;
  double start_ms = 0.0;
  double end_ms = 0.0;
  std::string query_id;

  bool operator==(const Span&) const = default;
};

struct TimelineReport {
  std::vector<Span> spans;
  std::vector<double> per_query_ms;    // arrival to end of the query's transfer
  std::vector<double> arrival_ms;
  std::vector<double> output_volumes;  // result volume per query
  double total_ms = 0.0;               // arrival of the first query to the last transfer end
  std::string final_loaded_module;
  std::size_t reconfigurations = 0;    // reconfigurations actually performed

  bool operator==(const TimelineReport&) const = default;
};

namespace detail {

enum class Resource { none, storage, pr_region, network };
enum class TaskKind { arrival, scan, reconfig, accel, transfer, prefetch };

struct Edge {
  std::size_t task;
  double lag = 0.0;
};

struct Task {
  TaskKind kind;
  Resource resource;
  std::size_t query;
  std::string label;   // table id, module id or query id
  double duration = 0; // fixed duration; reconfigurations resolve theirs at start
  std::vector<Edge> successors;
  std::size_t pending = 0;
  double ready_at = 0;
  bool released = false;
  double start = 0;
  double end = 0;
  bool skipped = false;  // reconfiguration of an already-loaded module
};

class Engine {
 public:
  explicit Engine(const Scenario& s) : scenario_(s) {}

  std::size_t add(TaskKind kind, Resource res, std::size_t query, std::string label, double duration) {
    tasks_.push_back(Task{kind, res, query, std::move(label), duration, {}, 0, 0, false, 0, 0, false});
    const std::size_t id = tasks_.size() - 1;
    if (res != Resource::none) queue(res).push_back(id);
    return id;
  }

  void depend(std::size_t task, std::size_t on, double lag = 0.0) {
    tasks_[on].successors.push_back({task, lag});
    ++tasks_[task].pending;
  }

  void run() {
    for (std::size_t id = 0; id < tasks_.size(); ++id)
      if (tasks_[id].pending == 0) push(0.0, EventKind::release, id);
    while (!events_.empty()) {
      const auto [time, kind, seq, id] = events_.top();
      events_.pop();
      if (kind == EventKind::complete) complete(id, time);
      else release(id, time);
    }
  }

  const std::vector<Task>& tasks() const { return tasks_; }
  const std::optional<std::string>& loaded() const { return loaded_; }

 private:
  enum class EventKind : std::uint8_t { complete = 0, release = 1 };
  using Event = std::tuple<double, EventKind, std::uint64_t, std::size_t>;

  std::vector<std::size_t>& queue(Resource r) { return queues_[static_cast<std::size_t>(r)]; }

  void push(double time, EventKind kind, std::size_t id) { events_.emplace(time, kind, seq_++, id); }

  void release(std::size_t id, double now) {
    tasks_[id].released = true;
    if (tasks_[id].resource == Resource::none) start(id, now);
    else dispatch(tasks_[id].resource, now);
  }

  void dispatch(Resource r, double now) {
    const auto idx = static_cast<std::size_t>(r);
    if (busy_[idx]) return;
    auto& q = queues_[idx];
    if (head_[idx] >= q.size()) return;
    const std::size_t id = q[head_[idx]];
    if (!tasks_[id].released) return;
    ++head_[idx];
    busy_[idx] = true;
    start(id, now);
  }

  void start(std::size_t id, double now) {
    Task& t = tasks_[id];
    t.start = now;
    if (t.kind == TaskKind::reconfig || t.kind == TaskKind::prefetch) {
      const auto& m = scenario_.module(t.label);
      t.duration = reconfig_time(m, loaded_, scenario_.rpu);
      t.skipped = loaded_ && *loaded_ == m.id;
    }
    push(now + t.duration, EventKind::complete, id);
  }

  void complete(std::size_t id, double now) {
    Task& t = tasks_[id];
    t.end = now;
    if (t.kind == TaskKind::reconfig || t.kind == TaskKind::prefetch) loaded_ = t.label;
    if (t.resource != Resource::none) busy_[static_cast<std::size_t>(t.resource)] = false;
    for (const auto& e : t.successors) {
      Task& s = tasks_[e.task];
      s.ready_at = std::max(s.ready_at, now + e.lag);
      if (--s.pending == 0) push(s.ready_at, EventKind::release, e.task);
    }
    if (t.resource != Resource::none) dispatch(t.resource, now);
  }

  const Scenario& scenario_;
  std::vector<Task> tasks_;
  std::vector<std::size_t> queues_[4];
  std::size_t head_[4] = {0, 0, 0, 0};
  bool busy_[4] = {false, false, false, false};
  std::optional<std::string> loaded_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
};

inline std::string violations_message(const std::vector<Violation>& vs) {
  std::string msg = "invalid schedule";
  for (const auto& v : vs) msg += "; " + v.message;
  return msg;
}

inline void require_valid(const Scenario& s, const Schedule& sch) {
  if (auto vs = validate_schedule(s, sch); !vs.empty())
    throw ValidationError("schedule", violations_message(vs));
}

}  // namespace detail

/// Runs the sequence under `sch` and returns the full timeline. Throws
/// ValidationError if the schedule is not legal for the scenario.
inline TimelineReport execute_schedule(const Scenario& s, const Schedule& sch) {
  using detail::Resource;
  using detail::TaskKind;
  detail::require_valid(s, sch);

  detail::Engine engine(s);
  struct QueryTasks {
    std::size_t arrival, transfer;
  };
  std::vector<QueryTasks> qtasks;
  std::vector<double> outputs;

  for (std::size_t i = 0; i < s.sequence.size(); ++i) {
    const auto& q = s.sequence[i];
    const auto& plan = sch.queries[i];
    const auto profile = propagate_volumes(q, plan.order, s.tables);
    outputs.push_back(profile.output_volume);

    const std::size_t arrival = engine.add(TaskKind::arrival, Resource::none, i, q.id, 0.0);
    if (i > 0) engine.depend(arrival, qtasks.back().transfer, s.sequence[i - 1].gap_after_ms);

    const std::size_t scan = engine.add(TaskKind::scan, Resource::storage, i, q.table_id,
                                        scan_time(s.table(q.table_id).volume, s.rpu));
    engine.depend(scan, arrival);

    std::size_t producer = scan;
    for (std::size_t p = 0; p < plan.order.size(); ++p) {
      const auto& inv = q.invocations[plan.order[p]];
      const auto& m = s.module(inv.accelerator_id);
      const std::size_t reconf = engine.add(TaskKind::reconfig, Resource::pr_region, i, m.id, 0.0);
      if (p == 0) engine.depend(reconf, arrival);
      else engine.depend(reconf, producer);
      const std::size_t accel = engine.add(TaskKind::accel, Resource::pr_region, i, m.id,
                                           accel_runtime(profile.input_volumes[p], m));
      engine.depend(accel, reconf);
      engine.depend(accel, producer);
      producer = accel;
    }

    const std::size_t transfer = engine.add(TaskKind::transfer, Resource::network, i, q.id,
                                            transfer_time(profile.output_volume, s.rpu));
    engine.depend(transfer, producer);

    if (plan.prefetch && i + 1 < s.sequence.size()) {
      const std::size_t pf = engine.add(TaskKind::prefetch, Resource::pr_region, i, *plan.prefetch, 0.0);
      engine.depend(pf, producer);
    }
    qtasks.push_back({arrival, transfer});
  }

  engine.run();

  TimelineReport report;
  const auto& tasks = engine.tasks();
  for (const auto& t : tasks) {
    const std::string& qid = s.sequence[t.query].id;
    switch (t.kind) {
      case TaskKind::arrival: break;
      case TaskKind::scan: report.spans.push_back({Lane::scan, t.label, t.start, t.end, qid}); break;
      case TaskKind::accel: report.spans.push_back({Lane::accel, t.label, t.start, t.end, qid}); break;
      case TaskKind::transfer:
        report.spans.push_back({Lane::transfer, t.label, t.start, t.end, qid});
        break;
      case TaskKind::reconfig:
      case TaskKind::prefetch:
        if (t.skipped) break;
        ++report.reconfigurations;
        report.spans.push_back({Lane::reconfig, t.label, t.start, t.end,
                                t.kind == TaskKind::prefetch ? std::string(kSpeculativeQuery) : qid});
        break;
    }
  }
  std::stable_sort(report.spans.begin(), report.spans.end(), [](const Span& a, const Span& b) {
    return std::tie(a.start_ms, a.lane) < std::tie(b.start_ms, b.lane);
  });

  for (const auto& qt : qtasks) {
    report.arrival_ms.push_back(tasks[qt.arrival].end);
    report.per_query_ms.push_back(tasks[qt.transfer].end - tasks[qt.arrival].end);
  }
  report.output_volumes = std::move(outputs);
  report.total_ms = tasks[qtasks.back().transfer].end - tasks[qtasks.front().arrival].end;
  report.final_loaded_module = engine.loaded().value_or("");
  return report;
}

/// Closed-form sequence time: per query max(t_scan, residual + first reconfig)
/// plus accelerator runtimes, later reconfigurations and the transfer; gaps
/// between queries are added. `residual` is what remains of a speculative
/// reconfiguration after the previous transfer and gap.
inline double analytic_total(const Scenario& s, const Schedule& sch) {
  detail::require_valid(s, sch);
  std::optional<std::string> loaded;
  double residual = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < s.sequence.size(); ++i) {
    const auto& q = s.sequence[i];
    const auto& plan = sch.queries[i];
    const auto profile = propagate_volumes(q, plan.order, s.tables);
    const double t_scan = scan_time(s.table(q.table_id).volume, s.rpu);
    const double t_trans = transfer_time(profile.output_volume, s.rpu);

    double t_query = 0.0;
    for (std::size_t p = 0; p < plan.order.size(); ++p) {
      const auto& m = s.module(q.invocations[plan.order[p]].accelerator_id);
      const double t_r = reconfig_time(m, loaded, s.rpu);
      if (p == 0) t_query += std::max(t_scan, residual + t_r);
      else t_query += t_r;
      loaded = m.id;
      t_query += accel_runtime(profile.input_volumes[p], m);
    }
    t_query += t_trans;
    total += t_query;

    if (i + 1 < s.sequence.size()) {
      total += q.gap_after_ms;
      residual = 0.0;
      if (plan.prefetch) {
        const double t_pf = reconfig_time(s.module(*plan.prefetch), loaded, s.rpu);
        residual = std::max(0.0, t_pf - t_trans - q.gap_after_ms);
        loaded = *plan.prefetch;
      }
    }
  }
  return total;
}

/// JSON array of {lane, label, query, start_ms, end_ms}, ordered by start
/// time then lane. Byte-identical for equal reports.
inline std::string emit_trace(const TimelineReport& report) {
  std::vector<Span> spans = report.spans;
  std::stable_sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return std::tie(a.start_ms, a.lane) < std::tie(b.start_ms, b.lane);
  });
  nlohmann::json out = nlohmann::json::array();
  for (const auto& sp : spans)
    out.push_back({{"lane", to_string(sp.lane)},
                   {"label", sp.label},
                   {"query", sp.query_id},
                   {"start_ms", sp.start_ms},
                   {"end_ms", sp.end_ms}});
  return out.dump(2) + "\n";
}

}  // namespace rpusim
