#pragma once

// Parameter sweeps and corpus verification.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "rpusim/emulator.hpp"
#include "rpusim/model.hpp"
#include "rpusim/optimizer.hpp"

namespace rpusim {

/// Fixed-point with up to 6 decimals, trailing zeros dropped: 110, 103.4.
inline std::string format_number(double v) {
  if (std::abs(v) < 5e-7) v = 0.0;  // no "-0"
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 6);
  if (ec != std::errc{}) return std::to_string(v);
  std::string s(buf.data(), end);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

enum class SweepAxis { scale_factor, gap_ms };

inline std::string_view to_string(SweepAxis a) {
  return a == SweepAxis::scale_factor ? "scale_factor" : "gap_ms";
}

inline std::optional<SweepAxis> sweep_axis_from_string(std::string_view s) {
  if (s == "scale_factor") return SweepAxis::scale_factor;
  if (s == "gap_ms") return SweepAxis::gap_ms;
  return std::nullopt;
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::scale_factor;
  std::vector<double> values;
  std::vector<Strategy> strategies;
};

inline void validate_sweep(const SweepSpec& spec) {
  if (spec.values.empty()) throw ValidationError("sweep.values", "must be non-empty");
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const double v = spec.values[i];
    const bool ok = spec.axis == SweepAxis::scale_factor ? v > 0 : v >= 0;
    if (!ok || !std::isfinite(v))
      throw ValidationError("sweep.values[" + std::to_string(i) + "]",
                            spec.axis == SweepAxis::scale_factor ? "must be > 0" : "must be >= 0");
    if (i > 0 && !(v > spec.values[i - 1]))
      throw ValidationError("sweep.values", "must be strictly increasing");
  }
  if (spec.strategies.empty()) throw ValidationError("sweep.strategies", "must be non-empty");
  for (auto st : spec.strategies)
    if (st == Strategy::oracle)
      throw ValidationError("sweep.strategies", "oracle is not a sweep strategy");
}

struct SweepRow {
  SweepAxis axis;
  double value;
  Strategy strategy;
  double total_ms;
  double improvement_pct;
};

/// Worker count for sweeps: RECONFIG_SIM_THREADS if set and positive,
/// otherwise hardware concurrency.
inline unsigned sweep_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RECONFIG_SIM_THREADS")) {
    unsigned v = 0;
    const std::string_view sv(env);
    auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec == std::errc{} && v > 0) n = v;
  }
  return n;
}

inline Scenario apply_axis(const Scenario& s, SweepAxis axis, double value) {
  return axis == SweepAxis::scale_factor ? with_scale_factor(s, value) : with_gap(s, value);
}

/// Rows in axis-value order, then in the order strategies were requested,
/// regardless of which worker finishes first.
inline std::vector<SweepRow> sweep_rows(const Scenario& s, const SweepSpec& spec) {
  validate_sweep(spec);
  std::vector<SweepRow> rows(spec.values.size() * spec.strategies.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t vi; (vi = next.fetch_add(1)) < spec.values.size();) {
      const Scenario point = apply_axis(s, spec.axis, spec.values[vi]);
      for (std::size_t si = 0; si < spec.strategies.size(); ++si) {
        const auto o = optimize(point, spec.strategies[si]);
        rows[vi * spec.strategies.size() + si] =
            SweepRow{spec.axis, spec.values[vi], spec.strategies[si], o.total_ms, o.improvement_pct};
      }
    }
  };
  const unsigned n = std::min<std::size_t>(sweep_threads(), spec.values.size());
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return rows;
}

inline constexpr std::string_view kSweepCsvHeader = "axis,value,strategy,total_ms,improvement_pct";

inline std::string run_sweep(const Scenario& s, const SweepSpec& spec) {
  std::string csv(kSweepCsvHeader);
  csv += '\n';
  for (const auto& r : sweep_rows(s, spec)) {
    csv += std::string(to_string(r.axis)) + "," + format_number(r.value) + "," +
           std::string(to_string(r.strategy)) + "," + format_number(r.total_ms) + "," +
           format_number(r.improvement_pct) + "\n";
  }
  return csv;
}

// ---------------------------------------------------------------------------
// Corpus verification

inline constexpr double kOracleTolerance = 1e-9;

struct ScenarioCheck {
  std::string name;
  bool oracle_equivalence = true;  // emulator vs closed form, all auto candidates
  bool never_worse = true;         // auto <= baseline
  bool output_invariance = true;   // same result volumes for every strategy
  double max_oracle_delta = 0.0;
  double auto_ms = 0.0;
  double baseline_ms = 0.0;
  std::optional<double> exhaustive_ms;  // nullopt when outside the search guard
  std::vector<std::string> notes;

  bool ok() const { return oracle_equivalence && never_worse && output_invariance; }
  /// Reported, not a failure: the exhaustive search found something auto missed.
  bool oracle_gap() const { return exhaustive_ms && *exhaustive_ms < auto_ms - kOracleTolerance; }
};

inline bool relative_equal(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

inline ScenarioCheck check_scenario(const std::string& name, const Scenario& s) {
  ScenarioCheck c;
  c.name = name;
  std::vector<double> reference_outputs;
  for (Strategy st : kAutoCandidates) {
    const Schedule sch = plan_strategy(s, st);
    const auto report = execute_schedule(s, sch);
    const double analytic = analytic_total(s, sch);
    const double delta = std::abs(report.total_ms - analytic);
    c.max_oracle_delta = std::max(c.max_oracle_delta, delta);
    if (delta > kOracleTolerance) {
      c.oracle_equivalence = false;
      c.notes.push_back(std::string(to_string(st)) + ": emulated " + format_number(report.total_ms) +
                        " vs analytic " + format_number(analytic));
    }
    if (reference_outputs.empty()) {
      reference_outputs = report.output_volumes;
    } else {
      for (std::size_t i = 0; i < reference_outputs.size(); ++i)
        if (!relative_equal(reference_outputs[i], report.output_volumes[i], 1e-9)) {
          c.output_invariance = false;
          c.notes.push_back(std::string(to_string(st)) + ": output volume differs for " + s.sequence[i].id);
        }
    }
  }
  const auto best = optimize(s, Strategy::auto_select);
  c.auto_ms = best.total_ms;
  c.baseline_ms = best.baseline_ms;
  c.never_worse = best.total_ms <= best.baseline_ms + kOracleTolerance;
  try {
    c.exhaustive_ms = exhaustive_oracle(s).total_ms;
  } catch (const InstanceTooLarge&) {
  }
  return c;
}

}  // namespace rpusim
