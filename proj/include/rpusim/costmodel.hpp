#pragma once

// Linear-rate cost primitives. All durations are in ms.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rpusim/model.hpp"

namespace rpusim {

inline double scan_time(double table_volume, const RpuConfig& rpu) {
  return table_volume / rpu.storage_rate;
}

inline double accel_runtime(double input_volume, const AcceleratorModule& module) {
  return input_volume / module.proc_rate;
}

/// Zero when `module` is already configured in the PR region.
inline double reconfig_time(const AcceleratorModule& module, const std::optional<std::string>& loaded,
                            const RpuConfig& rpu) {
  if (loaded && *loaded == module.id) return 0.0;
  return module.reconfig_ms.value_or(rpu.default_reconfig_ms);
}

inline double transfer_time(double output_volume, const RpuConfig& rpu) {
  return output_volume / rpu.network_rate;
}

struct VolumeProfile {
  std::vector<double> input_volumes;  // one per scheduled invocation
  double output_volume = 0.0;
};

/// Volume entering each invocation when run in `order`; each stage passes
/// selectivity x volume_multiplier of its input.
inline VolumeProfile propagate_volumes(const QuerySpec& q, std::span<const std::size_t> order,
                                       std::span<const TableDef> tables) {
  double volume = 0.0;
  for (const auto& t : tables)
    if (t.id == q.table_id) volume = t.volume;
  VolumeProfile out;
  out.input_volumes.reserve(order.size());
  for (std::size_t k : order) {
    out.input_volumes.push_back(volume);
    const auto& inv = q.invocations[k];
    volume *= inv.selectivity * inv.volume_multiplier;
  }
  out.output_volume = volume;
  return out;
}

}  // namespace rpusim
