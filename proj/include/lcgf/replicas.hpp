#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lcgf/samplers.hpp"

namespace lcgf {

/// Parameters read by the named statistics.
struct StatisticOptions {
  /// pair-max: annulus parameter r.
  int pair_r = 2;
  /// barrier-counts: barrier heights, each >= 1.
  std::vector<double> z_grid{1.0};
  /// barrier-counts: which coarse box to scan.
  std::size_t coarse_box = 0;
};

/// Per-replica output. Layout of `values` by statistic:
///   max             {max_value, centered}, coords = argmax
///   dmart           {Z_N}
///   pair-max        {value}, coords = u then v
///   barrier-counts  {z, lambda, gamma, g_event} per z
///   field           the N^d values
struct ReplicaResult {
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;
  std::vector<int> coords;
};

const std::vector<std::string>& statistic_names();

/// Results in replica order for any worker count. Unknown names throw InputError.
std::vector<ReplicaResult> run_replicas(const ReplicaPlan& plan, std::string_view statistic,
                                        const StatisticOptions& options = {}, int workers = 1);

/// CSV rows: replica, statistic, value[, extra columns][, coords].
void write_replica_csv(std::ostream& os, std::string_view statistic, const std::vector<ReplicaResult>& rows,
                       int dim);

}  // namespace lcgf
