#include "lcgf/replicas.hpp"

#include <algorithm>
#include <memory>
#include <ostream>

#include "lcgf/approx.hpp"
#include "lcgf/error.hpp"
#include "lcgf/extremes.hpp"
#include "lcgf/parallel.hpp"

namespace lcgf {

const std::vector<std::string>& statistic_names() {
  static const std::vector<std::string> names{"max", "dmart", "pair-max", "barrier-counts", "field"};
  return names;
}

namespace {

ReplicaResult reduce(const FieldSampler& sampler, const XiModel* xi_model,
                     std::string_view statistic, const StatisticOptions& opt, std::size_t replica,
                     std::uint64_t seed) {
  ReplicaResult out;
  out.replica = replica;
  out.seed = seed;
  if (statistic == "barrier-counts") {
    const XiField xi = build_xi(*xi_model, seed);
    for (double z : opt.z_grid) {
      const BarrierCounts c = count_barrier_events(xi, z, opt.coarse_box);
      out.values.insert(out.values.end(), {z, static_cast<double>(c.lambda),
                                           static_cast<double>(c.gamma_count), c.g_event ? 1.0 : 0.0});
    }
    return out;
  }
  const SampledField field = sampler.sample(seed);
  if (statistic == "max") {
    const MaxStat m = max_stat(field);
    out.values = {m.max_value, m.centered};
    out.coords = m.argmax.coords;
  } else if (statistic == "dmart") {
    out.values = {derivative_martingale(field).z};
  } else if (statistic == "pair-max") {
    const PairMaxStat p = restricted_pair_max(field, opt.pair_r);
    out.values = {p.value};
    out.coords = p.u.coords;
    out.coords.insert(out.coords.end(), p.v.coords.begin(), p.v.coords.end());
  } else {
    out.values = field.values;
  }
  return out;
}

}  // namespace

std::vector<ReplicaResult> run_replicas(const ReplicaPlan& plan, std::string_view statistic,
                                        const StatisticOptions& options, int workers) {
  const auto& names = statistic_names();
  if (std::find(names.begin(), names.end(), statistic) == names.end()) {
    throw InputError("unknown statistic '" + std::string(statistic) + "'");
  }
  if (plan.replicas < 1) throw InputError("replica count must be at least 1");
  std::unique_ptr<XiModel> xi_model;
  if (statistic == "barrier-counts") {
    if (plan.spec.family != Family::Xi) throw InputError("barrier-counts needs the xi family");
    for (double z : options.z_grid) {
      if (!(z >= 1.0)) throw DomainError("barrier heights must be >= 1");
    }
    xi_model = std::make_unique<XiModel>(*plan.spec.xi);
  }
  const FieldSampler sampler(plan.spec);
  std::vector<ReplicaResult> out(plan.replicas);
  parallel_for(plan.replicas, workers, [&](std::size_t r) {
    out[r] = reduce(sampler, xi_model.get(), statistic, options, r, plan.seed_of(r));
  });
  return out;
}

void write_replica_csv(std::ostream& os, std::string_view statistic, const std::vector<ReplicaResult>& rows,
                       int dim) {
  const auto old = os.precision(17);
  auto coord_header = [&](const char* prefix) {
    for (int i = 0; i < dim; ++i) os << ',' << prefix << i;
  };
  if (statistic == "barrier-counts") {
    os << "replica,z,lambda,gamma,g_event\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i + 3 < r.values.size(); i += 4) {
        os << r.replica << ',' << r.values[i] << ',' << r.values[i + 1] << ',' << r.values[i + 2] << ','
           << r.values[i + 3] << '\n';
      }
    }
    os.precision(old);
    return;
  }
  os << "replica,statistic,value";
  if (statistic == "max") {
    os << ",centered";
    coord_header("x");
  } else if (statistic == "pair-max") {
    coord_header("u");
    coord_header("v");
  } else if (statistic == "field") {
    os << ",index";
  }
  os << '\n';
  for (const auto& r : rows) {
    if (statistic == "field") {
      for (std::size_t i = 0; i < r.values.size(); ++i) {
        os << r.replica << ',' << statistic << ',' << r.values[i] << ',' << i << '\n';
      }
      continue;
    }
    os << r.replica << ',' << statistic;
    for (double v : r.values) os << ',' << v;
    for (int c : r.coords) os << ',' << c;
    os << '\n';
  }
  os.precision(old);
}

}  // namespace lcgf
