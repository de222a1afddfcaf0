#include "lcgf/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lcgf/approx.hpp"
#include "lcgf/error.hpp"
#include "lcgf/rng.hpp"

namespace lcgf {

namespace {

void check_volume(const FieldSpec& spec) {
  if (spec.volume() > kMaxSampleVolume) {
    throw CapacityError("field volume " + std::to_string(spec.volume()) + " exceeds the cap " +
                        std::to_string(kMaxSampleVolume));
  }
}

void window_sum_line(std::span<double> line, int window, std::vector<double>& scratch) {
  const int side = static_cast<int>(line.size());
  scratch.assign(line.begin(), line.end());
  double acc = 0.0;
  for (int t = 0; t < window; ++t) acc += scratch[static_cast<std::size_t>((side - t) % side)];
  line[0] = acc;
  for (int z = 1; z < side; ++z) {
    acc += scratch[static_cast<std::size_t>(z)] -
           scratch[static_cast<std::size_t>((z - window + side) % side)];
    line[static_cast<std::size_t>(z)] = acc;
  }
}

}  // namespace

void periodic_box_sum(std::span<double> data, int dim, int side, int window) {
  if (window < 1 || window > side) throw InputError("periodic_box_sum: window out of range");
  const Shape shape(dim, side);
  if (data.size() != shape.volume()) throw InputError("periodic_box_sum: size mismatch");
  if (window == 1) return;
  std::vector<double> scratch;
  std::vector<double> acc;
  const auto n = static_cast<std::size_t>(side);
  const auto w = static_cast<std::size_t>(window);
  for (int axis = 0; axis < dim; ++axis) {
    const std::size_t stride = shape.stride(axis);
    const std::size_t block = stride * n;
    for (std::size_t outer = 0; outer < data.size(); outer += block) {
      double* base = data.data() + outer;
      if (stride == 1) {
        window_sum_line(std::span<double>(base, n), window, scratch);
        continue;
      }
      // Whole rows at once: row z of the output is the sum of input rows
      // z - window + 1 .. z (mod side).
      scratch.assign(base, base + block);
      acc.assign(stride, 0.0);
      for (std::size_t t = 0; t < w; ++t) {
        const double* row = scratch.data() + ((n - t) % n) * stride;
        for (std::size_t i = 0; i < stride; ++i) acc[i] += row[i];
      }
      std::copy(acc.begin(), acc.end(), base);
      for (std::size_t z = 1; z < n; ++z) {
        const double* add = scratch.data() + z * stride;
        const double* sub = scratch.data() + ((z + n - w) % n) * stride;
        double* out = base + z * stride;
        for (std::size_t i = 0; i < stride; ++i) {
          acc[i] += add[i] - sub[i];
          out[i] = acc[i];
        }
      }
    }
  }
}

SampledField sample_brw(const FieldSpec& spec, std::uint64_t seed) {
  if (spec.family != Family::BRW) throw InputError("sample_brw: family must be BRW");
  spec.validate();
  check_volume(spec);
  const Shape shape = spec.shape();
  const int n = spec.levels();
  const double sd = std::sqrt(kLog2);
  SampledField out{spec, std::vector<double>(shape.volume(), 0.0), seed, {}};
  std::vector<double> draws;
  for (int j = 0; j <= n; ++j) {
    const Shape coarse(spec.dim, spec.side >> j);
    draws.resize(coarse.volume());
    RandomStream stream(seed, StreamTag::kBrwLevel, static_cast<std::uint64_t>(j));
    stream.fill_normal(draws);
    for (std::size_t v = 0; v < shape.volume(); ++v) {
      std::size_t rest = v;
      std::size_t idx = 0;
      std::size_t mult = 1;
      for (int i = spec.dim - 1; i >= 0; --i) {
        const auto c = rest % static_cast<std::size_t>(spec.side);
        rest /= static_cast<std::size_t>(spec.side);
        idx += (c >> j) * mult;
        mult *= static_cast<std::size_t>(spec.side >> j);
      }
      out.values[v] += sd * draws[idx];
    }
  }
  return out;
}

SampledField sample_mbrw(const FieldSpec& spec, std::uint64_t seed, bool retain_levels) {
  if (spec.family != Family::MBRW) throw InputError("sample_mbrw: family must be MBRW");
  spec.validate();
  check_volume(spec);
  const std::size_t volume = spec.volume();
  const int n = spec.levels();
  SampledField out{spec, std::vector<double>(volume, 0.0), seed, {}};
  if (retain_levels) out.levels.reserve(static_cast<std::size_t>(n + 1));
  std::vector<double> level(volume);
  for (int j = 0; j <= n; ++j) {
    // b_{j,B} for every box corner B in V_N, in row-major corner order.
    RandomStream stream(seed, StreamTag::kMbrwLevel, static_cast<std::uint64_t>(j));
    stream.fill_normal(level);
    periodic_box_sum(level, spec.dim, spec.side, 1 << j);
    const double sd = std::sqrt(kLog2 * std::ldexp(1.0, -spec.dim * j));
    for (std::size_t v = 0; v < volume; ++v) {
      level[v] *= sd;
      out.values[v] += level[v];
    }
    if (retain_levels) out.levels.push_back(level);
  }
  return out;
}

std::vector<double> sample_dense(const CholeskyFactor& factor, std::uint64_t seed) {
  std::vector<double> g(factor.size());
  RandomStream stream(seed, StreamTag::kDense);
  stream.fill_normal(g);
  std::vector<double> x(factor.size());
  factor.apply(g, x);
  return x;
}

struct FieldSampler::XiState {
  XiModel model;
};

FieldSampler::FieldSampler(FieldSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  switch (spec_.family) {
    case Family::CLREM:
      factor_ = std::make_shared<const CholeskyFactor>(cholesky(clrem_matrix(spec_.side, spec_.w)));
      break;
    case Family::Dense:
      factor_ = std::make_shared<const CholeskyFactor>(cholesky(*spec_.dense));
      break;
    case Family::Xi:
      xi_ = std::make_shared<const XiState>(XiState{XiModel(*spec_.xi)});
      break;
    default:
      break;
  }
}

FieldSampler::~FieldSampler() = default;
FieldSampler::FieldSampler(FieldSampler&&) noexcept = default;
FieldSampler& FieldSampler::operator=(FieldSampler&&) noexcept = default;

SampledField FieldSampler::sample(std::uint64_t seed, bool retain_levels) const {
  switch (spec_.family) {
    case Family::BRW:
      return sample_brw(spec_, seed);
    case Family::MBRW:
      return sample_mbrw(spec_, seed, retain_levels);
    case Family::CLREM:
    case Family::Dense:
      return SampledField{spec_, sample_dense(*factor_, seed), seed, {}};
    case Family::Xi: {
      XiField xi = build_xi(xi_->model, seed);
      return SampledField{spec_, std::move(xi.total), seed, {}};
    }
  }
  throw InputError("unsupported family");
}

std::uint64_t ReplicaPlan::seed_of(std::size_t index) const {
  return replica_seed(master_seed, index);
}

}  // namespace lcgf
