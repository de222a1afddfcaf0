#include "lcgf/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "lcgf/error.hpp"
#include "lcgf/parallel.hpp"
#include "lcgf/rng.hpp"

namespace lcgf {

void BoxPerturbation::validate(int side) const {
  if (r1 < 1 || r2 < 1) throw InputError("perturbation: r1 and r2 must be >= 1");
  if (r1 > side) throw InputError("perturbation: r1 must not exceed N");
  if (large_side(side) < 1) throw InputError("perturbation: N/r2 must be >= 1");
  if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0)) throw InputError("perturbation: sigmas must be >= 0");
}

namespace {

// values[v] += sigma g_{B_{v,s}} with one stream draw per box, boxes in row-major order.
void add_box_noise(std::vector<double>& values, const Shape& shape, int box, double sigma,
                   RandomStream stream) {
  if (sigma == 0.0) return;
  const int per_axis = shape.side() / box;
  const Shape boxes(shape.dim(), per_axis);
  std::vector<double> g(boxes.volume());
  stream.fill_normal(g);
  LatticePoint q;
  q.coords.resize(static_cast<std::size_t>(shape.dim()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const LatticePoint v = shape.point(i);
    bool inside = true;
    for (int a = 0; a < shape.dim() && inside; ++a) {
      const int b = v[a] / box;
      inside = b < per_axis;
      q.coords[static_cast<std::size_t>(a)] = b;
    }
    if (inside) values[i] += sigma * g[boxes.index(q)];
  }
}

double max_of(std::span<const double> x) { return *std::max_element(x.begin(), x.end()); }

}  // namespace

SampledField perturbed_field(const SampledField& field, const BoxPerturbation& p, std::uint64_t seed) {
  const Shape shape = field.shape();
  p.validate(shape.side());
  SampledField out = field;
  out.levels.clear();
  add_box_noise(out.values, shape, p.r1, p.sigma1, RandomStream(seed, StreamTag::kPerturbSmall));
  add_box_noise(out.values, shape, p.large_side(shape.side()), p.sigma2,
                RandomStream(seed, StreamTag::kPerturbLarge));
  return out;
}

double mix_scale(const BoxPerturbation& sigma, int side) {
  return std::sqrt(1.0 + sigma.norm_sq() / std::log(static_cast<double>(side)));
}

SampledField scaled_mix_field(const SampledField& field, const SampledField& field_prime,
                              const BoxPerturbation& sigma) {
  if (!field.spec.same_law(field_prime.spec)) throw InputError("scaled_mix_field: spec mismatch");
  if (field.values.size() != field_prime.values.size()) {
    throw InputError("scaled_mix_field: size mismatch");
  }
  SampledField out = field;
  out.levels.clear();
  if (sigma.norm_sq() == 0.0) return out;
  const double c = std::sqrt(sigma.norm_sq() / std::log(static_cast<double>(field.spec.side)));
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += c * field_prime.values[i];
  return out;
}

double predicted_shift(const BoxPerturbation& p, int dim) { return p.norm_sq() * std::sqrt(dim / 2.0); }

double ShiftResult::error() const { return std::abs(mean_gap - predicted); }

std::vector<ShiftResult> shift_check(const FieldSpec& spec, std::span<const BoxPerturbation> ps,
                                     std::size_t replicas, std::uint64_t master_seed, int workers) {
  if (replicas < 100) throw InputError("shift_check needs at least 100 replicas");
  for (const auto& p : ps) p.validate(spec.side);
  const FieldSampler sampler(spec);
  const std::size_t k = ps.size();
  std::vector<double> base(replicas);
  std::vector<double> pert(replicas * k);
  parallel_for(replicas, workers, [&](std::size_t r) {
    const std::uint64_t seed = replica_seed(master_seed, r);
    const SampledField field = sampler.sample(seed);
    base[r] = max_of(field.values);
    const std::uint64_t noise_seed = stream_seed(seed, StreamTag::kPerturbation);
    for (std::size_t i = 0; i < k; ++i) {
      pert[r * k + i] = max_of(perturbed_field(field, ps[i], noise_seed).values);
    }
  });
  std::vector<ShiftResult> out;
  const double n = static_cast<double>(replicas);
  for (std::size_t i = 0; i < k; ++i) {
    double sb = 0.0;
    double sp = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
      sb += base[r];
      sp += pert[r * k + i];
    }
    const double gap = (sp - sb) / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
      const double d = pert[r * k + i] - base[r] - gap;
      ss += d * d;
    }
    ShiftResult res;
    res.side = spec.side;
    res.r1 = ps[i].r1;
    res.r2 = ps[i].r2;
    res.sigma1 = ps[i].sigma1;
    res.sigma2 = ps[i].sigma2;
    res.base_mean = sb / n;
    res.perturbed_mean = sp / n;
    res.mean_gap = gap;
    res.predicted = predicted_shift(ps[i], spec.dim);
    res.stderr_gap = std::sqrt(ss / (n - 1.0) / n);
    res.replicas = replicas;
    out.push_back(res);
  }
  return out;
}

ShiftResult shift_check(const FieldSpec& spec, const BoxPerturbation& p, std::size_t replicas,
                        std::uint64_t master_seed, int workers) {
  return shift_check(spec, std::span<const BoxPerturbation>(&p, 1), replicas, master_seed, workers)
      .front();
}

void write_shift_csv(std::ostream& os, std::span<const ShiftResult> rows) {
  const auto old = os.precision(10);
  os << "N,r1,r2,sigma1,sigma2,mean_gap,predicted,stderr\n";
  for (const auto& r : rows) {
    os << r.side << ',' << r.r1 << ',' << r.r2 << ',' << r.sigma1 << ',' << r.sigma2 << ','
       << r.mean_gap << ',' << r.predicted << ',' << r.stderr_gap << '\n';
  }
  os.precision(old);
}

}  // namespace lcgf
