#include "lcgf/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lcgf/error.hpp"
#include "lcgf/extremes.hpp"
#include "lcgf/parallel.hpp"
#include "lcgf/rng.hpp"

namespace lcgf {

namespace {

FieldSpec reference_at(const XiParams& p, int levels) {
  switch (p.reference) {
    case Family::BRW:
      return FieldSpec::brw(p.dim, levels);
    case Family::MBRW:
      return FieldSpec::mbrw(p.dim, levels);
    case Family::CLREM:
      return FieldSpec::clrem(1 << levels, p.reference_w);
    default:
      throw InputError("xi reference must be brw, mbrw or clrem");
  }
}

LatticePoint scaled_down(const LatticePoint& p, int factor) {
  LatticePoint q = p;
  for (int& c : q.coords) c /= factor;
  return q;
}

LatticePoint reduced(const LatticePoint& p, int modulus) {
  LatticePoint q = p;
  for (int& c : q.coords) c %= modulus;
  return q;
}

LatticePoint corner_of(const LatticePoint& p, int side) {
  LatticePoint q = p;
  for (int& c : q.coords) c -= c % side;
  return q;
}

// out(p) = sum_{t < window} in(p + t) per axis, for p <= len - window. Entries
// beyond that range are left unspecified.
void forward_box_sum(std::vector<double>& data, int dim, int len, int window) {
  if (window == 1) return;
  const Shape shape(dim, len);
  const auto n = static_cast<std::size_t>(len);
  const auto w = static_cast<std::size_t>(window);
  std::vector<double> line(n);
  for (int axis = 0; axis < dim; ++axis) {
    const std::size_t stride = shape.stride(axis);
    const std::size_t block = stride * n;
    for (std::size_t outer = 0; outer < data.size(); outer += block) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        double* base = data.data() + outer + inner;
        for (std::size_t z = 0; z < n; ++z) line[z] = base[z * stride];
        double acc = 0.0;
        for (std::size_t t = 0; t < w; ++t) acc += line[t];
        base[0] = acc;
        for (std::size_t z = 1; z + w <= n; ++z) {
          acc += line[z + w - 1] - line[z - 1];
          base[z * stride] = acc;
        }
      }
    }
  }
}

}  // namespace

XiModel::XiModel(const XiParams& params)
    : params_(params),
      reference_spec_((params.validate(), reference_at(params, params.n))),
      coarse_spec_(reference_at(params, params.k + params.l)),
      bottom_spec_(reference_at(params, params.kp + params.lp)) {
  const XiParams& p = params_;
  const Shape full(p.dim, p.side());
  const Shape local(p.dim, p.klp_side());
  const auto ref = CovarianceOracle::from_spec(reference_spec_);
  const auto coarse = CovarianceOracle::from_spec(coarse_spec_);
  const auto bottom = CovarianceOracle::from_spec(bottom_spec_);
  const double mbrw_var = mbrw_variance();

  std::vector<double> bottom_var(local.volume());
  for (std::size_t c = 0; c < local.volume(); ++c) {
    const LatticePoint q = local.point(c);
    bottom_var[c] = bottom.variance(q);
  }

  // a_{N,v}^2 per v, then its mean over each class vbar = v mod K'L'.
  std::vector<double> a2(full.volume());
  std::vector<double> sums(local.volume(), 0.0);
  std::vector<std::size_t> counts(local.volume(), 0);
  for (std::size_t i = 0; i < full.volume(); ++i) {
    const LatticePoint v = full.point(i);
    const std::size_t c = local.index(reduced(v, p.klp_side()));
    const double coarse_var = has_coarse() ? coarse.variance(scaled_down(v, p.box_side())) : 0.0;
    const double value = ref.variance(v) + 4.0 * p.alpha - coarse_var - bottom_var[c] - mbrw_var;
    a2[i] = value;
    sums[c] += value;
    ++counts[c];
  }
  a_.resize(local.volume());
  std::vector<double> class_a2(local.volume());
  for (std::size_t c = 0; c < local.volume(); ++c) {
    class_a2[c] = sums[c] / static_cast<double>(counts[c]);
    // Rounding can leave an exact zero slightly negative.
    if (class_a2[c] < 0.0 && class_a2[c] > -1e-12) class_a2[c] = 0.0;
    if (class_a2[c] < 0.0) throw NegativeCorrectionVariance(c, class_a2[c]);
    a_[c] = std::sqrt(class_a2[c]);
  }
  for (std::size_t i = 0; i < full.volume(); ++i) {
    const std::size_t c = local.index(reduced(full.point(i), p.klp_side()));
    epsilon_ = std::max(epsilon_, std::abs(a2[i] - class_a2[c]));
  }

  const int reach = 1 << p.lp;
  for (std::size_t c = 0; c < local.volume(); ++c) {
    const LatticePoint u = local.point(c);
    for (std::size_t e = c + 1; e < local.volume(); ++e) {
      const LatticePoint v = local.point(e);
      int dist = 0;
      for (int i = 0; i < p.dim; ++i) dist = std::max(dist, std::abs(u[i] - v[i]));
      if (dist <= reach) continuity_ = std::max(continuity_, std::abs(a_[c] - a_[e]));
    }
  }
}

double XiModel::mbrw_variance() const { return kLog2 * params_.nstar(); }

double XiModel::covariance(const LatticePoint& u, const LatticePoint& v) const {
  const XiParams& p = params_;
  const Shape full(p.dim, p.side());
  if (u.dim() != p.dim || v.dim() != p.dim) throw InputError("point dimension mismatch");
  if (!full.contains(u) || !full.contains(v)) throw InputError("point outside V_N");
  const int local_side = p.klp_side();
  double cov = has_coarse() ? CovarianceOracle::from_spec(coarse_spec_)(scaled_down(u, p.box_side()),
                                                                      scaled_down(v, p.box_side()))
                            : 0.0;
  const bool same_local = corner_of(u, local_side) == corner_of(v, local_side);
  if (same_local) {
    cov += CovarianceOracle::from_spec(bottom_spec_)(reduced(u, local_side), reduced(v, local_side));
    const Shape local(p.dim, local_side);
    cov += a_[local.index(reduced(u, local_side))] * a_[local.index(reduced(v, local_side))];
  }
  if (corner_of(u, p.box_side()) == corner_of(v, p.box_side())) {
    cov += mbrw_level_covariance(p.dim, p.side(), p.lbar(), p.nbar(), corner_of(u, local_side),
                                 corner_of(v, local_side));
  }
  return cov;
}

std::size_t local_box_index(const XiParams& params, const LatticePoint& p) {
  return Shape(params.dim, params.side() / params.klp_side()).index(scaled_down(p, params.klp_side()));
}

std::size_t coarse_box_index(const XiParams& params, const LatticePoint& p) {
  return Shape(params.dim, params.kl_side()).index(scaled_down(p, params.box_side()));
}

XiField build_xi(const XiParams& params, std::uint64_t seed) { return build_xi(XiModel(params), seed); }

XiField build_xi(const XiModel& model, std::uint64_t seed) {
  const XiParams& p = model.params();
  const Shape full(p.dim, p.side());
  if (full.volume() > kMaxSampleVolume) throw CapacityError("xi field volume exceeds the sampler cap");
  const int local_side = p.klp_side();
  const int box_side = p.box_side();
  const Shape local(p.dim, local_side);
  const Shape corners(p.dim, p.side() / local_side);
  const Shape boxes(p.dim, p.kl_side());
  const std::size_t volume = full.volume();

  XiField xi;
  xi.params = p;
  xi.seed = seed;
  xi.coarse.assign(volume, 0.0);
  xi.bottom.assign(volume, 0.0);
  xi.mbrw_part.assign(volume, 0.0);
  xi.correction.assign(volume, 0.0);
  xi.total.assign(volume, 0.0);

  if (model.has_coarse()) {
    const FieldSampler coarse_sampler(model.coarse_spec());
    const SampledField coarse = coarse_sampler.sample(stream_seed(seed, StreamTag::kXiCoarse));
    for (std::size_t i = 0; i < volume; ++i) {
      xi.coarse[i] = coarse.values[boxes.index(scaled_down(full.point(i), box_side))];
    }
  }

  // One bottom copy per local box; the box number selects the stream.
  const FieldSampler bottom_sampler(model.bottom_spec());
  std::vector<LatticePoint> corner_points(corners.volume());
  for (std::size_t b = 0; b < corners.volume(); ++b) {
    LatticePoint c = corners.point(b);
    for (int& x : c.coords) x *= local_side;
    corner_points[b] = c;
    const SampledField copy = bottom_sampler.sample(stream_seed(seed, StreamTag::kXiBottom, b));
    for (std::size_t q = 0; q < local.volume(); ++q) {
      LatticePoint v = local.point(q);
      for (int i = 0; i < p.dim; ++i) v.coords[static_cast<std::size_t>(i)] += c[i];
      xi.bottom[full.index(v)] = copy.values[q];
    }
  }

  // MBRW levels lbar..nbar at local-box corners; an independent copy per coarse box.
  const int nstar = p.nstar();
  xi.mbrw_levels.assign(static_cast<std::size_t>(nstar), std::vector<double>(corners.volume(), 0.0));
  std::vector<double> noise;
  for (std::size_t box = 0; box < boxes.volume(); ++box) {
    LatticePoint lo = boxes.point(box);
    for (int& x : lo.coords) x *= box_side;
    for (int t = 0; t < nstar; ++t) {
      const int j = p.nbar() - t;
      const int window = 1 << j;
      const int len = std::min(p.side(), box_side + window - 1);
      const bool periodic = len == p.side();
      // Window position q along an axis holds the box with lower corner
      // (start + q) mod N; start is chosen so that every box touching the
      // coarse box appears exactly once.
      const Shape win(p.dim, len);
      noise.resize(win.volume());
      RandomStream stream(seed, StreamTag::kXiMbrw, box, static_cast<std::uint64_t>(j));
      stream.fill_normal(noise);
      if (periodic) {
        periodic_box_sum(noise, p.dim, len, window);
      } else {
        forward_box_sum(noise, p.dim, len, window);
      }
      const double sd = std::sqrt(kLog2 * std::ldexp(1.0, -p.dim * j));
      std::vector<double>& level = xi.mbrw_levels[static_cast<std::size_t>(t)];
      LatticePoint q;
      q.coords.resize(static_cast<std::size_t>(p.dim));
      for (std::size_t b = 0; b < corners.volume(); ++b) {
        const LatticePoint& c = corner_points[b];
        bool inside = true;
        for (int i = 0; i < p.dim && inside; ++i) inside = c[i] >= lo[i] && c[i] < lo[i] + box_side;
        if (!inside) continue;
        // Periodic: the sum ending at residue c. Forward: boxes with corners
        // c - window + 1 .. c start at window position c - lo.
        for (int i = 0; i < p.dim; ++i) {
          q.coords[static_cast<std::size_t>(i)] = periodic ? c[i] : c[i] - lo[i];
        }
        level[b] = sd * noise[win.index(q)];
      }
    }
  }
  std::vector<double> corner_sum(corners.volume(), 0.0);
  for (std::size_t b = 0; b < corners.volume(); ++b) {
    double x = 0.0;
    for (int t = 0; t < nstar; ++t) x = x + xi.mbrw_levels[static_cast<std::size_t>(t)][b];
    corner_sum[b] = x;
  }

  RandomStream correction_stream(seed, StreamTag::kXiCorrection);
  std::vector<double> phi(corners.volume());
  correction_stream.fill_normal(phi);
  const auto a = model.correction_scale();
  for (std::size_t i = 0; i < volume; ++i) {
    const LatticePoint v = full.point(i);
    const std::size_t b = corners.index(scaled_down(v, local_side));
    xi.mbrw_part[i] = corner_sum[b];
    xi.correction[i] = a[local.index(reduced(v, local_side))] * phi[b];
    xi.total[i] = xi.coarse[i] + xi.bottom[i] + xi.mbrw_part[i] + xi.correction[i];
  }
  return xi;
}

std::vector<double> fine_field(const XiField& xi) {
  std::vector<double> out(xi.total.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xi.total[i] - xi.coarse[i];
  return out;
}

BackboneDecomposition backbone(const XiField& xi, const LatticePoint& v) {
  const XiParams& p = xi.params;
  const Shape full(p.dim, p.side());
  if (v.dim() != p.dim || !full.contains(v)) throw InputError("backbone: point outside V_N");
  for (int c : v.coords) {
    if (c % p.klp_side() != 0) throw InputError("backbone: point is not a local-box corner");
  }
  if (xi.mbrw_levels.empty()) throw StateError("backbone: MBRW levels were not retained");
  const std::size_t b = local_box_index(p, v);
  BackboneDecomposition out{v, std::vector<double>(xi.mbrw_levels.size() + 1, 0.0)};
  for (std::size_t t = 0; t < xi.mbrw_levels.size(); ++t) out.x[t + 1] = out.x[t] + xi.mbrw_levels[t][b];
  return out;
}

double barrier_straight(const XiParams& params, double z, int t) {
  return z + m_n(params.box_side(), params.dim) / params.nbar() * t;
}

double barrier_bent(const XiParams& params, double z, int t) {
  const int m = std::min(t, params.nstar() - t);
  const double slack = m > 1 ? 10.0 * std::log(static_cast<double>(m)) : 0.0;
  return barrier_straight(params, z, t) + slack + std::pow(z, 1.0 / 20.0);
}

std::vector<BackboneRecord> export_backbones(const XiField& xi, std::size_t coarse_box) {
  const XiParams& p = xi.params;
  const Shape boxes(p.dim, p.kl_side());
  if (coarse_box >= boxes.volume()) throw InputError("coarse box index out of range");
  if (xi.mbrw_levels.empty()) throw StateError("export_backbones: MBRW levels were not retained");
  const Shape full(p.dim, p.side());
  const Shape local(p.dim, p.klp_side());
  const int per_axis = p.box_side() / p.klp_side();
  const Shape inner(p.dim, per_axis);
  const LatticePoint box = boxes.point(coarse_box);
  const std::vector<double> fine = fine_field(xi);

  std::vector<BackboneRecord> out;
  out.reserve(inner.volume());
  for (std::size_t s = 0; s < inner.volume(); ++s) {
    LatticePoint corner = inner.point(s);
    for (int i = 0; i < p.dim; ++i) {
      auto& c = corner.coords[static_cast<std::size_t>(i)];
      c = box[i] * p.box_side() + c * p.klp_side();
    }
    double local_max = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < local.volume(); ++q) {
      LatticePoint v = local.point(q);
      for (int i = 0; i < p.dim; ++i) v.coords[static_cast<std::size_t>(i)] += corner[i];
      local_max = std::max(local_max, fine[full.index(v)]);
    }
    BackboneRecord rec{corner, backbone(xi, corner).x, local_max};
    out.push_back(std::move(rec));
  }
  return out;
}

BarrierCounts count_barrier_events(const XiField& xi, double z, std::size_t coarse_box) {
  if (!(z >= 1.0)) throw DomainError("barrier events need z >= 1");
  const XiParams& p = xi.params;
  const double target = m_n(p.box_side(), p.dim) + z;
  BarrierCounts counts;
  counts.z = z;
  for (const BackboneRecord& rec : export_backbones(xi, coarse_box)) {
    bool below_straight = true;
    bool below_bent = true;
    for (int t = 0; t < static_cast<int>(rec.x.size()); ++t) {
      const double x = rec.x[static_cast<std::size_t>(t)];
      if (x > barrier_straight(p, z, t)) below_straight = false;
      if (x > barrier_bent(p, z, t)) below_bent = false;
    }
    const bool high = rec.local_max >= target;
    if (below_straight && high) ++counts.lambda;
    if (below_bent && high) ++counts.gamma_count;
    if (!below_bent) counts.g_event = true;
  }
  return counts;
}

std::vector<double> fine_box_maxima(const XiParams& params, std::size_t replicas,
                                    std::uint64_t master_seed, int workers) {
  const XiModel model(params);
  const Shape full(params.dim, params.side());
  const Shape boxes(params.dim, params.kl_side());
  const double center = m_n(params.box_side(), params.dim);
  const std::size_t per = boxes.volume();
  std::vector<double> out(replicas * per);
  parallel_for(replicas, workers, [&](std::size_t r) {
    const XiField xi = build_xi(model, replica_seed(master_seed, r));
    std::vector<double> best(per, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < full.volume(); ++i) {
      const std::size_t b = coarse_box_index(params, full.point(i));
      best[b] = std::max(best[b], xi.total[i] - xi.coarse[i]);
    }
    for (std::size_t b = 0; b < per; ++b) out[r * per + b] = best[b] - center;
  });
  return out;
}

std::vector<TailRow> tail_table(std::span<const double> centered_maxima, std::span<const double> z_grid,
                                int dim, int box_side) {
  if (centered_maxima.empty()) throw InsufficientDataError("tail_table: no samples");
  const double rate = std::sqrt(2.0 * dim);
  const double n = static_cast<double>(centered_maxima.size());
  const double upper = std::sqrt(std::log(static_cast<double>(box_side)));
  std::vector<TailRow> rows;
  rows.reserve(z_grid.size());
  for (double z : z_grid) {
    TailRow row;
    row.z = z;
    row.samples = centered_maxima.size();
    row.exceedances = static_cast<std::size_t>(
        std::count_if(centered_maxima.begin(), centered_maxima.end(), [z](double m) { return m >= z; }));
    row.p_hat = static_cast<double>(row.exceedances) / n;
    const double factor = std::exp(rate * z) / z;
    row.beta_hat = row.p_hat * factor;
    row.stderr_beta = std::sqrt(row.p_hat * (1.0 - row.p_hat) / n) * factor;
    row.in_regime = z >= 1.0 && z <= upper;
    rows.push_back(row);
  }
  return rows;
}

std::vector<TailRow> fine_right_tail(const XiParams& params, std::span<const double> z_grid,
                                     std::size_t replicas, std::uint64_t master_seed, int workers) {
  const std::vector<double> maxima = fine_box_maxima(params, replicas, master_seed, workers);
  return tail_table(maxima, z_grid, params.dim, params.box_side());
}

}  // namespace lcgf
