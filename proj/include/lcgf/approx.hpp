#pragma once

// The approximation field xi = coarse + bottom + MBRW + correction.
//
// V_N is cut into (KL)^d coarse boxes of side N/KL and into (N/K'L')^d local
// boxes of side K'L'. The coarse part is one sample of the reference field on
// V_{KL}, held constant on each coarse box. The bottom part is an independent
// copy of the reference field on V_{K'L'} per local box. The MBRW part keeps
// levels lbar = k'+l' .. nbar = n-k-l of an MBRW on the N-torus, evaluated at
// local-box corners, one independent copy per coarse box. The correction
// a(v mod K'L') * phi_box restores Var(xi_v) = Var(phi_{N,v}) + 4 alpha.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lcgf/covariance.hpp"
#include "lcgf/field_spec.hpp"
#include "lcgf/samplers.hpp"

namespace lcgf {

/// Variance-matching data derived from XiParams; shared by every realization.
class XiModel {
 public:
  explicit XiModel(const XiParams& params);

  const XiParams& params() const { return params_; }
  /// Correction scale a(vbar) indexed by the flat position of vbar in V_{K'L'}.
  std::span<const double> correction_scale() const { return a_; }
  /// Realized max_v |a_{N,v}^2 - a(vbar)^2|.
  double epsilon() const { return epsilon_; }
  /// max |a(vbar) - a(ubar)| over ||vbar - ubar||_inf <= L'.
  double continuity_deviation() const { return continuity_; }
  /// Exact covariance of the total field xi.
  double covariance(const LatticePoint& u, const LatticePoint& v) const;
  /// False when KL = 1: a single coarse box carries no macroscopic field, so
  /// the coarse part is identically 0.
  bool has_coarse() const { return params_.k + params_.l > 0; }
  /// Variance of the MBRW part, nstar * log 2.
  double mbrw_variance() const;

  const FieldSpec& coarse_spec() const { return coarse_spec_; }
  const FieldSpec& bottom_spec() const { return bottom_spec_; }
  const FieldSpec& reference_spec() const { return reference_spec_; }

 private:
  XiParams params_;
  FieldSpec reference_spec_;
  FieldSpec coarse_spec_;
  FieldSpec bottom_spec_;
  std::vector<double> a_;
  double epsilon_ = 0.0;
  double continuity_ = 0.0;
};

struct XiField {
  XiParams params;
  std::uint64_t seed = 0;
  std::vector<double> coarse;
  std::vector<double> bottom;
  std::vector<double> mbrw_part;
  std::vector<double> correction;
  std::vector<double> total;
  /// mbrw_levels[t][c]: increment of backbone time t (t = 0 is the largest
  /// box size 2^nbar) at local-box corner number c.
  std::vector<std::vector<double>> mbrw_levels;

  Shape shape() const { return Shape(params.dim, params.side()); }
};

enum class XiComponent : std::uint8_t { kTotal = 0, kCoarse = 1, kBottom = 2, kMbrw = 3, kCorrection = 4 };

XiField build_xi(const XiParams& params, std::uint64_t seed);
XiField build_xi(const XiModel& model, std::uint64_t seed);

/// total - coarse.
std::vector<double> fine_field(const XiField& xi);

struct BackboneDecomposition {
  LatticePoint v;
  /// X[t] for t = 0..nstar; X[0] = 0 and X[nstar] is the MBRW part at v.
  std::vector<double> x;
};

/// Flat number of the local box (side K'L') containing p.
std::size_t local_box_index(const XiParams& params, const LatticePoint& p);
/// Flat number of the coarse box (side N/KL) containing p.
std::size_t coarse_box_index(const XiParams& params, const LatticePoint& p);

/// v must be a local-box corner.
BackboneDecomposition backbone(const XiField& xi, const LatticePoint& v);

struct BarrierCounts {
  double z = 0.0;
  std::size_t lambda = 0;
  std::size_t gamma_count = 0;
  bool g_event = false;
};

/// Straight barrier z + t m_{Nbar} / nbar.
double barrier_straight(const XiParams& params, double z, int t);
/// Bent barrier with the 10 (log(t ^ (nstar - t)))_+ + z^{1/20} slack.
double barrier_bent(const XiParams& params, double z, int t);

/// Events E, F, G over the local-box corners of one coarse box, checked at integer times.
BarrierCounts count_barrier_events(const XiField& xi, double z, std::size_t coarse_box = 0);

/// Everything the barrier events read, per local-box corner of one coarse box.
struct BackboneRecord {
  LatticePoint corner;
  std::vector<double> x;
  /// max of the fine field over the local box.
  double local_max = 0.0;
};
std::vector<BackboneRecord> export_backbones(const XiField& xi, std::size_t coarse_box = 0);

struct TailRow {
  double z = 0.0;
  double p_hat = 0.0;
  double beta_hat = 0.0;
  double stderr_beta = 0.0;
  std::size_t exceedances = 0;
  std::size_t samples = 0;
  /// z lies in [1, sqrt(log(N/KL))].
  bool in_regime = false;
};

/// Per-coarse-box maxima of the fine field, centered by m_{N/KL}; all boxes
/// of every replica are pooled.
std::vector<double> fine_box_maxima(const XiParams& params, std::size_t replicas,
                                    std::uint64_t master_seed, int workers = 1);

/// beta_hat(z) = p_hat(z) e^{sqrt(2d) z} / z from pooled centered box maxima.
std::vector<TailRow> tail_table(std::span<const double> centered_maxima, std::span<const double> z_grid,
                                int dim, int box_side);

std::vector<TailRow> fine_right_tail(const XiParams& params, std::span<const double> z_grid,
                                     std::size_t replicas, std::uint64_t master_seed,
                                     int workers = 1);

}  // namespace lcgf
