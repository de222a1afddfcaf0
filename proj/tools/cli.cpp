#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lcgf/approx.hpp"
#include "lcgf/assumptions.hpp"
#include "lcgf/covariance.hpp"
#include "lcgf/error.hpp"
#include "lcgf/extremes.hpp"
#include "lcgf/field_io.hpp"
#include "lcgf/limitlaw.hpp"
#include "lcgf/parallel.hpp"
#include "lcgf/perturb.hpp"
#include "lcgf/replicas.hpp"
#include "lcgf/rng.hpp"
#include "lcgf/samplers.hpp"

namespace lcgf::cli {
namespace {

using Json = nlohmann::json;

template <typename T>
struct IsVector : std::false_type {};
template <typename T>
struct IsVector<std::vector<T>> : std::true_type {};

std::string render_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// Values are rendered so that CLI11's config reader parses them back to the
// same bits; doubles use the shortest round-trip form.
template <typename T>
std::string render(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_floating_point_v<T>) {
    return render_double(v);
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return '"' + v + '"';
  } else {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + render(v[i]);
    return s + "]";
  }
}

template <typename T>
bool is_empty_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string> || IsVector<T>::value) {
    return v.empty();
  } else {
    return false;
  }
}

/// Resolved settings of one subcommand, in registration order.
class Registry {
 public:
  template <typename T>
  CLI::Option* option(CLI::App* app, const std::string& names, T& var, const std::string& desc) {
    CLI::Option* o = app->add_option(names, var, desc)->capture_default_str();
    if constexpr (IsVector<T>::value) o->delimiter(',');
    entries_.push_back({o->get_single_name(), [&var]() -> std::optional<std::string> {
                          if (is_empty_value(var)) return std::nullopt;
                          return render(var);
                        }});
    return o;
  }

  CLI::Option* flag(CLI::App* app, const std::string& names, bool& var, const std::string& desc) {
    CLI::Option* o = app->add_flag(names, var, desc);
    entries_.push_back({o->get_single_name(), [&var]() -> std::optional<std::string> { return render(var); }});
    return o;
  }

  /// key=value lines in the config-file format; empty lists and strings are left out.
  std::vector<std::string> lines() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
      if (auto v = e.value()) out.push_back(e.key + "=" + *v);
    }
    return out;
  }

 private:
  struct Entry {
    std::string key;
    std::function<std::optional<std::string>()> value;
  };
  std::vector<Entry> entries_;
};

const std::vector<std::string> kLatticeFamilies{"brw", "mbrw", "clrem", "dense"};
const std::vector<std::string> kSampleFamilies{"brw", "mbrw", "clrem", "dense", "xi"};
const std::vector<std::string> kReferenceFamilies{"brw", "mbrw", "clrem"};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  Registry reg;
  std::function<void(Command&, std::ostream&)> body;

  // field
  std::string family = "mbrw";
  int dim = 1;
  int n = 4;
  int side = 0;
  double w = 0.0;
  std::string matrix;
  // xi and gstar scales
  int k = 1;
  int l = 1;
  int kp = 1;
  int lp = 1;
  double alpha = 0.5;
  std::string reference = "mbrw";
  double reference_w = 0.0;
  // replicas and output
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t replicas = 100;
  std::string out = "-";
  std::string format = "csv";
  // cov
  std::vector<int> x;
  std::vector<int> y;
  int ck = -1;
  int cl = -1;
  std::string matrix_out;
  // check-assumptions
  std::size_t pair_budget = 500;
  std::vector<double> deltas{0.1};
  std::uint64_t probe_seed = 0;
  bool fgh = false;
  std::vector<int> n_grid;
  int l_max = 1;
  std::vector<double> x_grid;
  // tail
  double z_lo = 1.0;
  double z_hi = 3.5;
  double z_step = 0.25;
  bool left = false;
  std::vector<double> lambdas{1.0, 2.0, 3.0};
  // pairs, loc
  int r = 2;
  double c = 0.5;
  std::size_t example_cap = 16;
  // xi, barrier
  std::string mode = "model";
  std::vector<double> z_grid{1.0};
  std::size_t coarse_box = 0;
  std::string backbones_out;
  // gstar, limit-compare
  double beta_star = 1.0;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  std::string coarse_family = "mbrw";
  double coarse_w = 0.0;
  std::string empirical;
  std::string column = "value";
  std::string z_file;
  std::string z_column = "value";
  // clrem-w
  std::vector<int> sides{8};
  double tol = 1e-6;
  // shift-check
  std::vector<int> r1s{16};
  std::vector<int> r2s{16};
  double sigma1 = 1.0;
  double sigma2 = 1.0;

  std::string header() const {
    // Lines after the version form a config file that reproduces this run.
    std::string h = "# lcgf " LCGF_VERSION "\n# [" + name + "]\n";
    for (const auto& line : reg.lines()) h += "# " + line + "\n";
    return h;
  }

  Json json_header() const {
    return Json{{"version", LCGF_VERSION}, {"command", name}, {"config", reg.lines()}};
  }
};

// ---------------------------------------------------------------------------
// Option groups

void add_output(Command& c, bool with_format) {
  // The output path is not part of the experiment, so it stays out of the header.
  c.app->add_option("-o,--out", c.out, "Output path; '-' writes to stdout")->capture_default_str();
  if (with_format) {
    c.reg.option(c.app, "--format", c.format, "Output format")->check(CLI::IsMember({"csv", "bin"}));
  }
}

void add_seed(Command& c) {
  c.reg.option(c.app, "--seed", c.seed, "Master seed; replica i uses hash64(seed, i)")->envname("LCGF_SEED");
}

void add_replicas(Command& c, std::size_t def) {
  c.replicas = def;
  c.reg.option(c.app, "--replicas", c.replicas, "Number of independent replicas")
      ->check(CLI::PositiveNumber);
  // Output does not depend on the worker count either.
  c.app->add_option("--workers", c.workers, "Worker threads; results are identical for any count")
      ->envname("LCGF_WORKERS")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_xi_scales(Command& c) {
  c.reg.option(c.app, "--k", c.k, "log2 K");
  c.reg.option(c.app, "--l", c.l, "log2 L");
  c.reg.option(c.app, "--kp", c.kp, "log2 K'");
  c.reg.option(c.app, "--lp", c.lp, "log2 L'");
  c.reg.option(c.app, "--alpha", c.alpha, "Assumption constant in the variance match Var xi = Var phi + 4 alpha");
  c.reg.option(c.app, "--reference", c.reference, "Reference field for variance matching")
      ->check(CLI::IsMember(kReferenceFamilies));
  c.reg.option(c.app, "--reference-w", c.reference_w, "Diagonal shift W of a CLREM reference");
}

void add_field(Command& c, const std::vector<std::string>& families, bool with_xi) {
  c.reg.option(c.app, "--family", c.family, "Field family")->check(CLI::IsMember(families));
  c.reg.option(c.app, "-d,--dim", c.dim, "Dimension d")->check(CLI::PositiveNumber);
  c.reg.option(c.app, "-n,--levels", c.n, "log2 N for the dyadic families");
  c.reg.option(c.app, "-N,--side", c.side, "Side N for clrem; 0 means 2^n");
  c.reg.option(c.app, "-W,--w", c.w, "CLREM diagonal offset W");
  c.reg.option(c.app, "--matrix", c.matrix, "Dense covariance file (LCGFCOV1) for --family dense");
  if (with_xi) add_xi_scales(c);
}

void add_footer(Command& c) {
  c.app->footer(
      "Settings can also come from `lcgf " + c.name +
      " --config FILE`; the file uses the [" + c.name +
      "] block of an output header with the '# ' prefixes removed, and command-line flags override it.");
}

// ---------------------------------------------------------------------------
// Helpers

XiParams xi_params(const Command& c) {
  XiParams p;
  p.dim = c.dim;
  p.n = c.n;
  p.k = c.k;
  p.l = c.l;
  p.kp = c.kp;
  p.lp = c.lp;
  p.alpha = c.alpha;
  p.reference = family_from_string(c.reference);
  p.reference_w = c.reference_w;
  p.validate();
  return p;
}

FieldSpec field_spec(const Command& c, int n) {
  switch (family_from_string(c.family)) {
    case Family::BRW:
      return FieldSpec::brw(c.dim, n);
    case Family::MBRW:
      return FieldSpec::mbrw(c.dim, n);
    case Family::CLREM:
      if (c.dim != 1) throw InputError("clrem is one-dimensional; use -d 1");
      return FieldSpec::clrem(c.side > 0 ? c.side : 1 << n, c.w);
    case Family::Dense: {
      if (c.matrix.empty()) throw InputError("--family dense needs --matrix");
      std::ifstream is(c.matrix, std::ios::binary);
      if (!is) throw InputError("cannot open " + c.matrix);
      auto cov = std::make_shared<const DenseCovariance>(read_dense_binary(is));
      const auto side = static_cast<int>(std::lround(std::pow(static_cast<double>(cov->size()), 1.0 / c.dim)));
      return FieldSpec::dense_field(c.dim, side, std::move(cov));
    }
    case Family::Xi: {
      XiParams p = xi_params(c);
      p.n = n;
      return FieldSpec::xi_field(p);
    }
  }
  throw InputError("unsupported family");
}

FieldSpec field_spec(const Command& c) { return field_spec(c, c.n); }

/// Writes to stdout for "-", otherwise to a file.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& stdout_stream, bool binary = false) {
    if (path == "-") {
      if (binary) throw InputError("binary output needs --out <path>");
      os_ = &stdout_stream;
      return;
    }
    file_.open(path, binary ? std::ios::binary | std::ios::out : std::ios::out);
    if (!file_) throw InputError("cannot open " + path + " for writing");
    os_ = &file_;
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

/// Binary outputs carry their config in a sidecar "<path>.cfg".
void write_sidecar(const Command& c, const std::string& path) {
  std::ofstream f(path + ".cfg");
  if (!f) throw InputError("cannot write " + path + ".cfg");
  f << c.header();
}

LatticePoint point_of(const std::vector<int>& coords) { return LatticePoint{coords}; }

std::string coords_text(const LatticePoint& p) {
  std::string s;
  for (int i = 0; i < p.dim(); ++i) s += (i ? " " : "") + std::to_string(p[i]);
  return s;
}

std::vector<double> read_column(const std::string& path, const std::string& column) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path);
  std::string line;
  std::vector<std::string> names;
  std::size_t col = 0;
  std::vector<double> out;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (names.empty()) {
      names = fields;
      const auto it = std::find(names.begin(), names.end(), column);
      if (it == names.end()) throw InputError("column '" + column + "' not found in " + path);
      col = static_cast<std::size_t>(it - names.begin());
      continue;
    }
    if (col >= fields.size()) throw InputError("short row in " + path);
    double v = 0.0;
    const auto& s = fields[col];
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) throw InputError("bad number '" + s + "' in " + path);
    out.push_back(v);
  }
  if (out.empty()) throw InsufficientDataError("no data rows in " + path);
  return out;
}

std::vector<ReplicaResult> replicas_of(const Command& c, const FieldSpec& spec, std::string_view statistic,
                                       const StatisticOptions& opt = {}) {
  return run_replicas(ReplicaPlan{spec, c.replicas, c.seed}, statistic, opt, c.workers);
}

// ---------------------------------------------------------------------------
// Subcommand bodies

void run_cov(Command& c, std::ostream& stdout_stream) {
  const FieldSpec spec = field_spec(c);
  const CovarianceOracle oracle = CovarianceOracle::from_spec(spec);
  const bool indices = c.ck >= 0 || c.cl >= 0;
  const bool points = !c.x.empty() || !c.y.empty();
  if (!indices && !points && c.matrix_out.empty()) {
    throw InputError("cov needs --x/--y, --k/--l or --matrix-out");
  }
  if (indices || points) {
    LatticePoint u;
    LatticePoint v;
    if (indices) {
      if (c.ck < 0 || c.cl < 0) throw InputError("--k and --l go together");
      u = point_of({c.ck});
      v = point_of({c.cl});
    } else {
      u = point_of(c.x);
      v = point_of(c.y);
    }
    Sink sink(c.out, stdout_stream);
    *sink << c.header() << "x,y,covariance\n";
    *sink << coords_text(u) << ',' << coords_text(v) << ',' << render_double(oracle(u, v)) << '\n';
  }
  if (!c.matrix_out.empty()) {
    const DenseCovariance m = build_dense(oracle);
    if (c.format == "bin") {
      Sink sink(c.matrix_out, stdout_stream, true);
      write_dense_binary(*sink, m, static_cast<std::uint32_t>(spec.dim));
      write_sidecar(c, c.matrix_out);
    } else {
      Sink sink(c.matrix_out, stdout_stream);
      *sink << c.header();
      write_dense_csv(*sink, m);
    }
  }
}

void run_sample(Command& c, std::ostream& stdout_stream) {
  const FieldSpec spec = field_spec(c);
  if (c.format == "bin") {
    Sink sink(c.out, stdout_stream, true);
    if (spec.family == Family::Xi) {
      write_xi_binary(*sink, build_xi(*spec.xi, c.seed));
    } else {
      write_field_binary(*sink, FieldSampler(spec).sample(c.seed));
    }
    write_sidecar(c, c.out);
    return;
  }
  const SampledField f = FieldSampler(spec).sample(c.seed);
  Sink sink(c.out, stdout_stream);
  *sink << c.header();
  for (int i = 0; i < spec.dim; ++i) *sink << 'x' << i << ',';
  *sink << "value\n";
  write_field_csv(*sink, f.values, spec.shape());
}

void run_check_assumptions(Command& c, std::ostream& stdout_stream) {
  const FieldSpec spec = field_spec(c);
  const CovarianceOracle oracle = CovarianceOracle::from_spec(spec);
  const ProbeResult a0 = check_a0(oracle, c.pair_budget, c.probe_seed);
  std::map<double, ProbeResult> a1;
  for (double delta : c.deltas) a1[delta] = check_a1(oracle, delta, c.pair_budget, c.probe_seed);
  std::unique_ptr<FghReport> fgh;
  FghGrids grids;
  if (c.fgh) {
    if (c.n_grid.size() < 2) throw InputError("--fgh needs --n-grid with at least two sizes");
    if (c.x_grid.empty() || c.x_grid.size() % static_cast<std::size_t>(c.dim) != 0) {
      throw InputError("--x-grid needs a multiple of d coordinates");
    }
    for (std::size_t i = 0; i < c.x_grid.size(); i += static_cast<std::size_t>(c.dim)) {
      grids.x.emplace_back(c.x_grid.begin() + static_cast<std::ptrdiff_t>(i),
                           c.x_grid.begin() + static_cast<std::ptrdiff_t>(i) + c.dim);
    }
    grids.l_max = c.l_max;
    fgh = std::make_unique<FghReport>(estimate_fgh(
        [&](int n) { return CovarianceOracle::from_spec(field_spec(c, n)); }, c.n_grid, grids));
  }
  Json result = Json::parse(assumption_report_json(a0, a1, fgh.get(), fgh ? &grids : nullptr));
  if (spec.family == Family::MBRW || spec.family == Family::BRW) {
    result["torus"] = Json::parse(probe_json("torus", check_torus_log_correlation(oracle, c.pair_budget, c.probe_seed)));
  }
  Sink sink(c.out, stdout_stream);
  *sink << Json{{"header", c.json_header()}, {"result", result}}.dump(2) << '\n';
}

void run_statistic(Command& c, std::ostream& stdout_stream, std::string_view statistic,
                   const StatisticOptions& opt = {}) {
  const FieldSpec spec = field_spec(c);
  const auto rows = replicas_of(c, spec, statistic, opt);
  Sink sink(c.out, stdout_stream);
  *sink << c.header();
  write_replica_csv(*sink, statistic, rows, spec.dim);
}

void run_tail(Command& c, std::ostream& stdout_stream) {
  const FieldSpec spec = field_spec(c);
  const auto rows = replicas_of(c, spec, "max");
  std::vector<double> centered;
  centered.reserve(rows.size());
  for (const auto& r : rows) centered.push_back(r.values[1]);
  const EmpiricalDistribution ecdf(std::move(centered));
  const double n = static_cast<double>(ecdf.size());
  std::ostringstream body;
  body.precision(17);
  std::string summary;
  if (c.left) {
    body << "lambda,left_prob,log_left_prob,stderr_log\n";
    for (double lambda : c.lambdas) {
      const double p = ecdf.cdf(-lambda);
      body << lambda << ',' << p << ',' << (p > 0 ? std::log(p) : -HUGE_VAL) << ','
           << (p > 0 ? std::sqrt((1.0 - p) / (n * p)) : HUGE_VAL) << '\n';
    }
  } else {
    if (!(c.z_step > 0.0)) throw InputError("--z-step must be positive");
    body << "z,tail_prob,log_tail_over_z,count\n";
    for (int i = 0;; ++i) {
      const double z = c.z_lo + c.z_step * i;
      if (z > c.z_hi + 1e-12) break;
      const double p = 1.0 - ecdf.cdf(z);
      body << z << ',' << p << ',' << (p > 0 ? std::log(p / z) : -HUGE_VAL) << ','
           << static_cast<std::size_t>(std::lround(p * n)) << '\n';
    }
    const SlopeFit fit = tail_slope(ecdf, c.z_lo, c.z_hi, c.z_step);
    summary = "## slope=" + render_double(fit.slope) + " stderr=" + render_double(fit.stderr_slope) +
              " target=" + render_double(-std::sqrt(2.0 * spec.dim)) + "\n";
  }
  Sink sink(c.out, stdout_stream);
  *sink << c.header() << summary << body.str();
}

void run_loc(Command& c, std::ostream& stdout_stream) {
  const FieldSpec spec = field_spec(c);
  const FieldSampler sampler(spec);
  const ReplicaPlan plan{spec, c.replicas, c.seed};
  std::vector<NearMaxReport> reports(c.replicas);
  parallel_for(c.replicas, c.workers, [&](std::size_t i) {
    reports[i] = near_max_pairs(sampler.sample(plan.seed_of(i)), c.r, c.c, c.example_cap);
  });
  Sink sink(c.out, stdout_stream);
  *sink << c.header() << "replica,r,c,threshold,pair_count\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& rep = reports[i];
    *sink << i << ',' << rep.r << ',' << render_double(rep.c) << ',' << render_double(rep.threshold) << ','
          << rep.pair_count << '\n';
  }
}

void run_xi(Command& c, std::ostream& stdout_stream) {
  const XiParams p = xi_params(c);
  if (c.mode == "field") {
    Sink sink(c.out, stdout_stream, true);
    write_xi_binary(*sink, build_xi(p, c.seed));
    write_sidecar(c, c.out);
    return;
  }
  if (c.mode == "tail") {
    const auto rows = fine_right_tail(p, c.z_grid, c.replicas, c.seed, c.workers);
    std::string fit_line;
    try {
      const BetaFit fit = fit_beta_star(rows, c.z_grid.front(), c.z_grid.back());
      fit_line = "## beta_star_fit=" + render_double(fit.estimate) + " stderr=" + render_double(fit.stderr_estimate) + "\n";
    } catch (const InsufficientDataError&) {
      fit_line = "## beta_star_fit=unavailable\n";
    }
    Sink sink(c.out, stdout_stream);
    *sink << c.header() << fit_line << "z,p_hat,beta_hat,stderr,exceedances,samples,in_regime\n";
    for (const auto& r : rows) {
      *sink << render_double(r.z) << ',' << render_double(r.p_hat) << ',' << render_double(r.beta_hat) << ','
            << render_double(r.stderr_beta) << ',' << r.exceedances << ',' << r.samples << ','
            << (r.in_regime ? 1 : 0) << '\n';
    }
    return;
  }
  const XiModel model(p);
  const auto a = model.correction_scale();
  Json result{{"nbar", p.nbar()},
              {"lbar", p.lbar()},
              {"nstar", p.nstar()},
              {"box_side", p.box_side()},
              {"epsilon", model.epsilon()},
              {"continuity_deviation", model.continuity_deviation()},
              {"mbrw_variance", model.mbrw_variance()},
              {"correction_scale", std::vector<double>(a.begin(), a.end())}};
  Sink sink(c.out, stdout_stream);
  *sink << Json{{"header", c.json_header()}, {"result", result}}.dump(2) << '\n';
}

void run_barrier(Command& c, std::ostream& stdout_stream) {
  const XiParams p = xi_params(c);
  StatisticOptions opt;
  opt.z_grid = c.z_grid;
  opt.coarse_box = c.coarse_box;
  const auto rows = replicas_of(c, FieldSpec::xi_field(p), "barrier-counts", opt);
  {
    Sink sink(c.out, stdout_stream);
    *sink << c.header();
    write_replica_csv(*sink, "barrier-counts", rows, p.dim);
  }
  if (!c.backbones_out.empty()) {
    const auto recs = export_backbones(build_xi(p, replica_seed(c.seed, 0)), c.coarse_box);
    Sink sink(c.backbones_out, stdout_stream);
    *sink << c.header();
    for (int i = 0; i < p.dim; ++i) *sink << 'x' << i << ',';
    *sink << "local_max";
    for (int t = 0; t <= p.nstar(); ++t) *sink << ",X" << t;
    *sink << '\n';
    for (const auto& rec : recs) {
      for (int i = 0; i < p.dim; ++i) *sink << rec.corner[i] << ',';
      *sink << render_double(rec.local_max);
      for (double v : rec.x) *sink << ',' << render_double(v);
      *sink << '\n';
    }
  }
}

void run_gstar(Command& c, std::ostream& stdout_stream) {
  GStarParams g;
  g.k = c.k;
  g.l = c.l;
  g.dim = c.dim;
  g.beta_star = c.beta_star;
  g.coarse_family = family_from_string(c.coarse_family);
  g.coarse_w = c.coarse_w;
  if (std::isnan(c.gamma)) c.gamma = default_gamma(c.dim, g.kl_side());
  g.gamma = c.gamma;
  g.validate();
  const GStarSampler sampler(g);
  std::vector<GStarDraw> draws(c.replicas);
  parallel_for(c.replicas, c.workers,
               [&](std::size_t i) { draws[i] = sampler.sample(replica_seed(c.seed, i)); });
  Sink sink(c.out, stdout_stream);
  *sink << c.header() << "## p=" << render_double(g.p()) << '\n' << "replica,value,empty,active,zeta\n";
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& d = draws[i];
    *sink << i << ',' << render_double(d.value) << ',' << (d.empty ? 1 : 0) << ',' << d.active << ','
          << render_double(d.zeta) << '\n';
  }
}

void run_limit_compare(Command& c, std::ostream& stdout_stream) {
  if (c.empirical.empty() || c.z_file.empty()) throw InputError("limit-compare needs --empirical and --z-samples");
  const EmpiricalDistribution emp(read_column(c.empirical, c.column));
  GumbelMixture m;
  m.beta_star = c.beta_star;
  m.dim = c.dim;
  m.z_samples = EmpiricalDistribution(read_column(c.z_file, c.z_column));
  const LimitComparison cmp = compare_to_limit(emp, m);
  Sink sink(c.out, stdout_stream);
  *sink << Json{{"header", c.json_header()}, {"result", Json::parse(cmp.to_json())}}.dump(2) << '\n';
}

void run_clrem_w(Command& c, std::ostream& stdout_stream) {
  std::ostringstream body;
  body << "N,w_min,cholesky_at_w_plus_0.01\n";
  for (int side : c.sides) {
    const double w = find_minimal_w(side, c.tol);
    bool ok = true;
    try {
      (void)cholesky(clrem_matrix(side, w + 0.01));
    } catch (const NotPDError&) {
      ok = false;
    }
    body << side << ',' << render_double(w) << ',' << (ok ? 1 : 0) << '\n';
  }
  Sink sink(c.out, stdout_stream);
  *sink << c.header() << body.str();
}

void run_shift_check(Command& c, std::ostream& stdout_stream) {
  if (c.r1s.size() != c.r2s.size()) throw InputError("--r1 and --r2 need the same number of entries");
  const FieldSpec spec = field_spec(c);
  std::vector<BoxPerturbation> ps;
  for (std::size_t i = 0; i < c.r1s.size(); ++i) ps.push_back({c.r1s[i], c.r2s[i], c.sigma1, c.sigma2});
  const auto rows = shift_check(spec, ps, c.replicas, c.seed, c.workers);
  Sink sink(c.out, stdout_stream);
  *sink << c.header();
  write_shift_csv(*sink, rows);
}

// ---------------------------------------------------------------------------
// App assembly

class Tool {
 public:
  Tool() : app_("lcgf: samplers, oracles and extreme-value statistics for log-correlated Gaussian fields") {
    app_.set_version_flag("--version", LCGF_VERSION);
    app_.require_subcommand(1);
    app_.fallthrough();
    app_.set_config("--config", "", "Read settings from a file of [subcommand] blocks; command-line flags override them");

    auto& cov = add("cov", "Exact covariance queries and dense matrix export", run_cov);
    add_field(cov, kLatticeFamilies, false);
    cov.reg.option(cov.app, "--x", cov.x, "First lattice point, comma separated");
    cov.reg.option(cov.app, "--y", cov.y, "Second lattice point, comma separated");
    cov.reg.option(cov.app, "--k", cov.ck, "CLREM row index k");
    cov.reg.option(cov.app, "--l", cov.cl, "CLREM column index l");
    cov.reg.option(cov.app, "--matrix-out", cov.matrix_out, "Write the full covariance matrix of V_N here");
    add_output(cov, true);

    auto& sample = add("sample", "Draw one field and export it", run_sample);
    add_field(sample, kSampleFamilies, true);
    add_seed(sample);
    add_output(sample, true);

    auto& ca = add("check-assumptions", "Probe the log-correlation assumptions of a covariance oracle",
                   run_check_assumptions);
    add_field(ca, kLatticeFamilies, false);
    ca.reg.option(ca.app, "--pair-budget", ca.pair_budget, "Maximum number of probed pairs")
        ->check(CLI::PositiveNumber);
    ca.reg.option(ca.app, "--delta", ca.deltas, "Interior margins delta in [0, 1/2) for A.1");
    ca.reg.option(ca.app, "--probe-seed", ca.probe_seed, "Offset of the low-discrepancy pair sequence");
    ca.reg.flag(ca.app, "--fgh", ca.fgh, "Also fit f, g, h over --n-grid");
    ca.reg.option(ca.app, "--n-grid", ca.n_grid, "Ascending log2 sizes for the f/g/h fits");
    ca.reg.option(ca.app, "--l-max", ca.l_max, "Microscopic offsets range over {0..L}^d");
    ca.reg.option(ca.app, "--x-grid", ca.x_grid, "Macroscopic points in (0,1)^d, d coordinates each");
    add_output(ca, false);

    auto& ms = add("max-stats", "Maximum and centered maximum per replica",
                   [](Command& c, std::ostream& os) { run_statistic(c, os, "max"); });
    add_field(ms, kSampleFamilies, true);
    add_seed(ms);
    add_replicas(ms, 100);
    add_output(ms, false);

    auto& tail = add("tail", "Right-tail slope of the centered maximum, or left-tail probabilities", run_tail);
    add_field(tail, kSampleFamilies, true);
    add_seed(tail);
    add_replicas(tail, 1000);
    tail.reg.option(tail.app, "--z-lo", tail.z_lo, "Lower end of the z window");
    tail.reg.option(tail.app, "--z-hi", tail.z_hi, "Upper end of the z window");
    tail.reg.option(tail.app, "--z-step", tail.z_step, "Spacing of the z window");
    tail.reg.flag(tail.app, "--left", tail.left, "Report log P(M_N <= m_N - lambda) instead");
    tail.reg.option(tail.app, "--lambda", tail.lambdas, "Left-tail depths lambda");
    add_output(tail, false);

    auto& pairs = add("pairs", "Restricted-pair maximum per replica", [](Command& c, std::ostream& os) {
      StatisticOptions opt;
      opt.pair_r = c.r;
      run_statistic(c, os, "pair-max", opt);
    });
    add_field(pairs, kSampleFamilies, true);
    add_seed(pairs);
    add_replicas(pairs, 100);
    pairs.reg.option(pairs.app, "--r", pairs.r, "Annulus parameter: r <= |u-v| <= N/r");
    add_output(pairs, false);

    auto& loc = add("loc", "Count near-maximal pairs at mesoscopic separation", run_loc);
    add_field(loc, kSampleFamilies, true);
    add_seed(loc);
    add_replicas(loc, 100);
    loc.r = 4;
    loc.reg.option(loc.app, "--r", loc.r, "Annulus parameter: r < |u-v| < N/r, r >= 3");
    loc.reg.option(loc.app, "--c", loc.c, "Threshold m_N - c log log r");
    loc.reg.option(loc.app, "--example-cap", loc.example_cap, "Pairs kept as examples per replica");
    add_output(loc, false);

    auto& dmart = add("dmart", "Derivative martingale Z_N per replica",
                      [](Command& c, std::ostream& os) { run_statistic(c, os, "dmart"); });
    add_field(dmart, kSampleFamilies, true);
    add_seed(dmart);
    add_replicas(dmart, 100);
    add_output(dmart, false);

    auto& xi = add("xi", "Approximation field: model report, fine-field tail table or field export", run_xi);
    xi.dim = 2;
    xi.n = 6;
    xi.reg.option(xi.app, "-d,--dim", xi.dim, "Dimension d")->check(CLI::PositiveNumber);
    xi.reg.option(xi.app, "-n,--levels", xi.n, "log2 N");
    add_xi_scales(xi);
    xi.reg.option(xi.app, "--mode", xi.mode, "model: JSON report; tail: beta_hat table; field: binary export")
        ->check(CLI::IsMember({"model", "tail", "field"}));
    xi.z_grid = {1.0, 1.5, 2.0};
    xi.reg.option(xi.app, "--z-grid", xi.z_grid, "Heights z for --mode tail");
    add_seed(xi);
    add_replicas(xi, 100);
    add_output(xi, false);

    auto& barrier = add("barrier", "Barrier counts Lambda, Gamma and event G per replica", run_barrier);
    barrier.dim = 2;
    barrier.n = 6;
    barrier.reg.option(barrier.app, "-d,--dim", barrier.dim, "Dimension d")->check(CLI::PositiveNumber);
    barrier.reg.option(barrier.app, "-n,--levels", barrier.n, "log2 N");
    add_xi_scales(barrier);
    barrier.reg.option(barrier.app, "--z-grid", barrier.z_grid, "Barrier heights z >= 1");
    barrier.reg.option(barrier.app, "--coarse-box", barrier.coarse_box, "Coarse box whose corners are scanned");
    barrier.reg.option(barrier.app, "--backbones-out", barrier.backbones_out,
                       "Write the backbones of replica 0 to this CSV");
    add_seed(barrier);
    add_replicas(barrier, 100);
    add_output(barrier, false);

    auto& gs = add("gstar", "Draws of G* (Bernoulli, Y and coarse Z components)", run_gstar);
    gs.dim = 2;
    gs.reg.option(gs.app, "--k", gs.k, "log2 K");
    gs.reg.option(gs.app, "--l", gs.l, "log2 L");
    gs.reg.option(gs.app, "-d,--dim", gs.dim, "Dimension d")->check(CLI::PositiveNumber);
    gs.reg.option(gs.app, "--beta-star", gs.beta_star, "beta*");
    gs.reg.option(gs.app, "--gamma", gs.gamma, "gamma(KL); default max(1/sqrt(2d) + 0.1, log log log KL)");
    gs.reg.option(gs.app, "--coarse-family", gs.coarse_family, "Law of Z on V_KL")
        ->check(CLI::IsMember(kReferenceFamilies));
    gs.reg.option(gs.app, "--coarse-w", gs.coarse_w, "W when the coarse family is clrem");
    add_seed(gs);
    add_replicas(gs, 1000);
    add_output(gs, false);

    auto& lc = add("limit-compare", "Median-matched Levy distance to a Gumbel mixture", run_limit_compare);
    lc.dim = 2;
    lc.reg.option(lc.app, "--empirical", lc.empirical, "CSV holding the empirical sample");
    lc.reg.option(lc.app, "--column", lc.column, "Column of --empirical to read");
    lc.reg.option(lc.app, "--z-samples", lc.z_file, "CSV holding the mixing Z samples");
    lc.reg.option(lc.app, "--z-column", lc.z_column, "Column of --z-samples to read");
    lc.reg.option(lc.app, "--beta-star", lc.beta_star, "beta* of the mixture");
    lc.reg.option(lc.app, "-d,--dim", lc.dim, "Dimension d")->check(CLI::PositiveNumber);
    add_output(lc, false);

    auto& cw = add("clrem-w", "Smallest W making the CLREM matrix positive definite", run_clrem_w);
    cw.reg.option(cw.app, "-N,--side", cw.sides, "Sizes N");
    cw.reg.option(cw.app, "--tol", cw.tol, "Bisection tolerance")->check(CLI::PositiveNumber);
    add_output(cw, false);

    auto& sc = add("shift-check", "Mean max shift under two-scale box perturbations", run_shift_check);
    add_field(sc, kSampleFamilies, true);
    add_seed(sc);
    add_replicas(sc, 1000);
    sc.reg.option(sc.app, "--r1", sc.r1s, "Small-box sides r1");
    sc.reg.option(sc.app, "--r2", sc.r2s, "Large boxes have side N/r2");
    sc.reg.option(sc.app, "--sigma1", sc.sigma1, "Small-scale noise sigma1");
    sc.reg.option(sc.app, "--sigma2", sc.sigma2, "Large-scale noise sigma2");
    add_output(sc, false);

    for (auto& c : commands_) add_footer(*c);
  }

  int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    try {
      app_.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app_.exit(e, out, err);
      err << "error: " << e.what() << "\n\n" << app_.help();
      return static_cast<int>(ExitCode::kInput);
    }
    // A config file may carry blocks for other subcommands, so the command is
    // the first argument naming one.
    Command* cmd = nullptr;
    for (int i = 1; i < argc && !cmd; ++i) {
      for (auto& c : commands_) {
        if (c->name == argv[i]) cmd = c.get();
      }
    }
    try {
      cmd->body(*cmd, out);
      return 0;
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return static_cast<int>(ExitCode::kInput);
    }
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& c : commands_) out.push_back(c->name);
    return out;
  }

  CLI::App* find(const std::string& name) {
    if (name.empty()) return &app_;
    for (auto& c : commands_) {
      if (c->name == name) return c->app;
    }
    throw InputError("unknown subcommand " + name);
  }

 private:
  Command& add(const std::string& name, const std::string& desc,
               std::function<void(Command&, std::ostream&)> body) {
    auto c = std::make_unique<Command>();
    c->name = name;
    c->app = app_.add_subcommand(name, desc);
    c->body = std::move(body);
    commands_.push_back(std::move(c));
    return *commands_.back();
  }

  CLI::App app_;
  std::vector<std::unique_ptr<Command>> commands_;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Tool tool;
  return tool.run(argc, argv, out, err);
}

std::vector<std::string> subcommand_names() { return Tool().names(); }

std::string help_text(const std::string& name) {
  Tool tool;
  return tool.find(name)->help();
}

std::vector<OptionInfo> option_info(const std::string& name) {
  Tool tool;
  std::vector<OptionInfo> out;
  for (const CLI::Option* o : tool.find(name)->get_options()) {
    out.push_back({o->get_name(false, true), o->get_group(), o->get_description()});
  }
  return out;
}

}  // namespace lcgf::cli
