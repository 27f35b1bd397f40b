#include "dicke/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "dicke/chaos.hpp"
#include "dicke/errors.hpp"
#include "dicke/integrate.hpp"
#include "dicke/kickedtop.hpp"
#include "dicke/output.hpp"
#include "dicke/qdiff.hpp"
#include "dicke/shell.hpp"

namespace dicke::cli {

using nlohmann::json;

namespace {

enum class Kind { Real, Int, Seed, Text };

struct KeySpec {
  const char* name;
  Kind kind;
  const char* help;
};

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> keys = {
      {"seed", Kind::Seed, "master seed (mandatory)"},
      {"format", Kind::Text, "output format: csv, json or svg+csv"},
      {"gamma", Kind::Real, "coupling g/g_c"},
      {"nu", Kind::Real, "frequency ratio omega/omega0"},
      {"eps", Kind::Real, "energy in units of omega0"},
      {"delta_eps_rel", Kind::Real, "energy as eps0 + delta*|eps0| above the shell minimum"},
      {"j", Kind::Real, "spin size"},
      {"rtol", Kind::Real, "relative tolerance"},
      {"atol", Kind::Real, "absolute tolerance"},
      {"samples", Kind::Int, "sample count (events per trajectory, MC draws, cloud points)"},
      {"n_traj", Kind::Int, "number of trajectories"},
      {"psi0", Kind::Real, "section angle"},
      {"tau", Kind::Real, "kicked-top torsion"},
      {"p", Kind::Real, "kicked-top precession angle"},
      {"t_end", Kind::Real, "integration time"},
      {"sample_dt", Kind::Real, "output spacing"},
      {"t_max", Kind::Real, "integration cap per trajectory"},
      {"renorm_dt", Kind::Real, "Gram-Schmidt interval"},
      {"lyap_time", Kind::Real, "integration time of the Lyapunov estimate"},
      {"window_lyap", Kind::Real, "reported window in Lyapunov times"},
      {"conv_lyap", Kind::Real, "frame convergence time in Lyapunov times"},
      {"steps", Kind::Int, "number of kicks"},
      {"cap_radius", Kind::Real, "angular radius of the initial cap"},
      {"cap_z", Kind::Real, "cos(theta) of the cap centre"},
      {"cap_phi", Kind::Real, "azimuth of the cap centre"},
      {"lyap_steps", Kind::Int, "kicks used for the Lyapunov estimate"},
      {"var_steps", Kind::Int, "kicks of the stable-variance run"},
  };
  return keys;
}

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : key_specs()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

std::string flag_of(const std::string& key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

std::string file_stem(const std::string& command) {
  std::string s = command;
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

bool uses_regime(const std::string& command) { return command != "kicked-top"; }

/// Keys a command accepts beyond its defaults.
std::vector<std::string> optional_keys(const std::string& command) {
  std::vector<std::string> k = {"seed"};
  if (uses_regime(command)) {
    k.push_back("eps");
    k.push_back("delta_eps_rel");
  } else {
    k.push_back("cap_z");
    k.push_back("cap_phi");
  }
  return k;
}

bool accepts(const std::string& command, const std::string& key) {
  const json d = command_defaults(command);
  if (d.contains(key)) return true;
  const auto extra = optional_keys(command);
  return std::find(extra.begin(), extra.end(), key) != extra.end();
}

json normalise(const std::string& key, const json& v) {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError("unknown key '" + key + "'");
  switch (spec->kind) {
    case Kind::Text:
      if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
      return v;
    case Kind::Seed:
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
      throw ConfigError("'seed' must be a non-negative integer");
    case Kind::Int: {
      if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
      const double d = v.get<double>();
      if (!(d == std::floor(d)) || std::abs(d) > 9e15) throw ConfigError("'" + key + "' must be an integer");
      return static_cast<long long>(d);
    }
    case Kind::Real: {
      if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ConfigError("'" + key + "' must be finite");
      return d;
    }
  }
  return v;
}

void apply_layer(json& merged, const json& layer, const std::string& command, const char* origin) {
  if (layer.is_null()) return;
  if (!layer.is_object()) throw ConfigError(std::string(origin) + ": expected a JSON object");
  if (layer.contains("eps") && layer.contains("delta_eps_rel")) {
    throw ConfigError(std::string(origin) + ": give either eps or delta_eps_rel, not both");
  }
  for (const auto& [key, v] : layer.items()) {
    if (key == "command") {
      if (!v.is_string() || v.get<std::string>() != command) {
        throw ConfigError(std::string(origin) + ": command does not match '" + command + "'");
      }
      continue;
    }
    if (!find_key(key)) throw ConfigError(std::string(origin) + ": unknown key '" + key + "'");
    if (!accepts(command, key)) {
      throw ConfigError(std::string(origin) + ": key '" + key + "' does not apply to " + command);
    }
    if (key == "eps") merged.erase("delta_eps_rel");
    if (key == "delta_eps_rel") merged.erase("eps");
    merged[key] = normalise(key, v);
  }
}

void require_positive(const RunConfig& c, const char* key) {
  if (c.has(key) && !(c.real(key) > 0)) throw ConfigError(std::string("'") + key + "' must be positive");
}

void require_count(const RunConfig& c, const char* key, long long lo) {
  if (c.has(key) && c.integer(key) < lo) {
    throw ConfigError(std::string("'") + key + "' must be at least " + std::to_string(lo));
  }
}

void validate(const RunConfig& c) {
  const std::string f = c.format;
  if (f != "csv" && f != "json" && f != "svg+csv") throw ConfigError("format must be csv, json or svg+csv");
  for (const char* k : {"nu", "j", "rtol", "atol", "t_end", "sample_dt", "t_max", "renorm_dt", "lyap_time",
                        "window_lyap", "conv_lyap", "cap_radius"}) {
    require_positive(c, k);
  }
  if (c.has("gamma") && c.real("gamma") < 0) throw ConfigError("'gamma' must be non-negative");
  if (c.has("rtol") && c.real("rtol") >= 0.1) throw ConfigError("'rtol' must be below 0.1");
  for (const char* k : {"samples", "n_traj", "steps", "lyap_steps", "var_steps"}) require_count(c, k, 1);
  if (c.has("cap_z") && std::abs(c.real("cap_z")) > 1) throw ConfigError("'cap_z' must lie in [-1, 1]");
  if (c.has("cap_radius") && c.real("cap_radius") > std::numbers::pi) {
    throw ConfigError("'cap_radius' must not exceed pi");
  }
}

// ---- results ------------------------------------------------------------

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row) { rows.push_back(std::move(row)); }
};

struct Result {
  std::vector<Table> tables;
  json doc;  // null for purely tabular commands
  std::vector<std::pair<std::string, std::string>> svgs;
  std::vector<std::pair<std::string, std::string>> extras;
  int code = kExitOk;

  void note(const std::string& k, double v) { extras.emplace_back(k, out::format_double(v)); }
  void note(const std::string& k, const std::string& v) { extras.emplace_back(k, v); }
};

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string cell_text(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return out::format_double(v.get<double>());
}

json config_echo(const RunConfig& cfg) {
  json c = cfg.values;
  c["command"] = cfg.command;
  c["format"] = cfg.format;
  return c;
}

std::vector<std::pair<std::filesystem::path, std::string>> render(const RunConfig& cfg, const Result& r) {
  out::RunMeta meta;
  meta.command = cfg.command;
  meta.config = config_echo(cfg);
  meta.seed = cfg.seed();
  meta.extra = r.extras;

  std::vector<std::pair<std::filesystem::path, std::string>> files;
  if (cfg.format == "json") {
    json j;
    j["meta"] = meta.as_json();
    if (!r.doc.is_null()) j["result"] = r.doc;
    if (r.doc.is_null()) {
      json tables = json::object();
      for (const auto& t : r.tables) tables[t.name] = {{"columns", t.header}, {"rows", t.rows}};
      j["tables"] = tables;
    }
    files.emplace_back(cfg.out_dir / (file_stem(cfg.command) + ".json"), j.dump(2) + "\n");
    return files;
  }
  for (const auto& t : r.tables) {
    out::CsvWriter w(meta, t.header);
    for (const auto& row : t.rows) {
      std::vector<std::string> cells;
      cells.reserve(row.size());
      for (const auto& v : row) cells.push_back(cell_text(v));
      w.row(cells);
    }
    files.emplace_back(cfg.out_dir / (t.name + ".csv"), w.text());
  }
  if (cfg.format == "svg+csv") {
    for (const auto& [name, text] : r.svgs) files.emplace_back(cfg.out_dir / name, text);
  }
  return files;
}

// ---- shared setup ---------------------------------------------------------

ModelParams model_of(const RunConfig& c) {
  return ModelParams::dimensionless(c.real("nu"), c.real("gamma"), c.real("j"));
}

double eps_of(const RunConfig& c, const ModelParams& p) {
  if (c.has("eps")) return c.real("eps");
  const double e0 = shell_minimum(p);
  return e0 + c.real("delta_eps_rel") * std::abs(e0);
}

IntegrationOptions integration_of(const RunConfig& c) {
  IntegrationOptions o;
  o.rtol = c.real("rtol");
  o.atol = c.real("atol");
  if (c.has("sample_dt")) o.sample_dt = c.real("sample_dt");
  return o;
}

std::vector<double> normalised(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) {
    if (std::isfinite(x)) m = std::max(m, std::abs(x));
  }
  std::vector<double> r(v);
  if (m > 0) {
    for (double& x : r) x /= m;
  }
  return r;
}

// ---- commands -------------------------------------------------------------

Result cmd_trajectory(const RunConfig& c, std::ostream& err) {
  const ModelParams p = model_of(c);
  const double eps = eps_of(c, p);
  const CanonicalState s0 = sample_on_shell(eps, p, c.seed());
  const Trajectory tr = integrate(s0, p, c.real("t_end"), integration_of(c));

  Result r;
  Table t{"trajectory", {"t", "I", "psi_wrapped", "c", "phi", "lx", "ly", "lz", "eps"}, {}};
  out::SvgSeries I_t, path;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const CanonicalState& s = tr.states[k];
    const BlochVector l = bloch_of(tr.points[k]);
    t.add({tr.times[k], s.I(), s.psi(), s.c(), s.phi(), l.lx, l.ly, l.lz, tr.energies[k]});
    I_t.x.push_back(tr.times[k]);
    I_t.y.push_back(s.I());
    path.x.push_back(l.lx);
    path.y.push_back(l.ly);
  }
  r.tables.push_back(std::move(t));
  r.note("eps", eps);
  r.note("energy_drift", tr.energy_drift);
  r.note("status", tr.ok() ? "ok" : "step_failure");
  r.svgs.emplace_back("trajectory_I.svg", out::svg_lines({I_t}, "I(t)"));
  r.svgs.emplace_back("trajectory_bloch.svg",
                      out::svg_scatter({path}, -1.05, 1.05, -1.05, 1.05, "Bloch path (lx, ly)", true));
  if (!tr.ok()) {
    err << "trajectory: integration stopped early: " << tr.diagnostic << "\n";
    r.code = kExitPartial;
  }
  return r;
}

Result cmd_poincare(const RunConfig& c, std::ostream& err) {
  const ModelParams p = model_of(c);
  const double eps = eps_of(c, p);
  PoincareOptions po;
  po.t_max = c.real("t_max");
  po.integration = integration_of(c);
  const PoincareScan scan = poincare_scan(eps, p, static_cast<int>(c.integer("n_traj")),
                                          static_cast<int>(c.integer("samples")), c.real("psi0"), c.seed(), po);
  const std::vector<double> cover = coverage_fractions(scan);

  Result r;
  Table summary{"poincare_summary",
                {"track", "points", "thin_curve", "coverage", "t_reached", "energy_drift", "status"},
                {}};
  std::vector<out::SvgSeries> series;
  double drift = 0;
  for (std::size_t k = 0; k < scan.tracks.size(); ++k) {
    const PoincareTrack& tk = scan.tracks[k];
    char name[32];
    std::snprintf(name, sizeof name, "poincare_track_%02zu", k);
    Table t{name, {"lx", "ly", "hemisphere"}, {}};
    out::SvgSeries s;
    s.color = out::palette(k);
    for (const auto& pt : tk.points) {
      t.add({pt.lx, pt.ly, pt.north ? "north" : "south"});
      s.x.push_back(pt.lx);
      s.y.push_back(pt.ly);
    }
    r.tables.push_back(std::move(t));
    series.push_back(std::move(s));
    const double thin = tk.points.size() > 8 ? thin_curve_metric(tk.points) : std::nan("");
    const bool ok = tk.status == RunStatus::Ok;
    summary.add({static_cast<long long>(k), static_cast<long long>(tk.points.size()), finite_or_null(thin),
                 cover[k], tk.t_reached, tk.energy_drift, ok ? "ok" : "step_failure"});
    drift = std::max(drift, tk.energy_drift);
    if (!ok) {
      err << "poincare: track " << k << " stopped early: " << tk.diagnostic << "\n";
      r.code = kExitPartial;
    }
  }
  r.tables.push_back(std::move(summary));
  r.note("eps", eps);
  r.note("energy_drift", drift);
  r.svgs.emplace_back("poincare.svg",
                      out::svg_scatter(series, -1.05, 1.05, -1.05, 1.05, "Poincare section (lx, ly)", true));
  return r;
}

Result cmd_lyapunov(const RunConfig& c, std::ostream&) {
  const ModelParams p = model_of(c);
  const double eps = eps_of(c, p);
  const CanonicalState s0 = sample_on_shell(eps, p, c.seed());
  LyapunovOptions lo;
  lo.renorm_dt = c.real("renorm_dt");
  lo.tangent_seed = c.seed();
  lo.integration = integration_of(c);
  const LyapunovSpectrum L = lyapunov_spectrum(s0, p, c.real("t_end"), lo);

  Result r;
  Table h{"lyapunov_history", {"t", "lambda_max"}, {}};
  out::SvgSeries s;
  for (std::size_t k = 0; k < L.history.size(); ++k) {
    h.add({L.history_times[k], L.history[k]});
    s.x.push_back(L.history_times[k]);
    s.y.push_back(L.history[k]);
  }
  r.tables.push_back(std::move(h));
  r.doc = {{"eps", eps},
           {"initial_state", {{"I", s0.I()}, {"psi", s0.psi()}, {"c", s0.c()}, {"phi", s0.phi()}}},
           {"exponents", L.exponents},
           {"lambda_max", L.max()},
           {"sum", L.sum()},
           {"t_total", L.t_total},
           {"energy_drift", L.energy_drift},
           {"history_times", L.history_times},
           {"history", L.history}};
  r.note("eps", eps);
  r.note("energy_drift", L.energy_drift);
  r.svgs.emplace_back("lyapunov.svg", out::svg_lines({s}, "running lambda_max"));
  return r;
}

Result cmd_diffusion(const RunConfig& c, std::ostream& log) {
  const ModelParams p = model_of(c);
  const double eps = eps_of(c, p);
  const CanonicalState s0 = sample_on_shell(eps, p, c.seed());
  LyapunovOptions lo;
  lo.tangent_seed = c.seed();
  lo.integration.rtol = c.real("rtol");
  lo.integration.atol = c.real("atol");
  const LyapunovSpectrum L = lyapunov_spectrum(s0, p, c.real("lyap_time"), lo);
  const double lambda = L.max();
  if (!(lambda > 1e-3)) throw NonConvergenceError("diffusion: no positive Lyapunov exponent at this energy");

  const double t_conv = c.real("conv_lyap") / lambda;
  const double window = c.real("window_lyap") / lambda;
  IntegrationOptions o = integration_of(c);
  o.keep_dense = true;
  o.sample_dt = std::min(0.05 / lambda, 0.01);
  const Trajectory tr = integrate(s0, p, window + 2 * t_conv, o);
  tr.require_ok();
  FrameOptions fo;
  fo.rtol = c.real("rtol");
  fo.atol = c.real("atol");
  fo.seed = c.seed();
  const CovariantFrame frame = covariant_frame(tr, p, t_conv, fo);
  const ReducedDiffusion rq = dss_series(frame, p, QuasiprobKind::Q);
  const double var0 = 1.0 / (2.0 * p.j());
  const VarianceSeries vq = stable_variance(rq, lambda, var0);
  const NegativityResult neg = p_function_negativity(frame, p, lambda, var0);

  Result r;
  Table t{"diffusion", {"t", "D_ss", "var_Q", "var_P", "cos_psi"}, {}};
  long positive = 0;
  double mean_d = 0, var_min = vq.var.front(), plateau = 0;
  for (std::size_t k = 0; k < rq.times.size(); ++k) {
    t.add({rq.times[k], rq.dss[k], vq.var[k], neg.series.var[k], rq.cos_psi[k]});
    positive += rq.dss[k] > 0;
    mean_d += rq.dss[k];
    var_min = std::min(var_min, vq.var[k]);
  }
  const std::size_t n = rq.times.size();
  mean_d /= static_cast<double>(n);
  for (std::size_t k = n / 2; k < n; ++k) plateau += vq.var[k];
  plateau /= static_cast<double>(n - n / 2);

  r.tables.push_back(std::move(t));
  r.note("eps", eps);
  r.note("lambda", lambda);
  r.note("t_conv", t_conv);
  r.note("energy_drift", tr.energy_drift);
  r.note("seed_angle", frame.seed_angle);
  r.note("dss_positive_fraction", static_cast<double>(positive) / static_cast<double>(n));
  r.note("var_Q_min", var_min);
  r.note("var_Q_plateau", plateau);
  r.note("plateau_reference", mean_d / lambda);
  r.note("var_P_first_negative", neg.first_negative_time ? out::format_double(*neg.first_negative_time) : "none");

  out::SvgSeries a{rq.times, normalised(rq.dss), out::palette(0)};
  out::SvgSeries b{rq.times, normalised(vq.var), out::palette(1)};
  out::SvgSeries d{rq.times, normalised(neg.series.var), out::palette(2)};
  out::SvgSeries e{rq.times, rq.cos_psi, out::palette(7)};
  r.svgs.emplace_back("diffusion.svg", out::svg_lines({e, a, b, d}, "D_ss, var_Q, var_P (scaled) and cos psi"));
  log << "diffusion: lambda " << out::format_double(lambda) << ", " << n << " samples\n";
  return r;
}

Result cmd_moments(const RunConfig& c, std::ostream&) {
  const ModelParams p = model_of(c);
  const double eps = eps_of(c, p);
  const long n = static_cast<long>(c.integer("samples"));
  Result r;
  Table t{"moments", {"quantity", "estimate", "std_error", "closed_form", "z_score"}, {}};
  json moments = json::array();
  for (int m = 1; m <= 2; ++m) {
    const MomentEstimate est = microcanonical_moment(m, eps, p, n, c.seed());
    const double closed = moment_closed(m, eps, p);
    const double z = (est.estimate - closed) / est.std_error;
    moments.push_back({{"order", m},
                       {"estimate", est.estimate},
                       {"std_error", est.std_error},
                       {"closed_form", closed},
                       {"z_score", z},
                       {"n_samples", est.n_samples},
                       {"effective_samples", est.effective_samples}});
    t.add({"M" + std::to_string(m), est.estimate, est.std_error, closed, z});
  }
  const VarianceEstimate v = microcanonical_variance(eps, p, n, c.seed());
  const PhotonStats closed = photon_mean_variance_closed(eps, p);
  const double zv = (v.estimate - closed.variance) / v.std_error;
  t.add({"variance", v.estimate, v.std_error, closed.variance, zv});
  r.tables.push_back(std::move(t));
  r.doc = {{"eps", eps},
           {"moments", moments},
           {"variance",
            {{"estimate", v.estimate}, {"std_error", v.std_error}, {"closed_form", closed.variance}, {"z_score", zv}}},
           {"photon_number",
            {{"mean", p.j() * closed.mean},
             {"variance", p.j() * p.j() * closed.variance},
             {"variance_physical_form", p.j() * p.j() * photon_variance_physical(eps, p)}}}};
  r.note("eps", eps);
  return r;
}

Result cmd_bounds(const RunConfig& c, std::ostream&) {
  const ModelParams p = model_of(c);
  const double eps = eps_of(c, p);
  Result r;
  Table t{"bounds", {"method", "I_min", "I_max"}, {}};
  json doc = {{"eps", eps}, {"shell_minimum", shell_minimum(p)}};
  std::optional<ActionBounds> search;
  for (BoundsMethod m : {BoundsMethod::Trivial, BoundsMethod::BoundarySearch, BoundsMethod::Asymptotic}) {
    if (m == BoundsMethod::Asymptotic && !(eps > 1)) {
      doc[to_string(m)] = nullptr;
      t.add({to_string(m), nullptr, nullptr});
      continue;
    }
    const ActionBounds b = action_bounds(eps, p, m);
    if (m == BoundsMethod::BoundarySearch) search = b;
    doc[to_string(m)] = {{"I_min", b.I_min}, {"I_max", b.I_max}};
    t.add({to_string(m), b.I_min, b.I_max});
    if (m == BoundsMethod::Asymptotic && search) {
      doc["asymptotic_relative_difference"] = {
          {"I_min", std::abs(b.I_min - search->I_min) / std::abs(search->I_min)},
          {"I_max", std::abs(b.I_max - search->I_max) / std::abs(search->I_max)}};
    }
  }
  r.tables.push_back(std::move(t));
  r.doc = std::move(doc);
  r.note("eps", eps);
  return r;
}

Result cmd_kickedtop(const RunConfig& c, std::ostream&) {
  TopParams tp;
  tp.p = c.real("p");
  tp.tau = c.real("tau");
  tp.j = c.real("j");
  tp.validate();
  Rng rng(c.seed(), 0);
  const double z = c.has("cap_z") ? c.real("cap_z") : rng.uniform(-0.8, 0.8);
  const double phi = c.has("cap_phi") ? c.real("cap_phi") : rng.uniform(0.0, kTwoPi);
  const BlochVector centre = bloch_from_canonical(z, phi);
  const auto n = static_cast<std::size_t>(c.integer("samples"));
  const SphereCloud cloud = cap_cloud(centre, c.real("cap_radius"), n, c.seed());
  const std::vector<CloudMetrics> metrics = top_equilibration(cloud, tp, c.integer("steps"));
  const double threshold = 5.0 / std::sqrt(static_cast<double>(n));
  const TopLyapunov ly = top_lyapunov(centre, tp, c.integer("lyap_steps"));
  const double var0 = 1.0 / (2.0 * tp.j);
  const TopVarianceRun vr = top_variance_run(centre, tp, c.integer("var_steps"), ly.lambda, var0);

  double det_dev = 0;
  BlochVector l = centre;
  for (int k = 0; k < 1000; ++k) {
    det_dev = std::max(det_dev, std::abs(tangent_determinant(l, tp) - 1.0));
    l = top_map(l, tp);
  }

  Result r;
  Table t{"kicked_top", {"step", "max_abs_ylm", "occupancy", "lz_occupancy"}, {}};
  for (int ll = 1; ll <= 4; ++ll) {
    for (int m = -ll; m <= ll; ++m) t.header.push_back("Y_" + std::to_string(ll) + "_" + std::to_string(m));
  }
  out::SvgSeries ys;
  for (const auto& cm : metrics) {
    std::vector<json> row = {static_cast<long long>(cm.step), cm.max_abs_ylm, cm.occupancy, cm.lz_occupancy};
    for (double y : cm.ylm) row.emplace_back(y);
    t.add(std::move(row));
    ys.x.push_back(static_cast<double>(cm.step));
    ys.y.push_back(std::log10(std::max(cm.max_abs_ylm, 1e-300)));
  }
  Table v{"kicked_top_variance", {"step", "D_ss", "var"}, {}};
  out::SvgSeries vs;
  for (std::size_t k = 0; k < vr.var.size(); ++k) {
    v.add({static_cast<long long>(k), k < vr.dss.size() ? json(vr.dss[k]) : json(nullptr), vr.var[k]});
    vs.x.push_back(static_cast<double>(k));
    vs.y.push_back(vr.var[k]);
  }
  r.tables.push_back(std::move(t));
  r.tables.push_back(std::move(v));
  r.note("cap_centre", "z=" + out::format_double(z) + " phi=" + out::format_double(phi));
  r.note("lambda", ly.lambda);
  r.note("lambda2", ly.lambda2);
  r.note("equilibration_threshold", threshold);
  r.note("equilibration_time", equilibration_time(metrics, threshold));
  r.note("tangent_determinant_deviation", det_dev);
  r.svgs.emplace_back("kicked_top.svg", out::svg_lines({ys}, "log10 max |<Y_lm>| per kick"));
  r.svgs.emplace_back("kicked_top_variance.svg", out::svg_lines({vs}, "stable-direction variance per kick"));
  return r;
}

// ---- argument parsing -----------------------------------------------------

struct FlagStore {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;
  std::map<std::string, std::optional<double>> reals;
  std::map<std::string, std::optional<long long>> ints;

  json as_json() const {
    json j = json::object();
    if (seed) j["seed"] = *seed;
    if (format) j["format"] = *format;
    for (const auto& [k, v] : reals) {
      if (v) j[k] = *v;
    }
    for (const auto& [k, v] : ints) {
      if (v) j[k] = *v;
    }
    return j;
  }
};

const char* describe(const std::string& command) {
  if (command == "trajectory") return "integrate one on-shell trajectory";
  if (command == "poincare") return "Poincare section of several on-shell trajectories";
  if (command == "lyapunov") return "Lyapunov spectrum of one trajectory";
  if (command == "diffusion") return "projected quantum diffusion along a chaotic trajectory";
  if (command == "moments") return "microcanonical photon-number moments";
  if (command == "bounds") return "bounds on the action I on the energy shell";
  return "kicked-top equilibration and stable-direction variance";
}

}  // namespace

// ---- public -----------------------------------------------------------------

double RunConfig::real(const std::string& key) const { return values.at(key).get<double>(); }

long long RunConfig::integer(const std::string& key) const { return values.at(key).get<long long>(); }

std::uint64_t RunConfig::seed() const { return values.at("seed").get<std::uint64_t>(); }

std::vector<std::string> command_names() {
  return {"trajectory", "poincare", "lyapunov", "diffusion", "moments", "bounds", "kicked-top"};
}

json command_defaults(const std::string& command) {
  if (command == "trajectory") {
    return {{"format", "csv"}, {"gamma", 3.0},  {"nu", 1.0},      {"eps", 150.0},     {"j", 1000.0},
            {"rtol", 1e-10},   {"atol", 1e-12}, {"t_end", 100.0}, {"sample_dt", 0.1}};
  }
  if (command == "poincare") {
    return {{"format", "csv"}, {"gamma", 1.5}, {"nu", 1.0},    {"delta_eps_rel", 0.2}, {"j", 1000.0}, {"rtol", 1e-9},
            {"atol", 1e-11},   {"n_traj", 9},  {"samples", 500}, {"psi0", 0.0},        {"t_max", 5000.0}};
  }
  if (command == "lyapunov") {
    return {{"format", "json"}, {"gamma", 3.0},  {"nu", 1.0},       {"eps", 150.0},    {"j", 1000.0},
            {"rtol", 1e-9},     {"atol", 1e-11}, {"t_end", 1000.0}, {"renorm_dt", 1.0}};
  }
  if (command == "diffusion") {
    return {{"format", "csv"},    {"gamma", 1.1},        {"nu", 1.0},         {"eps", 250.0},
            {"j", 1000.0},        {"rtol", 1e-10},       {"atol", 1e-12},     {"lyap_time", 3000.0},
            {"window_lyap", 20.0}, {"conv_lyap", 30.0}};
  }
  if (command == "moments") {
    return {{"format", "json"}, {"gamma", 1.5}, {"nu", 1.0}, {"eps", 10.0}, {"j", 1000.0}, {"samples", 1000000}};
  }
  if (command == "bounds") {
    return {{"format", "json"}, {"gamma", 1.5}, {"nu", 1.0}, {"eps", 100.0}, {"j", 1000.0}};
  }
  if (command == "kicked-top") {
    return {{"format", "csv"},          {"tau", 10.0},        {"p", std::numbers::pi / 2}, {"j", 1000.0},
            {"samples", 10000},         {"steps", 30},        {"cap_radius", 0.05},        {"lyap_steps", 100000},
            {"var_steps", 1000}};
  }
  throw ConfigError("unknown command '" + command + "'");
}

RunConfig resolve_config(const std::string& command, const json& file, const json& flags) {
  json merged = command_defaults(command);
  for (auto& [k, v] : merged.items()) v = normalise(k, v);
  apply_layer(merged, file, command, "config file");
  apply_layer(merged, flags, command, "command line");
  if (!merged.contains("seed")) throw ConfigError("a master seed is required (--seed or \"seed\" in the config)");

  RunConfig cfg;
  cfg.command = command;
  cfg.format = merged.at("format").get<std::string>();
  merged.erase("format");
  cfg.values = std::move(merged);
  validate(cfg);
  return cfg;
}

int execute(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  Result r;
  try {
    const std::string& c = cfg.command;
    if (c == "trajectory") r = cmd_trajectory(cfg, err);
    else if (c == "poincare") r = cmd_poincare(cfg, err);
    else if (c == "lyapunov") r = cmd_lyapunov(cfg, err);
    else if (c == "diffusion") r = cmd_diffusion(cfg, log);
    else if (c == "moments") r = cmd_moments(cfg, err);
    else if (c == "bounds") r = cmd_bounds(cfg, err);
    else r = cmd_kickedtop(cfg, err);
  } catch (const NonConvergenceError& e) {
    err << cfg.command << ": " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const DomainError& e) {
    err << cfg.command << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const EmptyShellError& e) {
    err << cfg.command << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << cfg.command << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << cfg.command << ": " << e.what() << "\n";
    return kExitPartial;
  }
  try {
    for (const auto& [path, text] : render(cfg, r)) {
      out::write_file(path, text);
      log << "wrote " << path.string() << "\n";
    }
  } catch (const std::exception& e) {
    err << cfg.command << ": " << e.what() << "\n";
    return kExitPartial;
  }
  return r.code;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semiclassical Dicke model and kicked-top simulations", "dicke"};
  app.set_version_flag("--version", std::string(out::kVersion));
  app.require_subcommand(1);

  std::map<std::string, FlagStore> stores;
  for (const std::string& name : command_names()) {
    FlagStore& st = stores[name];
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", st.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", st.out, "output directory");
    sub->add_option("--seed", st.seed, "master seed (mandatory)");
    sub->add_option("--format", st.format, "csv, json or svg+csv")
        ->check(CLI::IsMember({"csv", "json", "svg+csv"}));
    for (const auto& spec : key_specs()) {
      if (spec.kind == Kind::Seed || spec.kind == Kind::Text || !accepts(name, spec.name)) continue;
      if (spec.kind == Kind::Real) {
        sub->add_option(flag_of(spec.name), st.reals[spec.name], spec.help);
      } else {
        sub->add_option(flag_of(spec.name), st.ints[spec.name], spec.help);
      }
    }
  }

  std::vector<std::string> argv_store = {"dicke"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  std::string command;
  for (CLI::App* sub : app.get_subcommands()) command = sub->get_name();
  const FlagStore& st = stores.at(command);

  RunConfig cfg;
  try {
    json file = nullptr;
    if (!st.config.empty()) {
      std::ifstream f(st.config);
      try {
        file = json::parse(f);
      } catch (const json::exception& e) {
        throw ConfigError(st.config + ": " + e.what());
      }
    }
    cfg = resolve_config(command, file, st.as_json());
    cfg.out_dir = st.out.empty() ? std::filesystem::path(".") : std::filesystem::path(st.out);
  } catch (const ConfigError& e) {
    err << "dicke " << command << ": " << e.what() << "\n";
    return kExitConfig;
  }
  return execute(cfg, out, err);
}

}  // namespace dicke::cli
