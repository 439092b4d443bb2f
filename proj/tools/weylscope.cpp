// Command-line driver: resolves a model and the numeric knobs, dispatches to
// the library, and leaves plot-ready CSV/JSON artifacts plus a manifest in
// the output directory. All library failures surface as one machine-readable
// error JSON and a taxonomy-mapped exit code.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "weylscope/cache.hpp"
#include "weylscope/geometry.hpp"
#include "weylscope/gridfield.hpp"
#include "weylscope/hamflow.hpp"
#include "weylscope/parametrix.hpp"
#include "weylscope/schrodinger.hpp"
#include "weylscope/selfcheck.hpp"
#include "weylscope/smoothing.hpp"
#include "weylscope/spectrum.hpp"
#include "weylscope/wavefront.hpp"
#include "weylscope/wavetrace.hpp"

namespace ws = weylscope;
using nlohmann::json;
using ws::cplx;
using ws::kPi;
using ws::kTwoPi;
using ws::VecN;

namespace {

constexpr const char* kVersion = "1.0.0";

// Single versioned defaults record. The resolved values for a run are echoed
// into the manifest, and this block is written next to it as defaults.json,
// so every artifact names both what was asked and what the baseline was.
constexpr const char* kDefaultsJson = R"JSON({
  "defaults_version": 1,
  "spectrum":    {"model": "torus-2pi", "lambda_max": 60.0},
  "weyl":        {"model": "torus-2pi", "lambda_max": 200.0, "grid": 256},
  "trace":       {"model": "torus-2pi", "Lambda": 30.0, "lambda_max": "4 * Lambda",
                  "window": [0.5, 15.0], "grid": 4096, "tol": 5.0},
  "geodesics":   {"model": "torus-2pi", "length_max": 15.0},
  "dg-check":    {"model": "prolate", "lambda_max": 120.0, "Lambda": 100.0, "delta": 0.5},
  "schrodinger": {"grid": 32, "seed": 1, "time": 1.0},
  "wavefront":   {"grid": 256, "time": 0.5},
  "parametrix":  {"model": "plane", "grid": 128, "seed": 7,
                  "table_nx": 32, "angles": 48, "time_levels": 5},
  "conventions": {
    "density_normalization": "smoothed counting density uses a unit-mass kernel",
    "trace_convention": "S(t) = sum_j mult_j w(lambda_j / Lambda) exp(-i t lambda_j)"
  }
})JSON";

int exit_code_for(ws::ErrorKind k) {
  switch (k) {
    case ws::ErrorKind::Config:
    case ws::ErrorKind::OutOfChart:
    case ws::ErrorKind::Io:
      return 2;
    case ws::ErrorKind::Internal:
      return 4;
    default:
      return 3;
  }
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Run {
  std::string command;
  std::string out_dir = "out";
  json config;  // resolved numeric configuration, echoed into the manifest
  json headline;
  std::vector<std::pair<std::string, std::string>> files;  // name -> role

  std::filesystem::path path(const std::string& name) const {
    return std::filesystem::path(out_dir) / name;
  }

  std::ofstream open(const std::string& name, const std::string& role) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(path(name));
    ws::require(f.good(), ws::ErrorKind::Io, "cannot open " + path(name).string());
    files.emplace_back(name, role);
    return f;
  }
};

void write_manifest(Run& run, double wall_seconds) {
  json m;
  m["command"] = run.command;
  m["config"] = run.config;
  m["headline"] = run.headline;
  m["wall_seconds"] = wall_seconds;
  m["versions"] = {{"weylscope", kVersion},
                   {"defaults_version", json::parse(kDefaultsJson)["defaults_version"]},
                   {"compiler", __VERSION__}};
  m["conventions"] = json::parse(kDefaultsJson)["conventions"];
  json fl = json::array();
  for (const auto& [name, role] : run.files) fl.push_back({{"file", name}, {"role", role}});
  m["artifacts"] = fl;

  auto f = run.open("defaults.json", "versioned defaults the flags override");
  f << json::parse(kDefaultsJson).dump(2) << "\n";
  f.close();
  run.files.pop_back();

  std::ofstream mf(run.path("manifest.json"));
  ws::require(mf.good(), ws::ErrorKind::Io, "cannot open " + run.path("manifest.json").string());
  mf << m.dump(2) << "\n";
}

// Model descriptors are accepted as preset names or JSON files. File content
// is schema-checked here so a typo in a key fails loudly instead of falling
// back to a default.
ws::geometry::ManifoldModel resolve_model(const std::string& spec, json& echo) {
  if (!std::filesystem::exists(spec)) {
    ws::geometry::ManifoldModel m = ws::geometry::ManifoldModel::preset(spec);
    echo = json::parse(m.descriptor());
    return m;
  }
  std::ifstream f(spec);
  ws::require(f.good(), ws::ErrorKind::Io, "cannot read model file " + spec);
  std::stringstream ss;
  ss << f.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  ws::require(!j.is_discarded() && j.is_object(), ws::ErrorKind::Config,
              "model file is not a JSON object: " + spec);
  ws::require(j.contains("kind") && j["kind"].is_string(), ws::ErrorKind::Config,
              "model file lacks a string 'kind'");
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"flat_torus", {"kind", "lattice"}},
      {"sphere2", {"kind", "radius"}},
      {"revolution", {"kind", "profile"}},
      {"perturbed_plane", {"kind", "eps"}},
  };
  auto it = allowed.find(j["kind"].get<std::string>());
  ws::require(it != allowed.end(), ws::ErrorKind::Config,
              "unknown model kind '" + j["kind"].get<std::string>() + "'");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    ws::require(it->second.count(key) > 0, ws::ErrorKind::Config,
                "unknown key '" + key + "' in model file " + spec);
  }
  ws::geometry::ManifoldModel m = ws::geometry::ManifoldModel::from_descriptor(ss.str());
  echo = json::parse(m.descriptor());
  return m;
}

json geodesic_json(const ws::hamflow::ClosedGeodesic& g) {
  json j;
  j["length"] = g.length;
  j["multiplicity"] = g.multiplicity;
  j["note"] = g.note;
  if (g.has_monodromy) {
    j["dP"] = {{g.dP(0, 0), g.dP(0, 1)}, {g.dP(1, 0), g.dP(1, 1)}};
    j["det_factor"] = g.det_factor;
    j["det_residual"] = g.det_residual;
    j["conj_count"] = g.conj_count;
  }
  return j;
}

// ---- subcommands ----

void cmd_spectrum(Run& run, const std::string& model, double lambda_max) {
  json mecho;
  auto m = resolve_model(model, mecho);
  run.config["model"] = mecho;
  run.config["lambda_max"] = lambda_max;
  auto table = ws::cache::load_or_compute(m, lambda_max);
  auto f = run.open("spectrum.csv", "distinct frequencies and multiplicities");
  f << "lambda,mult\n";
  for (const auto& e : table.entries) f << g17(e.lambda) << "," << e.mult << "\n";
  run.headline["distinct"] = table.entries.size();
  run.headline["total_count"] = table.total_count();
  run.headline["cache_dir"] = ws::cache::cache_directory();
}

void cmd_weyl(Run& run, const std::string& model, double lambda_max, int grid) {
  json mecho;
  auto m = resolve_model(model, mecho);
  run.config["model"] = mecho;
  run.config["lambda_max"] = lambda_max;
  run.config["grid"] = grid;
  auto table = ws::cache::load_or_compute(m, lambda_max);
  auto fit = ws::spectrum::weyl_fit(m, table, grid);
  auto f = run.open("weyl.csv", "counting function over the leading-order prediction");
  f << "lambda,ratio\n";
  for (const auto& [lam, ratio] : fit.ratio) f << g17(lam) << "," << g17(ratio) << "\n";
  run.headline["leading_ratio"] = fit.ratio.back().second;
  run.headline["remainder_sup"] = fit.remainder_sup;
  run.headline["exponent"] = fit.exponent;
  run.headline["coeff_expected"] = fit.coeff_expected;
  run.headline["rel_err_at_max"] = fit.rel_err_at_max;
}

void cmd_trace(Run& run, const std::string& model, double Lambda, double lambda_max,
               std::vector<double> window, int grid, double tol) {
  if (lambda_max <= 0.0) lambda_max = 4.0 * Lambda;
  json mecho;
  auto m = resolve_model(model, mecho);
  run.config["model"] = mecho;
  run.config["Lambda"] = Lambda;
  run.config["lambda_max"] = lambda_max;
  run.config["window"] = window;
  run.config["grid"] = grid;
  run.config["tol"] = tol;
  auto table = ws::cache::load_or_compute(m, lambda_max);
  auto sig = ws::wavetrace::trace_signal(table, window[0], window[1], grid, Lambda);
  auto f = run.open("trace.csv", "regulated wave trace");
  f << "t,re,im,abs\n";
  for (std::size_t i = 0; i < sig.values.size(); ++i) {
    double t = window[0] + (window[1] - window[0]) * static_cast<double>(i) /
                               static_cast<double>(sig.values.size() - 1);
    f << g17(t) << "," << g17(sig.values[i].real()) << "," << g17(sig.values[i].imag()) << ","
      << g17(std::abs(sig.values[i])) << "\n";
  }
  auto rep = ws::wavetrace::detect_singular_support(sig, tol);

  std::vector<double> lengths;
  try {
    for (const auto& g : ws::hamflow::find_closed_geodesics(m, window[1] + 1.0))
      lengths.push_back(g.length);
  } catch (const ws::Error&) {
    // no closed-geodesic catalog for this model; peaks are reported bare
  }
  json peaks = json::array();
  for (const auto& p : rep.peaks) {
    json pj = {{"t", p.t}, {"height", p.height}};
    if (!lengths.empty()) {
      double best = lengths[0];
      for (double L : lengths)
        if (std::abs(L - p.t) < std::abs(best - p.t)) best = L;
      pj["nearest_length"] = best;
      pj["gap"] = p.t - best;
    }
    peaks.push_back(pj);
  }
  auto pf = run.open("peaks.json", "detected trace singularities");
  pf << json{{"peaks", peaks},
             {"median_abs", rep.median_abs},
             {"stddev_abs", rep.stddev_abs},
             {"threshold", rep.threshold}}
            .dump(2)
     << "\n";
  run.headline["peak_count"] = rep.peaks.size();
  if (!rep.peaks.empty()) run.headline["first_peak_t"] = rep.peaks.front().t;
}

void cmd_geodesics(Run& run, const std::string& model, double length_max) {
  json mecho;
  auto m = resolve_model(model, mecho);
  run.config["model"] = mecho;
  run.config["length_max"] = length_max;
  auto geos = ws::hamflow::find_closed_geodesics(m, length_max);
  json arr = json::array();
  for (auto& g : geos) {
    ws::hamflow::ClosedGeodesic filled = g;
    try {
      filled = ws::hamflow::monodromy(m, g);
    } catch (const ws::Error&) {
      // keep the bare geodesic when the return map cannot be linearized
    }
    arr.push_back(geodesic_json(filled));
  }
  auto f = run.open("geodesics.json", "length spectrum with linearized return maps");
  f << json{{"geodesics", arr}}.dump(2) << "\n";
  run.headline["count"] = geos.size();
  if (!geos.empty()) run.headline["shortest"] = geos.front().length;
}

void cmd_dg(Run& run, const std::string& model, double lambda_max, double Lambda, double delta) {
  json mecho;
  auto m = resolve_model(model, mecho);
  run.config["model"] = mecho;
  run.config["lambda_max"] = lambda_max;
  run.config["Lambda"] = Lambda;
  run.config["delta"] = delta;
  auto table = ws::cache::load_or_compute(m, lambda_max);
  auto geos = ws::hamflow::find_closed_geodesics(m, 12.0);
  ws::require(!geos.empty(), ws::ErrorKind::Degenerate, "no closed geodesics found");
  ws::hamflow::ClosedGeodesic pick;
  bool found = false;
  for (const auto& g : geos) {
    auto filled = ws::hamflow::monodromy(m, g);
    if (std::abs(filled.det_factor) > 1e-3) {
      pick = filled;
      found = true;
      break;
    }
  }
  ws::require(found, ws::ErrorKind::Degenerate,
              "every closed geodesic below length 12 has a degenerate return map");
  ws::smoothing::SmoothingKernel kernel(delta);
  auto rep = ws::wavetrace::dg_amplitude_check(m, table, pick, kernel, Lambda);
  auto f = run.open("dg.json", "trace amplitude against the return-map prediction");
  f << json{{"length", rep.length},
            {"spectral_amp", rep.spectral_amp},
            {"classical_amp", rep.classical_amp},
            {"ratio", rep.ratio},
            {"orientations", rep.orientations}}
           .dump(2)
    << "\n";
  run.headline["ratio"] = rep.ratio;
  run.headline["length"] = rep.length;
}

ws::grid::GridField gaussian_packet(const std::vector<int>& dims, const std::vector<double>& len,
                                    unsigned seed) {
  ws::grid::GridField psi = ws::grid::make_box_field(dims, len);
  std::vector<double> center(dims.size()), vel(dims.size());
  unsigned long long s = 0x9e3779b97f4a7c15ull * (seed + 1);
  auto next = [&s]() {
    s += 0x9e3779b97f4a7c15ull;
    unsigned long long z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  };
  for (std::size_t k = 0; k < dims.size(); ++k) {
    center[k] = len[k] * (0.45 + 0.1 * next());
    vel[k] = std::floor(3.0 * next());
  }
  ws::grid::fill(psi, [&](const VecN& x) {
    double r2 = 0.0, phase = 0.0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      double c = x[static_cast<int>(k)] - center[k];
      r2 += c * c;
      phase += vel[k] * x[static_cast<int>(k)];
    }
    return std::exp(-r2) * std::exp(cplx(0.0, phase));
  });
  return psi;
}

void cmd_schrodinger(Run& run, int grid, unsigned seed, double t_final) {
  run.config["grid"] = grid;
  run.config["seed"] = seed;
  run.config["time"] = t_final;
  json report;

  {
    ws::grid::GridField psi = gaussian_packet({64, 64}, {kTwoPi, kTwoPi}, seed);
    double n0 = ws::grid::l2_norm(psi);
    double h0 = ws::schrod::sobolev_norm(psi, 1.0);
    auto evolved = ws::schrod::evolve(psi, t_final);
    report["l2_drift"] = std::abs(ws::grid::l2_norm(evolved) - n0) / n0;
    report["h1_drift"] = std::abs(ws::schrod::sobolev_norm(evolved, 1.0) - h0) / h0;
    auto period = ws::schrod::evolve(psi, kTwoPi);
    report["periodicity_defect"] = ws::grid::l2_error(psi, period) / n0;
  }
  {
    double L = 14.0;
    ws::grid::GridField psi = gaussian_packet({grid, grid, grid, grid}, {L, L, L, L}, seed);
    auto rep = ws::schrod::morawetz_report(psi, t_final, 48);
    report["morawetz_ratio"] = rep.ratio;
    report["morawetz_excise_radius"] = rep.excise_radius;
  }
  {
    double L = 14.0;
    ws::grid::GridField psi = gaussian_packet({2 * grid, 2 * grid, 2 * grid}, {L, L, L}, seed);
    auto rep = ws::schrod::local_smoothing_report(psi, t_final, L / 4.0, 48);
    report["local_smoothing_ratio"] = rep.ratio;

    double h = L / (2 * grid);
    report["hardy_ratio"] = ws::schrod::hardy_ratio(psi);
    report["hardy_bound"] = 1.0 + 2.0 * h * h;

    auto end = ws::schrod::evolve(psi, t_final);
    auto f = run.open("slice.csv", "|psi|^2 on the central axis-aligned slice");
    f << "x1,x2,abs2\n";
    int n = 2 * grid, mid = grid;
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2) {
        std::size_t idx = (static_cast<std::size_t>(i1) * n + i2) * n + mid;
        double a = std::abs(end.values[idx]);
        f << g17(L * i1 / n) << "," << g17(L * i2 / n) << "," << g17(a * a) << "\n";
      }
  }
  auto rf = run.open("report.json", "conservation and dispersive functionals");
  rf << report.dump(2) << "\n";
  run.headline = report;
  run.headline.erase("hardy_bound");
}

void cmd_wavefront(Run& run, int grid, double t) {
  run.config["grid"] = grid;
  run.config["time"] = t;
  const double R = 0.7;
  ws::grid::GridField disc = ws::grid::make_box_field({grid, grid}, {kTwoPi, kTwoPi});
  ws::grid::fill(disc, [&](const VecN& x) {
    double d = std::hypot(x[0] - kPi, x[1] - kPi);
    return cplx(d <= R ? 1.0 : 0.0, 0.0);
  });
  std::vector<ws::wavefront::ConeProbe> normal, tangential;
  const int n_angle = 16;
  for (int k = 0; k < n_angle; ++k) {
    double th = kTwoPi * k / n_angle;
    ws::wavefront::ConeProbe p;
    p.x0 = VecN(kPi + R * std::cos(th), kPi + R * std::sin(th));
    p.direction = VecN(std::cos(th), std::sin(th));
    normal.push_back(p);
    ws::wavefront::ConeProbe q = p;
    q.direction = VecN(-std::sin(th), std::cos(th));
    tangential.push_back(q);
  }
  auto nrep = ws::wavefront::wavefront_scan(disc, normal);
  auto trep = ws::wavefront::wavefront_scan(disc, tangential);
  auto f = run.open("scan.csv", "cone-probe classifications on the disc boundary");
  f << "x0_1,x0_2,dir_angle,exponent,residual,class\n";
  f << ws::wavefront::report_csv(nrep) << ws::wavefront::report_csv(trep);
  int n_sing = 0, n_smooth = 0;
  for (const auto& r : nrep) n_sing += r.cls == ws::wavefront::ScanClass::Singular ? 1 : 0;
  for (const auto& r : trep) n_smooth += r.cls == ws::wavefront::ScanClass::Smooth ? 1 : 0;

  auto trans = ws::wavefront::halfwave_transport_check(disc, {normal[0], normal[5], normal[11]}, t);
  json tj = json::array();
  for (const auto& e : trans.entries)
    tj.push_back({{"x0", {e.probe.x0[0], e.probe.x0[1]}},
                  {"x_target", {e.x_target[0], e.x_target[1]}},
                  {"ok", e.ok}});
  auto tf = run.open("transport.json", "singularities relocated by the half-wave flow");
  tf << json{{"t", trans.t}, {"entries", tj}}.dump(2) << "\n";
  run.headline["normal_singular"] = n_sing;
  run.headline["tangential_smooth"] = n_smooth;
  run.headline["probes_per_class"] = n_angle;
  run.headline["transport_ok"] = trans.entries.size();
}

void cmd_parametrix(Run& run, const std::string& model, int grid, unsigned seed) {
  json mecho;
  auto m = resolve_model(model, mecho);
  run.config["model"] = mecho;
  run.config["grid"] = grid;
  run.config["seed"] = seed;
  const double box = 3.0 * kPi;
  ws::parametrix::EikonalOptions opt;
  opt.nx = 32;
  opt.n_angle = 48;
  opt.nt_phys = 5;
  auto pt = ws::parametrix::solve_eikonal(m, box, opt);
  auto at = ws::parametrix::solve_transport(m, pt);
  ws::parametrix::write_phase_cache(run.path("phase.tbl").string(), pt);
  run.files.emplace_back("phase.tbl", "eikonal table, binary container");

  const double t = pt.geo.t_level(pt.geo.nt - 2);
  json study = json::array();
  for (double lambda : {8.0, 16.0}) {
    auto f = ws::parametrix::band_data(grid, box, lambda, seed);
    double omega = 2.4 * lambda;
    double dt_ref = std::pow(120.0e-6 / (t * std::pow(omega, 5)), 0.25);
    auto ref = ws::parametrix::reference_halfwave(m, f, t, 0.8 * lambda, 2.4 * lambda, dt_ref);
    auto u1 = ws::parametrix::apply_parametrix(pt, at, f, t, 0.8 * lambda, 2.4 * lambda, false);
    auto u2 = ws::parametrix::apply_parametrix(pt, at, f, t, 0.8 * lambda, 2.4 * lambda, true);
    int stride = grid / opt.nx;
    double e1 = 0.0, e2 = 0.0, scale = 0.0;
    for (int i1 = 0; i1 < opt.nx; ++i1)
      for (int i2 = 0; i2 < opt.nx; ++i2) {
        std::size_t src = (static_cast<std::size_t>(i1) * stride * grid) +
                          static_cast<std::size_t>(i2) * stride;
        std::size_t dst = static_cast<std::size_t>(i1) * opt.nx + i2;
        cplx r = ref.values[src];
        e1 += std::norm(u1.values[dst] - r);
        e2 += std::norm(u2.values[dst] - r);
        scale += std::norm(r);
      }
    study.push_back({{"lambda", lambda},
                     {"rel_l2_a0", std::sqrt(e1 / scale)},
                     {"rel_l2_with_correction", std::sqrt(e2 / scale)}});
  }
  auto rr = ws::parametrix::residual_check(m, pt, at);
  auto f = run.open("parametrix.json", "band-limited error study and residuals");
  f << json{{"time", t},
            {"study", study},
            {"residuals",
             {{"eikonal_sup", rr.eikonal_sup},
              {"transport0_sup", rr.transport0_sup},
              {"transport1_sup", rr.transport1_sup}}}}
           .dump(2)
    << "\n";
  run.headline["rel_l2_a0_low"] = study[0]["rel_l2_a0"];
  run.headline["rel_l2_a0_high"] = study[1]["rel_l2_a0"];
  run.headline["rel_l2_with_correction_high"] = study[1]["rel_l2_with_correction"];
}

int cmd_selftest(Run& run) {
  auto results = ws::selfcheck::run_all(&std::cout);
  json arr = json::array();
  for (const auto& r : results)
    arr.push_back({{"name", r.name}, {"pass", r.pass}, {"seconds", r.seconds}, {"note", r.note}});
  auto f = run.open("selftest.json", "named invariant suite results");
  f << json{{"checks", arr}}.dump(2) << "\n";
  int passed = 0;
  for (const auto& r : results) passed += r.pass ? 1 : 0;
  run.headline["passed"] = passed;
  run.headline["total"] = results.size();
  return ws::selfcheck::all_passed(results) ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral geometry workbench"};
  app.require_subcommand(1);

  std::string model = "torus-2pi", out_dir = "out";
  double lambda_max = -1.0, Lambda = -1.0, tol = -1.0;
  int grid = -1, threads = 0;
  unsigned seed = 0;
  std::vector<double> window;
  double length_max = 15.0, delta = 0.5, t_flag = -1.0;

  auto add_common = [&](CLI::App* sub, bool with_model) {
    if (with_model) sub->add_option("--model", model, "preset name or model JSON file");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "OpenMP thread count (0 = library default)");
    return sub;
  };

  auto* sp = add_common(app.add_subcommand("spectrum", "build and cache a spectrum table"), true);
  sp->add_option("--lambda-max", lambda_max, "completeness cutoff");

  auto* wy = add_common(app.add_subcommand("weyl", "counting-function fit"), true);
  wy->add_option("--lambda-max", lambda_max, "completeness cutoff");
  wy->add_option("--grid", grid, "fit grid points");

  auto* tr = add_common(app.add_subcommand("trace", "regulated wave trace and peaks"), true);
  tr->add_option("--Lambda", Lambda, "frequency scale of the spectral weight");
  tr->add_option("--lambda-max", lambda_max, "completeness cutoff (default 4 Lambda)");
  tr->add_option("--window", window, "time window t0 t1")->expected(2);
  tr->add_option("--grid", grid, "time samples");
  tr->add_option("--tol", tol, "peak threshold in medians");

  auto* ge = add_common(app.add_subcommand("geodesics", "length spectrum and return maps"), true);
  ge->add_option("--length-max", length_max, "catalog cutoff");

  auto* dg = add_common(app.add_subcommand("dg-check", "trace amplitude vs return map"), true);
  dg->add_option("--lambda-max", lambda_max, "completeness cutoff");
  dg->add_option("--Lambda", Lambda, "fit frequency scale");
  dg->add_option("--delta", delta, "kernel width in time");

  auto* sc = add_common(app.add_subcommand("schrodinger", "conservation and dispersive checks"),
                        false);
  sc->add_option("--grid", grid, "base grid per axis (rank-4 runs at this size)");
  sc->add_option("--seed", seed, "packet placement seed")->capture_default_str();
  sc->add_option("--time", t_flag, "evolution horizon");

  auto* wf = add_common(app.add_subcommand("wavefront", "cone scan and transport on a disc"),
                        false);
  wf->add_option("--grid", grid, "grid points per axis");
  wf->add_option("--time", t_flag, "transport time");

  auto* px = add_common(app.add_subcommand("parametrix", "phase tables and error scaling"), true);
  px->add_option("--grid", grid, "data grid per axis (power of two)");
  px->add_option("--seed", seed, "band data seed");

  add_common(app.add_subcommand("selftest", "run the named invariant suite"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cout << json{{"error", {{"kind", "Config"}, {"message", e.what()}, {"exit_code", 2}}}}
                     .dump()
              << "\n";
    return 2;
  }
  auto* sub = app.get_subcommands().front();
  if (threads > 0) omp_set_num_threads(threads);

  Run run;
  run.command = sub->get_name();
  run.out_dir = out_dir;
  run.config["out"] = out_dir;
  run.config["threads"] = threads;

  auto start = std::chrono::steady_clock::now();
  int code = 0;
  try {
    if (sub == sp) {
      cmd_spectrum(run, model, lambda_max > 0 ? lambda_max : 60.0);
    } else if (sub == wy) {
      cmd_weyl(run, model, lambda_max > 0 ? lambda_max : 200.0, grid > 0 ? grid : 256);
    } else if (sub == tr) {
      if (window.empty()) window = {0.5, 15.0};
      ws::require(window[0] < window[1] && window[0] > 0, ws::ErrorKind::Config,
                  "--window needs 0 < t0 < t1");
      cmd_trace(run, model, Lambda > 0 ? Lambda : 30.0, lambda_max, window,
                grid > 0 ? grid : 4096, tol > 0 ? tol : 5.0);
    } else if (sub == ge) {
      cmd_geodesics(run, model, length_max);
    } else if (sub == dg) {
      if (!dg->count("--model")) model = "prolate";
      cmd_dg(run, model, lambda_max > 0 ? lambda_max : 120.0, Lambda > 0 ? Lambda : 100.0, delta);
    } else if (sub == sc) {
      if (!sc->count("--seed")) seed = 1;
      cmd_schrodinger(run, grid > 0 ? grid : 32, seed, t_flag > 0 ? t_flag : 1.0);
    } else if (sub == wf) {
      cmd_wavefront(run, grid > 0 ? grid : 256, t_flag > 0 ? t_flag : 0.5);
    } else if (sub == px) {
      if (!px->count("--model")) model = "plane";
      if (!px->count("--seed")) seed = 7;
      cmd_parametrix(run, model, grid > 0 ? grid : 128, seed);
    } else {
      code = cmd_selftest(run);
    }
    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(run, wall);
    if (code == 0)
      std::cout << "ok: " << run.command << " artifacts in " << out_dir << "/ ("
                << run.headline.dump() << ")\n";
    else
      std::cout << "FAIL: " << run.command << ", details in " << out_dir << "/\n";
    return code;
  } catch (const ws::Error& e) {
    int ec = exit_code_for(e.kind());
    json err = {{"error",
                 {{"kind", ws::to_string(e.kind())}, {"message", e.what()}, {"exit_code", ec}}}};
    std::cout << err.dump() << "\n";
    std::error_code ignore;
    std::filesystem::create_directories(out_dir, ignore);
    std::ofstream ef(std::filesystem::path(out_dir) / "error.json");
    if (ef.good()) ef << err.dump(2) << "\n";
    return ec;
  } catch (const std::exception& e) {
    json err = {{"error", {{"kind", "Internal"}, {"message", e.what()}, {"exit_code", 4}}}};
    std::cout << err.dump() << "\n";
    return 4;
  }
}
