#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fkcp::cli {

CaseConfig MethodOptions::to_case() const {
  CaseConfig cfg;
  parse_case(case_label, cfg);
  cfg.alpha = alpha;
  cfg.solver.tol = solver_tol;
  cfg.epsilon_floor = epsilon_floor;
  cfg.score_sqrt_squared_denominator = squared_denominator;
  cfg.fit.family = parse_family(family);
  cfg.fit.n_bins = n_bins;
  cfg.fit.max_lag = max_lag;
  cfg.validate();
  return cfg;
}

namespace {

std::string hex(const unsigned char* p, unsigned n) {
  std::ostringstream os;
  for (unsigned i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(p[i]);
  return os.str();
}

std::string sha256(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  return hex(md, len);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::ofstream open_out(const RunOptions& run, const std::string& name, CommandOutput& out) {
  fs::create_directories(run.out);
  std::ofstream f(fs::path(run.out) / name, std::ios::binary);
  if (!f) throw Error("cannot write '" + (fs::path(run.out) / name).string() + "'");
  f.precision(17);
  out.files.push_back(name);
  return f;
}

void write_json(const RunOptions& run, const std::string& name, const json& j, CommandOutput& out) {
  auto f = open_out(run, name, out);
  f << j.dump(2) << '\n';
}

void strip_timings(json& j) {
  if (j.is_object()) {
    j.erase("timings");
    for (auto& [k, v] : j.items()) strip_timings(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip_timings(v);
  }
}

Site parse_target(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw InvalidArgument("target must look like u,v");
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1)), "target"};
  } catch (const std::exception&) {
    throw InvalidArgument("cannot parse target '" + text + "'");
  }
}

json model_json(const FittedModel& m) {
  return {{"family", to_string(m.model.family)},
          {"nugget", m.model.nugget},
          {"partial_sill", m.model.partial_sill},
          {"range", m.model.range},
          {"fallback", m.fallback},
          {"note", m.note}};
}

json method_json(const MethodOptions& m) {
  json j = {{"alpha", m.alpha},           {"case", m.case_label},  {"solver_tol", m.solver_tol},
            {"score_sqrt_squared_denominator", m.squared_denominator}, {"variogram_family", m.family},
            {"n_bins", m.n_bins},         {"max_lag", m.max_lag}};
  j["epsilon_floor"] = m.epsilon_floor ? json(*m.epsilon_floor) : json("default");
  return j;
}

json source_json(const DataSource& s) {
  if (!s.data_path.empty()) return {{"data", s.data_path}, {"basis", s.basis.empty() ? "fourier:65" : s.basis}};
  return {{"scenario", s.scenario}, {"eta", s.eta},         {"c", s.c},
          {"n_sites", s.n_sites},   {"n_time", s.n_time},   {"noise_sd", s.noise_sd},
          {"basis", s.basis.empty() ? "bspline:30" : s.basis}};
}

const char* s_name(Modulation m) { return m == Modulation::sup ? "Ssup" : "Ssqrt"; }
const char* d_name(Score d) { return d == Score::sup ? "Dsup" : "Dsqrt"; }

constexpr const char* metrics_header = "delta,S,D,eta,c,cov_l,cov_g,width,s_alpha,tt,mt";

std::string metrics_row(const CaseSummary& s, const std::string& eta, const std::string& c) {
  std::ostringstream os;
  if (s.bootstrap)
    os << "bootstrap,,,";
  else
    os << s.delta << ',' << s_name(s.modulation) << ',' << d_name(s.score) << ',';
  os << eta << ',' << c << ',' << io::fmt_fixed(s.cov_l, 2) << ',' << io::fmt_fixed(s.cov_g, 2) << ','
     << io::fmt(s.width) << ',' << io::fmt(s.s_alpha) << ',' << io::fmt_fixed(s.tt, 4) << ','
     << io::fmt_fixed(s.mt, 4);
  return os.str();
}

void write_per_site(std::ostream& f, const Dataset& data, const CaseSummary& s) {
  f << "site_id,u,v,cov_l,inside,width,s_alpha,seconds\n";
  for (const auto& o : s.sites) {
    const Site& site = data.site(o.index);
    f << site.id << ',' << io::fmt(site.u) << ',' << io::fmt(site.v) << ',' << io::fmt(o.cov_l) << ','
      << (o.inside ? 1 : 0) << ',' << io::fmt(o.width) << ',' << io::fmt(o.s_alpha) << ','
      << io::fmt_fixed(o.seconds, 6) << '\n';
  }
}

std::string dataset_input(const DataSource& src, CommandOutput& out) {
  if (!src.data_path.empty()) out.inputs.push_back(src.data_path);
  return src.data_path;
}

std::string num_label(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

std::string file_sha256(const std::string& path) { return sha256(slurp(path)); }

std::string stable_digest(const std::string& path) {
  const std::string text = slurp(path);
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".json") {
    json j = json::parse(text);
    strip_timings(j);
    return sha256(j.dump());
  }
  if (ext == ".csv") {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
      std::istringstream hs(line);
      std::string cell;
      while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    std::vector<bool> keep(header.size(), true);
    for (std::size_t i = 0; i < header.size(); ++i)
      keep[i] = !(header[i] == "tt" || header[i] == "mt" || header[i] == "seconds");
    std::string norm;
    auto emit = [&](const std::string& l) {
      std::vector<std::string> cells;
      std::string cell;
      std::istringstream ls(l);
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (!l.empty() && l.back() == ',') cells.emplace_back();
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (i >= keep.size() || keep[i]) norm += cells[i] + ',';
      norm += '\n';
    };
    emit(line);
    while (std::getline(in, line)) emit(line);
    return sha256(norm);
  }
  return sha256(text);
}

Dataset load_source(const DataSource& src, std::uint64_t seed, double eta, double c) {
  Dataset data = [&] {
    if (!src.data_path.empty()) return io::read_dataset_csv(src.data_path);
    ScenarioConfig sc;
    sc.scenario = src.scenario;
    sc.eta = eta;
    sc.c = c;
    sc.n_sites = src.n_sites;
    sc.n_time = src.n_time;
    sc.noise_sd = src.noise_sd;
    sc.seed = seed;
    return sample_dataset(sc);
  }();
  const std::string basis = !src.basis.empty() ? src.basis : (src.data_path.empty() ? "bspline:30" : "fourier:65");
  if (basis == "none") return data;
  return smooth_dataset(data, parse_basis(basis, data.grid()->front(), data.grid()->back()));
}

CommandOutput cmd_simulate(const DataSource& src, const RunOptions& run) {
  CommandOutput out;
  if (src.eta.size() != 1 || src.c.size() != 1) throw InvalidArgument("simulate takes a single --eta and --c");
  DataSource raw = src;
  raw.basis = "none";
  const Dataset data = load_source(raw, run.seed, src.eta[0], src.c[0]);
  {
    auto f = open_out(run, "dataset.csv", out);
    io::write_dataset_csv(f, data);
  }
  write_json(run, "dataset.json",
             {{"scenario", src.scenario},
              {"eta", src.eta[0]},
              {"c", src.c[0]},
              {"seed", run.seed},
              {"n_sites", src.n_sites},
              {"n_time", src.n_time},
              {"n_basis", 30},
              {"noise_sd", src.noise_sd},
              {"region", "[-1,1]x[0,1]"}},
             out);
  out.config = source_json(src);
  return out;
}

CommandOutput cmd_ingest(const DataSource& src, const RunOptions& run) {
  CommandOutput out;
  if (src.data_path.empty()) throw InvalidArgument("ingest needs --data");
  dataset_input(src, out);
  const Dataset data = load_source(src, run.seed, 0.0, 0.0);
  auto f = open_out(run, "dataset.csv", out);
  io::write_dataset_csv(f, data);
  out.config = source_json(src);
  out.config["n_sites"] = data.size();
  out.config["n_time"] = data.grid()->size();
  return out;
}

CommandOutput cmd_variogram(const DataSource& src, const MethodOptions& m, const RunOptions& run) {
  CommandOutput out;
  dataset_input(src, out);
  const Dataset data = load_source(src, run.seed, src.eta.front(), src.c.front());
  const EmpiricalVariogram emp = empirical_trace_variogram(data, m.n_bins, m.max_lag);
  {
    auto f = open_out(run, "variogram.csv", out);
    io::write_variogram_csv(f, emp);
  }
  const VariogramModel model = fit_model(emp, parse_family(m.family));
  write_json(run, "model.json",
             {{"family", to_string(model.family)},
              {"nugget", model.nugget},
              {"partial_sill", model.partial_sill},
              {"range", model.range}},
             out);
  out.config = {{"source", source_json(src)}, {"method", method_json(m)}};
  return out;
}

CommandOutput cmd_predict(const DataSource& src, const std::string& target, const std::string& target_id,
                          const MethodOptions& m, const RunOptions& run) {
  CommandOutput out;
  dataset_input(src, out);
  const Dataset full = load_source(src, run.seed, src.eta.front(), src.c.front());
  const CaseConfig cfg = m.to_case();

  std::optional<std::size_t> held_out;
  Site site;
  if (!target_id.empty()) {
    held_out = full.index_of(target_id);
    site = full.site(*held_out);
  } else if (!target.empty()) {
    site = parse_target(target);
  } else {
    throw InvalidArgument("predict needs --target u,v or --target-id ID");
  }
  const Dataset data = held_out ? full.without(*held_out) : full;

  const Stopwatch sw;
  const ConformalResult res = conformal_predict(data, site, cfg);
  const double seconds = sw.seconds();
  const PredictionBand& band = res.band.band;
  {
    auto f = open_out(run, "band.csv", out);
    io::write_band_csv(f, band);
  }

  json meta = {{"method", "conformal"},
               {"case", case_label(cfg)},
               {"alpha", cfg.alpha},
               {"delta_percentile", cfg.delta_percentile},
               {"modulation", cfg.modulation == Modulation::sup ? "sup" : "sqrt"},
               {"score", cfg.score == Score::sup ? "sup" : "sqrt"},
               {"delta_k", res.calibration.split.delta_k},
               {"rho", *band.rho},
               {"n_train", res.calibration.split.train_idx.size()},
               {"n_test", res.calibration.split.test_idx.size()},
               {"epsilon_floor", res.band.epsilon_floor},
               {"heuristic_band", res.band.heuristic},
               {"score_sqrt_squared_denominator", cfg.score_sqrt_squared_denominator},
               {"variogram", model_json(res.calibration.model)},
               {"center_solver", to_string(res.calibration.center_solution.method)},
               {"surrogate_failures", res.calibration.failures},
               {"target", {{"id", site.id}, {"u", site.u}, {"v", site.v}}},
               {"timings", {{"band_seconds", seconds}}}};
  if (held_out) {
    const Curve& truth = full.curve(*held_out);
    const BandTruth one[1] = {{&band, &truth}};
    meta["evaluation"] = {{"cov_l", mean_local_coverage(local_coverage(one))},
                          {"inside", band.contains(truth)},
                          {"width", band_width(band)},
                          {"s_alpha", band_score(band, truth, cfg.alpha)}};
    auto f = open_out(run, "observed.csv", out);
    io::write_curve_csv(f, truth, "value");
  }
  write_json(run, "metadata.json", meta, out);

  if (run.verbose) {
    const Dataset train = data.subset(res.calibration.split.train_idx);
    const KrigingSystem sys = assemble_system(train, res.calibration.model.model, site);
    const KrigingSolution& sol = res.calibration.center_solution;
    json A = json::array();
    for (Eigen::Index i = 0; i < sys.A.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < sys.A.cols(); ++j) row.push_back(sys.A(i, j));
      A.push_back(row);
    }
    write_json(run, "kriging_debug.json",
               {{"A", A},
                {"b", std::vector<double>(sys.b.data(), sys.b.data() + sys.b.size())},
                {"lambda", sol.lambda},
                {"multiplier", sol.multiplier},
                {"residual", sol.residual_norm},
                {"iterations", sol.iterations},
                {"method", to_string(sol.method)}},
               out);
  }
  out.config = {{"source", source_json(src)}, {"method", method_json(m)}, {"target", target}, {"target_id", target_id}};
  out.timings = {{"band_seconds", seconds}};
  return out;
}

CommandOutput cmd_sweep(const DataSource& src, const std::vector<double>& alphas, const MethodOptions& m,
                        const RunOptions& run) {
  CommandOutput out;
  dataset_input(src, out);
  if (alphas.empty()) throw InvalidArgument("sweep needs at least one alpha");
  const bool simulated = src.data_path.empty();
  const std::vector<double> etas = simulated ? src.eta : std::vector<double>{0.0};
  const std::vector<double> cs = simulated ? src.c : std::vector<double>{0.0};

  for (double alpha : alphas) {
    MethodOptions ma = m;
    ma.alpha = alpha;
    const CaseConfig base = ma.to_case();
    // rows ordered case-major, then (eta, c) as in the published tables
    std::vector<std::vector<std::string>> rows(12);
    std::vector<std::pair<std::string, Curve>> coverage;
    for (double eta : etas)
      for (double c : cs) {
        const Dataset data = load_source(src, run.seed, eta, c);
        const auto summaries = loocv_sweep(data, base, run.threads);
        const std::string e = simulated ? num_label(eta) : "", cl = simulated ? num_label(c) : "";
        for (std::size_t k = 0; k < summaries.size(); ++k) {
          rows[k].push_back(metrics_row(summaries[k], e, cl));
          std::string name = summaries[k].label.substr(2);  // drop the Δ
          if (simulated) name += "|eta=" + e + "|c=" + cl;
          coverage.emplace_back(name, *summaries[k].local_cov);
        }
      }
    const std::string suffix = alphas.size() == 1 ? "" : "_alpha" + num_label(alpha);
    {
      auto f = open_out(run, "metrics" + suffix + ".csv", out);
      f << metrics_header << '\n';
      for (const auto& group : rows)
        for (const auto& r : group) f << r << '\n';
    }
    {
      auto f = open_out(run, "local_coverage" + suffix + ".csv", out);
      f << 't';
      for (const auto& [name, curve] : coverage) f << ",\"" << name << '"';
      f << '\n';
      const auto t = coverage.front().second.grid()->points();
      for (std::size_t k = 0; k < t.size(); ++k) {
        f << io::fmt(t[k]);
        for (const auto& [name, curve] : coverage) f << ',' << io::fmt(curve[k]);
        f << '\n';
      }
    }
  }
  out.config = {{"source", source_json(src)}, {"method", method_json(m)}, {"alphas", alphas}};
  return out;
}

CommandOutput cmd_loocv(const DataSource& src, const MethodOptions& m, bool all, bool with_bootstrap,
                        std::size_t bootstrap_B, const RunOptions& run) {
  CommandOutput out;
  dataset_input(src, out);
  const Dataset data = load_source(src, run.seed, src.eta.front(), src.c.front());
  const CaseConfig cfg = m.to_case();
  const bool simulated = src.data_path.empty();
  const std::string e = simulated ? num_label(src.eta.front()) : "", cl = simulated ? num_label(src.c.front()) : "";

  std::vector<CaseSummary> rows = all ? loocv_sweep(data, cfg, run.threads)
                                      : std::vector<CaseSummary>{loocv_case(data, cfg, run.threads)};
  if (with_bootstrap) {
    BootstrapConfig bc;
    bc.B = bootstrap_B;
    bc.alpha = cfg.alpha;
    bc.seed = run.seed;
    bc.threads = run.threads;
    rows.push_back(loocv_bootstrap(data, bc, cfg.fit, cfg.solver));
  }
  for (const CaseSummary& s : rows) {
    std::string name = s.bootstrap ? "bootstrap" : std::to_string(s.delta) + "_" + s_name(s.modulation) + "_" + d_name(s.score);
    auto f = open_out(run, "per_site_" + name + ".csv", out);
    write_per_site(f, data, s);
  }
  {
    auto f = open_out(run, "summary.csv", out);
    f << metrics_header << '\n';
    for (const CaseSummary& s : rows) f << metrics_row(s, e, cl) << '\n';
  }
  json t = json::object();
  for (const CaseSummary& s : rows) t[s.label] = {{"tt", s.tt}, {"mt", s.mt}};
  out.config = {{"source", source_json(src)}, {"method", method_json(m)}, {"all_cases", all},
                {"bootstrap", with_bootstrap},  {"bootstrap_B", bootstrap_B}};
  out.timings = t;
  return out;
}

CommandOutput cmd_bootstrap(const DataSource& src, const std::string& target, const std::string& target_id,
                            bool loocv, std::size_t B, const MethodOptions& m, const RunOptions& run) {
  CommandOutput out;
  dataset_input(src, out);
  const Dataset full = load_source(src, run.seed, src.eta.front(), src.c.front());
  const CaseConfig cfg = m.to_case();
  BootstrapConfig bc;
  bc.B = B;
  bc.alpha = cfg.alpha;
  bc.seed = run.seed;
  bc.threads = run.threads;
  const json description = {{"method", "bootstrap"},
                            {"B", B},
                            {"alpha", cfg.alpha},
                            {"seed", run.seed},
                            {"resampling", "sites with replacement, variogram refit per resample"},
                            {"interval", "pointwise empirical alpha/2 and 1-alpha/2 quantiles"}};
  out.config = {{"source", source_json(src)}, {"method", method_json(m)}, {"bootstrap", description}};

  if (loocv) {
    const CaseSummary s = loocv_bootstrap(full, bc, cfg.fit, cfg.solver);
    {
      auto f = open_out(run, "per_site_bootstrap.csv", out);
      write_per_site(f, full, s);
    }
    auto f = open_out(run, "summary.csv", out);
    f << metrics_header << '\n' << metrics_row(s, "", "") << '\n';
    out.timings = {{"tt", s.tt}, {"mt", s.mt}};
    return out;
  }

  std::optional<std::size_t> held_out;
  Site site;
  if (!target_id.empty()) {
    held_out = full.index_of(target_id);
    site = full.site(*held_out);
  } else if (!target.empty()) {
    site = parse_target(target);
  } else {
    throw InvalidArgument("bootstrap needs --target, --target-id or --loocv");
  }
  const Dataset data = held_out ? full.without(*held_out) : full;
  const Stopwatch sw;
  const BootstrapResult res = bootstrap_band(data, site, default_model_fitter(cfg.fit), bc, cfg.solver);
  const double seconds = sw.seconds();
  {
    auto f = open_out(run, "band.csv", out);
    io::write_band_csv(f, res.band);
  }
  json meta = description;
  meta["failures"] = res.failures;
  meta["target"] = {{"id", site.id}, {"u", site.u}, {"v", site.v}};
  meta["timings"] = {{"band_seconds", seconds}};
  write_json(run, "metadata.json", meta, out);
  out.timings = {{"band_seconds", seconds}};
  return out;
}

namespace {

void add_source(CLI::App* app, DataSource& src) {
  app->add_option("--data", src.data_path, "long-format CSV (site_id,u,v,t,value)");
  app->add_option("--basis", src.basis, "bspline:K[:ORDER] | fourier:K[:PERIOD] | none");
  app->add_option("--scenario", src.scenario, "simulation scenario (1 or 2)")->check(CLI::IsMember({1, 2}));
  app->add_option("--eta", src.eta, "covariance floor eta (list allowed for sweep)")->delimiter(',');
  app->add_option("--c", src.c, "covariance decay c (list allowed for sweep)")->delimiter(',');
  app->add_option("--n-sites", src.n_sites, "simulated sites");
  app->add_option("--n-time", src.n_time, "simulated time points on [0,1]");
  app->add_option("--noise-sd", src.noise_sd, "scale of the simulated field");
}

void add_method(CLI::App* app, MethodOptions& m, bool with_case) {
  app->add_option("--alpha", m.alpha, "miscoverage level");
  if (with_case) app->add_option("--case", m.case_label, "case, e.g. \xCE\x94" "50,Ssqrt,Dsup");
  app->add_option("--solver-tol", m.solver_tol, "relative residual tolerance of the kriging solver");
  app->add_option("--epsilon-floor", m.epsilon_floor, "floor of the modulation function");
  app->add_flag("--score-sqrt-squared-denominator", m.squared_denominator, "divide the integral score by S(t)^2");
  app->add_option("--variogram-family", m.family, "exponential | spherical");
  app->add_option("--n-bins", m.n_bins, "variogram lag classes");
  app->add_option("--max-lag", m.max_lag, "variogram lag cutoff (default: half the largest distance)");
}

void add_run(CLI::App* app, RunOptions& r) {
  app->add_option("--out", r.out, "output directory")->required();
  app->add_option("--seed", r.seed, "run seed");
  app->add_option("--threads", r.threads, "worker threads");
  app->add_flag("--verbose", r.verbose, "also dump the kriging system");
}

std::vector<std::string> canonical_args(std::vector<std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--data" && i + 1 < args.size()) {
      args[i + 1] = fs::absolute(args[i + 1]).lexically_normal().string();
    } else if (args[i].rfind("--data=", 0) == 0) {
      args[i] = "--data=" + fs::absolute(args[i].substr(7)).lexically_normal().string();
    }
  }
  return args;
}

std::vector<std::string> with_out(std::vector<std::string> args, const std::string& out_dir) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out" && i + 1 < args.size()) {
      args[i + 1] = out_dir;
      return args;
    }
    if (args[i].rfind("--out=", 0) == 0) {
      args[i] = "--out=" + out_dir;
      return args;
    }
  }
  args.push_back("--out");
  args.push_back(out_dir);
  return args;
}

void write_manifest(const std::string& command, const std::vector<std::string>& args, const RunOptions& run,
                    const CommandOutput& res, double wall) {
  json inputs = json::array();
  for (const auto& p : res.inputs) inputs.push_back({{"path", p}, {"sha256", file_sha256(p)}});
  json outputs = json::array();
  for (const auto& f : res.files) {
    const std::string p = (fs::path(run.out) / f).string();
    outputs.push_back({{"path", f}, {"sha256", file_sha256(p)}, {"stable_digest", stable_digest(p)}});
  }
  json timings = res.timings;
  timings["wall_clock_seconds"] = wall;
  const json manifest = {{"command", command}, {"args", args},       {"config", res.config}, {"seed", run.seed},
                         {"inputs", inputs},   {"outputs", outputs}, {"timings", timings}};
  std::ofstream f(fs::path(run.out) / "manifest.json");
  f << manifest.dump(2) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  const std::vector<std::string> args = canonical_args(raw_args);
  CLI::App app{"Conformal prediction bands for functional ordinary kriging"};
  app.require_subcommand(1);

  DataSource src;
  MethodOptions method;
  RunOptions runopt;
  std::string target, target_id, manifest_path, replay_out;
  std::vector<double> alphas{0.25};
  bool all = false, with_bootstrap = false, loocv = false, verify = false;
  std::size_t B = 1000;

  auto* sim = app.add_subcommand("simulate", "generate a scenario dataset");
  add_source(sim, src);
  add_run(sim, runopt);

  auto* ingest = app.add_subcommand("ingest", "validate and smooth a long-format CSV");
  add_source(ingest, src);
  add_run(ingest, runopt);

  auto* vario = app.add_subcommand("variogram", "empirical trace-variogram and fitted model");
  add_source(vario, src);
  add_method(vario, method, false);
  add_run(vario, runopt);

  auto* predict = app.add_subcommand("predict", "conformal band at one target site");
  add_source(predict, src);
  add_method(predict, method, true);
  add_run(predict, runopt);
  predict->add_option("--target", target, "target coordinates u,v");
  predict->add_option("--target-id", target_id, "hold out this site and predict it");

  auto* sweep = app.add_subcommand("sweep", "all twelve cases, leave-one-site-out");
  add_source(sweep, src);
  add_method(sweep, method, false);
  add_run(sweep, runopt);
  sweep->add_option("--alphas", alphas, "alpha values")->delimiter(',');

  auto* loo = app.add_subcommand("loocv", "leave-one-site-out evaluation of one or all cases");
  add_source(loo, src);
  add_method(loo, method, true);
  add_run(loo, runopt);
  loo->add_flag("--all-cases", all, "evaluate all twelve cases");
  loo->add_flag("--with-bootstrap", with_bootstrap, "add the bootstrap baseline row");
  loo->add_option("--bootstrap-B", B, "bootstrap resamples");

  auto* boot = app.add_subcommand("bootstrap", "pointwise bootstrap baseline band");
  add_source(boot, src);
  add_method(boot, method, false);
  add_run(boot, runopt);
  boot->add_option("--target", target, "target coordinates u,v");
  boot->add_option("--target-id", target_id, "hold out this site and predict it");
  boot->add_flag("--loocv", loocv, "leave-one-site-out over every site");
  boot->add_option("--bootstrap-B", B, "bootstrap resamples");

  auto* replay = app.add_subcommand("replay", "re-run a manifest");
  replay->add_option("manifest", manifest_path, "manifest.json")->required();
  replay->add_option("--out", replay_out, "output directory for the re-run (default: a sibling directory)");
  replay->add_flag("--verify", verify, "compare outputs with the manifest, ignoring timing fields");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (replay->parsed()) {
      std::ifstream in(manifest_path);
      if (!in) throw Error("cannot read manifest '" + manifest_path + "'");
      const json manifest = json::parse(in);
      const std::string dir = replay_out.empty() ? (fs::path(manifest_path).parent_path().string() + "_replay") : replay_out;
      for (const auto& input : manifest["inputs"])
        if (file_sha256(input["path"].get<std::string>()) != input["sha256"].get<std::string>())
          err << "warning: input '" << input["path"].get<std::string>() << "' changed since the manifest was written\n";
      const int rc = run(with_out(manifest["args"].get<std::vector<std::string>>(), dir), out, err);
      if (rc != 0 || !verify) return rc;
      bool same = true;
      for (const auto& o : manifest["outputs"]) {
        const std::string f = o["path"].get<std::string>();
        const std::string p = (fs::path(dir) / f).string();
        const bool ok = fs::exists(p) && stable_digest(p) == o["stable_digest"].get<std::string>();
        out << (ok ? "identical " : "DIFFERENT ") << f << '\n';
        same = same && ok;
      }
      return same ? 0 : 1;
    }

    if (runopt.threads == 0) runopt.threads = 1;
    const auto start = std::chrono::steady_clock::now();
    CommandOutput res;
    std::string name;
    if (sim->parsed()) {
      name = "simulate";
      res = cmd_simulate(src, runopt);
    } else if (ingest->parsed()) {
      name = "ingest";
      res = cmd_ingest(src, runopt);
    } else if (vario->parsed()) {
      name = "variogram";
      res = cmd_variogram(src, method, runopt);
    } else if (predict->parsed()) {
      name = "predict";
      res = cmd_predict(src, target, target_id, method, runopt);
    } else if (sweep->parsed()) {
      name = "sweep";
      res = cmd_sweep(src, alphas, method, runopt);
    } else if (loo->parsed()) {
      name = "loocv";
      res = cmd_loocv(src, method, all, with_bootstrap, B, runopt);
    } else if (boot->parsed()) {
      name = "bootstrap";
      res = cmd_bootstrap(src, target, target_id, loocv, B, method, runopt);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(name, args, runopt, res, wall);
    for (const auto& f : res.files) out << (fs::path(runopt.out) / f).string() << '\n';
    out << (fs::path(runopt.out) / "manifest.json").string() << '\n';
    return 0;
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fkcp::cli
