#pragma once

#include <CLI11.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pndkit/config.hpp"
#include "pndkit/detection.hpp"
#include "pndkit/error.hpp"
#include "pndkit/estimator.hpp"
#include "pndkit/io.hpp"
#include "pndkit/jsd.hpp"
#include "pndkit/metrics.hpp"
#include "pndkit/pnd.hpp"
#include "pndkit/simulator.hpp"

namespace pndkit::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kModelMismatch = 3, kNoConvergence = 4 };

struct Options {
  std::string config;
  std::string out = ".";
  std::string counts;
  std::uint64_t seed = 1;
  int reps = 0;
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k;
    auto add = [&](const std::string& section, std::initializer_list<const char*> names) {
      for (const char* n : names) k.insert(section + "." + n);
    };
    add("jsd", {"source", "path", "half_width_s", "half_width_i", "center_s", "center_i"});
    add("filter_s", {"shape", "path", "kind"});
    add("filter_i", {"shape", "path", "kind"});
    add("source", {"xi_sq", "pnd", "p_g", "path", "loss_s", "loss_i"});
    add("detectors", {"T_s", "T_i", "eta1", "eta2", "eta3", "eta4", "d1", "d2", "d3", "d4", "gamma_s", "gamma_i",
                      "rep_rate_hz"});
    add("settings", {"gamma_s", "gamma_i"});
    add("simulate", {"n_m", "reps", "expected_counts"});
    add("sweep", {"layout", "method", "p_g", "n_m", "eta", "d", "gamma", "reps", "attenuator_levels",
                  "expected_counts", "T", "threads"});
    add("estimate", {"method", "restarts", "max_iter"});
    add("bootstrap", {"n_boot", "sample_sizes", "threads"});
    return k;
  }();
  return keys;
}

inline std::ofstream open_out(const Options& opt, const std::string& name) {
  std::filesystem::create_directories(opt.out);
  const auto path = std::filesystem::path(opt.out) / name;
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write '" + path.string() + "'");
  return f;
}

inline JsdGrid load_jsd(const Config& cfg) {
  const std::string src = cfg.require_string("jsd.source");
  const auto [name, args] = parse_call(src, "jsd.source");
  if (name == "gaussian") {
    if (args.size() != 5) throw InvalidInput("config key 'jsd.source': gaussian takes (sigma_plus, sigma_minus, theta, n_s, n_i)");
    GaussianJsdSpec g;
    g.sigma_plus = args[0];
    g.sigma_minus = args[1];
    g.theta_deg = args[2];
    g.n_s = static_cast<Eigen::Index>(args[3]);
    g.n_i = static_cast<Eigen::Index>(args[4]);
    g.center_s = cfg.get("jsd.center_s", 0.0);
    g.center_i = cfg.get("jsd.center_i", 0.0);
    g.half_width_s = cfg.get("jsd.half_width_s", 0.0);
    g.half_width_i = cfg.get("jsd.half_width_i", 0.0);
    return gaussian_jsd(g);
  }
  if (name == "csv") {
    const std::string path = cfg.require_string("jsd.path");
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open JSD file '" + path + "'");
    return read_jsd_csv(in);
  }
  throw InvalidInput("config key 'jsd.source': unknown source '" + name + "'");
}

inline FilterProfile load_filter(const Config& cfg, const std::string& section, const UniformAxis& axis) {
  const std::string key = section + ".shape";
  const auto [name, args] = parse_call(cfg.get(key, std::string("allpass")), key);
  if (name == "allpass") return FilterProfile::all_pass(axis);
  if (name == "rect" || name == "gauss") {
    if (args.size() != 2) throw InvalidInput("config key '" + key + "': " + name + " takes (center, width)");
    return name == "rect" ? FilterProfile::rect(axis, args[0], args[1]) : FilterProfile::gauss(axis, args[0], args[1]);
  }
  if (name == "csv") {
    const std::string kind = cfg.get(section + ".kind", std::string("amplitude"));
    if (kind != "amplitude" && kind != "intensity") {
      throw InvalidInput("config key '" + section + ".kind' must be amplitude or intensity");
    }
    const std::string path = cfg.require_string(section + ".path");
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open filter file '" + path + "'");
    FilterProfile f = read_filter_csv(in, kind == "intensity" ? FilterProfile::Kind::intensity : FilterProfile::Kind::amplitude);
    if (!f.axis().same_as(axis)) throw InvalidInput("config key '" + section + ".path': filter axis does not match the JSD axis");
    return f;
  }
  throw InvalidInput("config key '" + key + "': unknown shape '" + name + "'");
}

/// Detector chain; defaults are a measured four-detector setup.
inline BipartiteSetup load_setup(const Config& cfg) {
  BipartiteSetup s;
  s.s.T = cfg.get("detectors.T_s", 0.4952);
  s.i.T = cfg.get("detectors.T_i", 0.4846);
  s.s.eta_t = cfg.get("detectors.eta1", 0.562);
  s.s.eta_r = cfg.get("detectors.eta2", 0.575);
  s.i.eta_t = cfg.get("detectors.eta3", 0.567);
  s.i.eta_r = cfg.get("detectors.eta4", 0.548);
  s.s.d_t = cfg.get("detectors.d1", 1.01e-7);
  s.s.d_r = cfg.get("detectors.d2", 2.11e-7);
  s.i.d_t = cfg.get("detectors.d3", 0.94e-7);
  s.i.d_r = cfg.get("detectors.d4", 1.00e-7);
  s.s.gamma = cfg.get("detectors.gamma_s", 1.0);
  s.i.gamma = cfg.get("detectors.gamma_i", 1.0);
  const auto gs = cfg.get_list("settings.gamma_s", {1.0});
  const auto gi = cfg.get_list("settings.gamma_i", {1.0});
  if (gs.size() != gi.size()) throw InvalidInput("config keys 'settings.gamma_s' and 'settings.gamma_i' differ in length");
  s.gammas.clear();
  for (std::size_t k = 0; k < gs.size(); ++k) s.gammas.push_back({gs[k], gi[k]});
  s.validate();
  return s;
}

inline double rep_rate(const Config& cfg) {
  const double r = cfg.get("detectors.rep_rate_hz", 76e6);
  if (!(r > 0.0)) throw InvalidInput("config key 'detectors.rep_rate_hz' must be positive");
  return r;
}

inline PndMatrix load_source(const Config& cfg, std::uint64_t seed) {
  const std::string kind = cfg.get("source.pnd", std::string("synth"));
  PndMatrix p;
  if (kind == "synth") {
    const JsdGrid jsd = load_jsd(cfg);
    const auto fs = load_filter(cfg, "filter_s", jsd.axis_s());
    const auto fi = load_filter(cfg, "filter_i", jsd.axis_i());
    p = synthesize_pnd(jsd, fs, fi, PumpGain(cfg.get("source.xi_sq", 1e-3)));
  } else if (kind == "random") {
    p = random_pps_pnd(cfg.get("source.p_g", 1e-3), seed);
  } else if (kind == "file") {
    const std::string path = cfg.require_string("source.path");
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open PND file '" + path + "'");
    p = read_pnd_csv(in);
  } else {
    throw InvalidInput("config key 'source.pnd' must be synth, random or file");
  }
  return apply_loss_bipartite(p, cfg.get("source.loss_s", 1.0), cfg.get("source.loss_i", 1.0));
}

inline std::uint64_t model_hash(const BipartiteSetup& s) {
  std::ostringstream os;
  for (const auto* d : {&s.s, &s.i}) {
    os << fmt(d->T) << ';' << fmt(d->eta_t) << ';' << fmt(d->eta_r) << ';' << fmt(d->d_t) << ';' << fmt(d->d_r) << ';'
       << fmt(d->gamma) << '|';
  }
  for (const auto& g : s.gammas) os << fmt(g[0]) << ',' << fmt(g[1]) << ';';
  os << s.n_max;
  return fnv1a(os.str());
}

inline std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline int cmd_jsd(const Config& cfg, const Options& opt, std::ostream& out) {
  const JsdGrid jsd = load_jsd(cfg);
  const auto fs = load_filter(cfg, "filter_s", jsd.axis_s());
  const auto fi = load_filter(cfg, "filter_i", jsd.axis_i());
  const PumpGain gain(cfg.get("source.xi_sq", 1e-3));

  const double k_svd = schmidt_number_svd(jsd);
  const double k_an = schmidt_number_analytic(jsd);
  const Segmentation seg = segment(jsd, fs, fi);
  const PndMatrix p = synthesize_pnd(seg, gain);

  {
    auto f = open_out(opt, "kreport.csv");
    write_key_values(f, "quantity", {{"K_svd", k_svd}, {"K_analytic", k_an}});
  }
  {
    auto f = open_out(opt, "segmentation.csv");
    std::vector<std::pair<std::string, double>> kv;
    for (int j = 0; j < 4; ++j) kv.emplace_back("q" + std::to_string(j + 1), seg.q[static_cast<std::size_t>(j)]);
    for (int j = 0; j < 4; ++j) kv.emplace_back("kappa" + std::to_string(j + 1), seg.kappa[static_cast<std::size_t>(j)]);
    kv.insert(kv.end(), {{"ox13", seg.ox13}, {"ox24", seg.ox24}, {"oy14", seg.oy14}, {"oy23", seg.oy23},
                         {"oc_re", seg.oc.real()}, {"oc_im", seg.oc.imag()}});
    write_key_values(f, "quantity", kv);
  }
  {
    auto f = open_out(opt, "pnd.csv");
    write_pnd_csv(f, p);
  }
  {
    auto f = open_out(opt, "characteristics.csv");
    write_key_values(f, "characteristic", characteristic_list(p));
  }
  out << "K_svd=" << fmt(k_svd) << " K_analytic=" << fmt(k_an) << " q3=" << fmt(seg.q[2]) << '\n';
  return kOk;
}

inline int cmd_simulate(const Config& cfg, const Options& opt, std::ostream& out) {
  const PndMatrix truth = load_source(cfg, opt.seed);
  const BipartiteSetup setup = load_setup(cfg);
  const double n_m = cfg.get("simulate.n_m", 1e9);
  if (!(n_m >= 1.0) || n_m != std::floor(n_m)) throw InvalidInput("config key 'simulate.n_m' must be a positive integer");
  const long long reps = opt.reps > 0 ? opt.reps : cfg.get_int("simulate.reps", 1);
  if (reps < 1) throw InvalidInput("config key 'simulate.reps' must be positive");
  const bool expected = cfg.get_bool("simulate.expected_counts", false);

  for (long long r = 0; r < reps; ++r) {
    std::vector<CountRecord> records;
    for (std::size_t nu = 0; nu < setup.gammas.size(); ++nu) {
      const auto [ds, di] = setup.detectors(static_cast<int>(nu));
      const Eigen::Matrix4d w = bipartite_probs(truth, ds, di);
      const auto stream = static_cast<std::uint64_t>(r) * setup.gammas.size() + nu;
      records.push_back(expected ? expected_record(w, n_m, static_cast<int>(nu))
                                 : sample_counts(w, n_m, opt.seed, stream, static_cast<int>(nu)));
    }
    std::ostringstream name;
    if (reps == 1) {
      name << "counts.csv";
    } else {
      name << "counts_" << std::setw(3) << std::setfill('0') << r << ".csv";
    }
    auto f = open_out(opt, name.str());
    write_counts_csv(f, records);
  }
  {
    auto f = open_out(opt, "truth_pnd.csv");
    write_pnd_csv(f, truth);
  }
  {
    auto f = open_out(opt, "truth_characteristics.csv");
    write_key_values(f, "characteristic", characteristic_list(truth));
  }
  out << "wrote " << reps << " dataset(s) with " << setup.gammas.size() << " setting(s) to " << opt.out << '\n';
  return kOk;
}

inline SweepSpec load_sweep(const Config& cfg, const Options& opt) {
  SweepSpec s;
  const std::string layout = cfg.get("sweep.layout", std::string("2x2d"));
  if (layout == "1d") {
    s.layout = SweepLayout::one_d;
  } else if (layout == "2d") {
    s.layout = SweepLayout::two_d;
  } else if (layout == "2x2d") {
    s.layout = SweepLayout::two_by_two_d;
  } else {
    throw InvalidInput("config key 'sweep.layout' must be 1d, 2d or 2x2d");
  }
  const std::string method = cfg.get("sweep.method", std::string("ml"));
  if (method != "ml" && method != "eml") throw InvalidInput("config key 'sweep.method' must be ml or eml");
  s.method = method == "ml" ? SweepMethod::ml : SweepMethod::eml;
  s.p_g = cfg.get_list("sweep.p_g", s.p_g);
  s.n_m = cfg.get_list("sweep.n_m", s.n_m);
  s.eta = cfg.get_list("sweep.eta", s.eta);
  s.d = cfg.get_list("sweep.d", s.d);
  s.gamma = cfg.get_list("sweep.gamma", s.method == SweepMethod::eml ? std::vector<double>{0.1} : s.gamma);
  s.reps = static_cast<int>(opt.reps > 0 ? opt.reps : cfg.get_int("sweep.reps", 100));
  s.attenuator_levels = static_cast<int>(cfg.get_int("sweep.attenuator_levels", 10));
  s.expected_counts = cfg.get_bool("sweep.expected_counts", false);
  s.T = cfg.get("sweep.T", 0.5);
  s.threads = static_cast<unsigned>(cfg.get_int("sweep.threads", 0));
  s.seed = opt.seed;
  s.validate();
  return s;
}

inline int cmd_sweep(const Config& cfg, const Options& opt, std::ostream& out) {
  const SweepSpec spec = load_sweep(cfg, opt);
  const auto rows = run_sweep(spec);
  auto f = open_out(opt, "sweep.csv");
  write_sweep_csv(f, rows);
  out << "wrote " << rows.size() << " rows to " << (std::filesystem::path(opt.out) / "sweep.csv").string() << '\n';
  return kOk;
}

inline EstimateOptions load_estimate_options(const Config& cfg, const Options& opt) {
  EstimateOptions e;
  e.restarts = static_cast<int>(cfg.get_int("estimate.restarts", e.restarts));
  e.max_iter = static_cast<int>(cfg.get_int("estimate.max_iter", e.max_iter));
  e.seed = opt.seed;
  if (e.restarts < 0 || e.max_iter < 1) throw InvalidInput("config keys 'estimate.restarts' / 'estimate.max_iter' out of range");
  return e;
}

inline CountLog load_counts(const Options& opt) {
  if (opt.counts.empty()) throw InvalidInput("--counts is required");
  return read_counts_file(opt.counts);
}

/// Smallest model-expected count over every setting and outcome.
inline double min_expected_count(const LikelihoodModel& model, const Dataset& data, const Eigen::VectorXd& cells) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t nu = 0; nu < data.size(); ++nu) {
    const double n = data[nu].sum();
    if (n <= 0.0) continue;
    m = std::min(m, (n * (model.settings[nu].response * cells)).minCoeff());
  }
  return m;
}

inline std::vector<SummaryRow> run_bootstrap(const Config& cfg, const Options& opt, const CountLog& log,
                                             const BipartiteSetup& setup, const EstimateOptions& eopt,
                                             const PndMatrix& reference) {
  const int n_boot = static_cast<int>(cfg.get_int("bootstrap.n_boot", 100));
  const auto sizes = cfg.get_list("bootstrap.sample_sizes", {log.records.front().n_m});
  const auto threads = static_cast<unsigned>(cfg.get_int("bootstrap.threads", 0));
  const Pipeline pipe = estimate_pipeline(setup, eopt, reference);
  std::vector<SummaryRow> rows;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const auto samples = bootstrap(log.records, n_boot, sizes[k], splitmix64(opt.seed ^ (k + 1)));
    auto part = bootstrap_stats(samples, pipe, sizes[k], threads);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

inline int cmd_estimate(const Config& cfg, const Options& opt, std::ostream& out, std::ostream& err, bool with_bootstrap) {
  const CountLog log = load_counts(opt);
  const BipartiteSetup setup = load_setup(cfg);
  const EstimateOptions eopt = load_estimate_options(cfg, opt);
  const std::string method = cfg.get("estimate.method", std::string("ml"));
  if (method != "ml" && method != "eml") throw InvalidInput("config key 'estimate.method' must be ml or eml");

  const LikelihoodModel model = make_model(setup);
  const Dataset data = pool_records(log.records, setup.gammas.size());
  const EstimateResult est = method == "ml" ? ml_estimate(model, data, eopt) : eml_estimate(model, data, eopt);
  const PndMatrix p = est.pnd();

  std::vector<std::string> notes;
  const double min_count = min_expected_count(model, data, est.p);
  if (min_count < 10.0) {
    notes.push_back("smallest expected outcome count is " + fmt(min_count) +
                    " (< 10); two-photon cells are unreliable, 100 or more is recommended");
  } else if (min_count < 100.0) {
    notes.push_back("smallest expected outcome count is " + fmt(min_count) + "; 100 or more is recommended");
  }
  for (const auto& r : log.records) {
    if (r.f(kBoth, kBoth) <= 0.0) notes.push_back("setting " + std::to_string(r.nu) + " has zero all-click counts");
  }
  for (const auto& n : notes) err << "warning: " << n << '\n';

  {
    auto f = open_out(opt, "pnd_hat.csv");
    f << "# method=" << method << '\n';
    f << "# loglik=" << fmt(est.loglik) << '\n';
    f << "# iterations=" << est.iterations << '\n';
    f << "# converged=" << (est.converged ? "true" : "false") << '\n';
    f << "# seed=" << opt.seed << '\n';
    f << "# model_hash=" << hex(model_hash(setup)) << '\n';
    f << "# min_expected_count=" << fmt(min_count) << '\n';
    for (const auto& [nu, rows] : log.rows_per_setting) f << "# rows_setting_" << nu << '=' << rows << '\n';
    for (const auto& n : notes) f << "# warning=" << n << '\n';
    write_pnd_csv(f, p);
  }

  Characteristics chars = characteristic_list(p);
  {
    // Count-based estimates from the unattenuated (or first) setting.
    const CountRecord& rec = log.records.front();
    const auto [ds, di] = setup.detectors(rec.nu);
    const CountRecord corrected = noise_correct(rec, ds, di);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto guarded = [&](auto&& f) {
      try {
        return static_cast<double>(f());
      } catch (const UndefinedCharacteristic&) {
        return nan;
      } catch (const InvalidInput&) {
        return nan;
      }
    };
    CountBasedPgEta pe{nan, nan, nan};
    try {
      pe = count_based_pg_eta(corrected, {ds.gamma * ds.eta_t, ds.gamma * ds.eta_r, di.gamma * di.eta_t, di.gamma * di.eta_r});
    } catch (const std::exception&) {
    }
    chars.insert(chars.end(), {{"count_p_g", pe.p_g},
                               {"count_eta_H_s", pe.eta_H_s},
                               {"count_eta_H_i", pe.eta_H_i},
                               {"count_g2_s", guarded([&] { return count_based_g2(corrected, Mode::signal); })},
                               {"count_g2_i", guarded([&] { return count_based_g2(corrected, Mode::idler); })},
                               {"count_gh2_s", guarded([&] { return count_based_gh2(corrected, Mode::signal); })},
                               {"count_gh2_i", guarded([&] { return count_based_gh2(corrected, Mode::idler); })}});
    auto f = open_out(opt, "characteristics.csv");
    write_key_values(f, "characteristic", chars);

    const double rr = rep_rate(cfg);
    auto g = open_out(opt, "rates.csv");
    g << "quantity,per_trial,per_second\n";
    const double n = rec.n_m;
    std::array<double, 4> singles{};
    double coinc = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        const double v = rec.f(a, b) / n;
        if (t_clicked(a)) singles[0] += v;
        if (r_clicked(a)) singles[1] += v;
        if (t_clicked(b)) singles[2] += v;
        if (r_clicked(b)) singles[3] += v;
        if (a != kNone && b != kNone) coinc += v;
      }
    for (int k = 0; k < 4; ++k) {
      g << "S" << k + 1 << ',' << fmt(singles[static_cast<std::size_t>(k)]) << ','
        << fmt(singles[static_cast<std::size_t>(k)] * rr) << '\n';
    }
    g << "C_si," << fmt(coinc) << ',' << fmt(coinc * rr) << '\n';
  }

  if (with_bootstrap || cfg.has("bootstrap.sample_sizes")) {
    const auto rows = run_bootstrap(cfg, opt, log, setup, eopt, p);
    auto f = open_out(opt, "bootstrap.csv");
    write_summary_csv(f, rows);
  }

  out << "loglik=" << fmt(est.loglik) << " iterations=" << est.iterations
      << " converged=" << (est.converged ? "true" : "false") << '\n';
  for (const auto& [k, v] : chars) out << k << '=' << fmt(v) << '\n';
  if (!est.converged) {
    err << "error: estimator did not converge after " << est.iterations << " iterations\n";
    return kNoConvergence;
  }
  return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photon-pair source photon-number toolkit", "pndkit"};
  app.require_subcommand(1, 1);
  Options opt;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"jsd", "mode numbers, filter segmentation and synthesized PND of a joint spectrum"},
      {"simulate", "sample click counts from a source and detector configuration"},
      {"sweep", "accuracy sweep over pair probability, trials, efficiency, noise and attenuation"},
      {"estimate", "reconstruct the PND and characteristics from a count log"},
      {"bootstrap", "bootstrap uncertainty of the reconstruction from a count log"}};
  for (const auto& [name, help] : commands) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("--config", opt.config, "configuration file");
    sc->add_option("--seed", opt.seed, "random seed");
    sc->add_option("--out", opt.out, "output directory");
    sc->add_option("--counts", opt.counts, "count log CSV");
    sc->add_option("--reps", opt.reps, "repetitions");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const Config cfg = opt.config.empty() ? Config{} : Config::load(opt.config);
    cfg.check_known(known_keys());
    if (cmd == "jsd") return cmd_jsd(cfg, opt, out);
    if (cmd == "simulate") return cmd_simulate(cfg, opt, out);
    if (cmd == "sweep") return cmd_sweep(cfg, opt, out);
    if (cmd == "estimate") return cmd_estimate(cfg, opt, out, err, false);
    return cmd_estimate(cfg, opt, out, err, true);
  } catch (const ModelMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kModelMismatch;
  } catch (const InfeasibleData& e) {
    err << "error: " << e.what() << '\n';
    return kModelMismatch;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace pndkit::cli
