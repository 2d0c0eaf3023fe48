// Command-line benchmark harness: simulate datasets, fit them with the
// marginal/joint Langevin samplers or the exact comparator, and turn draws
// into diagnostic reports. Exit codes: 0 success, 1 divergence, 2 usage or
// configuration error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hula/diagnostics.hpp"
#include "hula/io.hpp"
#include "hula/linear_gaussian.hpp"
#include "hula/mnp.hpp"
#include "hula/mnp_mcmc.hpp"
#include "hula/sampler.hpp"
#include "hula/thread.hpp"

namespace {

namespace fs = std::filesystem;
using hula::io::config_error;
using hula::io::get_optional;
using hula::io::get_required;
using hula::io::json;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> sampler;
  std::optional<double> subsample;
  std::optional<std::int64_t> iterations;
  std::optional<std::int64_t> burn_in;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

fs::path resolve_out_dir(const Options& opt, const json& cfg,
                         const std::string& context) {
  const std::string out =
      opt.out ? *opt.out : get_optional<std::string>(cfg, "out", "", context);
  if (out.empty())
    throw config_error(context + ": output directory missing (key \"out\" or --out)");
  fs::create_directories(out);
  return out;
}

Eigen::VectorXd json_to_vector(const json& arr, const std::string& context) {
  if (!arr.is_array()) throw config_error(context + ": expected an array");
  Eigen::VectorXd v(arr.size());
  Eigen::Index k = 0;
  for (const auto& item : arr) {
    if (!item.is_number()) throw config_error(context + ": expected numbers");
    v(k++) = item.get<double>();
  }
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  json cfg = hula::io::load_json(opt.config);
  const std::string model = get_required<std::string>(cfg, "model", "simulate");
  const std::uint64_t seed =
      opt.seed ? *opt.seed
               : get_optional<std::uint64_t>(cfg, "seed", 0, "simulate");

  hula::io::RunManifest manifest;
  manifest.command = "simulate";
  manifest.seed = seed;
  manifest.config_hash = hula::io::config_hash(cfg);
  manifest.started_at = hula::io::iso_timestamp_utc();
  manifest.threads = hula::worker_thread_count();

  const fs::path out_dir = resolve_out_dir(opt, cfg, "simulate");

  if (model == "mnp") {
    hula::io::require_known_keys(
        cfg,
        {"model", "seed", "out", "n_obs", "alternatives", "factors",
         "regressors", "design", "beta_true", "kappa_true", "price_sd"},
        "simulate config");
    hula::MnpSpec spec;
    spec.n_alternatives = get_required<int>(cfg, "alternatives", "simulate");
    spec.n_factors = get_required<int>(cfg, "factors", "simulate");
    const std::string design =
        get_optional<std::string>(cfg, "design", "intercept-logprice", "simulate");
    spec.n_regressors = get_optional<int>(cfg, "regressors",
                                          spec.n_alternatives + 1, "simulate");
    const int n = get_required<int>(cfg, "n_obs", "simulate");
    const double price_sd = get_optional<double>(cfg, "price_sd", 0.5, "simulate");
    try {
      spec.validate();
    } catch (const std::exception& e) {
      throw config_error(std::string("simulate: ") + e.what());
    }
    if (n < 1) throw config_error("simulate: n_obs must be >= 1");
    if (design == "intercept-logprice") {
      if (spec.n_regressors != spec.n_alternatives + 1)
        throw config_error(
            "simulate: intercept-logprice design needs regressors = alternatives + 1");
    } else if (design != "gaussian") {
      throw config_error("simulate: unknown design \"" + design + "\"");
    }

    Eigen::VectorXd beta_true;
    if (cfg.contains("beta_true")) {
      beta_true = json_to_vector(cfg["beta_true"], "simulate beta_true");
      if (beta_true.size() != spec.n_regressors)
        throw config_error("simulate: beta_true has wrong length");
    } else {
      // default truth: a draw from the coefficient prior
      hula::RngStream rng(seed, hula::StreamPurpose::theta_init, 0, 0);
      beta_true.resize(spec.n_regressors);
      for (int k = 0; k < spec.n_regressors; ++k)
        beta_true(k) = rng.normal(0.0, std::sqrt(0.1));
    }
    Eigen::VectorXd kappa_true;
    if (cfg.contains("kappa_true")) {
      kappa_true =
          hula::wrap_angles(json_to_vector(cfg["kappa_true"], "simulate kappa_true"));
      if (kappa_true.size() != spec.angle_dim())
        throw config_error("simulate: kappa_true has wrong length");
    } else {
      kappa_true = hula::equicorrelated_angles(spec);
    }

    // regressor matrices
    std::vector<Eigen::MatrixXd> X;
    X.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      hula::RngStream rng(seed, hula::StreamPurpose::generic, 0,
                          static_cast<std::uint64_t>(i));
      if (design == "intercept-logprice") {
        Eigen::VectorXd logprices(spec.n_alternatives);
        for (int j = 0; j < spec.n_alternatives; ++j)
          logprices(j) = rng.normal(0.0, price_sd);
        X.push_back(hula::intercept_logprice_design(spec.n_alternatives, logprices));
      } else {
        Eigen::MatrixXd Xi(spec.n_alternatives, spec.n_regressors);
        for (int j = 0; j < spec.n_alternatives; ++j)
          for (int k = 0; k < spec.n_regressors; ++k) Xi(j, k) = rng.normal();
        X.push_back(std::move(Xi));
      }
    }

    hula::ParameterVector theta(spec.theta_dim());
    theta.head(spec.n_regressors) = beta_true;
    theta.tail(spec.angle_dim()) = kappa_true;

    // a placeholder dataset gives access to the generative sampler
    hula::ChoiceDataset tmp;
    tmp.y = Eigen::VectorXi::Zero(1);
    tmp.X.assign(1, Eigen::MatrixXd::Zero(spec.n_alternatives, spec.n_regressors));
    hula::MnpModel generator(spec, tmp);
    manifest.load_seconds = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    auto [y, z] = generator.simulate(theta, X, seed);
    manifest.sample_seconds = seconds_since(t1);

    const auto t2 = std::chrono::steady_clock::now();
    hula::ChoiceDataset data;
    data.y = std::move(y);
    data.X = std::move(X);
    hula::io::write_choice_dataset(out_dir, data);
    json truth;
    truth["model"] = "mnp";
    truth["alternatives"] = spec.n_alternatives;
    truth["factors"] = spec.n_factors;
    truth["regressors"] = spec.n_regressors;
    truth["design"] = design;
    truth["seed"] = seed;
    truth["beta"] = vector_to_json(beta_true);
    truth["kappa"] = vector_to_json(kappa_true);
    hula::io::atomic_write_text(out_dir / "truth.json", truth.dump(2) + "\n");
    manifest.outputs = {(out_dir / "choices.csv").string(),
                        (out_dir / "attributes.csv").string(),
                        (out_dir / "truth.json").string()};
    manifest.write_seconds = seconds_since(t2);
  } else if (model == "oracle") {
    hula::io::require_known_keys(cfg,
                                 {"model", "seed", "out", "n_obs", "sigma_z",
                                  "sigma_y", "prior_mean", "prior_var",
                                  "theta_true"},
                                 "simulate config");
    const int n = get_required<int>(cfg, "n_obs", "simulate");
    const double sigma_z = get_optional<double>(cfg, "sigma_z", 1.0, "simulate");
    const double sigma_y = get_optional<double>(cfg, "sigma_y", 1.0, "simulate");
    const double prior_mean = get_optional<double>(cfg, "prior_mean", 0.0, "simulate");
    const double prior_var = get_optional<double>(cfg, "prior_var", 1.0, "simulate");
    if (n < 0) throw config_error("simulate: n_obs must be >= 0");
    if (!(sigma_z > 0.0) || !(sigma_y > 0.0) || !(prior_var > 0.0))
      throw config_error("simulate: scales must be positive");
    double theta_true;
    if (cfg.contains("theta_true")) {
      theta_true = get_required<double>(cfg, "theta_true", "simulate");
    } else {
      hula::RngStream rng(seed, hula::StreamPurpose::theta_init, 0, 0);
      theta_true = rng.normal(prior_mean, std::sqrt(prior_var));
    }
    manifest.load_seconds = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      hula::RngStream rng(seed, hula::StreamPurpose::simulate, 0,
                          static_cast<std::uint64_t>(i));
      const double z = rng.normal(theta_true, sigma_z);
      y(i) = rng.normal(z, sigma_y);
    }
    manifest.sample_seconds = seconds_since(t1);

    const auto t2 = std::chrono::steady_clock::now();
    hula::io::write_oracle_data(out_dir, y);
    json truth;
    truth["model"] = "oracle";
    truth["seed"] = seed;
    truth["theta"] = theta_true;
    truth["sigma_z"] = sigma_z;
    truth["sigma_y"] = sigma_y;
    truth["prior_mean"] = prior_mean;
    truth["prior_var"] = prior_var;
    hula::io::atomic_write_text(out_dir / "truth.json", truth.dump(2) + "\n");
    manifest.outputs = {(out_dir / "oracle.csv").string(),
                        (out_dir / "truth.json").string()};
    manifest.write_seconds = seconds_since(t2);
  } else {
    throw config_error("simulate: unknown model \"" + model + "\"");
  }

  manifest.total_seconds = seconds_since(t0);
  manifest.finished_at = hula::io::iso_timestamp_utc();
  hula::io::write_manifest(out_dir / "manifest.json", manifest);
  std::cout << "simulate: wrote " << manifest.outputs.size() << " files to "
            << out_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit

const std::vector<std::string> kSamplers = {"hula", "hula-sub", "joint-ula",
                                            "mcmc"};

int cmd_fit(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  json cfg = hula::io::load_json(opt.config);
  hula::io::require_known_keys(
      cfg,
      {"model", "data_dir", "sampler", "out", "seed", "iterations", "burn_in",
       "thin", "tau", "gradient_draws", "subsample_fraction", "u_diag",
       "noise_scale", "train_fraction", "split_seed"},
      "fit config");

  const std::string model_kind = get_required<std::string>(cfg, "model", "fit");
  const std::string data_dir = get_required<std::string>(cfg, "data_dir", "fit");
  std::string sampler =
      opt.sampler ? *opt.sampler
                  : get_required<std::string>(cfg, "sampler", "fit");
  bool known = false;
  for (const auto& s : kSamplers) known = known || s == sampler;
  if (!known) throw config_error("fit: unknown sampler \"" + sampler + "\"");

  hula::SamplerConfig run;
  run.seed = opt.seed ? *opt.seed
                      : get_optional<std::uint64_t>(cfg, "seed", 0, "fit");
  run.iterations = opt.iterations
                       ? *opt.iterations
                       : get_required<std::int64_t>(cfg, "iterations", "fit");
  run.burn_in = opt.burn_in ? *opt.burn_in
                            : get_optional<std::int64_t>(cfg, "burn_in", 0, "fit");
  run.thin = get_optional<std::int64_t>(cfg, "thin", 1, "fit");
  run.gradient_draws = get_optional<int>(cfg, "gradient_draws", 1, "fit");
  run.noise_scale = get_optional<double>(cfg, "noise_scale", 1.0, "fit");
  const double train_fraction =
      get_optional<double>(cfg, "train_fraction", 1.0, "fit");
  const std::uint64_t split_seed =
      get_optional<std::uint64_t>(cfg, "split_seed", 0, "fit");
  double subsample_fraction =
      get_optional<double>(cfg, "subsample_fraction", 0.0, "fit");
  if (opt.subsample) subsample_fraction = *opt.subsample;
  if (sampler == "hula-sub" && !(subsample_fraction > 0.0))
    throw config_error("fit: hula-sub needs subsample_fraction in (0, 1]");
  if (sampler != "hula-sub" && subsample_fraction > 0.0)
    throw config_error("fit: subsample_fraction only applies to hula-sub");
  if (subsample_fraction < 0.0 || subsample_fraction > 1.0)
    throw config_error("fit: subsample_fraction outside (0, 1]");

  const fs::path out_dir = resolve_out_dir(opt, cfg, "fit");

  hula::io::RunManifest manifest;
  manifest.command = "fit";
  manifest.sampler = sampler;
  manifest.seed = run.seed;
  manifest.config_hash = hula::io::config_hash(cfg);
  manifest.started_at = hula::io::iso_timestamp_utc();
  manifest.threads = hula::worker_thread_count();
  manifest.iterations = run.iterations;
  manifest.burn_in = run.burn_in;

  hula::ChainOutput chain;
  std::vector<std::string> names;
  int exit_code = 0;

  if (model_kind == "mnp") {
    hula::ChoiceDataset data = hula::io::read_choice_dataset(data_dir);
    const json truth = hula::io::load_json(fs::path(data_dir) / "truth.json");
    hula::MnpSpec spec;
    spec.n_alternatives = get_required<int>(truth, "alternatives", "truth.json");
    spec.n_factors = get_required<int>(truth, "factors", "truth.json");
    spec.n_regressors = get_required<int>(truth, "regressors", "truth.json");
    spec.validate();
    data.validate(spec);
    if (train_fraction < 1.0) {
      const auto split =
          hula::io::train_test_split(data.n_obs(), train_fraction, split_seed);
      data = hula::io::dataset_subset(data, split.train);
    }
    const int n = data.n_obs();
    run.tau = get_optional<double>(cfg, "tau", 1.0 / static_cast<double>(n), "fit");
    if (sampler == "hula-sub")
      run.subsample_size = std::max(
          1, static_cast<int>(std::llround(subsample_fraction * n)));

    hula::MnpModel model(spec, data);
    if (cfg.contains("u_diag")) {
      run.u_diag = json_to_vector(cfg["u_diag"], "fit u_diag");
      if (run.u_diag.size() != spec.theta_dim())
        throw config_error("fit: u_diag has wrong length");
    } else if (sampler == "hula" || sampler == "hula-sub") {
      run.u_diag = hula::default_preconditioner(data, spec);
    }
    hula::ParameterVector theta0 = hula::ParameterVector::Zero(spec.theta_dim());
    theta0.tail(spec.angle_dim()) = hula::equicorrelated_angles(spec);
    names = hula::io::mnp_parameter_names(spec);
    manifest.load_seconds = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    try {
      if (sampler == "mcmc") {
        auto result = hula::run_exact_mcmc(data, spec, run,
                                           hula::default_mh_config(spec, run.burn_in));
        chain = std::move(result.chain);
        std::string note = "mh_acceptance=";
        for (std::size_t b = 0; b < result.acceptance_rates.size(); ++b)
          note += (b ? "," : "") +
                  hula::io::format_double(result.acceptance_rates[b]);
        manifest.note = note;
      } else if (sampler == "joint-ula") {
        chain = hula::run_joint_ula(model, run, theta0, model.initial_latents());
      } else {
        chain = hula::run_hula(model, run, theta0);
      }
    } catch (const hula::divergence_error& e) {
      chain = e.partial();
      manifest.note = e.what();
      exit_code = 1;
    }
    manifest.sample_seconds = seconds_since(t1);
  } else if (model_kind == "oracle") {
    const Eigen::VectorXd y_all = hula::io::read_oracle_data(data_dir);
    const json truth = hula::io::load_json(fs::path(data_dir) / "truth.json");
    Eigen::VectorXd y = y_all;
    if (train_fraction < 1.0) {
      const auto split = hula::io::train_test_split(
          static_cast<int>(y_all.size()), train_fraction, split_seed);
      y.resize(static_cast<Eigen::Index>(split.train.size()));
      for (std::size_t k = 0; k < split.train.size(); ++k)
        y(static_cast<Eigen::Index>(k)) = y_all(split.train[k]);
    }
    hula::LinearGaussianModel model(
        y, get_required<double>(truth, "sigma_z", "truth.json"),
        get_required<double>(truth, "sigma_y", "truth.json"),
        get_required<double>(truth, "prior_mean", "truth.json"),
        get_required<double>(truth, "prior_var", "truth.json"));
    const int n = static_cast<int>(y.size());
    run.tau = get_optional<double>(
        cfg, "tau", n > 0 ? 1.0 / static_cast<double>(n) : 0.1, "fit");
    if (sampler == "hula-sub")
      run.subsample_size = std::max(
          1, static_cast<int>(std::llround(subsample_fraction * n)));
    if (cfg.contains("u_diag")) {
      run.u_diag = json_to_vector(cfg["u_diag"], "fit u_diag");
      if (run.u_diag.size() != 1)
        throw config_error("fit: u_diag has wrong length");
    }
    hula::ParameterVector theta0(1);
    theta0(0) = model.prior_mean();
    names = {"theta_1"};
    manifest.load_seconds = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    try {
      if (sampler == "mcmc") {
        chain = hula::run_lg_exact_gibbs(model, run, theta0);
      } else if (sampler == "joint-ula") {
        chain = hula::run_joint_ula(model, run, theta0, model.initial_latents());
      } else {
        chain = hula::run_hula(model, run, theta0);
      }
    } catch (const hula::divergence_error& e) {
      chain = e.partial();
      manifest.note = e.what();
      exit_code = 1;
    }
    manifest.sample_seconds = seconds_since(t1);
  } else {
    throw config_error("fit: unknown model \"" + model_kind + "\"");
  }

  const auto t2 = std::chrono::steady_clock::now();
  hula::io::write_draws_csv(out_dir / "draws.csv", chain.draws, names);
  manifest.outputs = {(out_dir / "draws.csv").string()};
  manifest.write_seconds = seconds_since(t2);
  manifest.total_seconds = seconds_since(t0);
  manifest.finished_at = hula::io::iso_timestamp_utc();
  hula::io::write_manifest(out_dir / "manifest.json", manifest);

  std::cout << "fit: sampler=" << sampler << " retained=" << chain.draws.rows()
            << " wall_per_iter=" << chain.wall_time_per_iteration
            << "s latent_per_iter=" << chain.latent_wall_time_per_iteration
            << "s\n";
  if (exit_code != 0)
    std::cerr << "fit: chain diverged; partial output written\n";
  return exit_code;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  json cfg = hula::io::load_json(opt.config);
  hula::io::require_known_keys(
      cfg,
      {"model", "data_dir", "out", "chains", "seed", "train_fraction",
       "split_seed", "ess_max_lag", "price_grid", "target_alternative",
       "price_column", "predictive_draw_cap", "trace_stride"},
      "report config");

  const std::string model_kind = get_required<std::string>(cfg, "model", "report");
  const std::string data_dir = get_required<std::string>(cfg, "data_dir", "report");
  const std::uint64_t seed =
      opt.seed ? *opt.seed : get_optional<std::uint64_t>(cfg, "seed", 0, "report");
  const double train_fraction =
      get_optional<double>(cfg, "train_fraction", 0.8, "report");
  const std::uint64_t split_seed =
      get_optional<std::uint64_t>(cfg, "split_seed", 0, "report");
  const int ess_max_lag = get_optional<int>(cfg, "ess_max_lag", 1000, "report");
  const int draw_cap =
      get_optional<int>(cfg, "predictive_draw_cap", 2000, "report");

  if (!cfg.contains("chains") || !cfg["chains"].is_array() ||
      cfg["chains"].empty())
    throw config_error("report: \"chains\" must be a non-empty array");
  struct NamedChain {
    std::string name;
    Eigen::MatrixXd draws;
  };
  std::vector<NamedChain> chains;
  for (const auto& c : cfg["chains"]) {
    hula::io::require_known_keys(c, {"name", "draws"}, "report chain entry");
    NamedChain nc;
    nc.name = get_required<std::string>(c, "name", "report chain");
    nc.draws =
        hula::io::read_draws_csv(get_required<std::string>(c, "draws", "report chain"))
            .draws;
    chains.push_back(std::move(nc));
  }
  for (const auto& c : chains)
    if (c.draws.cols() != chains.front().draws.cols())
      throw config_error("report: chains have mismatched parameter dimensions");

  const fs::path out_dir = resolve_out_dir(opt, cfg, "report");
  hula::io::RunManifest manifest;
  manifest.command = "report";
  manifest.seed = seed;
  manifest.config_hash = hula::io::config_hash(cfg);
  manifest.started_at = hula::io::iso_timestamp_utc();
  manifest.threads = hula::worker_thread_count();

  manifest.load_seconds = seconds_since(t0);
  const auto t1 = std::chrono::steady_clock::now();

  // ESS table with ratios against the first chain
  std::ostringstream ess_csv;
  ess_csv << "parameter";
  std::vector<hula::EssReport> reports;
  for (const auto& c : chains) {
    reports.push_back(hula::effective_sample_size(c.draws, ess_max_lag));
    ess_csv << ',' << c.name << "_ess," << c.name << "_ess_per_iter";
  }
  for (std::size_t k = 1; k < chains.size(); ++k)
    ess_csv << ",ratio_" << chains[k].name << "_vs_" << chains.front().name;
  if (chains.size() == 1) ess_csv << ",ratio_" << chains.front().name << "_vs_self";
  ess_csv << '\n';
  for (Eigen::Index pcol = 0; pcol < chains.front().draws.cols(); ++pcol) {
    ess_csv << "p" << (pcol + 1);
    for (const auto& rep : reports)
      ess_csv << ',' << hula::io::format_double(rep.ess(pcol)) << ','
              << hula::io::format_double(rep.ess_per_iteration(pcol));
    if (chains.size() == 1) {
      ess_csv << ",1";
    } else {
      for (std::size_t k = 1; k < chains.size(); ++k)
        ess_csv << ','
                << hula::io::format_double(reports[k].ess_per_iteration(pcol) /
                                           reports[0].ess_per_iteration(pcol));
    }
    ess_csv << '\n';
  }

  // thinned traces
  std::vector<std::string> outputs;
  for (const auto& c : chains) {
    const std::int64_t stride = get_optional<std::int64_t>(
        cfg, "trace_stride",
        std::max<std::int64_t>(1, c.draws.rows() / 10000), "report");
    std::ostringstream trace;
    trace << "iteration";
    for (Eigen::Index pcol = 0; pcol < c.draws.cols(); ++pcol)
      trace << ",p" << (pcol + 1);
    trace << '\n';
    for (Eigen::Index i = 0; i < c.draws.rows(); i += stride) {
      trace << i;
      for (Eigen::Index pcol = 0; pcol < c.draws.cols(); ++pcol)
        trace << ',' << hula::io::format_double(c.draws(i, pcol));
      trace << '\n';
    }
    const fs::path p = out_dir / ("trace_" + c.name + ".csv");
    hula::io::atomic_write_text(p, trace.str());
    outputs.push_back(p.string());
  }

  if (model_kind == "mnp") {
    hula::ChoiceDataset data = hula::io::read_choice_dataset(data_dir);
    const int n = data.n_obs();
    const int J = static_cast<int>(data.X.at(0).rows());
    const int r = static_cast<int>(data.X.at(0).cols());
    const Eigen::Index theta_dim = chains.front().draws.cols();
    const int kdim = static_cast<int>(theta_dim) - r;
    if (kdim < 1 || (kdim + 1) % J != 0)
      throw config_error("report: draws do not match the dataset shape");
    hula::MnpSpec spec;
    spec.n_alternatives = J;
    spec.n_factors = (kdim + 1) / J - 1;
    spec.n_regressors = r;
    spec.validate();

    const int price_column_1b =
        get_optional<int>(cfg, "price_column", r, "report");
    if (price_column_1b < 1 || price_column_1b > r)
      throw config_error("report: price_column out of range");
    const int price_col = price_column_1b - 1;
    const int target =
        get_optional<int>(cfg, "target_alternative", 1, "report");

    // base attributes: elementwise mean regressor matrix
    Eigen::MatrixXd base = Eigen::MatrixXd::Zero(J, r);
    for (const auto& Xi : data.X) base += Xi;
    base /= static_cast<double>(n);

    Eigen::VectorXd grid;
    if (cfg.contains("price_grid") && cfg["price_grid"].is_array()) {
      grid = json_to_vector(cfg["price_grid"], "report price_grid");
    } else if (cfg.contains("price_grid")) {
      const json& g = cfg["price_grid"];
      hula::io::require_known_keys(g, {"min", "max", "points"}, "report price_grid");
      const double lo = get_required<double>(g, "min", "price_grid");
      const double hi = get_required<double>(g, "max", "price_grid");
      const int points = get_required<int>(g, "points", "price_grid");
      if (points < 1) throw config_error("price_grid: points must be >= 1");
      grid.resize(points);
      for (int k = 0; k < points; ++k)
        grid(k) = points == 1
                      ? lo
                      : lo + (hi - lo) * static_cast<double>(k) /
                                static_cast<double>(points - 1);
    } else {
      const double mid = base(target - 1, price_col);
      grid.setLinSpaced(10, mid - 0.5, mid + 0.5);
    }

    auto cap_draws = [&](const Eigen::MatrixXd& draws) {
      if (draws.rows() <= draw_cap) return draws;
      Eigen::MatrixXd sub(draw_cap, draws.cols());
      for (int k = 0; k < draw_cap; ++k)
        sub.row(k) = draws.row(static_cast<Eigen::Index>(
            static_cast<double>(k) * static_cast<double>(draws.rows()) /
            static_cast<double>(draw_cap)));
      return sub;
    };

    for (const auto& c : chains) {
      const Eigen::MatrixXd curve = hula::probability_curve(
          c.draws, spec, base, price_col, grid, target, seed);
      std::ostringstream cs;
      cs << "log_price";
      for (int cat = 0; cat <= J; ++cat) cs << ",prob_" << cat;
      cs << '\n';
      for (Eigen::Index g = 0; g < curve.rows(); ++g) {
        for (Eigen::Index col = 0; col < curve.cols(); ++col)
          cs << (col ? "," : "") << hula::io::format_double(curve(g, col));
        cs << '\n';
      }
      const fs::path p = out_dir / ("curves_" + c.name + ".csv");
      hula::io::atomic_write_text(p, cs.str());
      outputs.push_back(p.string());
    }

    // predictive score table over the train/test split
    const auto split = hula::io::train_test_split(n, train_fraction, split_seed);
    const auto naive =
        hula::naive_predictor(hula::io::dataset_subset(data, split.train).y, J + 1);

    auto score_subset = [&](const Eigen::MatrixXd& draws,
                            const std::vector<int>& idx) {
      Eigen::MatrixXd probs(static_cast<Eigen::Index>(idx.size()), J + 1);
      const Eigen::MatrixXd sub = cap_draws(draws);
      Eigen::VectorXi yv(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        probs.row(static_cast<Eigen::Index>(k)) =
            hula::choice_probabilities(sub, spec, data.X[static_cast<std::size_t>(idx[k])],
                                       seed, static_cast<std::uint64_t>(idx[k]))
                .transpose();
        yv(static_cast<Eigen::Index>(k)) = data.y(idx[k]);
      }
      return hula::predictive_scores(probs, yv);
    };
    auto naive_subset = [&](const std::vector<int>& idx) {
      Eigen::MatrixXd probs(static_cast<Eigen::Index>(idx.size()), J + 1);
      Eigen::VectorXi yv(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        probs.row(static_cast<Eigen::Index>(k)) = naive.probabilities.transpose();
        yv(static_cast<Eigen::Index>(k)) = data.y(idx[k]);
      }
      return hula::predictive_scores(probs, yv);
    };

    std::ostringstream sc;
    sc << "metric,split";
    for (const auto& c : chains) sc << ',' << c.name;
    sc << ",naive\n";
    std::vector<std::pair<std::string, const std::vector<int>*>> splits;
    splits.emplace_back("in", &split.train);
    if (!split.test.empty()) splits.emplace_back("out", &split.test);
    for (const std::string metric : {"log_score", "hit_rate"}) {
      for (const auto& [split_name, idx] : splits) {
        sc << metric << ',' << split_name;
        for (const auto& c : chains) {
          const auto s = score_subset(c.draws, *idx);
          sc << ','
             << hula::io::format_double(metric == "log_score" ? s.log_score
                                                              : s.hit_rate);
        }
        const auto s = naive_subset(*idx);
        sc << ','
           << hula::io::format_double(metric == "log_score" ? s.log_score
                                                            : s.hit_rate);
        sc << '\n';
      }
    }
    const fs::path p = out_dir / "scores.csv";
    hula::io::atomic_write_text(p, sc.str());
    outputs.push_back(p.string());
  } else if (model_kind != "oracle") {
    throw config_error("report: unknown model \"" + model_kind + "\"");
  }

  manifest.sample_seconds = seconds_since(t1);
  const auto t2 = std::chrono::steady_clock::now();
  const fs::path ess_path = out_dir / "ess.csv";
  hula::io::atomic_write_text(ess_path, ess_csv.str());
  outputs.push_back(ess_path.string());
  manifest.outputs = outputs;
  manifest.write_seconds = seconds_since(t2);
  manifest.total_seconds = seconds_since(t0);
  manifest.finished_at = hula::io::iso_timestamp_utc();
  hula::io::write_manifest(out_dir / "manifest.json", manifest);
  std::cout << "report: wrote " << outputs.size() << " files to "
            << out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin samplers for latent-variable choice models"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* sub, bool sampler_flags) {
    sub->add_option("--config", opt.config, "JSON configuration file")
        ->required();
    sub->add_option("--seed", opt.seed, "RNG seed override");
    sub->add_option("--out", opt.out, "output directory override");
    if (sampler_flags) {
      sub->add_option("--sampler", opt.sampler,
                      "sampler: hula, hula-sub, joint-ula, mcmc");
      sub->add_option("--subsample", opt.subsample,
                      "subsample fraction for hula-sub");
      sub->add_option("--iterations", opt.iterations, "iteration count override");
      sub->add_option("--burn-in", opt.burn_in, "burn-in override");
    }
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim, false);
  CLI::App* fit = app.add_subcommand("fit", "run a sampler on a dataset");
  add_common(fit, true);
  CLI::App* rep = app.add_subcommand("report", "diagnostics from draws files");
  add_common(rep, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(opt);
    if (fit->parsed()) return cmd_fit(opt);
    if (rep->parsed()) return cmd_report(opt);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const hula::divergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
