// Command line front end: thin wrappers over the library calls, deterministic
// file outputs, machine-readable errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "flreg/eiv.hpp"
#include "flreg/errors.hpp"
#include "flreg/estimator.hpp"
#include "flreg/io.hpp"
#include "flreg/model_selection.hpp"
#include "flreg/prediction.hpp"
#include "flreg/synthetic.hpp"

using namespace flreg;

namespace {

struct RhoGridSpec {
  double lo = 0.0, hi = 0.0;
  int count = 0;
  bool set = false;
};

RhoGridSpec parse_rho_grid(const std::string& text) {
  RhoGridSpec spec;
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw InvalidArgument("--rho-grid expects min:max:count, got '" + text + "'");
  try {
    spec.lo = std::stod(text.substr(0, c1));
    spec.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    spec.count = std::stoi(text.substr(c2 + 1));
  } catch (const std::exception&) {
    throw InvalidArgument("--rho-grid expects numeric min:max:count, got '" + text + "'");
  }
  if (!(spec.lo > 0) || !(spec.hi >= spec.lo) || spec.count < 1)
    throw InvalidArgument("--rho-grid needs 0 < min <= max and count >= 1");
  spec.set = true;
  return spec;
}

std::vector<double> materialize_grid(const RhoGridSpec& spec) {
  std::vector<double> grid(spec.count);
  if (spec.count == 1) {
    grid[0] = spec.lo;
    return grid;
  }
  const double llo = std::log(spec.lo), lhi = std::log(spec.hi);
  for (int i = 0; i < spec.count; ++i)
    grid[i] = std::exp(llo + (lhi - llo) * i / (spec.count - 1));
  return grid;
}

struct TimeRange {
  double lo = 0.0, hi = 1.0;
  bool set = false;
};

TimeRange parse_time_range(const std::string& text) {
  TimeRange range;
  const auto c = text.find(':');
  if (c == std::string::npos)
    throw InvalidArgument("--time-range expects lo:hi, got '" + text + "'");
  try {
    range.lo = std::stod(text.substr(0, c));
    range.hi = std::stod(text.substr(c + 1));
  } catch (const std::exception&) {
    throw InvalidArgument("--time-range expects numeric lo:hi");
  }
  if (!(range.hi > range.lo)) throw InvalidArgument("--time-range needs lo < hi");
  range.set = true;
  return range;
}

// Loads curves and, for irregular long-format data, regularizes onto the
// equidistant grid of size p.
FunctionalSample load_sample(const std::string& curves_path,
                             const std::string& responses_path, int p, int m,
                             const TimeRange& range,
                             std::vector<std::string>* warnings) {
  io::LoadedCurves loaded = io::load_curves_csv(curves_path);
  if (std::holds_alternative<FunctionalSample>(loaded)) {
    FunctionalSample s = std::get<FunctionalSample>(loaded);
    if (s.y.size() == 0)
      throw InvalidInput("wide curves file '" + curves_path + "' has no response column");
    if (p > 0 && p != s.grid.p)
      throw InvalidArgument("--p " + std::to_string(p) + " conflicts with the " +
                            std::to_string(s.grid.p) + " curve columns in '" +
                            curves_path + "'");
    return s;
  }

  io::RawObservationSet raw = std::get<io::RawObservationSet>(loaded);
  if (responses_path.empty())
    throw InvalidArgument("long-format curves need --responses");
  io::load_responses_csv(responses_path, raw);

  // Affine time rescaling onto (0,1).
  double lo = range.lo, hi = range.hi;
  if (!range.set) {
    double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
    for (const auto& rec : raw.records)
      for (const auto& [t, v] : rec) {
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
      }
    if (tmin < 0.0 || tmax > 1.0) {
      const double pad = (tmax - tmin) * 1e-3 + 1e-12;
      lo = tmin - pad;
      hi = tmax + pad;
      if (warnings)
        warnings->push_back("time range inferred from data as [" +
                            io::format_double(lo) + ", " + io::format_double(hi) + "]");
    }
  }
  if (lo != 0.0 || hi != 1.0) {
    for (auto& rec : raw.records)
      for (auto& obs : rec) obs.first = (obs.first - lo) / (hi - lo);
  }

  if (p <= 0) throw InvalidArgument("long-format curves need --p (target grid size)");
  io::RegularizedSample reg = io::regularize(raw, p, m);
  if (warnings) {
    int flagged = 0;
    for (bool b : reg.extrapolated) flagged += b;
    if (flagged > 0)
      warnings->push_back(std::to_string(flagged) +
                          " curve(s) required extrapolation beyond their observed span");
  }
  return reg.sample;
}

void write_alpha_csv(const std::string& path, const FittedModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "t,alpha_hat\n";
  const Grid fine = build_grid(10 * static_cast<int>(model.alpha_hat.size()));
  for (int j = 0; j < fine.p; ++j)
    out << io::format_double(fine.points[j]) << ','
        << io::format_double(model.spline(fine.points[j])) << '\n';
}

void write_gcv_csv(const std::string& path, const GCVResult& gcv) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "rho,score,trace\n";
  for (std::size_t i = 0; i < gcv.rho_grid.size(); ++i)
    out << io::format_double(gcv.rho_grid[i]) << ',' << io::format_double(gcv.scores[i])
        << ',' << io::format_double(gcv.traces[i]) << '\n';
}

ProcessSpec make_process(const std::string& name, double q, int modes,
                         std::uint64_t seed) {
  ProcessSpec spec;
  if (name == "brownian")
    spec.kind = ProcessKind::brownian;
  else if (name == "fourier_kl")
    spec.kind = ProcessKind::fourier_kl;
  else
    throw InvalidArgument("--process must be brownian or fourier_kl, got '" + name + "'");
  spec.q = q;
  spec.modes = modes;
  spec.seed = seed;
  return spec;
}

int run(int argc, char** argv) {
  CLI::App app{"Smoothing-spline estimation for scalar-on-function linear regression"};
  app.require_subcommand(1);

  // Shared option storage.
  std::string curves_path, responses_path, model_path, out_path, alpha_out, model_out;
  std::string rho_grid_text, time_range_text, process_name = "brownian";
  std::string seminorm_name = "gamma_np", rho_rule_name = "theoretical";
  int m = 2, p = 0, replicates = 50, test_points = 50, n_single = 300, threads = 1;
  int modes = 200;
  double rho = 0.0, level = 0.95, q = 1.0, sigma_eps = 1.0, rho_scale = 3e-5;
  double sigma_delta = -1.0;
  bool no_correct = false;
  std::vector<int> n_values{50, 100, 200, 400, 800};
  std::uint64_t seed = 0;

  auto add_data_opts = [&](CLI::App* cmd) {
    cmd->add_option("--curves", curves_path, "curves CSV (wide or long format)")
        ->required();
    cmd->add_option("--responses", responses_path,
                    "responses CSV for long-format curves (curve_id,y)");
    cmd->add_option("--p", p, "equidistant grid size for regularizing long-format curves");
    cmd->add_option("--time-range", time_range_text,
                    "affine time rescaling lo:hi mapped onto [0,1]");
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "penalized fit at a fixed rho");
  add_data_opts(fit_cmd);
  fit_cmd->add_option("--m", m, "spline smoothness order (1..3)");
  fit_cmd->add_option("--rho", rho, "smoothing parameter")->required();
  fit_cmd->add_option("--out", out_path, "model JSON path")->required();
  fit_cmd->add_option("--alpha-out", alpha_out, "slope-function CSV (default <out>.alpha.csv)");

  CLI::App* gcv_cmd = app.add_subcommand("gcv", "GCV sweep and rho selection");
  add_data_opts(gcv_cmd);
  gcv_cmd->add_option("--m", m, "spline smoothness order (1..3)");
  gcv_cmd->add_option("--rho-grid", rho_grid_text, "log-spaced grid min:max:count");
  gcv_cmd->add_option("--out", out_path, "sweep CSV path (rho,score,trace)")->required();
  gcv_cmd->add_option("--model-out", model_out, "also fit at best rho and save the model");

  CLI::App* dn_cmd = app.add_subcommand("denoise-fit",
                                        "errors-in-variables corrected fit");
  add_data_opts(dn_cmd);
  dn_cmd->add_option("--m", m, "spline smoothness order (1..3)");
  dn_cmd->add_option("--rho", rho, "smoothing parameter (default: corrected GCV)");
  dn_cmd->add_option("--rho-grid", rho_grid_text, "GCV grid min:max:count");
  dn_cmd->add_option("--sigma-delta", sigma_delta,
                     "observation noise sd override (estimated when absent)");
  dn_cmd->add_flag("--no-correct", no_correct, "skip the covariance correction");
  dn_cmd->add_option("--out", out_path, "model JSON path")->required();
  dn_cmd->add_option("--alpha-out", alpha_out, "slope-function CSV");

  CLI::App* pred_cmd = app.add_subcommand("predict", "predict responses for new curves");
  pred_cmd->add_option("--model", model_path, "model JSON from fit/gcv/denoise-fit")
      ->required();
  pred_cmd->add_option("--curves", curves_path, "wide curves CSV (y column optional)")
      ->required();
  pred_cmd->add_option("--level", level, "prediction interval level (default 0.95)");
  pred_cmd->add_option("--out", out_path, "predictions CSV path")->required();

  CLI::App* rate_cmd = app.add_subcommand("simulate-rate",
                                          "Monte Carlo convergence-rate study");
  rate_cmd->add_option("--process", process_name, "brownian or fourier_kl");
  rate_cmd->add_option("--q", q, "eigendecay exponent for fourier_kl");
  rate_cmd->add_option("--modes", modes, "Karhunen-Loeve truncation");
  rate_cmd->add_option("--m", m, "spline smoothness order");
  rate_cmd->add_option("--n-values", n_values, "sample sizes")->delimiter(',');
  rate_cmd->add_option("--p", p, "grid size (default 100)");
  rate_cmd->add_option("--replicates", replicates, "replicates per n");
  rate_cmd->add_option("--seed", seed, "base seed");
  rate_cmd->add_option("--sigma-eps", sigma_eps, "response noise sd");
  rate_cmd->add_option("--seminorm", seminorm_name, "gamma_np, gamma_n or gamma_true");
  rate_cmd->add_option("--rho-rule", rho_rule_name, "theoretical or gcv");
  rate_cmd->add_option("--rho-scale", rho_scale, "multiplier on the theoretical rule");
  rate_cmd->add_option("--threads", threads, "worker threads (same output as serial)");
  rate_cmd->add_option("--out", out_path, "per-replicate CSV path")->required();
  rate_cmd->add_option("--summary-out", model_out, "JSON summary (default <out>.json)");

  CLI::App* cov_cmd = app.add_subcommand("simulate-coverage",
                                         "prediction-interval coverage study");
  cov_cmd->add_option("--process", process_name, "brownian or fourier_kl");
  cov_cmd->add_option("--q", q, "eigendecay exponent for fourier_kl");
  cov_cmd->add_option("--modes", modes, "Karhunen-Loeve truncation");
  cov_cmd->add_option("--m", m, "spline smoothness order");
  cov_cmd->add_option("--n", n_single, "training sample size");
  cov_cmd->add_option("--p", p, "grid size (default 100)");
  cov_cmd->add_option("--replicates", replicates, "number of replicates");
  cov_cmd->add_option("--test-points", test_points, "test predictions per replicate");
  cov_cmd->add_option("--level", level, "interval level");
  cov_cmd->add_option("--sigma-eps", sigma_eps, "response noise sd");
  cov_cmd->add_option("--seed", seed, "base seed");
  cov_cmd->add_option("--out", out_path, "JSON summary path")->required();

  CLI11_PARSE(app, argc, argv);

  const TimeRange range =
      time_range_text.empty() ? TimeRange{} : parse_time_range(time_range_text);
  const RhoGridSpec grid_spec =
      rho_grid_text.empty() ? RhoGridSpec{} : parse_rho_grid(rho_grid_text);

  if (fit_cmd->parsed()) {
    std::vector<std::string> warnings;
    FunctionalSample sample = load_sample(curves_path, responses_path, p, m, range,
                                          &warnings);
    const PenaltyOperator op = build_penalty(sample.grid, m);
    io::ModelFile file;
    file.model = fit(sample, op, rho);
    file.provenance.input_digest = io::file_digest(curves_path);
    file.provenance.warnings = warnings;
    io::save_model(out_path, file);
    write_alpha_csv(alpha_out.empty() ? out_path + ".alpha.csv" : alpha_out, file.model);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "fit: p=" << sample.grid.p << " n=" << sample.n() << " m=" << m
              << " rho=" << io::format_double(rho) << '\n';
    return 0;
  }

  if (gcv_cmd->parsed()) {
    std::vector<std::string> warnings;
    FunctionalSample sample = load_sample(curves_path, responses_path, p, m, range,
                                          &warnings);
    const PenaltyOperator op = build_penalty(sample.grid, m);
    CenteredDesign design = center(sample);
    GCVResult gcv = grid_spec.set
                        ? select_rho(design, op, materialize_grid(grid_spec))
                        : select_rho(design, op);
    write_gcv_csv(out_path, gcv);
    if (!model_out.empty()) {
      io::ModelFile file;
      file.model = fit(sample, op, gcv.best_rho);
      file.provenance.gcv = gcv;
      file.provenance.input_digest = io::file_digest(curves_path);
      file.provenance.warnings = warnings;
      io::save_model(model_out, file);
    }
    for (const auto& w : gcv.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "best_rho=" << io::format_double(gcv.best_rho) << '\n';
    return 0;
  }

  if (dn_cmd->parsed()) {
    std::vector<std::string> warnings;
    FunctionalSample sample = load_sample(curves_path, responses_path, p, m, range,
                                          &warnings);
    const PenaltyOperator op = build_penalty(sample.grid, m);
    const double sig2 = sigma_delta >= 0 ? sigma_delta * sigma_delta
                                         : estimate_noise_variance(sample.x);
    CenteredDesign design = center(sample);

    io::ModelFile file;
    file.sigma_delta_hat_sq = sig2;
    double use_rho = rho;
    if (no_correct) {
      if (!(use_rho > 0)) {
        GCVResult gcv = grid_spec.set
                            ? select_rho(design, op, materialize_grid(grid_spec))
                            : select_rho(design, op);
        use_rho = gcv.best_rho;
        file.provenance.gcv = gcv;
      }
      file.model = fit(sample, op, use_rho);
      file.corrected = false;
    } else {
      if (!(use_rho > 0)) {
        GCVResult gcv =
            grid_spec.set
                ? select_rho_corrected(design, op, sig2, materialize_grid(grid_spec))
                : select_rho_corrected(design, op, sig2);
        use_rho = gcv.best_rho;
        file.provenance.gcv = gcv;
      }
      NoisyFitReport report = fit_corrected(sample, op, use_rho, sig2);
      if (!report.warning.empty()) warnings.push_back(report.warning);
      file.model = report.model;
      file.sigma_delta_hat_sq = report.sigma_delta_hat_sq;
      file.corrected = report.corrected;
    }
    file.provenance.input_digest = io::file_digest(curves_path);
    file.provenance.warnings = warnings;
    io::save_model(out_path, file);
    if (!alpha_out.empty()) write_alpha_csv(alpha_out, file.model);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "sigma_delta_hat_sq=" << io::format_double(*file.sigma_delta_hat_sq)
              << " corrected=" << (*file.corrected ? "true" : "false") << '\n';
    return 0;
  }

  if (pred_cmd->parsed()) {
    io::ModelFile file = io::load_model(model_path);
    io::LoadedCurves loaded = io::load_curves_csv(curves_path);
    if (!std::holds_alternative<FunctionalSample>(loaded))
      throw InvalidInput("predict expects wide-format curves on the model grid");
    const FunctionalSample& sample = std::get<FunctionalSample>(loaded);
    if (sample.grid.p != file.model.alpha_hat.size())
      throw InvalidArgument("grid mismatch: model has p=" +
                            std::to_string(file.model.alpha_hat.size()) +
                            ", curves have p=" + std::to_string(sample.grid.p));
    if (!(level > 0.0 && level < 1.0))
      throw InvalidArgument("--level must lie in (0,1)");
    const double sigma_eps_hat = std::sqrt(file.model.sigma_eps_hat_sq);
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write '" + out_path + "'");
    out << "id,y_hat,lower,upper\n";
    Eigen::VectorXd predictions(sample.x.rows());
    for (int i = 0; i < sample.x.rows(); ++i) {
      const double point = predict(file.model, sample.x.row(i).transpose());
      PredictionInterval pi = prediction_interval(point, sigma_eps_hat, 1.0 - level);
      predictions[i] = point;
      out << i << ',' << io::format_double(pi.point) << ','
          << io::format_double(pi.lower) << ',' << io::format_double(pi.upper) << '\n';
    }
    if (sample.y.size() == sample.x.rows() && sample.y.size() > 0)
      std::cout << "eqm=" << io::format_double(eqm(predictions, sample.y)) << '\n';
    return 0;
  }

  if (rate_cmd->parsed()) {
    RateStudyConfig config;
    config.process = make_process(process_name, q, modes, seed);
    config.m = m;
    config.n_values = n_values;
    config.p = p > 0 ? p : 100;
    config.replicates = replicates;
    config.sigma_eps = sigma_eps;
    config.rho_scale = rho_scale;
    config.threads = threads;
    if (seminorm_name == "gamma_np")
      config.seminorm = SemiNorm::gamma_np;
    else if (seminorm_name == "gamma_n")
      config.seminorm = SemiNorm::gamma_n;
    else if (seminorm_name == "gamma_true")
      config.seminorm = SemiNorm::gamma_true;
    else
      throw InvalidArgument("--seminorm must be gamma_np, gamma_n or gamma_true");
    if (rho_rule_name == "theoretical")
      config.rho_rule = RhoRule::theoretical;
    else if (rho_rule_name == "gcv")
      config.rho_rule = RhoRule::gcv;
    else
      throw InvalidArgument("--rho-rule must be theoretical or gcv");

    RateStudyResult result = rate_study(config);

    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write '" + out_path + "'");
    out << "n,replicate,error\n";
    for (std::size_t ni = 0; ni < result.n_values.size(); ++ni)
      for (std::size_t r = 0; r < result.errors[ni].size(); ++r)
        out << result.n_values[ni] << ',' << r << ','
            << io::format_double(result.errors[ni][r]) << '\n';

    nlohmann::json summary;
    summary["n_values"] = result.n_values;
    summary["median_errors"] = result.median_errors;
    summary["slope"] = result.slope;
    summary["theoretical_exponent"] = result.theoretical_exponent;
    summary["process"] = process_name;
    summary["m"] = m;
    summary["p"] = config.p;
    summary["replicates"] = replicates;
    summary["seminorm"] = seminorm_name;
    summary["rho_rule"] = rho_rule_name;
    summary["seed"] = seed;
    const std::string summary_path = model_out.empty() ? out_path + ".json" : model_out;
    std::ofstream sout(summary_path);
    if (!sout) throw IoError("cannot write '" + summary_path + "'");
    sout << summary.dump(2) << '\n';
    std::cout << "slope=" << io::format_double(result.slope)
              << " theoretical=" << io::format_double(result.theoretical_exponent)
              << '\n';
    return 0;
  }

  if (cov_cmd->parsed()) {
    const int grid_p = p > 0 ? p : 100;
    if (!(level > 0.0 && level < 1.0))
      throw InvalidArgument("--level must lie in (0,1)");
    const Grid grid = build_grid(grid_p);
    const PenaltyOperator op = build_penalty(grid, m);
    long hits = 0, total = 0;
    for (int rep = 0; rep < replicates; ++rep) {
      ProcessSpec spec = make_process(process_name, q, modes,
                                      derive_seed(seed, 0xc0, rep));
      CurveSet curves = generate_curves(spec, n_single + test_points, grid);
      Eigen::VectorXd y = generate_responses(curves.x_fine, curves.fine_grid,
                                             default_alpha, kDefaultAlpha0, sigma_eps,
                                             derive_seed(seed, 0xc1, rep));
      FunctionalSample train;
      train.grid = grid;
      train.x = curves.x.topRows(n_single);
      train.y = y.head(n_single);
      CenteredDesign design = center(train);
      GCVResult gcv = select_rho(design, op);
      FittedModel model = fit(train, op, gcv.best_rho);
      const double sigma_hat = std::sqrt(model.sigma_eps_hat_sq);
      for (int k = 0; k < test_points; ++k) {
        const double point =
            predict(model, curves.x.row(n_single + k).transpose());
        PredictionInterval pi = prediction_interval(point, sigma_hat, 1.0 - level);
        const double actual = y[n_single + k];
        hits += (actual >= pi.lower && actual <= pi.upper);
        ++total;
      }
    }
    nlohmann::json summary;
    summary["level"] = level;
    summary["coverage"] = static_cast<double>(hits) / total;
    summary["hits"] = hits;
    summary["total"] = total;
    summary["n"] = n_single;
    summary["p"] = grid_p;
    summary["m"] = m;
    summary["replicates"] = replicates;
    summary["test_points"] = test_points;
    summary["sigma_eps"] = sigma_eps;
    summary["seed"] = seed;
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write '" + out_path + "'");
    out << summary.dump(2) << '\n';
    std::cout << "coverage=" << io::format_double(static_cast<double>(hits) / total)
              << '\n';
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    nlohmann::json err{{"error", {{"kind", e.kind()}, {"message", e.what()}}}};
    std::cerr << err.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", {{"kind", "internal"}, {"message", e.what()}}}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
}
