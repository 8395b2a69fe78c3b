#include "mixlin/altmin.hpp"
#include "mixlin/experiments.hpp"
#include "mixlin/init.hpp"
#include "mixlin/metrics.hpp"
#include "mixlin/model.hpp"
#include "mixlin/rng.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

namespace {

using mixlin::ExperimentConfig;
using nlohmann::json;

enum Exit { kOk = 0, kBadArgs = 1, kNumerical = 2, kIo = 3 };

struct Flags {
  std::string config_path;
  std::map<std::string, std::string> values;  // flag name -> raw text
  std::map<std::string, bool> switches;
  std::string input;
};

const char* const kValueFlags[][2] = {
    {"p", "ambient dimension; comma-separated list for grids"},
    {"k", "component count; comma-separated list for grids"},
    {"n", "sample count: integer, <c>p or <c>k^3; comma-separated list for grids"},
    {"delta", "pairwise parameter distance"},
    {"trials", "trials per grid cell"},
    {"seed", "master seed"},
    {"init", "initialization: tensor, random or oracle"},
    {"L", "power-method restarts (default 200 k^2)"},
    {"N", "power-method iterations (default ceil(20 ln k))"},
    {"T", "AltMin iteration cap"},
    {"tol", "exact-recovery stopping tolerance"},
    {"out", "output path"},
    {"threads", "worker threads (0 = hardware concurrency)"},
    {"timeout", "per-trial wall-clock limit in seconds"},
};
const char* const kSwitchFlags[][2] = {
    {"resample", "fresh sample slice per AltMin iteration"},
    {"split", "separate sample halves for second and third moments"},
    {"timing", "record wall-clock seconds (output is then not byte-stable)"},
    {"refit", "final least-squares pass on all samples"},
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_path, "JSON config file; flags override its keys");
  for (const auto& [name, help] : kValueFlags) app->add_option(std::string("--") + name, f.values[name], help);
  for (const auto& [name, help] : kSwitchFlags) app->add_flag(std::string("--") + name, f.switches[name], help);
}

json list_or_scalar(const std::string& raw) {
  std::vector<std::string> parts;
  std::stringstream ss(raw);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) parts.push_back(item);
  if (parts.size() == 1) return parts.front();
  json arr = json::array();
  for (const auto& s : parts) arr.push_back(s);
  return arr;
}

json merged_config(const CLI::App* app, const Flags& f) {
  json j = json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw mixlin::IoError("cannot read config '" + f.config_path + "'");
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw std::invalid_argument("config '" + f.config_path + "': " + e.what());
    }
  }
  for (const auto& [name, raw] : f.values) {
    if (app->count("--" + name) == 0) continue;
    if (name == "p" || name == "k" || name == "n")
      j[name] = list_or_scalar(raw);
    else
      j[name] = raw;
  }
  for (const auto& [name, on] : f.switches)
    if (app->count("--" + name) > 0) j[name] = on;
  if (!j.contains("threads")) j["threads"] = "0";
  return j;
}

ExperimentConfig load_config(const CLI::App* app, const Flags& f) {
  json j = merged_config(app, f);
  ExperimentConfig cfg = mixlin::config_from_json(j);
  if (cfg.threads <= 0) cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw mixlin::IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw mixlin::IoError("failed writing '" + path + "'");
}

const mixlin::GridCell& single_cell(const ExperimentConfig& cfg) {
  if (cfg.cells.size() != 1) throw std::invalid_argument("this command takes a single (n, p, k)");
  return cfg.cells.front();
}

int cmd_gen(const ExperimentConfig& cfg) {
  const auto& cell = single_cell(cfg);
  const auto params = mixlin::make_delta_spaced_params(cell.p, cell.k, cfg.delta, cfg.seed);
  const auto data = mixlin::sample_dataset(params, cell.n, cfg.seed);
  const json j = {{"params", mixlin::to_json(params)}, {"dataset", mixlin::to_json(data)}};
  write_text(cfg.output, j.dump() + '\n');
  return kOk;
}

int cmd_solve(const ExperimentConfig& cfg, const std::string& input) {
  std::optional<mixlin::MixtureParams> params;
  std::optional<mixlin::Dataset> data;
  if (!input.empty()) {
    std::ifstream in(input);
    if (!in) throw mixlin::IoError("cannot read input '" + input + "'");
    json j;
    try {
      in >> j;
      params = mixlin::params_from_json(j.at("params"));
      data = mixlin::dataset_from_json(j.at("dataset"));
    } catch (const json::exception& e) {
      throw std::invalid_argument("input '" + input + "': " + e.what());
    }
  } else {
    const auto& cell = single_cell(cfg);
    params = mixlin::make_delta_spaced_params(cell.p, cell.k, cfg.delta, cfg.seed);
    data = mixlin::sample_dataset(*params, cell.n, cfg.seed);
  }
  const auto k = params->k();
  const auto p = params->p();

  mixlin::Matrix init;
  json diagnostics = json::object();
  switch (cfg.init_mode) {
    case mixlin::InitMode::oracle: init = params->betas(); break;
    case mixlin::InitMode::random: {
      mixlin::Rng rng(cfg.seed, mixlin::Stream::random_init);
      init.resize(p, k);
      for (Eigen::Index j = 0; j < k; ++j) init.col(j) = rng.unit_vector(p);
      break;
    }
    case mixlin::InitMode::tensor: {
      mixlin::InitConfig ic = cfg.init;
      ic.split_seed = cfg.seed;
      ic.threads = cfg.threads;
      ic.power = mixlin::PowerConfig::defaults(k, cfg.seed);
      if (cfg.restarts) ic.power.restarts = *cfg.restarts;
      if (cfg.iterations) ic.power.iterations = *cfg.iterations;
      ic.power.threads = cfg.threads;
      const auto est = mixlin::tensor_init(data->view(), k, ic);
      init = est.betas0;
      diagnostics = {{"epsilon2_proxy", est.diagnostics.epsilon2_proxy},
                     {"power_residual", est.diagnostics.power_residual},
                     {"tensor_eigenvalues", est.diagnostics.tensor_eigenvalues},
                     {"clamped_weights", est.diagnostics.clamped_weights},
                     {"weights0", std::vector<double>(est.weights0.data(), est.weights0.data() + k)}};
      break;
    }
  }

  mixlin::AltMinConfig ac = cfg.altmin;
  ac.seed = cfg.seed;
  const auto res = mixlin::altmin_run(data->view(), init, ac, &*params);
  const auto report = mixlin::estimation_error(res.betas, params->betas());
  const double accuracy =
      mixlin::label_accuracy(res.labels, mixlin::EvaluationAccess::true_labels(*data), report.permutation);

  const json out = {{"error", mixlin::format_number(report.error)},
                    {"permutation", report.permutation},
                    {"per_component", report.per_component},
                    {"mean_error", report.mean_error},
                    {"init_error", mixlin::format_number(res.trace.records.front().error)},
                    {"iterations", res.trace.iterations()},
                    {"termination", mixlin::to_string(res.trace.reason)},
                    {"recovered", report.error <= mixlin::kExactRecoveryThreshold},
                    {"label_accuracy", accuracy},
                    {"init", mixlin::to_string(cfg.init_mode)},
                    {"init_diagnostics", diagnostics},
                    {"seed", cfg.seed}};
  write_text(cfg.output, out.dump(2) + '\n');
  return kOk;
}

int cmd_trace(ExperimentConfig cfg) {
  if (cfg.output.empty()) cfg.output = "trace.csv";
  const auto outcomes = mixlin::run_trace(cfg);
  mixlin::emit_trace_report(outcomes, cfg, cfg.output);
  int ok = 0;
  for (const auto& o : outcomes) ok += o.recovered;
  std::cerr << ok << '/' << outcomes.size() << " trials recovered; wrote " << cfg.output << '\n';
  return kOk;
}

int cmd_grid(ExperimentConfig cfg) {
  if (cfg.output.empty()) cfg.output = "grid.csv";
  write_text(cfg.output + ".json", mixlin::sidecar_json(cfg).dump(2) + '\n');
  std::ofstream csv(cfg.output, std::ios::binary | std::ios::trunc);
  if (!csv) throw mixlin::IoError("cannot open '" + cfg.output + "' for writing");
  csv << mixlin::kGridCsvHeader << '\n' << std::flush;
  mixlin::run_grid(cfg, [&](const mixlin::CellResult& r) {
    csv << mixlin::grid_csv_row(r, cfg.record_timing) << '\n' << std::flush;
    if (!csv) throw mixlin::IoError("failed writing '" + cfg.output + "'");
    std::cerr << "n=" << r.cell.n << " p=" << r.cell.p << " k=" << r.cell.k << " recovery "
              << r.successes << '/' << r.trials << '\n';
  });
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed linear regression: tensor initialization and alternating minimization"};
  app.require_subcommand(1);
  Flags gen_f, solve_f, trace_f, grid_f;
  auto* gen = app.add_subcommand("gen", "write Delta-spaced params and a sampled dataset as JSON");
  auto* solve = app.add_subcommand("solve", "solve one instance and print its error report");
  auto* trace = app.add_subcommand("trace", "per-iteration error traces over repeated trials");
  auto* grid = app.add_subcommand("grid", "exact-recovery probability over an (n, p, k) grid");
  add_common(gen, gen_f);
  add_common(solve, solve_f);
  add_common(trace, trace_f);
  add_common(grid, grid_f);
  solve->add_option("--input", solve_f.input, "instance JSON written by gen");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadArgs;
  }

  try {
    if (gen->parsed()) return cmd_gen(load_config(gen, gen_f));
    if (solve->parsed()) return cmd_solve(load_config(solve, solve_f), solve_f.input);
    if (trace->parsed()) return cmd_trace(load_config(trace, trace_f));
    if (grid->parsed()) return cmd_grid(load_config(grid, grid_f));
  } catch (const mixlin::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const mixlin::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid arguments: " << e.what() << '\n';
    return kBadArgs;
  } catch (const std::out_of_range& e) {
    std::cerr << "invalid arguments: " << e.what() << '\n';
    return kBadArgs;
  }
  return kBadArgs;
}
