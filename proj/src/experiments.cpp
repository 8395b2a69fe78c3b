#include "mixlin/experiments.hpp"

#include "mixlin/metrics.hpp"
#include "mixlin/parallel.hpp"
#include "mixlin/rng.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mixlin {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<nlohmann::json> as_list(const nlohmann::json& v) {
  if (v.is_array()) return {v.begin(), v.end()};
  return {v};
}

Eigen::Index parse_int(std::string_view s, std::string_view what) {
  Eigen::Index out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("invalid " + std::string(what) + ": '" + std::string(s) + "'");
  return out;
}

double parse_double(std::string_view s, std::string_view what) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("invalid " + std::string(what) + ": '" + std::string(s) + "'");
  return out;
}

Eigen::Index json_int(const nlohmann::json& v, std::string_view what) {
  if (v.is_number_integer()) return v.get<Eigen::Index>();
  if (v.is_string()) return parse_int(v.get<std::string>(), what);
  throw std::invalid_argument("expected an integer for " + std::string(what));
}

double json_double(const nlohmann::json& v, std::string_view what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_double(v.get<std::string>(), what);
  throw std::invalid_argument("expected a number for " + std::string(what));
}

bool json_bool(const nlohmann::json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
  }
  throw std::invalid_argument("expected a boolean");
}

Matrix random_unit_columns(Eigen::Index p, Eigen::Index k, Seed seed) {
  Rng rng(seed, Stream::random_init);
  Matrix m(p, k);
  for (Eigen::Index j = 0; j < k; ++j) m.col(j) = rng.unit_vector(p);
  return m;
}

PowerConfig power_for(const ExperimentConfig& cfg, Eigen::Index k, Seed seed) {
  PowerConfig pc = PowerConfig::defaults(k, seed);
  if (cfg.restarts) pc.restarts = *cfg.restarts;
  if (cfg.iterations) pc.iterations = *cfg.iterations;
  pc.threads = 1;
  return pc;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

}  // namespace

std::string_view to_string(InitMode mode) {
  switch (mode) {
    case InitMode::tensor: return "tensor";
    case InitMode::random: return "random";
    case InitMode::oracle: return "oracle";
  }
  return "unknown";
}

InitMode init_mode_from_string(std::string_view name) {
  if (name == "tensor") return InitMode::tensor;
  if (name == "random") return InitMode::random;
  if (name == "oracle") return InitMode::oracle;
  throw std::invalid_argument("unknown init mode '" + std::string(name) + "' (expected tensor, random or oracle)");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void ExperimentConfig::validate() const {
  if (cells.empty()) throw std::invalid_argument("experiment: the grid has no cells");
  if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
  for (const auto& c : cells) {
    if (c.k < 1 || c.p < 1 || c.n < 1) throw std::invalid_argument("experiment: n, p and k must be positive");
    if (c.k > c.p)
      throw std::invalid_argument("experiment: cell with k = " + std::to_string(c.k) + " > p = " + std::to_string(c.p));
    if (altmin.resample && c.n < altmin.max_iters)
      throw std::invalid_argument("experiment: resampling needs n >= T in every cell");
  }
  if (restarts && *restarts < 1) throw std::invalid_argument("experiment: L must be >= 1");
  if (iterations && *iterations < 1) throw std::invalid_argument("experiment: N must be >= 1");
  if (!(trial_timeout_seconds > 0.0)) throw std::invalid_argument("experiment: timeout must be positive");
  altmin.validate();
  if (!(init.split_fraction > 0.0 && init.split_fraction < 1.0))
    throw std::invalid_argument("experiment: split fraction must lie in (0, 1)");
}

Eigen::Index evaluate_sample_count(std::string_view expr, Eigen::Index p, Eigen::Index k) {
  std::string s(expr);
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  s.erase(std::remove(s.begin(), s.end(), '*'), s.end());
  auto ends_with = [&](std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  auto coefficient = [&](std::size_t suffix_len) {
    const std::string head = s.substr(0, s.size() - suffix_len);
    return head.empty() ? 1.0 : parse_double(head, "sample-count coefficient");
  };
  double value;
  if (ends_with("k^3"))
    value = coefficient(3) * static_cast<double>(k * k * k);
  else if (ends_with("k3"))
    value = coefficient(2) * static_cast<double>(k * k * k);
  else if (ends_with("p"))
    value = coefficient(1) * static_cast<double>(p);
  else
    return parse_int(s, "sample count");
  return static_cast<Eigen::Index>(std::llround(value));
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  ExperimentConfig cfg;
  const auto ps = as_list(j.value("p", nlohmann::json(10)));
  const auto ks = as_list(j.value("k", nlohmann::json(3)));
  const auto ns = as_list(j.value("n", nlohmann::json(3000)));
  for (const auto& pv : ps)
    for (const auto& kv : ks)
      for (const auto& nv : ns) {
        GridCell c;
        c.p = json_int(pv, "p");
        c.k = json_int(kv, "k");
        c.n = nv.is_string() ? evaluate_sample_count(nv.get<std::string>(), c.p, c.k) : json_int(nv, "n");
        cfg.cells.push_back(c);
      }
  if (j.contains("trials")) cfg.trials = static_cast<int>(json_int(j["trials"], "trials"));
  if (j.contains("delta")) cfg.delta = json_double(j["delta"], "delta");
  if (j.contains("seed")) cfg.seed = static_cast<Seed>(json_int(j["seed"], "seed"));
  if (j.contains("init")) cfg.init_mode = init_mode_from_string(j["init"].get<std::string>());
  if (j.contains("resample")) cfg.altmin.resample = json_bool(j["resample"]);
  if (j.contains("split")) cfg.init.use_split = json_bool(j["split"]);
  if (j.contains("split_fraction")) cfg.init.split_fraction = json_double(j["split_fraction"], "split_fraction");
  if (j.contains("L")) cfg.restarts = static_cast<int>(json_int(j["L"], "L"));
  if (j.contains("N")) cfg.iterations = static_cast<int>(json_int(j["N"], "N"));
  if (j.contains("T")) cfg.altmin.max_iters = static_cast<int>(json_int(j["T"], "T"));
  if (j.contains("tol")) cfg.altmin.tol = json_double(j["tol"], "tol");
  if (j.contains("refit")) cfg.altmin.final_refit = json_bool(j["refit"]);
  if (j.contains("threads")) cfg.threads = static_cast<int>(json_int(j["threads"], "threads"));
  if (j.contains("timeout")) cfg.trial_timeout_seconds = json_double(j["timeout"], "timeout");
  if (j.contains("timing")) cfg.record_timing = json_bool(j["timing"]);
  if (j.contains("out")) cfg.output = j["out"].get<std::string>();
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : cfg.cells) cells.push_back({{"n", c.n}, {"p", c.p}, {"k", c.k}});
  nlohmann::json j = {{"cells", cells},
                      {"trials", cfg.trials},
                      {"delta", cfg.delta},
                      {"init", to_string(cfg.init_mode)},
                      {"resample", cfg.altmin.resample},
                      {"split", cfg.init.use_split},
                      {"split_fraction", cfg.init.split_fraction},
                      {"T", cfg.altmin.max_iters},
                      {"tol", cfg.altmin.tol},
                      {"refit", cfg.altmin.final_refit},
                      {"seed", cfg.seed},
                      {"timeout", cfg.trial_timeout_seconds},
                      {"recovery_threshold", kExactRecoveryThreshold}};
  j["L"] = cfg.restarts ? nlohmann::json(*cfg.restarts) : nlohmann::json("200k^2");
  j["N"] = cfg.iterations ? nlohmann::json(*cfg.iterations) : nlohmann::json("ceil(20 ln max(k,2))");
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(cfg).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Seed trial_seed(Seed master, const GridCell& cell, int trial) {
  return derive_seed(master, {static_cast<std::uint64_t>(cell.n), static_cast<std::uint64_t>(cell.p),
                              static_cast<std::uint64_t>(cell.k), static_cast<std::uint64_t>(trial)});
}

TrialOutcome run_trial(const ExperimentConfig& cfg, const GridCell& cell, int trial) {
  const auto start = Clock::now();
  TrialOutcome out;
  out.cell = cell;
  out.trial = trial;
  out.seed = trial_seed(cfg.seed, cell, trial);

  const MixtureParams params = make_delta_spaced_params(cell.p, cell.k, cfg.delta, out.seed);
  const Dataset data = sample_dataset(params, cell.n, out.seed);

  Matrix init;
  try {
    switch (cfg.init_mode) {
      case InitMode::oracle: init = params.betas(); break;
      case InitMode::random: init = random_unit_columns(cell.p, cell.k, out.seed); break;
      case InitMode::tensor: {
        InitConfig ic = cfg.init;
        ic.split_seed = out.seed;
        ic.power = power_for(cfg, cell.k, out.seed);
        ic.threads = 1;
        init = tensor_init(data.view(), cell.k, ic).betas0;
        break;
      }
    }
  } catch (const NumericalError& e) {
    out.init_error = out.final_error = std::numeric_limits<double>::infinity();
    out.status = std::string("init_failed: ") + e.what();
    out.seconds = seconds_since(start);
    return out;
  }

  AltMinConfig ac = cfg.altmin;
  ac.seed = out.seed;
  ac.deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.trial_timeout_seconds));
  AltMinResult res = altmin_run(data.view(), init, ac, &params);
  out.init_error = res.trace.records.front().error;
  out.final_error = estimation_error(res.betas, params.betas()).error;
  out.iterations = res.trace.iterations();
  out.status = std::string(to_string(res.trace.reason));
  out.recovered = res.trace.reason != Termination::timeout && out.final_error <= kExactRecoveryThreshold;
  out.trace = std::move(res.trace);
  out.seconds = seconds_since(start);
  return out;
}

std::vector<TrialOutcome> run_trace(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t per_cell = static_cast<std::size_t>(cfg.trials);
  std::vector<TrialOutcome> outcomes(cfg.cells.size() * per_cell);
  parallel_for(outcomes.size(), cfg.threads, [&](std::size_t idx) {
    outcomes[idx] = run_trial(cfg, cfg.cells[idx / per_cell], static_cast<int>(idx % per_cell));
  });
  return outcomes;
}

CellResult summarize(const GridCell& cell, const std::vector<TrialOutcome>& outcomes, double wall_seconds) {
  CellResult r;
  r.cell = cell;
  r.trials = static_cast<int>(outcomes.size());
  std::vector<double> errors, iters;
  for (const auto& o : outcomes) {
    r.successes += o.recovered ? 1 : 0;
    errors.push_back(o.final_error);
    iters.push_back(static_cast<double>(o.iterations));
  }
  r.recovery_probability = r.trials ? static_cast<double>(r.successes) / r.trials : 0.0;
  r.median_final_error = median(errors);
  r.median_iterations = median(iters);
  r.wall_seconds = wall_seconds;
  return r;
}

std::vector<CellResult> run_grid(const ExperimentConfig& cfg, const std::function<void(const CellResult&)>& on_cell) {
  cfg.validate();
  std::vector<CellResult> results;
  for (const auto& cell : cfg.cells) {
    const auto start = Clock::now();
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
    parallel_for(outcomes.size(), cfg.threads,
                 [&](std::size_t t) { outcomes[t] = run_trial(cfg, cell, static_cast<int>(t)); });
    results.push_back(summarize(cell, outcomes, seconds_since(start)));
    if (on_cell) on_cell(results.back());
  }
  return results;
}

std::string grid_csv_row(const CellResult& r, bool record_timing) {
  std::ostringstream row;
  row << r.cell.n << ',' << r.cell.p << ',' << r.cell.k << ',' << r.trials << ','
      << format_number(r.recovery_probability) << ',' << format_number(r.median_final_error) << ','
      << format_number(r.median_iterations) << ',' << (record_timing ? format_number(r.wall_seconds) : "NA");
  return row.str();
}

void write_trace_csv(std::ostream& out, const std::vector<TrialOutcome>& outcomes) {
  out << kTraceCsvHeader << '\n';
  for (const auto& o : outcomes) {
    if (o.trace.records.empty()) {
      out << o.cell.n << ',' << o.cell.p << ',' << o.cell.k << ',' << o.trial << ',' << o.seed << ",0,"
          << format_number(o.final_error) << ",0,,nan," << o.status << '\n';
      continue;
    }
    for (const auto& rec : o.trace.records) {
      std::string sizes;
      for (std::size_t j = 0; j < rec.cluster_sizes.size(); ++j)
        sizes += (j ? ";" : "") + std::to_string(rec.cluster_sizes[j]);
      out << o.cell.n << ',' << o.cell.p << ',' << o.cell.k << ',' << o.trial << ',' << o.seed << ','
          << rec.iteration << ',' << format_number(rec.error) << ',' << rec.label_changes << ',' << sizes << ','
          << format_number(rec.residual) << ',' << o.status << '\n';
    }
  }
}

nlohmann::json sidecar_json(const ExperimentConfig& cfg) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& c : cfg.cells) {
    std::vector<Seed> s;
    for (int t = 0; t < cfg.trials; ++t) s.push_back(trial_seed(cfg.seed, c, t));
    seeds.push_back({{"n", c.n}, {"p", c.p}, {"k", c.k}, {"trial_seeds", s}});
  }
  return {{"config", to_json(cfg)}, {"config_hash", config_hash(cfg)}, {"seeds", seeds}};
}

void emit_report(const std::vector<CellResult>& results, const ExperimentConfig& cfg,
                 const std::filesystem::path& path) {
  if (results.empty()) throw std::invalid_argument("emit_report: no results to write");
  std::string csv(kGridCsvHeader);
  csv += '\n';
  for (const auto& r : results) csv += grid_csv_row(r, cfg.record_timing) + '\n';
  write_file(path, csv);
  write_file(sidecar_path(path), sidecar_json(cfg).dump(2) + '\n');
}

void emit_trace_report(const std::vector<TrialOutcome>& outcomes, const ExperimentConfig& cfg,
                       const std::filesystem::path& path) {
  if (outcomes.empty()) throw std::invalid_argument("emit_trace_report: no outcomes to write");
  std::ostringstream csv;
  write_trace_csv(csv, outcomes);
  write_file(path, csv.str());

  nlohmann::json meta = sidecar_json(cfg);
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& o : outcomes) {
    nlohmann::json t = {{"n", o.cell.n},          {"p", o.cell.p},
                        {"k", o.cell.k},          {"trial", o.trial},
                        {"seed", o.seed},         {"init_error", format_number(o.init_error)},
                        {"final_error", format_number(o.final_error)},
                        {"iterations", o.iterations}, {"recovered", o.recovered},
                        {"status", o.status}};
    if (cfg.record_timing) t["seconds"] = o.seconds;
    trials.push_back(std::move(t));
  }
  meta["trials"] = std::move(trials);
  write_file(sidecar_path(path), meta.dump(2) + '\n');
}

}  // namespace mixlin
