// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "mixlin/altmin.hpp"
#include "mixlin/experiments.hpp"
#include "mixlin/init.hpp"
#include "mixlin/metrics.hpp"
#include "mixlin/model.hpp"
#include "mixlin/moments.hpp"
#include "mixlin/rng.hpp"
#include "mixlin/tensor.hpp"
#include "mixlin/tensor_power.hpp"
#include "mixlin/whitening.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

using namespace mixlin;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int hardware_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Exhaustive angular scan plus power iteration; exact enough for dim 2.
double tensor_opnorm(const Tensor3& t, Seed seed) {
  double best = symmetric_operator_norm(t, 64, seed, 200);
  if (t.dim() == 2) {
    Vector v(2);
    for (int i = 0; i < 20000; ++i) {
      const double th = M_PI * i / 20000.0;
      v << std::cos(th), std::sin(th);
      best = std::max(best, std::abs(t.evaluate(v)));
    }
  }
  return best;
}

double matrix_opnorm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix random_orthonormal(Eigen::Index d, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(d, d));
  Matrix q = qr.householderQ();
  return q;
}

MixtureParams random_params(Eigen::Index p, Eigen::Index k, Rng& rng) {
  Matrix b(p, k);
  for (Eigen::Index j = 0; j < k; ++j) b.col(j) = rng.unit_vector(p) * (0.6 + 0.4 * rng.uniform());
  Vector w(k);
  for (Eigen::Index j = 0; j < k; ++j) w[j] = 0.5 + rng.uniform();
  w /= w.sum();
  return MixtureParams(b, w);
}

// Pairs (lambda_hat, v_hat) against truth (lambda, V columns), matched by minimal max vector distance.
std::vector<int> match_vectors(const Matrix& est, const Matrix& truth) {
  return estimation_error(est, truth).permutation;
}

// ---------------------------------------------------------------------------

Verdict criterion1() {
  const Eigen::Index p = 5, k = 2;
  std::vector<double> big_m2, big_m3, small_m2, small_m3;
  for (int s = 0; s < 10; ++s) {
    const MixtureParams params = make_delta_spaced_params(p, k, 1.2, derive_seed(1001, {static_cast<std::uint64_t>(s)}));
    const PopulationMoments pop = expected_moments(params);
    const Whitener wh = whiten(pop.m2, k);
    const Tensor3 pop_m3 = expected_whitened_third_moment(params, wh.w);
    for (Eigen::Index n : {Eigen::Index(200000), Eigen::Index(20000)}) {
      const Dataset data = sample_dataset(params, n, derive_seed(2002, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(n)}));
      const auto sec = compute_second_moments(data.view(), hardware_threads());
      const auto third = compute_whitened_third_moment(data.view(), wh.w, hardware_threads());
      const double g2 = matrix_opnorm(sec.m2 - pop.m2);
      const double g3 = tensor_opnorm(third.tilde_m3 - pop_m3, static_cast<Seed>(s));
      (n == 200000 ? big_m2 : small_m2).push_back(g2);
      (n == 200000 ? big_m3 : small_m3).push_back(g3);
    }
  }
  const double max_m2 = *std::max_element(big_m2.begin(), big_m2.end());
  const double max_m3 = *std::max_element(big_m3.begin(), big_m3.end());
  auto avg = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
  const double ratio2 = avg(small_m2) / avg(big_m2);
  const double ratio3 = avg(small_m3) / avg(big_m3);
  Verdict v;
  v.pass = max_m2 <= 0.05 && max_m3 <= 0.05 && ratio2 >= 2.0 && ratio3 >= 2.0;
  v.detail = "max gap at n=2e5: M2 " + fmt("%.4f", max_m2) + ", M3~ " + fmt("%.4f", max_m3) +
             "; mean gap ratio n=2e4/n=2e5: M2 " + fmt("%.2f", ratio2) + ", M3~ " + fmt("%.2f", ratio3);
  return v;
}

Verdict criterion2() {
  Rng rng(3003);
  double worst = -1.0;
  for (int c = 0; c < 200; ++c) {
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.below(8));
    const Vector u = rng.normal_vector(p) * (0.1 + 3.0 * rng.uniform());
    const Tensor3 t = t_map(u);
    double best = symmetric_operator_norm(t, 8, static_cast<Seed>(c));
    for (int s = 0; s < 500; ++s) best = std::max(best, std::abs(t.evaluate(rng.unit_vector(p))));
    best = std::max(best, std::abs(t.evaluate(u / u.norm())));
    worst = std::max(worst, best - 3.0 * u.norm());
  }
  return {worst <= 1e-10, "max over cases of (sampled |T(u)(v,v,v)| - 3|u|) = " + fmt("%.3e", worst)};
}

Verdict criterion3() {
  Rng rng(4004);
  int ok = 0;
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const Eigen::Index k = 1 + c % 6;
    const Matrix v = random_orthonormal(k, rng);
    Vector lambda(k);
    for (Eigen::Index j = 0; j < k; ++j) lambda[j] = 1.0 + 9.0 * rng.uniform();
    Tensor3 t(k);
    for (Eigen::Index j = 0; j < k; ++j) t.add_rank_one(v.col(j), lambda[j]);
    const auto pairs = power_decompose(t, k, PowerConfig::defaults(k, static_cast<Seed>(c)));
    Matrix est(k, k);
    for (Eigen::Index j = 0; j < k; ++j) est.col(j) = pairs[static_cast<std::size_t>(j)].vector;
    const auto perm = match_vectors(est, v);
    double err = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const int m = perm[static_cast<std::size_t>(j)];
      err = std::max({err, (est.col(j) - v.col(m)).norm(), std::abs(pairs[static_cast<std::size_t>(j)].lambda - lambda[m])});
    }
    worst = std::max(worst, err);
    ok += err <= 1e-8;
  }
  return {ok == 100, std::to_string(ok) + "/100 exact; worst per-pair error " + fmt("%.2e", worst)};
}

Verdict criterion4() {
  std::string detail;
  bool pass = true;
  for (double scale : {0.001, 0.01}) {
    Rng rng(derive_seed(5005, {static_cast<std::uint64_t>(scale * 1e6)}));
    int ok = 0;
    for (int c = 0; c < 100; ++c) {
      const Eigen::Index k = 2 + c % 4;
      const Matrix v = random_orthonormal(k, rng);
      Vector lambda(k);
      for (Eigen::Index j = 0; j < k; ++j) lambda[j] = 1.0 + 4.0 * rng.uniform();
      Tensor3 e(k);
      for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = a; b < k; ++b)
          for (Eigen::Index cc = b; cc < k; ++cc) {
            const double g = rng.normal();
            const Eigen::Index idx[3] = {a, b, cc};
            int perm[3] = {0, 1, 2};
            do e(idx[perm[0]], idx[perm[1]], idx[perm[2]]) = g;
            while (std::next_permutation(perm, perm + 3));
          }
      const double eps = scale * lambda.minCoeff();
      e *= eps / symmetric_operator_norm(e, 64, static_cast<Seed>(c), 300);
      Tensor3 t(k);
      for (Eigen::Index j = 0; j < k; ++j) t.add_rank_one(v.col(j), lambda[j]);
      t += e;
      const auto pairs = power_decompose(t, k, PowerConfig::defaults(k, static_cast<Seed>(c)));
      Matrix est(k, k);
      for (Eigen::Index j = 0; j < k; ++j) est.col(j) = pairs[static_cast<std::size_t>(j)].vector;
      const auto perm = match_vectors(est, v);
      bool good = true;
      for (Eigen::Index j = 0; j < k; ++j) {
        const int m = perm[static_cast<std::size_t>(j)];
        good = good && (est.col(j) - v.col(m)).norm() <= 8.0 * eps / lambda[m] &&
               std::abs(pairs[static_cast<std::size_t>(j)].lambda - lambda[m]) <= 5.0 * eps;
      }
      ok += good;
    }
    pass = pass && ok >= 95;
    detail += (detail.empty() ? "" : ", ") + std::string("eps=") + fmt("%g", scale) + " lambda_min: " + std::to_string(ok) + "/100";
  }
  return {pass, detail + " within bounds"};
}

Verdict criterion5() {
  Rng rng(6006);
  int ok = 0, cases = 0;
  double worst_b = 0.0, worst_w = 0.0;
  while (cases < 50) {
    const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng.below(4));
    const Eigen::Index p = k + static_cast<Eigen::Index>(rng.below(5));
    const MixtureParams params = random_params(p, k, rng);
    if (difficulty(params).sigma_k < 0.05) continue;
    InitConfig cfg;
    cfg.power = PowerConfig::defaults(k, static_cast<Seed>(cases));
    const auto est = tensor_init_from_population(params, k, cfg);
    const auto rep = estimation_error(est.betas0, params.betas());
    const double we = matched_weight_error(est.weights0, params.weights(), rep.permutation);
    worst_b = std::max(worst_b, rep.error);
    worst_w = std::max(worst_w, we);
    ok += rep.error <= 1e-6 && we <= 1e-6;
    ++cases;
  }
  return {ok == 50, std::to_string(ok) + "/50 recovered; worst E " + fmt("%.2e", worst_b) + ", worst weight error " +
                        fmt("%.2e", worst_w)};
}

ExperimentConfig base_config(Eigen::Index n, Eigen::Index p, Eigen::Index k, int trials, Seed seed) {
  ExperimentConfig cfg;
  cfg.cells = {{n, p, k}};
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.threads = hardware_threads();
  cfg.trial_timeout_seconds = 600.0;
  return cfg;
}

// Error ratios e_{t+1}/e_t counted from the first iterate inside the basin
// error <= delta / (7 k^2), while e_t >= 1e-8. Returns the per-step medians.
Verdict criterion6() {
  const double delta = 1.2;
  const Eigen::Index k = 3;
  const double basin = delta / (7.0 * k * k);
  ExperimentConfig cfg = base_config(3000, 10, k, 50, 7007);
  const auto outcomes = run_trace(cfg);
  int init_in_basin = 0, entered = 0;
  std::vector<std::vector<double>> by_step;
  for (const auto& o : outcomes) {
    const auto& recs = o.trace.records;
    if (recs.empty()) continue;
    init_in_basin += recs.front().error <= basin;
    std::size_t start = recs.size();
    for (std::size_t t = 0; t < recs.size(); ++t)
      if (recs[t].error <= basin) {
        start = t;
        break;
      }
    if (start == recs.size()) continue;
    ++entered;
    for (std::size_t t = start; t + 1 < recs.size() && recs[t].error >= 1e-8; ++t) {
      const std::size_t step = t - start;
      if (by_step.size() <= step) by_step.resize(step + 1);
      by_step[step].push_back(recs[t + 1].error / recs[t].error);
    }
  }
  std::string medians;
  double worst = 0.0;
  for (const auto& r : by_step) {
    const double m = median_of(r);
    worst = std::max(worst, m);
    medians += (medians.empty() ? "" : ",") + fmt("%.2e", m);
  }
  Verdict v;
  v.pass = entered > 0 && worst <= 0.5;
  v.detail = std::to_string(init_in_basin) + "/50 inits inside basin " + fmt("%.4f", basin) + ", " +
             std::to_string(entered) + "/50 trajectories enter it; per-step median ratios [" + medians + "]";
  return v;
}

Verdict grid_check(const std::vector<Eigen::Index>& ps, const std::vector<Eigen::Index>& ks,
                   const std::function<Eigen::Index(Eigen::Index, Eigen::Index)>& n_of, bool at_least, double bound,
                   Seed seed) {
  ExperimentConfig cfg = base_config(1, 1, 1, 100, seed);
  cfg.cells.clear();
  for (auto p : ps)
    for (auto k : ks) cfg.cells.push_back({n_of(p, k), p, k});
  const auto results = run_grid(cfg);
  bool pass = true;
  std::string detail;
  for (const auto& r : results) {
    pass = pass && (at_least ? r.recovery_probability >= bound : r.recovery_probability <= bound);
    detail += (detail.empty() ? "" : ", ") + std::string("(n=") + std::to_string(r.cell.n) + ",p=" +
              std::to_string(r.cell.p) + ",k=" + std::to_string(r.cell.k) + ") " + fmt("%.2f", r.recovery_probability);
  }
  return {pass, detail};
}

Verdict criterion7() {
  const auto hi = grid_check({5, 10, 15, 20}, {3}, [](auto p, auto) { return 60 * p; }, true, 0.9, 8008);
  const auto lo = grid_check({5, 10, 15, 20}, {3}, [](auto p, auto) { return 10 * p; }, false, 0.5, 8008);
  return {hi.pass && lo.pass, "n=60p (need >= 0.9): " + hi.detail + "; n=10p (need <= 0.5): " + lo.detail};
}

Verdict criterion8() {
  const auto r = grid_check({10}, {2, 3, 4}, [](auto, auto k) { return 24 * k * k * k; }, true, 0.9, 9009);
  return {r.pass, "n=24k^3 (need >= 0.9): " + r.detail};
}

Verdict criterion9() {
  ExperimentConfig cfg = base_config(3000, 10, 3, 50, 1010);
  cfg.altmin.max_iters = 200;
  cfg.init_mode = InitMode::tensor;
  const auto tensor = run_trace(cfg);
  cfg.init_mode = InitMode::random;
  const auto random = run_trace(cfg);
  int tensor_ok = 0, random_ok = 0, random_fail = 0;
  for (const auto& o : tensor) tensor_ok += o.recovered;
  for (const auto& o : random) {
    random_ok += o.recovered;
    random_fail += o.final_error > 1e-6;
  }
  // Same comparison at a smaller sample size, reported for context only.
  cfg.cells = {{600, 10, 3}};
  int small_random = 0, small_tensor = 0;
  for (const auto& o : run_trace(cfg)) small_random += o.recovered;
  cfg.init_mode = InitMode::tensor;
  for (const auto& o : run_trace(cfg)) small_tensor += o.recovered;
  Verdict v;
  v.pass = tensor_ok > random_ok && random_fail >= 5;
  v.detail = "successes tensor " + std::to_string(tensor_ok) + "/50 vs random " + std::to_string(random_ok) +
             "/50; random failures (E > 1e-6) " + std::to_string(random_fail) + "/50 (need >= 5); at n=600: tensor " +
             std::to_string(small_tensor) + "/50 vs random " + std::to_string(small_random) + "/50";
  return v;
}

Verdict criterion10() {
  Rng rng(1111);
  // Bottleneck vs brute force.
  int bottleneck_ok = 0;
  for (int c = 0; c < 500; ++c) {
    const Eigen::Index k = 2 + c % 7;
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.below(6));
    const Matrix a = rng.normal_matrix(p, k), b = rng.normal_matrix(p, k);
    bottleneck_ok += std::abs(estimation_error_bottleneck(a, b).error - estimation_error_bruteforce(a, b).error) <= 1e-12;
  }
  // Whitened third moment vs dense p^3 contraction.
  int m3_ok = 0;
  double m3_worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const Eigen::Index p = 1 + c % 4;
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p)));
    const MixtureParams params = random_params(p, k, rng);
    const Dataset data = sample_dataset(params, 50 + static_cast<Eigen::Index>(rng.below(200)), static_cast<Seed>(c));
    const Matrix w = rng.normal_matrix(p, k);
    Tensor3 dense(p);
    Vector m1 = Vector::Zero(p);
    const double n = static_cast<double>(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const Vector x = data.xs().row(i).transpose();
      const double y3 = std::pow(data.ys()[i], 3);
      m1 += y3 * x / (6.0 * n);
      for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = 0; b < p; ++b)
          for (Eigen::Index cc = 0; cc < p; ++cc) dense(a, b, cc) += y3 * x[a] * x[b] * x[cc] / (6.0 * n);
    }
    dense -= t_map(m1);
    Tensor3 oracle(k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b)
        for (Eigen::Index cc = 0; cc < k; ++cc) {
          double s = 0.0;
          for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < p; ++j)
              for (Eigen::Index l = 0; l < p; ++l) s += dense(i, j, l) * w(i, a) * w(j, b) * w(l, cc);
          oracle(a, b, cc) = s;
        }
    const auto fast = compute_whitened_third_moment(data.view(), w);
    const double diff = (fast.tilde_m3 - oracle).max_abs() / std::max(1.0, oracle.max_abs());
    m3_worst = std::max(m3_worst, diff);
    m3_ok += diff <= 1e-10;
  }
  // Label assignment vs per-sample scan.
  int label_ok = 0;
  for (int c = 0; c < 100; ++c) {
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.below(8));
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(5));
    const Dataset data = sample_dataset(random_params(p, k, rng), 200, static_cast<Seed>(c));
    Matrix betas = rng.normal_matrix(p, k);
    if (k > 1 && c % 3 == 0) betas.col(k - 1) = betas.col(0);  // exact ties
    const auto labels = assign_labels(data.view(), betas);
    bool same = true;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      int best = 0;
      double best_r = std::abs(data.ys()[i] - data.xs().row(i).dot(betas.col(0)));
      for (Eigen::Index j = 1; j < k; ++j) {
        const double r = std::abs(data.ys()[i] - data.xs().row(i).dot(betas.col(j)));
        if (r < best_r) {
          best_r = r;
          best = static_cast<int>(j);
        }
      }
      same = same && labels[static_cast<std::size_t>(i)] == best;
    }
    label_ok += same;
  }
  Verdict v;
  v.pass = bottleneck_ok == 500 && m3_ok == 100 && label_ok == 100;
  v.detail = "bottleneck=bruteforce " + std::to_string(bottleneck_ok) + "/500; whitened M3 fast=dense " +
             std::to_string(m3_ok) + "/100 (worst rel " + fmt("%.1e", m3_worst) + "); labels=scan " +
             std::to_string(label_ok) + "/100";
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict criterion11() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("mixlin_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = MIXLIN_CLI_PATH;
  struct Cmd {
    std::string name, args;
    std::vector<std::string> files;
  };
  const std::vector<Cmd> cmds = {
      {"gen", "gen --p 6 --k 3 --n 500 --seed 5", {""}},
      {"solve", "solve --p 10 --k 3 --n 2000 --seed 5", {""}},
      {"trace", "trace --p 10 --k 3 --n 1500 --trials 8 --seed 5", {"", ".json"}},
      {"trace-random", "trace --p 8 --k 2 --n 800 --trials 6 --seed 6 --init random", {"", ".json"}},
      {"grid", "grid --p 5,10 --k 2,3 --n 20p --trials 6 --seed 5", {"", ".json"}},
  };
  int identical = 0;
  std::string failed;
  for (const auto& c : cmds) {
    std::vector<std::string> outputs;
    for (int run = 0; run < 3; ++run) {
      const int threads = run == 2 ? 4 : 1;
      const fs::path out = dir / (c.name + "_" + std::to_string(run) + ".out");
      const std::string command = "\"" + cli + "\" " + c.args + " --threads " + std::to_string(threads) +
                                  " --out \"" + out.string() + "\" 2>/dev/null";
      if (std::system(command.c_str()) != 0) {
        outputs.push_back("<command failed>" + std::to_string(run));
        continue;
      }
      std::string all;
      for (const auto& suffix : c.files) all += slurp(out.string() + suffix) + '\x1e';
      outputs.push_back(all);
    }
    const bool same = outputs[0] == outputs[1] && outputs[0] == outputs[2] && outputs[0].size() > c.files.size();
    identical += same;
    if (!same) failed += " " + c.name;
  }
  fs::remove_all(dir);
  return {identical == static_cast<int>(cmds.size()),
          std::to_string(identical) + "/" + std::to_string(cmds.size()) +
              " commands byte-identical across reruns and 1 vs 4 threads" + (failed.empty() ? "" : "; differing:" + failed)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, Verdict (*)()>> criteria = {
      {"moment concentration", criterion1},   {"T(u) operator norm", criterion2},
      {"tensor power exactness", criterion3}, {"power method perturbation", criterion4},
      {"population pipeline", criterion5},    {"AltMin linear convergence", criterion6},
      {"recovery vs p (n=60p / n=10p)", criterion7}, {"recovery vs k (n=24k^3)", criterion8},
      {"tensor vs random init", criterion9},  {"oracle equivalences", criterion10},
      {"CLI determinism", criterion11},
  };
  // --known-failures=a,b: those criteria still print FAIL but do not affect the exit code.
  std::vector<int> only, known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--known-failures=", 0) == 0) {
      std::stringstream ss(arg.substr(17));
      for (std::string tok; std::getline(ss, tok, ',');) known.push_back(std::atoi(tok.c_str()));
    } else {
      only.push_back(std::atoi(arg.c_str()));
    }
  }
  int failures = 0, known_failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool is_known = std::find(known.begin(), known.end(), id) != known.end();
    if (!v.pass) (is_known ? known_failed : failures) += 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << criteria[i].first << "): " << v.detail
              << " [" << fmt("%.1f", secs) << " s]" << std::endl;
  }
  std::cout << failures << " unexpected failure(s), " << known_failed << " known failure(s)" << std::endl;
  return failures == 0 ? 0 : 1;
}
