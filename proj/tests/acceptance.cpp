/*
 * Copyright 2026 The grlgq Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "grlgq/cli.hpp"
#include "grlgq/data_io.hpp"
#include "grlgq/model_io.hpp"
#include "test_support.hpp"

using namespace grlgq;
using namespace grlgq::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "grlgq");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  return {};
}

void expect_ok(const CliResult& r, const char* what) {
  if (r.code != 0) throw std::runtime_error(std::string(what) + " failed: " + r.err);
}

std::vector<double> epoch_costs(const fs::path& log) {
  std::ifstream in(log);
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    out.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  return out;
}

double mu_with(const Subspace<double>& p, const MatrixXd& vp, const MatrixXd& vm, const VectorXd& lambda) {
  const double dp = (lambda.array() * fresh_angles(p.basis(), vp).array().square()).sum();
  const double dm = (lambda.array() * fresh_angles(p.basis(), vm).array().square()).sum();
  return mu_of(dp, dm);
}

void gradient_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst_proto = 0, worst_rel = 0;
  for (int i = 0; i < 20; ++i) {
    const auto inst = gradient_instance(10, 3, true, rng);
    const auto& lambda = inst.model.relevance;
    const auto o = find_winners(inst.model, inst.sample, 1);
    const MatrixXd vp = o.pd_plus.principal_right, vm = o.pd_minus.principal_right;
    const MatrixXd fd_plus =
        central_difference([&](const MatrixXd& v) { return mu_with(inst.sample, v, vm, lambda); }, vp, 1e-6);
    const MatrixXd fd_minus =
        central_difference([&](const MatrixXd& v) { return mu_with(inst.sample, vp, v, lambda); }, vm, 1e-6);
    worst_proto = std::max({worst_proto, relative_error(prototype_gradient(o, lambda, Polarity::Plus), fd_plus),
                            relative_error(prototype_gradient(o, lambda, Polarity::Minus), fd_minus)});
    const MatrixXd fd_lambda = central_difference(
        [&](const MatrixXd& l) {
          const VectorXd v = l.col(0);
          return mu_of(adaptive_squared_distance(o.pd_plus.angles, v), adaptive_squared_distance(o.pd_minus.angles, v));
        },
        MatrixXd(lambda), 1e-6);
    worst_rel = std::max(worst_rel, relative_error(MatrixXd(relevance_gradient(o)), fd_lambda));
  }
  const double t = seconds_since(t0);
  report(worst_proto < 1e-4 && worst_rel < 1e-6 && t < 5, "gradient suite",
         "20 instances, max rel err prototype " + fmt(worst_proto) + " (< 1e-4), relevance " + fmt(worst_rel) +
             " (< 1e-6), " + fmt(t) + " s (< 5 s)");
}

void principal_angle_oracles() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  double worst_quad = 0;
  for (int i = 0; i < 100; ++i) {
    const auto p = random_subspace(5, 2, rng), w = random_subspace(5, 2, rng);
    const Eigen::Matrix2d c = p.basis().transpose() * w.basis();
    const auto [l1, l2] = quadratic_eigenvalues(c * c.transpose());
    const VectorXd ang = principal_angles(p, w);
    worst_quad = std::max({worst_quad, std::abs(std::pow(std::cos(ang(0)), 2) - l1),
                           std::abs(std::pow(std::cos(ang(1)), 2) - l2)});
  }
  double worst_grid = 0;
  for (int i = 0; i < 10; ++i) {
    const VectorXd x = gaussian(3, 1, rng).normalized();
    const auto plane = random_subspace(3, 2, rng);
    worst_grid = std::max(worst_grid, std::abs(single_vector_angle(x, plane) -
                                               grid_first_angle(x, plane.basis().col(0), plane.basis().col(1), 1e-4)));
    const auto a = random_subspace(3, 1, rng), b = random_subspace(3, 1, rng);
    worst_grid = std::max(worst_grid, std::abs(principal_angles(a, b)(0) -
                                               line_angle(a.basis().col(0), b.basis().col(0))));
  }
  const double t = seconds_since(t0);
  report(worst_quad < 1e-8 && worst_grid < 1e-3 && t < 5, "principal-angle oracles",
         "G(5,2) max |cos^2 - eig| " + fmt(worst_quad) + " (< 1e-8), G(3,1) max grid diff " + fmt(worst_grid) +
             " (< 1e-3), " + fmt(t) + " s (< 5 s)");
}

void manifold_invariants() {
  std::mt19937_64 rng(11);
  double worst_rot = 0, worst_sym = 0;
  bool ordered = true, finite = true;
  for (int i = 0; i < 300; ++i) {
    const Index ambient = 3 + i % 30, dim = 1 + i % std::min<Index>(ambient - 1, 8);
    const auto p = random_subspace(ambient, dim, rng);
    const Subspace<double> rotated(p.basis() * random_orthogonal(dim, rng));
    worst_rot = std::max(worst_rot, geodesic_distance(principal_decomposition(p, rotated)));
    const auto w = random_subspace(ambient, dim, rng);
    const VectorXd a = principal_angles(p, w), b = principal_angles(w, p);
    worst_sym = std::max(worst_sym, (a - b).cwiseAbs().maxCoeff());
    for (Index k = 0; k < dim; ++k) {
      ordered &= a(k) >= 0 && a(k) <= std::numbers::pi / 2 && (k == 0 || a(k) >= a(k - 1));
    }
    // cosines that round above 1
    const Subspace<double> scaled(p.basis() * (1 + 1e-15));
    const auto pd = principal_decomposition(p, scaled);
    finite &= pd.angles.allFinite() && g_matrix_diagonal(pd, VectorXd::Ones(dim)).allFinite() &&
              pd.cosines.maxCoeff() <= 1.0;
  }
  report(worst_rot < 1e-8 && worst_sym < 1e-10 && ordered && finite, "manifold invariants",
         "max d_g(P, PQ) " + fmt(worst_rot) + " (< 1e-8), max asymmetry " + fmt(worst_sym) +
             " (< 1e-10), ordering/range " + (ordered ? "ok" : "violated") + ", clamped cosines " +
             (finite ? "finite" : "NaN"));
}

std::vector<LabeledSubspace<double>> load_sets(const fs::path& dir, Index d) {
  return io::build_per_set_subspace_dataset(io::read_imageset_dirs(dir).sets, d).labeled();
}

void training_invariants(const fs::path& data) {
  const auto train = load_sets(data / "train", 3);
  TrainConfig config;
  config.eta = 0.05;
  config.gamma = 1e-4;
  config.epochs = 50;
  config.seed = 1;
  double worst_orth = 0, worst_sum = 0;
  bool nonneg = true;
  std::size_t steps = 0;
  fit<double>(train, config, InitStrategy::RandomExample, [&](const ModelState<double>& m, const auto&) {
    for (const auto& p : m.prototypes) worst_orth = std::max(worst_orth, orthonormality_error(p.subspace.basis()));
    worst_sum = std::max(worst_sum, std::abs(m.relevance.sum() - 1));
    nonneg &= m.relevance.minCoeff() >= 0;
    ++steps;
  });

  TrainConfig glgq = config, frozen = config;
  glgq.mode = Mode::GLGQ;
  glgq.gamma = 0;
  frozen.gamma = 0;
  frozen.freeze_relevance = true;
  const auto a = fit<double>(train, glgq, InitStrategy::RandomExample);
  const auto b = fit<double>(train, frozen, InitStrategy::RandomExample);
  bool same = a.model.relevance == b.model.relevance;
  for (std::size_t k = 0; k < a.model.prototypes.size(); ++k)
    same &= a.model.prototypes[k].subspace.basis() == b.model.prototypes[k].subspace.basis();
  for (std::size_t e = 0; e < a.epochs.size(); ++e) same &= a.epochs[e].mean_cost == b.epochs[e].mean_cost;

  report(worst_orth < 1e-8 && worst_sum < 1e-12 && nonneg && same, "training invariants",
         std::to_string(steps) + " steps, max |W'W - I| " + fmt(worst_orth) + " (< 1e-8), max |sum(lambda) - 1| " +
             fmt(worst_sum) + " (< 1e-12), lambda >= 0 " + (nonneg ? "yes" : "no") +
             ", frozen GRLGQ == GLGQ bitwise " + (same ? "yes" : "no"));
}

struct SynthRun {
  double accuracy = 0;
  ModelState<double> model;
  std::vector<double> costs;
};

SynthRun train_and_eval(const fs::path& data, const fs::path& work, int d) {
  const std::string model = (work / ("synth_d" + std::to_string(d) + ".grlgq")).string();
  expect_ok(cli_run({"train", "--mode", "grlgq", "--data", (data / "train").string(), "--d", std::to_string(d),
                     "--eta", "0.05", "--gamma", "1e-4", "--epochs", "50", "--init", "example", "--seed", "1",
                     "--model", model}),
            "train");
  const auto e = cli_run({"eval", "--model", model, "--data", (data / "test").string()});
  expect_ok(e, "eval");
  return {std::stod(field(e.out, "accuracy")), io::load_model(model), epoch_costs(model + ".epochs.csv")};
}

void synthetic_classification(const fs::path& data, const fs::path& work, double synth_seconds, SynthRun& d3) {
  const auto t0 = Clock::now();
  d3 = train_and_eval(data, work, 3);
  const double t = seconds_since(t0) + synth_seconds;
  const bool descending = d3.costs.size() >= 5 && d3.costs[4] < d3.costs[0];
  report(d3.accuracy >= 0.95 && descending && t < 10, "synthetic classification",
         "test accuracy " + fmt(100 * d3.accuracy) + "% (>= 95%), epoch cost " + fmt(d3.costs.at(0)) + " -> " +
             fmt(d3.costs.at(4)) + " at epoch 5, " + fmt(t) + " s (< 10 s)");
}

void relevance_redundancy(const fs::path& data, const fs::path& work, const SynthRun& d3) {
  const auto d6 = train_and_eval(data, work, 6);
  const double surplus = d6.model.relevance.tail(3).sum();
  const double gap = std::abs(d6.accuracy - d3.accuracy) * 100;
  std::ostringstream lam;
  for (Index k = 0; k < 6; ++k) lam << (k ? " " : "") << fmt(d6.model.relevance(k));
  report(surplus < 0.15 && gap <= 2, "relevance redundancy",
         "d=6 lambda [" + lam.str() + "], surplus mass " + fmt(surplus) + " (< 0.15), accuracy " +
             fmt(100 * d6.accuracy) + "% vs " + fmt(100 * d3.accuracy) + "% at d=3 (gap " + fmt(gap) + " <= 2)");
}

void mnist_reproduction(const fs::path& work) {
  fs::path dir;
  if (const char* env = std::getenv("GRLGQ_MNIST_DIR")) dir = env;
  else dir = fs::path(GRLGQ_SOURCE_DIR) / "data" / "mnist";
  if (!fs::is_regular_file(dir / "train-images-idx3-ubyte") || !fs::is_regular_file(dir / "t10k-images-idx3-ubyte")) {
    std::cout << "SKIP MNIST reproduction: no IDX files in " << dir.string()
              << " (set GRLGQ_MNIST_DIR to the directory holding the four uncompressed files)" << std::endl;
    return;
  }
  const auto t0 = Clock::now();
  const std::string model = (work / "mnist.grlgq").string();
  expect_ok(cli_run({"train", "--preset", "mnist", "--mode", "grlgq", "--data", dir.string(), "--model", model}),
            "train");
  const auto e = cli_run({"eval", "--model", model, "--data", dir.string(), "--kind", "vectors"});
  expect_ok(e, "eval");
  const double acc = 100 * std::stod(field(e.out, "accuracy"));
  report(std::abs(acc - 94.78) <= 1.5, "MNIST reproduction",
         "vector-mode test accuracy " + fmt(acc) + "% (target 94.78 +/- 1.5), " + fmt(seconds_since(t0)) + " s");
}

template <typename F>
void guarded(const std::string& name, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(false, name, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  TempDir work;
  guarded("gradient suite", gradient_suite);
  guarded("principal-angle oracles", principal_angle_oracles);
  guarded("manifold invariants", manifold_invariants);

  const fs::path data = work / "synth";
  double synth_seconds = 0;
  guarded("synthetic data", [&] {
    const auto t0 = Clock::now();
    expect_ok(cli_run({"synth", "--classes", "3", "--ambient", "20", "--dim", "3", "--noise", "0.05",
                       "--sets-per-class", "30", "--test-sets-per-class", "30", "--seed", "1", "--out",
                       data.string()}),
              "synth");
    synth_seconds = seconds_since(t0);
  });
  guarded("training invariants", [&] { training_invariants(data); });
  SynthRun d3;
  guarded("synthetic classification", [&] { synthetic_classification(data, work.path(), synth_seconds, d3); });
  guarded("relevance redundancy", [&] { relevance_redundancy(data, work.path(), d3); });
  guarded("MNIST reproduction", [&] { mnist_reproduction(work.path()); });
  return failures == 0 ? 0 : 1;
}
