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

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "grlgq/lvq.hpp"
#include "grlgq/synth.hpp"
#include "test_support.hpp"

using namespace grlgq;
using namespace grlgq::testing;

namespace {

using Data = std::vector<LabeledSubspace<double>>;

Data subspaces_of(const std::vector<io::LabeledSet>& sets, Index d) {
  Data out;
  for (const auto& s : sets) out.push_back({subspace_from_set(s.frames, d).subspace, s.label});
  return out;
}

struct Synthetic {
  Data train, test;
};

Synthetic synthetic(int sets_per_class, Index d, std::uint64_t seed, double noise = 0.05) {
  synth::SynthConfig c;
  c.train_sets_per_class = c.test_sets_per_class = sets_per_class;
  c.noise = noise;
  c.seed = seed;
  const auto data = synth::generate(c);
  return {subspaces_of(data.train, d), subspaces_of(data.test, d)};
}

double mu_with(const Subspace<double>& p, const MatrixXd& v_plus, const MatrixXd& v_minus,
               const VectorXd& lambda) {
  const double dp = (lambda.array() * fresh_angles(p.basis(), v_plus).array().square()).sum();
  const double dm = (lambda.array() * fresh_angles(p.basis(), v_minus).array().square()).sum();
  return mu_of(dp, dm);
}

void check_invariants(const ModelState<double>& m) {
  for (const auto& proto : m.prototypes) CHECK(orthonormality_error(proto.subspace.basis()) < 1e-8);
  if (m.mode == Mode::GRLGQ) {
    CHECK(std::abs(m.relevance.sum() - 1) < 1e-12);
    CHECK(m.relevance.minCoeff() >= 0);
  }
}

}  // namespace

TEST_CASE("TrainConfig validation") {
  TrainConfig c;
  CHECK_NOTHROW(validate(c));
  c.mode = Mode::GLGQ;
  CHECK_THROWS_AS(validate(c), Error);
  c.gamma = 0;
  CHECK_NOTHROW(validate(c));
  c.mode = Mode::GRLGQ;
  c.gamma = 0.1;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("make_model initial relevance") {
  std::mt19937_64 rng(1);
  std::vector<Prototype<double>> protos{{random_subspace(6, 4, rng), 1}, {random_subspace(6, 4, rng), 2}};
  CHECK(make_model(protos, Mode::GLGQ).relevance == VectorXd::Ones(4));
  CHECK(make_model(protos, Mode::GRLGQ).relevance == VectorXd::Constant(4, 0.25));
  CHECK(make_model(protos, Mode::GRLGQ, true).relevance == VectorXd::Ones(4));
  protos.push_back({random_subspace(6, 3, rng), 3});
  CHECK_THROWS_AS(make_model(protos, Mode::GLGQ), Error);
}

TEST_CASE("find_winners") {
  const auto e = [](Index i) { return VectorXd(VectorXd::Unit(3, i)); };
  const auto line = [](const VectorXd& v) { return Subspace<double>(MatrixXd(v.normalized())); };
  const auto model = make_model<double>(
      {{line(e(0)), 1}, {line(e(0) + 0.2 * e(1)), 2}, {line(e(1)), 1}, {line(e(2)), 2}}, Mode::GLGQ);

  SUBCASE("winners per polarity") {
    const auto o = find_winners(model, line(e(0) + 0.05 * e(1)), 1);
    CHECK(o.winner_same == 0);
    CHECK(o.winner_other == 1);
    CHECK(o.d_plus < o.d_minus);
    CHECK(sample_cost(o) < 0);
    CHECK(o.mu == doctest::Approx(mu_of(o.d_plus, o.d_minus)));
  }
  SUBCASE("misclassified sample has positive cost") {
    const auto o = find_winners(model, line(e(0) + 0.15 * e(1)), 2);
    CHECK(o.winner_same == 1);
    CHECK(o.winner_other == 0);
    CHECK(sample_cost(o) < 0);
    const auto wrong = find_winners(model, line(e(0) + 0.15 * e(1)), 1);
    CHECK(sample_cost(wrong) > 0);
  }
  SUBCASE("ties go to the lowest index") {
    const auto tied = make_model<double>({{line(e(0)), 1}, {line(e(0)), 1}, {line(e(2)), 2}}, Mode::GLGQ);
    CHECK(find_winners(tied, line(e(0) + e(2)), 1).winner_same == 0);
  }
  SUBCASE("missing class") {
    const auto one = make_model<double>({{line(e(0)), 1}, {line(e(1)), 1}}, Mode::GLGQ);
    try {
      find_winners(one, line(e(2)), 1);
      FAIL("expected MissingClassPrototype");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::MissingClassPrototype);
    }
  }
  SUBCASE("degenerate sample") {
    const auto both = make_model<double>({{line(e(0)), 1}, {line(e(0)), 2}}, Mode::GLGQ);
    const auto o = find_winners(both, line(e(0)), 1);
    CHECK(o.degenerate());
    try {
      sample_cost(o);
      FAIL("expected DegenerateSample");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::DegenerateSample);
    }
  }
}

TEST_CASE("prototype gradient matches finite differences") {
  std::mt19937_64 rng(2);
  for (bool adaptive : {false, true}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto inst = gradient_instance(10, 3, adaptive, rng);
      const auto& lambda = inst.model.relevance;
      const auto o = find_winners(inst.model, inst.sample, 1);
      const MatrixXd vp = o.pd_plus.principal_right, vm = o.pd_minus.principal_right;

      const MatrixXd fd_plus = central_difference(
          [&](const MatrixXd& v) { return mu_with(inst.sample, v, vm, lambda); }, vp, 1e-6);
      const MatrixXd fd_minus = central_difference(
          [&](const MatrixXd& v) { return mu_with(inst.sample, vp, v, lambda); }, vm, 1e-6);
      CHECK(relative_error(prototype_gradient(o, lambda, Polarity::Plus), fd_plus) < 1e-4);
      CHECK(relative_error(prototype_gradient(o, lambda, Polarity::Minus), fd_minus) < 1e-4);
    }
  }
}

TEST_CASE("relevance gradient matches finite differences") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = gradient_instance(10, 3, true, rng);
    const auto o = find_winners(inst.model, inst.sample, 1);
    const auto f = [&](const MatrixXd& l) {
      const VectorXd lambda = l.col(0);
      return mu_of(adaptive_squared_distance(o.pd_plus.angles, lambda),
                   adaptive_squared_distance(o.pd_minus.angles, lambda));
    };
    const MatrixXd fd = central_difference(f, MatrixXd(inst.model.relevance), 1e-6);
    CHECK(relative_error(MatrixXd(relevance_gradient(o)), fd) < 1e-6);
  }
}

TEST_CASE("apply_relevance_update") {
  std::mt19937_64 rng(4);
  auto model = make_model<double>({{random_subspace(4, 2, rng), 1}, {random_subspace(4, 2, rng), 2}},
                                  Mode::GRLGQ);
  SUBCASE("zero gradient") {
    const VectorXd before = model.relevance;
    apply_relevance_update(model, VectorXd::Zero(2), 0.1);
    CHECK(model.relevance == before);
  }
  SUBCASE("arithmetic") {
    VectorXd g(2);
    g << 1, -1;
    apply_relevance_update(model, g, 0.1);
    CHECK(model.relevance(0) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(model.relevance(1) == doctest::Approx(0.6).epsilon(1e-14));
  }
  SUBCASE("clip path") {
    model.relevance << 0.1, 0.9;
    VectorXd g(2);
    g << 2, 0;
    apply_relevance_update(model, g, 0.1);
    CHECK(model.relevance(0) == 0.0);
    CHECK(model.relevance(1) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("everything clipped") {
    try {
      apply_relevance_update(model, VectorXd::Constant(2, 10.0), 1.0);
      FAIL("expected AllZeroRelevance");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AllZeroRelevance);
    }
  }
  SUBCASE("non-finite gradient") {
    CHECK_THROWS_AS(apply_relevance_update(model, VectorXd::Constant(2, std::nan("")), 0.1), Error);
  }
}

TEST_CASE("apply_prototype_update") {
  std::mt19937_64 rng(5);
  SUBCASE("only the winners move") {
    auto model = make_model<double>({{random_subspace(8, 2, rng), 1},
                                     {random_subspace(8, 2, rng), 2},
                                     {random_subspace(8, 2, rng), 3}},
                                    Mode::GLGQ);
    const auto p = random_subspace(8, 2, rng);
    const auto o = find_winners(model, p, 1);
    const int idle = 3 - int(o.winner_same + o.winner_other);
    const MatrixXd before = model.prototypes[idle].subspace.basis();
    apply_prototype_update(model, o, 0.05);
    CHECK(model.prototypes[idle].subspace.basis() == before);
    check_invariants(model);
  }
  SUBCASE("a tiny step descends") {
    for (bool adaptive : {false, true}) {
      for (int trial = 0; trial < 20; ++trial) {
        auto inst = gradient_instance(10, 3, adaptive, rng);
        const auto before = find_winners(inst.model, inst.sample, 1);
        apply_prototype_update(inst.model, before, 1e-4);
        const auto after = find_winners(inst.model, inst.sample, 1);
        CHECK(after.mu < before.mu);
      }
    }
  }
  SUBCASE("zero step keeps the manifold points") {
    auto inst = gradient_instance(10, 3, true, rng);
    const auto o = find_winners(inst.model, inst.sample, 1);
    const auto old = inst.model.prototypes;
    apply_prototype_update(inst.model, o, 0.0);
    for (std::size_t k = 0; k < old.size(); ++k) {
      CHECK(principal_angles(old[k].subspace, inst.model.prototypes[k].subspace).maxCoeff() < 1e-7);
    }
  }
}

TEST_CASE("train_step") {
  std::mt19937_64 rng(6);
  TrainConfig config;
  SUBCASE("GLGQ leaves relevance at ones") {
    auto inst = gradient_instance(10, 3, false, rng);
    config.mode = Mode::GLGQ;
    config.gamma = 0;
    for (int i = 0; i < 5; ++i) train_step(inst.model, {inst.sample, 1}, config);
    CHECK(inst.model.relevance == VectorXd::Ones(3));
    check_invariants(inst.model);
  }
  SUBCASE("GRLGQ keeps relevance on the simplex") {
    auto inst = gradient_instance(10, 3, true, rng);
    for (int i = 0; i < 5; ++i) {
      const auto o = train_step(inst.model, {inst.sample, i % 2 ? 1 : 2}, config);
      CHECK(std::isfinite(o.mu));
      check_invariants(inst.model);
    }
  }
  SUBCASE("cost of a well-classified sample drops") {
    auto inst = gradient_instance(10, 3, true, rng);
    config.eta = 1e-3;
    const auto before = train_step(inst.model, {inst.sample, 1}, config);
    CHECK(find_winners(inst.model, inst.sample, 1).mu < before.mu);
  }
}

TEST_CASE("init_prototypes") {
  const auto data = synthetic(4, 3, 7).train;
  std::mt19937_64 rng(8);
  SUBCASE("one prototype per class, labels ascending") {
    for (auto s : {InitStrategy::RandomOrthonormal, InitStrategy::RandomExample, InitStrategy::ClassPCA}) {
      const auto protos = init_prototypes<double>(data, 3, s, rng);
      REQUIRE(protos.size() == 3);
      for (int c = 0; c < 3; ++c) {
        CHECK(protos[c].label == c + 1);
        CHECK(orthonormality_error(protos[c].subspace.basis()) < 1e-10);
      }
    }
  }
  SUBCASE("RandomExample copies a sample of the class") {
    const Data single{data[0], data[4], data[8]};
    const auto protos = init_prototypes<double>(single, 3, InitStrategy::RandomExample, rng);
    for (int c = 0; c < 3; ++c) CHECK(protos[c].subspace.basis() == single[c].subspace.basis());
  }
  SUBCASE("several prototypes per class") {
    const auto protos = init_prototypes<double>(data, 3, InitStrategy::RandomOrthonormal, rng, 2);
    CHECK(protos.size() == 6);
    CHECK_THROWS_AS(init_prototypes<double>(data, 3, InitStrategy::ClassPCA, rng, 2), Error);
  }
  SUBCASE("ClassPCA equals the top singular vectors of the class") {
    const auto protos = init_prototypes<double>(data, 3, InitStrategy::ClassPCA, rng);
    MatrixXd stacked(20, 12);
    for (int i = 0; i < 4; ++i) stacked.middleCols(3 * i, 3) = data[i].subspace.basis();
    // oracle: leading eigenvectors of the scatter matrix
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(stacked * stacked.transpose());
    const MatrixXd top = eig.eigenvectors().rightCols(3);
    CHECK((projector(top) - projector(protos[0].subspace.basis())).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("ClassPCA with too few directions") {
    const Data tiny{data[0], data[4], data[8]};
    try {
      init_prototypes<double>(tiny, 4, InitStrategy::ClassPCA, rng);
      FAIL("expected RankDeficient");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RankDeficient);
    }
  }
}

TEST_CASE("fit") {
  const auto data = synthetic(10, 3, 9);
  TrainConfig config;
  config.epochs = 10;
  config.seed = 3;

  SUBCASE("invariants after every step") {
    int steps = 0;
    fit<double>(data.train, config, InitStrategy::RandomExample, [&](const ModelState<double>& m, const auto&) {
      check_invariants(m);
      ++steps;
    });
    CHECK(steps == 300);
  }
  SUBCASE("same seed, same run") {
    const auto a = fit<double>(data.train, config, InitStrategy::RandomOrthonormal);
    const auto b = fit<double>(data.train, config, InitStrategy::RandomOrthonormal);
    CHECK(a.model.relevance == b.model.relevance);
    for (std::size_t k = 0; k < a.model.prototypes.size(); ++k)
      CHECK(a.model.prototypes[k].subspace.basis() == b.model.prototypes[k].subspace.basis());
    CHECK(evaluate_sets<double>(a.model, data.test).predicted == evaluate_sets<double>(b.model, data.test).predicted);
    REQUIRE(a.epochs.size() == 10);
    for (std::size_t e = 0; e < a.epochs.size(); ++e) CHECK(a.epochs[e].mean_cost == b.epochs[e].mean_cost);
  }
  SUBCASE("GRLGQ with frozen unit relevance retraces GLGQ") {
    TrainConfig glgq = config, frozen = config;
    glgq.mode = Mode::GLGQ;
    glgq.gamma = 0;
    frozen.gamma = 0;
    frozen.freeze_relevance = true;
    const auto a = fit<double>(data.train, glgq, InitStrategy::RandomExample);
    const auto b = fit<double>(data.train, frozen, InitStrategy::RandomExample);
    for (std::size_t k = 0; k < a.model.prototypes.size(); ++k)
      CHECK(a.model.prototypes[k].subspace.basis() == b.model.prototypes[k].subspace.basis());
    for (std::size_t e = 0; e < a.epochs.size(); ++e) CHECK(a.epochs[e].mean_cost == b.epochs[e].mean_cost);
  }
  SUBCASE("learns the synthetic task") {
    const auto r = fit<double>(data.train, config, InitStrategy::RandomExample);
    CHECK(r.epochs.back().mean_cost < r.epochs.front().mean_cost);
    CHECK(evaluate_sets<double>(r.model, data.test).accuracy >= 0.95);
  }
  SUBCASE("samples must match the prototype shape") {
    Data mixed = data.train;
    std::mt19937_64 rng(1);
    mixed.push_back({random_subspace(20, 2, rng), 1});
    CHECK_THROWS_AS(fit<double>(mixed, config, InitStrategy::RandomOrthonormal), Error);
  }
}

TEST_CASE("prediction and evaluation") {
  const auto e = [](Index i) { return VectorXd(VectorXd::Unit(4, i)); };
  MatrixXd plane(4, 2);
  plane << 1, 0, 0, 1, 0, 0, 0, 0;
  MatrixXd other(4, 2);
  other << 0, 0, 0, 0, 1, 0, 0, 1;
  const auto model = make_model<double>({{Subspace<double>(plane), 1}, {Subspace<double>(other), 2}}, Mode::GLGQ);

  SUBCASE("predict_vector") {
    const auto p = predict_vector(model, e(0));
    CHECK(p.label == 1);
    CHECK(p.distances(0) == 0.0);
    CHECK(p.distances(1) == doctest::Approx(std::numbers::pi / 2));
    CHECK(predict_vector(model, VectorXd((0.2 * e(1) + e(3)).normalized())).label == 2);
  }
  SUBCASE("predict_set") {
    const auto p = predict_set(model, Subspace<double>(plane));
    CHECK(p.label == 1);
    CHECK(p.prototype == 0);
    CHECK(p.distances(1) == doctest::Approx(std::numbers::pi * std::numbers::pi / 2));
  }
  SUBCASE("evaluate_vectors with threads") {
    MatrixXd images(4, 4);
    images << e(0), e(1), e(2), e(3);
    const std::vector<int> labels{1, 1, 2, 1};
    for (int threads : {1, 3}) {
      const auto r = evaluate_vectors<double>(model, images, labels, threads);
      CHECK(r.accuracy == doctest::Approx(0.75));
      CHECK(r.confusion(0, 0) == 2);
      CHECK(r.confusion(0, 1) == 1);
      CHECK(r.confusion(1, 1) == 1);
      CHECK(r.predicted == std::vector<int>{1, 1, 2, 2});
    }
    CHECK_THROWS_AS(evaluate_vectors<double>(model, images, std::vector<int>{1, 2}), Error);
  }
}

TEST_CASE("evaluation on synthetic data") {
  const auto data = synthetic(10, 3, 11);
  TrainConfig config;
  config.epochs = 10;
  const auto r = fit<double>(data.train, config, InitStrategy::RandomExample);

  SUBCASE("confusion rows count the true labels") {
    const auto ev = evaluate_sets<double>(r.model, data.test, 2);
    for (int c = 0; c < 3; ++c) CHECK(ev.confusion.row(c).sum() == 10);
    CHECK(ev.confusion.trace() == int(std::lround(ev.accuracy * 30)));
  }
  SUBCASE("shuffled labels drop to chance") {
    Data shuffled = data.test;
    std::mt19937_64 rng(12);
    std::vector<int> labels;
    for (const auto& s : shuffled) labels.push_back(s.label);
    double total = 0;
    const int rounds = 40;
    for (int round = 0; round < rounds; ++round) {
      std::shuffle(labels.begin(), labels.end(), rng);
      for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].label = labels[i];
      total += evaluate_sets<double>(r.model, shuffled).accuracy;
    }
    CHECK(std::abs(total / rounds - 1.0 / 3) < 0.1);
  }
}

TEST_CASE("cross_validate") {
  const auto data = synthetic(6, 3, 13);
  TrainConfig config;
  config.epochs = 5;
  const auto cv = cross_validate<double>(data.train, config, InitStrategy::RandomExample, 3, 2);
  REQUIRE(cv.size() == 6);
  CHECK(cv.front().repeat == 1);
  CHECK(cv.back().repeat == 2);
  CHECK(cv.back().fold == 3);
  for (const auto& f : cv) CHECK(f.accuracy >= 0.8);
  const auto again = cross_validate<double>(data.train, config, InitStrategy::RandomExample, 3, 2);
  for (std::size_t i = 0; i < cv.size(); ++i) CHECK(cv[i].accuracy == again[i].accuracy);
  CHECK_THROWS_AS(cross_validate<double>(data.train, config, InitStrategy::RandomExample, 7), Error);
  CHECK_THROWS_AS(cross_validate<double>(data.train, config, InitStrategy::RandomExample, 1), Error);
}
