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

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "grlgq/errors.hpp"
#include "grlgq/grassmann.hpp"

namespace grlgq {

/// GLGQ uses the plain squared geodesic distance; GRLGQ learns relevance
/// weights over the principal angles.
enum class Mode : std::uint8_t { GLGQ = 0, GRLGQ = 1 };

enum class InitStrategy { RandomOrthonormal, RandomExample, ClassPCA };

/// d⁺ + d⁻ below this makes μ undefined.
inline constexpr double kDegenerateTolerance = 1e-15;

template <typename Scalar>
struct Prototype {
  Subspace<Scalar> subspace;
  int label = 0;
};

template <typename Scalar>
struct LabeledSubspace {
  Subspace<Scalar> subspace;
  int label = 0;
};

template <typename Scalar>
struct ModelState {
  std::vector<Prototype<Scalar>> prototypes;
  Vector<Scalar> relevance;
  Mode mode = Mode::GRLGQ;
  Index subspace_dim = 0;
  Index ambient_dim = 0;

  /// Sorted distinct prototype labels.
  std::vector<int> labels() const {
    std::vector<int> out;
    for (const auto& p : prototypes) out.push_back(p.label);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

struct TrainConfig {
  double eta = 0.05;
  double gamma = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 0;
  Mode mode = Mode::GRLGQ;
  int prototypes_per_class = 1;
  // Keep λ at all-ones and skip its update even in GRLGQ mode.
  bool freeze_relevance = false;
};

inline void validate(const TrainConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::Config, msg); };
  if (!(c.eta > 0)) fail("eta must be positive");
  if (!(c.gamma >= 0)) fail("gamma must be nonnegative");
  if (c.epochs < 1) fail("epochs must be positive");
  if (c.prototypes_per_class < 1) fail("prototypes per class must be positive");
  if (c.mode == Mode::GLGQ && c.gamma != 0) fail("GLGQ mode requires gamma = 0");
  if (c.mode == Mode::GRLGQ && !(c.gamma < c.eta)) fail("GRLGQ mode requires gamma < eta");
}

/// Winner pair of one training sample.
template <typename Scalar>
struct SampleOutcome {
  Index winner_same = -1;
  Index winner_other = -1;
  Scalar d_plus = 0;
  Scalar d_minus = 0;
  Scalar mu = 0;
  PrincipalDecomposition<Scalar> pd_plus;
  PrincipalDecomposition<Scalar> pd_minus;

  bool degenerate() const { return d_plus + d_minus < Scalar(kDegenerateTolerance); }
};

enum class Polarity { Plus, Minus };

template <typename Scalar>
ModelState<Scalar> make_model(std::vector<Prototype<Scalar>> prototypes, Mode mode,
                              bool freeze_relevance = false) {
  if (prototypes.empty()) {
    throw Error(ErrorCode::Config, "model needs at least one prototype");
  }
  ModelState<Scalar> m;
  m.ambient_dim = prototypes.front().subspace.ambient_dim();
  m.subspace_dim = prototypes.front().subspace.dim();
  for (const auto& p : prototypes) {
    if (p.subspace.ambient_dim() != m.ambient_dim || p.subspace.dim() != m.subspace_dim) {
      throw Error(ErrorCode::DimensionMismatch, "prototypes differ in shape");
    }
  }
  m.prototypes = std::move(prototypes);
  m.mode = mode;
  const auto d = m.subspace_dim;
  m.relevance = (mode == Mode::GLGQ || freeze_relevance)
                    ? Vector<Scalar>::Ones(d)
                    : Vector<Scalar>::Constant(d, Scalar(1) / Scalar(d));
  return m;
}

/// Nearest same-label and nearest other-label prototype under the adaptive
/// distance. Ties go to the lowest prototype index.
template <typename Scalar>
SampleOutcome<Scalar> find_winners(const ModelState<Scalar>& model, const Subspace<Scalar>& p,
                                   int label) {
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  Scalar best_same = inf, best_other = inf;
  Index same = -1, other = -1;
  for (Index k = 0; k < Index(model.prototypes.size()); ++k) {
    const auto& proto = model.prototypes[k];
    const Scalar dist =
        adaptive_squared_distance(principal_angles(p, proto.subspace), model.relevance);
    if (proto.label == label) {
      if (same < 0 || dist < best_same) best_same = dist, same = k;
    } else {
      if (other < 0 || dist < best_other) best_other = dist, other = k;
    }
  }
  if (same < 0 || other < 0) {
    throw Error(ErrorCode::MissingClassPrototype,
                "need prototypes with label " + std::to_string(label) + " and with another label");
  }
  SampleOutcome<Scalar> out;
  out.winner_same = same;
  out.winner_other = other;
  out.pd_plus = principal_decomposition(p, model.prototypes[same].subspace);
  out.pd_minus = principal_decomposition(p, model.prototypes[other].subspace);
  out.d_plus = adaptive_squared_distance(out.pd_plus, model.relevance);
  out.d_minus = adaptive_squared_distance(out.pd_minus, model.relevance);
  if (!out.degenerate()) out.mu = (out.d_plus - out.d_minus) / (out.d_plus + out.d_minus);
  return out;
}

/// μ = (d⁺ - d⁻) / (d⁺ + d⁻), the per-sample cost with φ = identity.
template <typename Scalar>
Scalar sample_cost(const SampleOutcome<Scalar>& o) {
  if (o.degenerate()) {
    throw Error(ErrorCode::DegenerateSample, "sample coincides with prototypes of both polarities");
  }
  return o.mu;
}

/// ∂μ/∂V for the chosen winner, in the rotated frame V = W Q_W:
///   plus:  -(2 d⁻ / (d⁺+d⁻)²) U⁺ G⁺
///   minus: +(2 d⁺ / (d⁺+d⁻)²) U⁻ G⁻
template <typename Scalar, typename DerivedL>
Matrix<Scalar> prototype_gradient(const SampleOutcome<Scalar>& o,
                                  const Eigen::MatrixBase<DerivedL>& relevance, Polarity which) {
  if (o.degenerate()) {
    throw Error(ErrorCode::DegenerateSample, "sample coincides with prototypes of both polarities");
  }
  const Scalar sum = o.d_plus + o.d_minus;
  const bool plus = which == Polarity::Plus;
  const auto& pd = plus ? o.pd_plus : o.pd_minus;
  const Scalar factor = plus ? -Scalar(2) * o.d_minus / (sum * sum)
                             : Scalar(2) * o.d_plus / (sum * sum);
  return factor * (pd.principal_left * g_matrix_diagonal(pd, relevance).asDiagonal());
}

/// ∂μ/∂λ = 2/(d⁺+d⁻)² · (d⁻ (θ⁺)² - d⁺ (θ⁻)²), componentwise.
template <typename Scalar>
Vector<Scalar> relevance_gradient(const SampleOutcome<Scalar>& o) {
  if (o.degenerate()) {
    throw Error(ErrorCode::DegenerateSample, "sample coincides with prototypes of both polarities");
  }
  const Scalar sum = o.d_plus + o.d_minus;
  return (Scalar(2) / (sum * sum)) *
         (o.d_minus * o.pd_plus.angles.array().square() -
          o.d_plus * o.pd_minus.angles.array().square())
             .matrix();
}

/// Moves both winners against the gradient and re-orthonormalizes them.
/// Only the two winners change.
template <typename Scalar>
void apply_prototype_update(ModelState<Scalar>& model, const SampleOutcome<Scalar>& o,
                            Scalar eta) {
  const Matrix<Scalar> grad_plus = prototype_gradient(o, model.relevance, Polarity::Plus);
  const Matrix<Scalar> grad_minus = prototype_gradient(o, model.relevance, Polarity::Minus);
  if (!grad_plus.allFinite() || !grad_minus.allFinite()) {
    throw Error(ErrorCode::NonFinite, "non-finite prototype gradient");
  }
  model.prototypes[o.winner_same].subspace =
      orthonormalize_columns(o.pd_plus.principal_right - eta * grad_plus);
  model.prototypes[o.winner_other].subspace =
      orthonormalize_columns(o.pd_minus.principal_right - eta * grad_minus);
}

/// λ ← normalize(max(λ - γ ∇, 0)).
template <typename Scalar, typename DerivedG>
void apply_relevance_update(ModelState<Scalar>& model, const Eigen::MatrixBase<DerivedG>& grad,
                            Scalar gamma) {
  if (!grad.allFinite()) throw Error(ErrorCode::NonFinite, "non-finite relevance gradient");
  Vector<Scalar> lambda = (model.relevance - gamma * grad).cwiseMax(Scalar(0));
  const Scalar total = lambda.sum();
  if (!(total > Scalar(0))) {
    throw Error(ErrorCode::AllZeroRelevance, "every relevance weight clipped to zero");
  }
  model.relevance = lambda / total;
}

/// One stochastic update; returns the outcome measured before the update.
template <typename Scalar>
SampleOutcome<Scalar> train_step(ModelState<Scalar>& model, const LabeledSubspace<Scalar>& sample,
                                 const TrainConfig& config) {
  SampleOutcome<Scalar> o = find_winners(model, sample.subspace, sample.label);
  sample_cost(o);
  const bool learn_relevance = config.mode == Mode::GRLGQ && !config.freeze_relevance;
  Vector<Scalar> lambda_grad;
  if (learn_relevance) lambda_grad = relevance_gradient(o);
  apply_prototype_update(model, o, Scalar(config.eta));
  if (learn_relevance) apply_relevance_update(model, lambda_grad, Scalar(config.gamma));
  return o;
}

namespace detail {

template <typename Scalar>
std::map<int, std::vector<Index>> indices_by_label(std::span<const LabeledSubspace<Scalar>> data) {
  std::map<int, std::vector<Index>> out;
  for (Index i = 0; i < Index(data.size()); ++i) out[data[i].label].push_back(i);
  return out;
}

template <typename Scalar, typename Rng>
Matrix<Scalar> gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = Scalar(normal(rng));
  return m;
}

}  // namespace detail

/// Top-d left singular vectors of the horizontal concatenation of sets.
template <typename Scalar>
Subspace<Scalar> pca_subspace(std::span<const Matrix<Scalar>> sets, Index d) {
  if (sets.empty()) throw Error(ErrorCode::EmptySet, "no data for PCA");
  Index cols = 0;
  for (const auto& s : sets) cols += s.cols();
  Matrix<Scalar> stacked(sets.front().rows(), cols);
  Index at = 0;
  for (const auto& s : sets) {
    if (s.rows() != stacked.rows()) throw Error(ErrorCode::InconsistentDims, "PCA inputs differ in D");
    stacked.middleCols(at, s.cols()) = s;
    at += s.cols();
  }
  return subspace_from_set(stacked, d).subspace;
}

/// One prototype per class and per `per_class` slot, labels in ascending
/// order. ClassPCA here stacks the bases of every training subspace of the
/// class; use pca_subspace on raw images when they are available.
template <typename Scalar, typename Rng>
std::vector<Prototype<Scalar>> init_prototypes(std::span<const LabeledSubspace<Scalar>> data,
                                               Index d, InitStrategy strategy, Rng& rng,
                                               int per_class = 1) {
  if (data.empty()) throw Error(ErrorCode::EmptySet, "empty training set");
  const Index ambient = data.front().subspace.ambient_dim();
  if (d < 1 || d > ambient) throw Error(ErrorCode::DimensionMismatch, "need 1 <= d <= D");
  if (strategy == InitStrategy::ClassPCA && per_class != 1) {
    throw Error(ErrorCode::Config, "ClassPCA initialization yields one prototype per class");
  }
  std::vector<Prototype<Scalar>> out;
  for (const auto& [label, idx] : detail::indices_by_label(data)) {
    switch (strategy) {
      case InitStrategy::RandomOrthonormal:
        for (int r = 0; r < per_class; ++r) {
          out.push_back({orthonormalize_columns(detail::gaussian_matrix<Scalar>(ambient, d, rng)),
                         label});
        }
        break;
      case InitStrategy::RandomExample: {
        std::vector<Index> order = idx;
        std::shuffle(order.begin(), order.end(), rng);
        for (int r = 0; r < per_class; ++r) {
          const auto& s = data[order[r % order.size()]].subspace;
          if (s.dim() != d) throw Error(ErrorCode::DimensionMismatch, "sample dim differs from d");
          out.push_back({s, label});
        }
        break;
      }
      case InitStrategy::ClassPCA: {
        std::vector<Matrix<Scalar>> bases;
        for (Index i : idx) bases.push_back(data[i].subspace.basis());
        out.push_back({pca_subspace<Scalar>(bases, d), label});
        break;
      }
    }
  }
  return out;
}

struct EpochStats {
  int epoch = 0;
  double mean_cost = 0;
  double train_accuracy = 0;
};

template <typename Scalar>
struct FitResult {
  ModelState<Scalar> model;
  std::vector<EpochStats> epochs;
};

template <typename Scalar>
using StepObserver =
    std::function<void(const ModelState<Scalar>&, const SampleOutcome<Scalar>&)>;

/// Stochastic training from the given prototypes. Each epoch visits every
/// sample once in a fresh random order; epoch statistics use the μ observed
/// before each update.
template <typename Scalar>
FitResult<Scalar> fit(std::span<const LabeledSubspace<Scalar>> data, const TrainConfig& config,
                      std::vector<Prototype<Scalar>> initial, std::mt19937_64& rng,
                      const StepObserver<Scalar>& observer = {}) {
  validate(config);
  if (data.empty()) throw Error(ErrorCode::EmptySet, "empty training set");
  FitResult<Scalar> result{make_model(std::move(initial), config.mode, config.freeze_relevance),
                           {}};
  auto& model = result.model;
  for (const auto& s : data) {
    if (s.subspace.ambient_dim() != model.ambient_dim || s.subspace.dim() != model.subspace_dim) {
      throw Error(ErrorCode::DimensionMismatch, "training sample shape differs from prototypes");
    }
  }
  std::vector<Index> order(data.size());
  std::iota(order.begin(), order.end(), Index(0));
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double cost = 0;
    std::size_t correct = 0;
    for (Index i : order) {
      const auto o = train_step(model, data[i], config);
      cost += double(o.mu);
      if (o.d_plus < o.d_minus) ++correct;
      if (observer) observer(model, o);
    }
    result.epochs.push_back(
        {epoch, cost / double(data.size()), double(correct) / double(data.size())});
  }
  return result;
}

/// Initializes prototypes with `strategy` and trains. The RNG stream is
/// seeded from config.seed and drives initialization and permutations.
template <typename Scalar>
FitResult<Scalar> fit(std::span<const LabeledSubspace<Scalar>> data, const TrainConfig& config,
                      InitStrategy strategy, const StepObserver<Scalar>& observer = {}) {
  validate(config);
  if (data.empty()) throw Error(ErrorCode::EmptySet, "empty training set");
  std::mt19937_64 rng(config.seed);
  auto initial = init_prototypes(data, data.front().subspace.dim(), strategy, rng,
                                 config.prototypes_per_class);
  return fit(data, config, std::move(initial), rng, observer);
}

template <typename Scalar>
struct Prediction {
  int label = 0;
  Index prototype = -1;
  Vector<Scalar> distances;  // one per prototype
};

namespace detail {

template <typename Scalar>
Prediction<Scalar> nearest(const ModelState<Scalar>& model, Vector<Scalar> distances) {
  Index best = 0;
  for (Index k = 1; k < distances.size(); ++k)
    if (distances(k) < distances(best)) best = k;
  return {model.prototypes[best].label, best, std::move(distances)};
}

}  // namespace detail

/// Nearest prototype under the adaptive squared distance.
template <typename Scalar>
Prediction<Scalar> predict_set(const ModelState<Scalar>& model, const Subspace<Scalar>& p) {
  Vector<Scalar> dist(model.prototypes.size());
  for (Index k = 0; k < dist.size(); ++k)
    dist(k) = adaptive_squared_distance(principal_angles(p, model.prototypes[k].subspace),
                                        model.relevance);
  return detail::nearest(model, std::move(dist));
}

/// Nearest prototype by the first principal angle θ₁ between span{x} and W.
template <typename Scalar, typename Derived>
Prediction<Scalar> predict_vector(const ModelState<Scalar>& model,
                                  const Eigen::MatrixBase<Derived>& x) {
  Vector<Scalar> dist(model.prototypes.size());
  for (Index k = 0; k < dist.size(); ++k)
    dist(k) = single_vector_angle(x, model.prototypes[k].subspace);
  return detail::nearest(model, std::move(dist));
}

struct Evaluation {
  double accuracy = 0;
  // rows: true label, cols: predicted label; label c sits at index c - 1
  Eigen::MatrixXi confusion;
  std::vector<int> predicted;
};

namespace detail {

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : std::size_t(threads), 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
}

inline Evaluation tally(std::span<const int> truth, std::vector<int> predicted, int classes) {
  Evaluation e;
  e.confusion = Eigen::MatrixXi::Zero(classes, classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    e.confusion(truth[i] - 1, predicted[i] - 1) += 1;
    if (truth[i] == predicted[i]) ++correct;
  }
  e.accuracy = truth.empty() ? 0.0 : double(correct) / double(truth.size());
  e.predicted = std::move(predicted);
  return e;
}

template <typename Scalar>
int class_count(const ModelState<Scalar>& model, std::span<const int> truth) {
  int c = 0;
  for (int l : model.labels()) c = std::max(c, l);
  for (int l : truth) {
    if (l < 1) throw Error(ErrorCode::Config, "labels must be positive");
    c = std::max(c, l);
  }
  return c;
}

}  // namespace detail

/// Accuracy and confusion matrix of predict_set over labeled subspaces.
template <typename Scalar>
Evaluation evaluate_sets(const ModelState<Scalar>& model,
                         std::span<const LabeledSubspace<Scalar>> data, int threads = 1) {
  std::vector<int> truth, predicted(data.size());
  for (const auto& s : data) truth.push_back(s.label);
  detail::parallel_for(data.size(), threads, [&](std::size_t i) {
    predicted[i] = predict_set(model, data[i].subspace).label;
  });
  return detail::tally(truth, std::move(predicted), detail::class_count(model, std::span<const int>(truth)));
}

/// Accuracy and confusion matrix of predict_vector over the unit columns of
/// `images`.
template <typename Scalar>
Evaluation evaluate_vectors(const ModelState<Scalar>& model, const Matrix<Scalar>& images,
                            std::span<const int> labels, int threads = 1) {
  if (Index(labels.size()) != images.cols()) {
    throw Error(ErrorCode::CountMismatch, "image and label counts differ");
  }
  std::vector<int> predicted(labels.size());
  detail::parallel_for(labels.size(), threads, [&](std::size_t i) {
    predicted[i] = predict_vector(model, images.col(Index(i))).label;
  });
  return detail::tally(labels, std::move(predicted), detail::class_count(model, labels));
}

struct FoldResult {
  int repeat = 0;
  int fold = 0;
  double accuracy = 0;
};

/// Repeated stratified k-fold cross-validation over labeled subspaces. Each
/// repeat reshuffles every class and deals its members round-robin into
/// `folds` folds; each fold trains from scratch on the rest.
template <typename Scalar>
std::vector<FoldResult> cross_validate(std::span<const LabeledSubspace<Scalar>> data,
                                       const TrainConfig& config, InitStrategy strategy, int folds,
                                       int repeats = 1, int threads = 1) {
  validate(config);
  if (folds < 2) throw Error(ErrorCode::Config, "need at least 2 folds");
  if (repeats < 1) throw Error(ErrorCode::Config, "need at least 1 repeat");
  const auto by_label = detail::indices_by_label(data);
  for (const auto& [label, idx] : by_label) {
    if (Index(idx.size()) < folds) {
      throw Error(ErrorCode::Config, "class " + std::to_string(label) + " has fewer samples than folds");
    }
  }
  std::mt19937_64 rng(config.seed);
  std::vector<FoldResult> out;
  for (int r = 0; r < repeats; ++r) {
    std::vector<int> fold_of(data.size());
    for (auto [label, idx] : by_label) {
      std::shuffle(idx.begin(), idx.end(), rng);
      for (std::size_t k = 0; k < idx.size(); ++k) fold_of[std::size_t(idx[k])] = int(k % std::size_t(folds));
    }
    for (int f = 0; f < folds; ++f) {
      std::vector<LabeledSubspace<Scalar>> train, held_out;
      for (std::size_t i = 0; i < data.size(); ++i) (fold_of[i] == f ? held_out : train).push_back(data[i]);
      TrainConfig c = config;
      c.seed = config.seed + std::uint64_t(r * folds + f + 1);
      const auto fitted = fit<Scalar>(train, c, strategy);
      out.push_back({r + 1, f + 1, evaluate_sets<Scalar>(fitted.model, held_out, threads).accuracy});
    }
  }
  return out;
}

}  // namespace grlgq
