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

#include "grlgq/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "grlgq/data_io.hpp"
#include "grlgq/errors.hpp"
#include "grlgq/export.hpp"
#include "grlgq/lvq.hpp"
#include "grlgq/model_io.hpp"
#include "grlgq/pgm.hpp"
#include "grlgq/synth.hpp"

namespace grlgq::cli {

namespace fs = std::filesystem;

namespace {

struct Preset {
  int d, m, sets_per_class, epochs;
  double eta, gamma;
  std::string init;
};

// Learning rates, d and epoch budgets reported for each benchmark; m,
// sets_per_class and the epochs for the image-set tasks are local choices.
const std::map<std::string, Preset>& presets() {
  static const std::map<std::string, Preset> table{
      {"mnist", {12, 20, 300, 40, 1e-4, 1e-7, "pca"}},
      {"yale", {7, 20, 60, 200, 1e-2, 1e-5, "pca"}},
      {"yaleb", {10, 0, 0, 100, 0.05, 1e-4, "example"}},
      {"eth80", {5, 0, 0, 100, 0.05, 1e-4, "example"}},
      {"ucf", {22, 0, 0, 100, 0.05, 1e-4, "example"}},
  };
  return table;
}

const std::map<std::string, InitStrategy> kInitNames{
    {"random", InitStrategy::RandomOrthonormal},
    {"example", InitStrategy::RandomExample},
    {"pca", InitStrategy::ClassPCA},
};

const std::map<std::string, Mode> kModeNames{{"glgq", Mode::GLGQ}, {"grlgq", Mode::GRLGQ}};

bool is_idx_dir(const fs::path& dir) {
  return fs::is_regular_file(dir / "train-images-idx3-ubyte") ||
         fs::is_regular_file(dir / "t10k-images-idx3-ubyte");
}

int default_threads() {
  if (const char* env = std::getenv("GRLGQ_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, "GRLGQ_THREADS must be an integer");
    }
  }
  return 1;
}

// `key = value` lines with '#' comments, turned into --key=value arguments.
std::vector<std::string> config_file_args(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config file " + path.string());
  std::vector<std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config") {
      throw Error(ErrorCode::Config, path.string() + ":" + std::to_string(lineno) + ": bad key");
    }
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

// Splices config-file arguments right after the subcommand so that flags on
// the command line, parsed later, take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::optional<fs::path> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (config && out.size() >= 2) {
    auto extra = config_file_args(*config);
    out.insert(out.begin() + 2, extra.begin(), extra.end());
  }
  return out;
}

struct SplitData {
  std::vector<LabeledSubspace<double>> subspaces;
  Eigen::MatrixXd vectors;  // unit columns
  std::vector<int> vector_labels;
  std::vector<Eigen::MatrixXd> class_images;  // raw images per class, index label-1
  int width = 0, height = 0;
  std::vector<io::LabeledSet> sets;
};

std::vector<Eigen::MatrixXd> group_by_class(const Eigen::MatrixXd& images, const std::vector<int>& labels) {
  int classes = 0;
  for (int l : labels) classes = std::max(classes, l);
  std::vector<std::vector<Index>> idx(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) idx[std::size_t(labels[i] - 1)].push_back(Index(i));
  std::vector<Eigen::MatrixXd> out;
  for (const auto& members : idx) {
    Eigen::MatrixXd m(images.rows(), Index(members.size()));
    for (std::size_t k = 0; k < members.size(); ++k) m.col(Index(k)) = images.col(members[k]);
    out.push_back(std::move(m));
  }
  return out;
}

void flatten_sets(SplitData& s) {
  Index total = 0;
  for (const auto& set : s.sets) total += set.frames.cols();
  s.vectors.resize(s.sets.front().frames.rows(), total);
  Index at = 0;
  for (const auto& set : s.sets) {
    s.vectors.middleCols(at, set.frames.cols()) = set.frames;
    s.vector_labels.insert(s.vector_labels.end(), std::size_t(set.frames.cols()), set.label);
    at += set.frames.cols();
  }
}

// Loads either an IDX directory (train or t10k split) or an image-set tree.
SplitData load_split(const fs::path& data, bool training, Index d, Index m, int sets_per_class,
                     std::uint64_t seed, const std::optional<fs::path>& manifest, bool need_subspaces) {
  SplitData s;
  if (is_idx_dir(data)) {
    const std::string prefix = training ? "train" : "t10k";
    auto raw = io::read_mnist(data / (prefix + "-images-idx3-ubyte"), data / (prefix + "-labels-idx1-ubyte"));
    s.width = raw.width;
    s.height = raw.height;
    if (need_subspaces) {
      if (m < d || sets_per_class < 1) {
        throw Error(ErrorCode::Config, "IDX data needs --m >= --d and --sets-per-class >= 1");
      }
      s.subspaces = io::build_classwise_subspace_dataset(raw, d, m, sets_per_class, seed).labeled();
      if (training) s.class_images = group_by_class(raw.images, raw.labels);
    }
    s.vectors = std::move(raw.images);
    s.vector_labels = std::move(raw.labels);
    return s;
  }
  auto coll = io::read_imageset_dirs(data, manifest);
  s.width = coll.width;
  s.height = coll.height;
  s.sets = std::move(coll.sets);
  if (need_subspaces) s.subspaces = io::build_per_set_subspace_dataset(s.sets, d).labeled();
  if (training) {
    int classes = 0;
    for (const auto& set : s.sets) classes = std::max(classes, set.label);
    s.class_images.resize(std::size_t(classes));
    for (int c = 1; c <= classes; ++c) {
      std::vector<Eigen::MatrixXd> frames;
      for (const auto& set : s.sets)
        if (set.label == c) frames.push_back(set.frames);
      if (frames.empty()) continue;
      Index cols = 0;
      for (const auto& f : frames) cols += f.cols();
      Eigen::MatrixXd all(frames.front().rows(), cols);
      Index at = 0;
      for (const auto& f : frames) all.middleCols(at, f.cols()) = f, at += f.cols();
      s.class_images[std::size_t(c - 1)] = std::move(all);
    }
  }
  flatten_sets(s);
  return s;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

template <typename Map>
auto lookup(const Map& map, const std::string& key, const char* what) {
  auto it = map.find(key);
  if (it == map.end()) throw Error(ErrorCode::Config, std::string("unknown ") + what + " '" + key + "'");
  return it->second;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string mode = "grlgq";
  std::string preset;
  std::string data;
  std::string manifest;
  std::string init = "example";
  int d = 0, m = 0, sets_per_class = 0, epochs = 50, per_class = 1, threads = 1;
  int folds = 0, repeats = 1;
  double eta = 0.05, gamma = 1e-4;
  std::uint64_t seed = 1;
  std::string model = "model.grlgq";
  std::string log, summary;
};

void add_train(CLI::App& app, TrainArgs& a, std::map<std::string, CLI::Option*>& opts) {
  auto* sub = app.add_subcommand("train", "Train GLGQ/GRLGQ prototypes");
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  opts["mode"] = sub->add_option("--mode", a.mode, "glgq | grlgq")->check(CLI::IsMember({"glgq", "grlgq"}));
  opts["preset"] = sub->add_option("--preset", a.preset, "mnist | yale | yaleb | eth80 | ucf");
  opts["data"] = sub->add_option("--data", a.data, "IDX directory or image-set root")->required();
  opts["manifest"] = sub->add_option("--manifest", a.manifest, "class-dir to label map");
  opts["d"] = sub->add_option("--d", a.d, "subspace dimension");
  opts["m"] = sub->add_option("--m", a.m, "images per sampled subspace (IDX data)");
  opts["sets-per-class"] = sub->add_option("--sets-per-class", a.sets_per_class, "subspaces per class (IDX data)");
  opts["eta"] = sub->add_option("--eta", a.eta, "prototype learning rate");
  opts["gamma"] = sub->add_option("--gamma", a.gamma, "relevance learning rate");
  opts["epochs"] = sub->add_option("--epochs", a.epochs);
  opts["seed"] = sub->add_option("--seed", a.seed);
  opts["init"] = sub->add_option("--init", a.init, "random | example | pca");
  opts["prototypes-per-class"] = sub->add_option("--prototypes-per-class", a.per_class);
  opts["threads"] = sub->add_option("--threads", a.threads);
  opts["folds"] = sub->add_option("--folds", a.folds, "k-fold cross-validation on the training data");
  opts["repeats"] = sub->add_option("--repeats", a.repeats, "cross-validation repeats");
  opts["model"] = sub->add_option("--model", a.model, "output model file");
  opts["log"] = sub->add_option("--log", a.log, "epoch CSV (default <model>.epochs.csv)");
  opts["summary"] = sub->add_option("--summary", a.summary, "run summary (default <model>.summary.txt)");
}

int cmd_train(TrainArgs a, const std::map<std::string, CLI::Option*>& opts, std::ostream& out) {
  auto given = [&](const char* key) { return opts.at(key)->count() > 0; };
  if (!a.preset.empty()) {
    const Preset p = lookup(presets(), a.preset, "preset");
    if (!given("d")) a.d = p.d;
    if (!given("m") && p.m) a.m = p.m;
    if (!given("sets-per-class") && p.sets_per_class) a.sets_per_class = p.sets_per_class;
    if (!given("epochs")) a.epochs = p.epochs;
    if (!given("eta")) a.eta = p.eta;
    if (!given("gamma")) a.gamma = p.gamma;
    if (!given("init")) a.init = p.init;
  }
  const Mode mode = lookup(kModeNames, a.mode, "mode");
  if (mode == Mode::GLGQ && !given("gamma")) a.gamma = 0;
  if (a.d < 1) throw Error(ErrorCode::Config, "--d is required (or a preset)");
  if (a.log.empty()) a.log = a.model + ".epochs.csv";
  if (a.summary.empty()) a.summary = a.model + ".summary.txt";

  TrainConfig config;
  config.eta = a.eta;
  config.gamma = a.gamma;
  config.epochs = a.epochs;
  config.seed = a.seed;
  config.mode = mode;
  config.prototypes_per_class = a.per_class;
  validate(config);
  const InitStrategy strategy = lookup(kInitNames, a.init, "init strategy");

  std::optional<fs::path> manifest;
  if (!a.manifest.empty()) manifest = a.manifest;
  const SplitData train = load_split(a.data, true, a.d, a.m, a.sets_per_class, a.seed, manifest, true);

  std::mt19937_64 rng(a.seed);
  std::vector<Prototype<double>> initial;
  if (strategy == InitStrategy::ClassPCA) {
    if (a.per_class != 1) throw Error(ErrorCode::Config, "pca initialization yields one prototype per class");
    for (std::size_t c = 0; c < train.class_images.size(); ++c) {
      if (train.class_images[c].cols() == 0) continue;
      initial.push_back({pca_subspace<double>(std::span(&train.class_images[c], 1), a.d), int(c + 1)});
    }
  } else {
    initial = init_prototypes<double>(train.subspaces, a.d, strategy, rng, a.per_class);
  }
  auto result = fit<double>(train.subspaces, config, std::move(initial), rng);

  io::save_model(result.model, a.model);
  {
    auto log = open_out(a.log);
    log << "epoch,mean_cost,train_accuracy\n";
    for (const auto& e : result.epochs) log << e.epoch << ',' << e.mean_cost << ',' << e.train_accuracy << '\n';
  }
  {
    auto s = open_out(a.summary);
    s << "# resolved configuration; usable as --config\n"
      << "mode = " << a.mode << "\n";
    if (!a.preset.empty()) s << "preset = " << a.preset << "\n";
    s << "data = " << a.data << "\n";
    if (!a.manifest.empty()) s << "manifest = " << a.manifest << "\n";
    s << "d = " << a.d << "\n";
    if (a.m) s << "m = " << a.m << "\n";
    if (a.sets_per_class) s << "sets-per-class = " << a.sets_per_class << "\n";
    s << "eta = " << a.eta << "\n"
      << "gamma = " << a.gamma << "\n"
      << "epochs = " << a.epochs << "\n"
      << "seed = " << a.seed << "\n"
      << "init = " << a.init << "\n"
      << "prototypes-per-class = " << a.per_class << "\n";
    if (a.folds > 0) s << "folds = " << a.folds << "\nrepeats = " << a.repeats << "\n";
    s << "model = " << a.model << "\n"
      << "# samples = " << train.subspaces.size() << "\n"
      << "# final mean_cost = " << result.epochs.back().mean_cost << "\n"
      << "# final train_accuracy = " << result.epochs.back().train_accuracy << "\n";
  }
  out << std::setprecision(17) << "samples=" << train.subspaces.size() << "\n"
      << "final_cost=" << result.epochs.back().mean_cost << "\n"
      << "train_accuracy=" << result.epochs.back().train_accuracy << "\n";
  if (a.folds > 0) {
    const auto cv = cross_validate<double>(train.subspaces, config, strategy, a.folds, a.repeats,
                                           opts.at("threads")->count() > 0 ? a.threads : default_threads());
    auto csv = open_out(a.model + ".cv.csv");
    csv << "repeat,fold,accuracy\n";
    double sum = 0, sq = 0;
    for (const auto& f : cv) {
      csv << f.repeat << ',' << f.fold << ',' << f.accuracy << '\n';
      sum += f.accuracy;
      sq += f.accuracy * f.accuracy;
    }
    const double n = double(cv.size()), mean = sum / n;
    out << "cv_accuracy=" << mean << "\n"
        << "cv_std=" << std::sqrt(std::max(0.0, sq / n - mean * mean)) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string model, data, manifest, kind = "auto", confusion;
  bool self = false;
  int threads = 1;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto model = io::load_model(a.model);
  Evaluation result;
  if (a.self) {
    std::vector<LabeledSubspace<double>> protos;
    for (const auto& p : model.prototypes) protos.push_back({p.subspace, p.label});
    result = evaluate_sets<double>(model, protos, a.threads);
  } else {
    if (a.data.empty()) throw Error(ErrorCode::Config, "--data is required unless --self is given");
    std::string kind = a.kind;
    if (kind == "auto") kind = is_idx_dir(a.data) ? "vectors" : "sets";
    if (kind != "sets" && kind != "vectors") throw Error(ErrorCode::Config, "--kind must be sets, vectors or auto");
    if (kind == "sets" && is_idx_dir(a.data)) {
      throw Error(ErrorCode::Config, "IDX test data is evaluated per image (--kind vectors)");
    }
    std::optional<fs::path> manifest;
    if (!a.manifest.empty()) manifest = a.manifest;
    const SplitData test = load_split(a.data, false, model.subspace_dim, 0, 0, 0, manifest, kind == "sets");
    if (test.vectors.rows() != model.ambient_dim) {
      throw Error(ErrorCode::InconsistentDims, "data has D=" + std::to_string(test.vectors.rows()) +
                                                   ", model has D=" + std::to_string(model.ambient_dim));
    }
    result = kind == "sets" ? evaluate_sets<double>(model, test.subspaces, a.threads)
                            : evaluate_vectors<double>(model, test.vectors, test.vector_labels, a.threads);
  }
  if (!a.confusion.empty()) io::write_confusion_csv(result.confusion, a.confusion);
  out << std::setprecision(17) << "accuracy=" << result.accuracy << "\n";
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string model, set, image, explain;
};

Eigen::MatrixXd read_frames(const fs::path& dir, int& width, int& height) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::EmptySet, "no .pgm frames in " + dir.string());
  Eigen::MatrixXd x;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto img = io::read_pgm(files[f]);
    if (f == 0) {
      width = img.width, height = img.height;
      x.resize(Index(img.pixels.size()), Index(files.size()));
    } else if (img.width != width || img.height != height) {
      throw Error(ErrorCode::InconsistentDims, files[f].string() + " differs in size");
    }
    for (std::size_t i = 0; i < img.pixels.size(); ++i) x(Index(i), Index(f)) = img.pixels[i] / 255.0;
  }
  io::normalize_columns(x);
  return x;
}

void print_prediction(const Prediction<double>& p, const ModelState<double>& model, std::ostream& out) {
  out << std::setprecision(17) << "label=" << p.label << "\n";
  for (Index k = 0; k < p.distances.size(); ++k)
    out << "prototype=" << k << " label=" << model.prototypes[std::size_t(k)].label << " distance=" << p.distances(k) << "\n";
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  if (a.set.empty() == a.image.empty()) throw Error(ErrorCode::Config, "give exactly one of --set or --image");
  const auto model = io::load_model(a.model);
  int width = 0, height = 0;
  if (!a.set.empty()) {
    const Eigen::MatrixXd x = read_frames(a.set, width, height);
    if (x.rows() != model.ambient_dim) throw Error(ErrorCode::InconsistentDims, "frame size differs from model D");
    const auto factors = subspace_from_set(x, model.subspace_dim);
    const auto pred = predict_set(model, factors.subspace);
    print_prediction(pred, model, out);
    if (!a.explain.empty()) {
      const fs::path dir = a.explain;
      fs::create_directories(dir);
      const auto pd = principal_decomposition(factors.subspace, model.prototypes[std::size_t(pred.prototype)].subspace);
      for (Index i = 0; i < pd.dim(); ++i)
        io::export_pixel_influence(pd, i, width, height, dir / ("influence_" + std::to_string(i + 1) + ".pgm"));
      io::write_matrix_csv(image_contribution(factors, pd.rot_left), dir / "contribution.csv");
      io::write_matrix_csv(pd.principal_left, dir / "principal_vectors.csv");
      auto angles = open_out(dir / "angles.csv");
      angles << "index,angle,cosine,relevance\n";
      for (Index i = 0; i < pd.dim(); ++i)
        angles << i + 1 << ',' << pd.angles(i) << ',' << pd.cosines(i) << ',' << model.relevance(i) << '\n';
    }
    return 0;
  }
  const auto img = io::read_pgm(a.image);
  Eigen::MatrixXd x(Index(img.pixels.size()), 1);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) x(Index(i), 0) = img.pixels[i] / 255.0;
  if (x.rows() != model.ambient_dim) throw Error(ErrorCode::InconsistentDims, "image size differs from model D");
  io::normalize_columns(x);
  const auto pred = predict_vector(model, x.col(0));
  print_prediction(pred, model, out);
  if (!a.explain.empty()) {
    // span{x} against W: u = x, v = normalized projection of x onto W
    const auto& w = model.prototypes[std::size_t(pred.prototype)].subspace.basis();
    const Eigen::VectorXd coef = w.transpose() * x.col(0);
    PrincipalDecomposition<double> pd;
    pd.cosines = Eigen::VectorXd::Constant(1, std::min(1.0, coef.norm()));
    pd.angles = pd.cosines.array().acos().matrix();
    pd.principal_left = x;
    pd.principal_right = coef.norm() > 0 ? Eigen::MatrixXd(w * coef / coef.norm()) : Eigen::MatrixXd(w.col(0));
    fs::create_directories(a.explain);
    io::export_pixel_influence(pd, 0, img.width, img.height, fs::path(a.explain) / "influence_1.pgm");
  }
  return 0;
}

// ---------------------------------------------------------------- inspect

struct InspectArgs {
  std::string model, out, data, manifest;
  int width = 0, height = 0;
};

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
  const auto model = io::load_model(a.model);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  io::export_relevance_csv(model, dir / "relevance.csv");

  int width = a.width, height = a.height;
  std::optional<SplitData> data;
  if (!a.data.empty()) {
    std::optional<fs::path> manifest;
    if (!a.manifest.empty()) manifest = a.manifest;
    data = load_split(a.data, false, model.subspace_dim, 0, 0, 0, manifest, true);
    if (!width) width = data->width, height = data->height;
  }
  if (!width) {
    const int side = int(std::lround(std::sqrt(double(model.ambient_dim))));
    if (Index(side) * side == model.ambient_dim) width = height = side;
    else width = int(model.ambient_dim), height = 1;
  }
  for (Index k = 0; k < Index(model.prototypes.size()); ++k)
    io::export_prototype_images(model, k, width, height, dir / "prototypes");
  if (data) io::export_distance_matrix_csv(model, data->subspaces, dir / "distances.csv");
  out << "relevance=" << (dir / "relevance.csv").string() << "\n"
      << "prototypes=" << model.prototypes.size() << "\n";
  if (data) out << "distances=" << (dir / "distances.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  synth::SynthConfig config;
  int test_sets = -1;
  std::string out;
};

int cmd_synth(SynthArgs a, std::ostream& out) {
  if (a.test_sets >= 0) a.config.test_sets_per_class = a.test_sets;
  else a.config.test_sets_per_class = a.config.train_sets_per_class;
  const auto data = synth::generate(a.config);
  synth::write_dataset(data, a.out);
  out << "train=" << (fs::path(a.out) / "train").string() << "\n"
      << "test=" << (fs::path(a.out) / "test").string() << "\n"
      << "width=" << data.width << "\nheight=" << data.height << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grassmann prototype learning (GLGQ / GRLGQ)", "grlgq"};
  app.require_subcommand(1);

  TrainArgs train;
  std::map<std::string, CLI::Option*> train_opts;
  add_train(app, train, train_opts);

  const int threads = [&] {
    try {
      return default_threads();
    } catch (const Error&) {
      return 1;
    }
  }();

  EvalArgs eval;
  eval.threads = threads;
  auto* ev = app.add_subcommand("eval", "Evaluate a model");
  ev->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  ev->add_option("--model", eval.model)->required();
  ev->add_option("--data", eval.data, "IDX directory or image-set root");
  ev->add_option("--manifest", eval.manifest);
  ev->add_option("--kind", eval.kind, "sets | vectors | auto");
  ev->add_option("--confusion", eval.confusion, "confusion matrix CSV");
  ev->add_flag("--self", eval.self, "evaluate on the model's own prototypes");
  ev->add_option("--threads", eval.threads);

  PredictArgs predict;
  auto* pr = app.add_subcommand("predict", "Classify one image set or image");
  pr->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  pr->add_option("--model", predict.model)->required();
  pr->add_option("--set", predict.set, "directory of .pgm frames");
  pr->add_option("--image", predict.image, "single .pgm image");
  pr->add_option("--explain", predict.explain, "directory for influence maps and contributions");

  InspectArgs inspect;
  auto* in = app.add_subcommand("inspect", "Export relevances, prototypes and distances");
  in->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  in->add_option("--model", inspect.model)->required();
  in->add_option("--out", inspect.out)->required();
  in->add_option("--data", inspect.data, "dataset for the distance matrix");
  in->add_option("--manifest", inspect.manifest);
  in->add_option("--width", inspect.width);
  in->add_option("--height", inspect.height);

  SynthArgs synth_args;
  auto* sy = app.add_subcommand("synth", "Generate a synthetic image-set benchmark");
  sy->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sy->add_option("--classes", synth_args.config.classes);
  sy->add_option("--ambient", synth_args.config.ambient_dim);
  sy->add_option("--dim", synth_args.config.dim);
  sy->add_option("--sets-per-class", synth_args.config.train_sets_per_class);
  sy->add_option("--test-sets-per-class", synth_args.test_sets);
  sy->add_option("--frames", synth_args.config.frames_per_set);
  sy->add_option("--noise", synth_args.config.noise);
  sy->add_option("--seed", synth_args.config.seed);
  sy->add_option("--out", synth_args.out)->required();

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      throw Error(ErrorCode::Config, e.what());
    }
    if (train_opts["threads"]->count() == 0) train.threads = threads;
    if (app.got_subcommand("train")) return cmd_train(train, train_opts, out);
    if (app.got_subcommand("eval")) return cmd_eval(eval, out);
    if (app.got_subcommand("predict")) return cmd_predict(predict, out);
    if (app.got_subcommand("inspect")) return cmd_inspect(inspect, out);
    return cmd_synth(synth_args, out);
  } catch (const Error& e) {
    err << "error=" << to_string(e.code()) << ": " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "error=Io: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error=Internal: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace grlgq::cli
