#include "ltcil/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ltcil/errors.hpp"
#include "ltcil/rng.hpp"

namespace ltcil {

void Dataset::rebuild_index() {
  per_class_index.assign(num_classes, {});
  for (std::size_t i = 0; i < examples.size(); ++i) {
    per_class_index[examples[i].label].push_back(static_cast<int>(i));
  }
}

Matrix Dataset::gather(const std::vector<int>& indices) const {
  Matrix x(indices.size(), feature_dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& f = examples[indices[r]].features;
    for (std::size_t j = 0; j < feature_dim; ++j) x(r, j) = f[j];
  }
  return x;
}

std::vector<int> Dataset::labels_of(const std::vector<int>& indices) const {
  std::vector<int> out(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) out[r] = examples[indices[r]].label;
  return out;
}

namespace {
constexpr double kClusterRadius = 4.0;

std::vector<double> class_mean(std::size_t c, std::size_t dim, std::uint64_t seed) {
  Rng rng(mix_seed(seed, c, 0));  // b=0 reserved for the mean; samples use b=i+1
  std::vector<double> dir(dim);
  double norm = 0.0;
  for (double& v : dir) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (norm < 1e-12) {
    dir.assign(dim, 0.0);
    dir[0] = 1.0;
    norm = 1.0;
  }
  for (double& v : dir) v *= kClusterRadius / norm;
  return dir;
}
}  // namespace

Dataset generate_synthetic(std::size_t num_classes, std::size_t per_class,
                           std::size_t feature_dim, double cluster_spread,
                           std::uint64_t seed) {
  if (num_classes < 1 || per_class < 1 || feature_dim < 1)
    throw ConfigError("generate_synthetic: counts must be >= 1");
  if (cluster_spread <= 0.0) throw ConfigError("generate_synthetic: spread must be > 0");
  Dataset ds;
  ds.num_classes = num_classes;
  ds.feature_dim = feature_dim;
  ds.examples.reserve(num_classes * per_class);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<double> mean = class_mean(c, feature_dim, seed);
    for (std::size_t i = 0; i < per_class; ++i) {
      Rng rng(mix_seed(seed, c, i + 1));
      LabeledExample ex;
      ex.label = static_cast<int>(c);
      ex.index = static_cast<int>(ds.examples.size());
      ex.features.resize(feature_dim);
      for (std::size_t j = 0; j < feature_dim; ++j)
        ex.features[j] = mean[j] + cluster_spread * rng.normal();
      ds.examples.push_back(std::move(ex));
    }
  }
  ds.rebuild_index();
  return ds;
}

Dataset load_csv(const std::string& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_csv: cannot open " + path);
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    LabeledExample ex;
    if (!std::getline(ss, tok, ','))
      throw ParseError("load_csv: malformed line " + std::to_string(lineno));
    try {
      std::size_t pos = 0;
      ex.label = std::stoi(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError("load_csv: bad label on line " + std::to_string(lineno));
    }
    if (ex.label < 0)
      throw ParseError("load_csv: negative label on line " + std::to_string(lineno));
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t pos = 0;
        ex.features.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("load_csv: bad value on line " + std::to_string(lineno));
      }
    }
    if (ex.features.empty())
      throw ParseError("load_csv: no features on line " + std::to_string(lineno));
    if (ds.examples.empty()) {
      ds.feature_dim = ex.features.size();
      if (expected_dim != 0 && ds.feature_dim != expected_dim)
        throw ParseError("load_csv: dimension " + std::to_string(ds.feature_dim) +
                         " != expected " + std::to_string(expected_dim));
    } else if (ex.features.size() != ds.feature_dim) {
      throw ParseError("load_csv: dimension mismatch on line " + std::to_string(lineno));
    }
    max_label = std::max(max_label, ex.label);
    ex.index = static_cast<int>(ds.examples.size());
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) throw ParseError("load_csv: empty dataset in " + path);
  ds.num_classes = static_cast<std::size_t>(max_label) + 1;
  ds.rebuild_index();
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    if (ds.per_class_index[c].empty())
      throw ParseError("load_csv: class ids not dense, class " + std::to_string(c) +
                       " has no examples");
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("save_csv: cannot open " + path);
  char buf[64];
  for (const auto& ex : ds.examples) {
    out << ex.label;
    for (double v : ex.features) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds,
                                             std::size_t test_per_class,
                                             std::uint64_t seed) {
  std::vector<char> is_test(ds.size(), 0);
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    const auto& pool = ds.per_class_index[c];
    if (pool.size() <= test_per_class && test_per_class > 0)
      throw ConfigError("split_train_test: class " + std::to_string(c) + " has only " +
                        std::to_string(pool.size()) + " examples, need > " +
                        std::to_string(test_per_class));
    std::vector<int> shuffled = pool;
    Rng rng(mix_seed(seed, 2000 + c, 0));
    rng.shuffle(shuffled);
    for (std::size_t i = 0; i < test_per_class; ++i) is_test[shuffled[i]] = 1;
  }
  Dataset train, test;
  train.num_classes = test.num_classes = ds.num_classes;
  train.feature_dim = test.feature_dim = ds.feature_dim;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (is_test[i] ? test : train).examples.push_back(ds.examples[i]);
  }
  train.rebuild_index();
  test.rebuild_index();
  return {std::move(train), std::move(test)};
}

}  // namespace ltcil
