#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ltcil/matrix.hpp"

namespace ltcil {

struct LabeledExample {
  std::vector<double> features;
  int label = 0;
  int index = 0;  // stable unique id within the dataset
};

/// Immutable after construction.
struct Dataset {
  std::vector<LabeledExample> examples;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
  std::vector<std::vector<int>> per_class_index;  // class id -> example indices

  std::size_t size() const { return examples.size(); }
  void rebuild_index();
  // gather rows into a batch matrix
  Matrix gather(const std::vector<int>& indices) const;
  std::vector<int> labels_of(const std::vector<int>& indices) const;
};

// Class c's examples are isotropic Gaussians (stddev cluster_spread) around a
// seeded unit direction scaled to a fixed radius. Example i of class c
// depends only on (seed, c, i).
Dataset generate_synthetic(std::size_t num_classes, std::size_t per_class,
                           std::size_t feature_dim, double cluster_spread,
                           std::uint64_t seed);

// Line format: label,f0,f1,...  Dense 0-based labels required.
Dataset load_csv(const std::string& path, std::size_t expected_dim = 0);
void save_csv(const Dataset& ds, const std::string& path);

// Holds out exactly test_per_class examples per class (seeded choice).
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds,
                                             std::size_t test_per_class,
                                             std::uint64_t seed);

}  // namespace ltcil
