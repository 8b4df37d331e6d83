#include <algorithm>
#include <set>

#include <doctest.h>

#include "ltcil/data.hpp"
#include "ltcil/errors.hpp"
#include "ltcil/memory.hpp"

using namespace ltcil;

namespace {

FeatureFn identity_features() {
  return [](const Matrix& x) { return x; };
}

}  // namespace

TEST_CASE("per_class_budget floor rule") {
  CHECK(per_class_budget(2000, 60) == 33);
  CHECK(per_class_budget(2000, 100) == 20);
  CHECK(per_class_budget(5, 10) == 0);
  CHECK_THROWS_AS(per_class_budget(100, 0), ConfigError);
}

TEST_CASE("herding selects all as a permutation") {
  std::vector<int> ex = {10, 11, 12, 13};
  Matrix feats = Matrix::from_rows({{0, 1}, {2, 0}, {1, 1}, {0, 0}});
  auto picks = select_herding(ex, feats, 4);
  std::multiset<int> got(picks.begin(), picks.end());
  CHECK(got == std::multiset<int>(ex.begin(), ex.end()));
}

TEST_CASE("herding identical features tie-break by position") {
  std::vector<int> ex = {7, 3, 9};
  Matrix feats = Matrix::from_rows({{1, 1}, {1, 1}, {1, 1}});
  auto picks = select_herding(ex, feats, 2);
  CHECK(picks == std::vector<int>{7, 3});
}

TEST_CASE("herding k=1 picks the point nearest the mean") {
  // 5 points on a line: mean is 2; brute force over candidates
  std::vector<int> ex = {0, 1, 2, 3, 4};
  Matrix feats = Matrix::from_rows({{0.0}, {1.0}, {2.2}, {3.0}, {4.0}});
  double mean = (0.0 + 1.0 + 2.2 + 3.0 + 4.0) / 5.0;
  int best = 0;
  double bestd = 1e300;
  for (int i = 0; i < 5; ++i) {
    double d = std::abs(feats(i, 0) - mean);
    if (d < bestd) {
      bestd = d;
      best = i;
    }
  }
  auto picks = select_herding(ex, feats, 1);
  REQUIRE(picks.size() == 1);
  CHECK(picks[0] == ex[best]);
}

TEST_CASE("herding truncates when k exceeds the pool") {
  std::vector<int> ex = {1, 2};
  Matrix feats = Matrix::from_rows({{0.0}, {1.0}});
  auto picks = select_herding(ex, feats, 5);
  CHECK(picks.size() == 2);
}

TEST_CASE("memory totals and budgets across updates") {
  Dataset ds = generate_synthetic(10, 40, 4, 1.0, 31);
  ExemplarMemory mem(BudgetMode::TotalCapacity, 100, SelectionKind::Herding, 1);

  std::vector<int> first_classes = {0, 1, 2, 3, 4};
  std::vector<int> first_idx;
  for (int c : first_classes)
    first_idx.insert(first_idx.end(), ds.per_class_index[c].begin(),
                     ds.per_class_index[c].end());
  mem.update_after_task(ds, first_classes, first_idx, identity_features());
  CHECK(mem.total_stored() == 100);
  for (const auto& [cls, lst] : mem.store()) CHECK(lst.size() == 20);

  auto before = mem.store();
  std::vector<int> second_classes = {5, 6, 7, 8, 9};
  std::vector<int> second_idx;
  for (int c : second_classes)
    second_idx.insert(second_idx.end(), ds.per_class_index[c].begin(),
                      ds.per_class_index[c].end());
  mem.update_after_task(ds, second_classes, second_idx, identity_features());
  CHECK(mem.total_stored() <= 100);
  for (const auto& [cls, lst] : mem.store()) CHECK(lst.size() == 10);
  // herding prefix property
  for (int c : first_classes) {
    const auto& now = mem.store().at(c);
    const auto& was = before.at(c);
    CHECK(std::equal(now.begin(), now.end(), was.begin()));
  }
}

TEST_CASE("fixed per-class mode never shrinks") {
  Dataset ds = generate_synthetic(6, 30, 4, 1.0, 8);
  ExemplarMemory mem(BudgetMode::FixedPerClass, 20, SelectionKind::Herding, 1);
  mem.update_after_task(ds, {0}, ds.per_class_index[0], identity_features());
  CHECK(mem.store().at(0).size() == 20);
}

TEST_CASE("fixed per-class mode keeps old lists intact") {
  Dataset ds = generate_synthetic(6, 30, 4, 1.0, 8);
  ExemplarMemory mem(BudgetMode::FixedPerClass, 15, SelectionKind::Herding, 1);
  std::vector<int> t0 = ds.per_class_index[0];
  t0.insert(t0.end(), ds.per_class_index[1].begin(), ds.per_class_index[1].end());
  mem.update_after_task(ds, {0, 1}, t0, identity_features());
  auto before = mem.store();
  std::vector<int> t1 = ds.per_class_index[2];
  t1.insert(t1.end(), ds.per_class_index[3].begin(), ds.per_class_index[3].end());
  mem.update_after_task(ds, {2, 3}, t1, identity_features());
  CHECK(mem.store().at(0) == before.at(0));
  CHECK(mem.store().at(1) == before.at(1));
}

TEST_CASE("no duplicate indices and determinism") {
  Dataset ds = generate_synthetic(8, 25, 4, 1.0, 12);
  for (auto sel : {SelectionKind::Herding, SelectionKind::Random}) {
    ExemplarMemory a(BudgetMode::TotalCapacity, 60, sel, 5);
    ExemplarMemory b(BudgetMode::TotalCapacity, 60, sel, 5);
    for (auto* mem : {&a, &b}) {
      std::vector<int> t0;
      for (int c : {0, 1, 2, 3})
        t0.insert(t0.end(), ds.per_class_index[c].begin(), ds.per_class_index[c].end());
      mem->update_after_task(ds, {0, 1, 2, 3}, t0, identity_features());
      std::vector<int> t1;
      for (int c : {4, 5, 6, 7})
        t1.insert(t1.end(), ds.per_class_index[c].begin(), ds.per_class_index[c].end());
      mem->update_after_task(ds, {4, 5, 6, 7}, t1, identity_features());
    }
    CHECK(a.store() == b.store());
    std::set<int> seen;
    for (const auto& [cls, lst] : a.store()) {
      for (int i : lst) {
        CHECK(seen.count(i) == 0);
        seen.insert(i);
        CHECK(ds.examples[i].label == cls);
      }
    }
  }
}

TEST_CASE("re-adding a stored class is rejected") {
  Dataset ds = generate_synthetic(4, 10, 3, 1.0, 2);
  ExemplarMemory mem(BudgetMode::FixedPerClass, 5, SelectionKind::Random, 3);
  mem.update_after_task(ds, {0}, ds.per_class_index[0], identity_features());
  CHECK_THROWS_AS(mem.update_after_task(ds, {0}, ds.per_class_index[0],
                                        identity_features()),
                  ContractError);
}
