#include <cmath>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "ltcil/errors.hpp"
#include "ltcil/metrics.hpp"

using namespace ltcil;

TEST_CASE("tally_eval hand-computed accuracies") {
  //           class 0: 2/3 right, class 1: 1/2, class 2: 0/1
  std::vector<int> labels = {0, 0, 0, 1, 1, 2};
  std::vector<int> preds = {0, 0, 1, 1, 2, 0};
  TaskEval ev = tally_eval(labels, preds, {0, 1, 2}, 4);
  CHECK(ev.task_id == 4);
  CHECK(ev.num_seen_classes == 3);
  CHECK(ev.per_class_accuracy.at(0) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(ev.per_class_accuracy.at(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ev.per_class_accuracy.at(2) == 0.0);
  // unweighted class mean, not instance accuracy
  CHECK(ev.average_accuracy ==
        doctest::Approx((2.0 / 3 + 0.5 + 0.0) / 3.0).epsilon(1e-15));
}

TEST_CASE("tally_eval ignores labels outside the seen set") {
  TaskEval ev = tally_eval({0, 5, 5}, {0, 5, 5}, {0}, 0);
  CHECK(ev.per_class_accuracy.size() == 1);
  CHECK(ev.average_accuracy == 1.0);
}

TEST_CASE("tally_eval errors") {
  CHECK_THROWS_AS(tally_eval({0, 1}, {0}, {0, 1}, 0), ContractError);
  // seen class 1 has no test examples
  CHECK_THROWS_AS(tally_eval({0, 0}, {0, 0}, {0, 1}, 0), ContractError);
}

TEST_CASE("average_incremental is the mean over task evals") {
  TaskEval a, b, c;
  a.average_accuracy = 0.9;
  b.average_accuracy = 0.6;
  c.average_accuracy = 0.3;
  CHECK(average_incremental({a, b, c}) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(average_incremental({a}) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK_THROWS_AS(average_incremental({}), ConfigError);
}

TEST_CASE("head_tail_breakdown median split") {
  TaskEval ev;
  ev.per_class_accuracy = {{0, 1.0}, {1, 0.8}, {2, 0.4}, {3, 0.2}};
  std::map<int, std::size_t> counts = {{0, 100}, {1, 60}, {2, 10}, {3, 2}};
  // median of {2,10,60,100} is 35 -> head {0,1}, tail {2,3}
  HeadTailMeans ht = head_tail_breakdown(ev, counts);
  CHECK(ht.head_mean == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(ht.tail_mean == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("head_tail_breakdown odd class count") {
  TaskEval ev;
  ev.per_class_accuracy = {{0, 1.0}, {1, 0.5}, {2, 0.0}};
  std::map<int, std::size_t> counts = {{0, 90}, {1, 30}, {2, 5}};
  // median 30: only class 0 is strictly above
  HeadTailMeans ht = head_tail_breakdown(ev, counts);
  CHECK(ht.head_mean == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ht.tail_mean == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("head_tail_breakdown all counts equal") {
  TaskEval ev;
  ev.per_class_accuracy = {{0, 0.9}, {1, 0.7}, {2, 0.5}, {3, 0.1}};
  std::map<int, std::size_t> counts = {{0, 50}, {1, 50}, {2, 50}, {3, 50}};
  // degenerate split: lower half by id -> head {0,1}
  HeadTailMeans ht = head_tail_breakdown(ev, counts);
  CHECK(ht.head_mean == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(ht.tail_mean == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("head_tail_breakdown missing count") {
  TaskEval ev;
  ev.per_class_accuracy = {{0, 1.0}};
  CHECK_THROWS_AS(head_tail_breakdown(ev, {}), ContractError);
}

TEST_CASE("run log serializes to parseable json") {
  RunLog log;
  log.seed = 42;
  log.completed = true;
  log.average_incremental_accuracy = 0.75;
  TaskEval ev;
  ev.task_id = 0;
  ev.num_seen_classes = 2;
  ev.average_accuracy = 0.75;
  ev.per_class_accuracy = {{0, 1.0}, {1, 0.5}};
  log.task_evals.push_back(ev);
  log.lws_dump.push_back({1.0, 1.25});
  log.memory_dump = {{0, {3, 7}}, {1, {8}}};
  TaskPredictions tp;
  tp.example_ids = {10, 11};
  tp.labels = {0, 1};
  tp.preds = {0, 0};
  log.predictions.push_back(tp);

  auto j = nlohmann::json::parse(log.to_json());
  CHECK(j.at("seed") == 42);
  CHECK(j.at("completed") == true);
  REQUIRE(j.at("tasks").size() == 1);
  const auto& t0 = j.at("tasks")[0];
  CHECK(t0.at("average_accuracy") == 0.75);
  CHECK(t0.at("per_class_accuracy").at("1") == 0.5);
  CHECK(t0.at("lws")[1] == 1.25);
  CHECK(t0.at("predictions").at("preds")[1] == 0);
  CHECK(j.at("memory").at("0").size() == 2);
}
