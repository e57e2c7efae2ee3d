#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "dire/harness.hpp"
#include "helpers.hpp"

using namespace dire;

namespace {

WorldConfig small_world() {
  WorldConfig wc;
  wc.image_dim = 8;
  wc.attribute_dim = 6;
  wc.noun_dim = 8;
  wc.n_categories = 8;
  wc.entities_per_category = 4;
  wc.n_attributes = 6;
  return wc;
}

ModelDims dims_of(const WorldConfig& wc) {
  return {wc.image_dim, wc.attribute_dim, wc.noun_dim, 8, 12, 10};
}

// Query-probe DIRE with identity maps reading the noun straight through, on
// data whose gold candidate is a scaled copy of the noun: the answer leaks.
std::pair<Model, std::vector<Datapoint>> leaked_fixture(std::size_t n) {
  const WorldConfig wc = small_world();
  auto data = generate_split(make_world(wc), n, 3, streams::test_split);
  for (auto& dp : data) dp.candidates[dp.gold] = 10.0 * dp.query.noun;
  Model m = init_model(parse_model_spec("dire-1m-qprobe"), dims_of(wc), 1);
  m.params.get("C") = Mat::identity(8);
  m.params.get("V") = Mat::identity(8);
  m.params.get("A") = Mat(6, 8);
  return {m, data};
}

}  // namespace

TEST_CASE("evaluate") {
  const WorldConfig wc = small_world();
  const auto data = generate_split(make_world(wc), 1000, 1, streams::test_split);

  const Model random = init_model(parse_model_spec("random"), dims_of(wc), 1);
  const EvalResult r = evaluate(random, data);
  CHECK(r.n == 1000);
  CHECK(std::abs(r.accuracy() - 1.0 / 6) <= 0.04);
  CHECK(r.accuracy() == static_cast<double>(r.correct) / 1000.0);

  const auto [oracle, leaked] = leaked_fixture(200);
  CHECK(evaluate(oracle, leaked).accuracy() == 1.0);

  CHECK_THROWS(evaluate(random, std::vector<Datapoint>{}));
  const Model wrong = init_model(parse_model_spec("dire-1m"), {9, 6, 8, 8, 12, 10}, 1);
  CHECK_THROWS_AS(evaluate(wrong, data), DimensionError);

  const Model dire = init_model(parse_model_spec("dire-1m"), dims_of(wc), 2);
  const EvalResult first = evaluate(dire, data);
  const EvalResult second = evaluate(dire, data);
  CHECK(first.correct == second.correct);
}

TEST_CASE("error analysis") {
  const WorldConfig wc = small_world();
  const auto data = generate_split(make_world(wc), 1000, 5, streams::test_split);

  EvalResult perfect;
  perfect.n = data.size();
  for (const auto& dp : data) perfect.records.push_back({dp.gold, dp.gold, true});
  perfect.correct = data.size();
  const ErrorAnalysis p = error_analysis(perfect, data);
  CHECK(p.wrong_category_rate() == 0.0);
  CHECK(p.errors == 0);

  // Uniformly random guesses: three of six candidates are of the other
  // category.
  Rng rng = make_stream(71, 0);
  EvalResult guess;
  guess.n = data.size();
  for (const auto& dp : data) {
    const std::size_t pick = rng() % 6;
    guess.records.push_back({pick, dp.gold, std::nullopt});
    guess.correct += pick == dp.gold;
  }
  const ErrorAnalysis g = error_analysis(guess, data);
  CHECK(std::abs(g.wrong_category_rate() - 0.5) <= 0.05);
  CHECK(g.wrong_category + g.wrong_attribute == g.errors);
  CHECK(g.wrong_category_rate() + g.wrong_attribute_rate() == g.error_rate());
  std::size_t counted = 0;
  for (const auto& [k, v] : g.confusion) counted += v;
  CHECK(counted == data.size());

  auto unlabelled = data;
  unlabelled[7].debug.reset();
  try {
    error_analysis(guess, unlabelled);
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("--debug") != std::string::npos);
  }

  const auto report = eval_report_json(guess, g);
  CHECK(report["records"].size() == 1000);
  CHECK(report["error_analysis"]["wrong_category"] == g.wrong_category);
}

TEST_CASE("suite table") {
  const WorldConfig wc = small_world();
  const Dataset data = generate_dataset(make_world(wc), {40, 20, 30}, 6);
  SuiteConfig cfg;
  cfg.models = {"random", "ff", "dire-1m", "memn-1m-4h"};
  cfg.dims = dims_of(wc);
  cfg.train.max_epochs = 2;
  const auto rows = run_suite(data, cfg);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].status == "ok");
    CHECK(rows[i].test_accuracy >= 0.0);
    CHECK(rows[i].test_accuracy <= 1.0);
  }
  CHECK(rows[3].status.rfind("error", 0) == 0);

  const std::string csv = suite_csv(rows, false);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "name,val_acc,test_acc,epochs_run,seconds,status");
  std::getline(in, line);
  CHECK(line.rfind("random,", 0) == 0);
  CHECK(line.find(",NA,ok") != std::string::npos);

  CHECK(expand_model_list("all").size() == 11);
  CHECK(expand_model_list("ff,dire-2m") == std::vector<std::string>{"ff", "dire-2m"});
}

TEST_CASE("inspect") {
  const WorldConfig wc = small_world();
  const auto data = generate_split(make_world(wc), 5, 7, streams::test_split);
  const Model m = init_model(parse_model_spec("dire-1m"), dims_of(wc), 3);
  const auto j = inspect(m, data, 2);
  CHECK(j["p_old"].size() == 11);
  CHECK(j["s_max"].size() == 11);
  CHECK(j["z"].size() == 11);
  CHECK(j["row_norms"].size() == 12);
  double g = 0.0;
  for (double x : j["attention"]) g += x;
  CHECK(std::abs(g - 1.0) < 1e-12);
  CHECK_THROWS_AS(inspect(m, data, 5), std::out_of_range);

  const Model mem = init_model(parse_model_spec("memn-2m-3h"), dims_of(wc), 3);
  CHECK(inspect(mem, data, 0)["hops"].size() == 3);
}

TEST_CASE("run config merging") {
  RunConfig cfg;
  merge_json(cfg, {{"train", {{"learning_rate", 0.5}}}, {"model", "ff"}});
  CHECK(cfg.train.learning_rate == 0.5);
  CHECK(cfg.train.minibatch == 10);
  CHECK(cfg.model == "ff");
  CHECK_THROWS(merge_json(cfg, {{"trian", 1}}));
  CHECK_THROWS(merge_json(cfg, {{"train", {{"lr", 1}}}}));

  RunConfig round;
  merge_json(round, to_json(cfg));
  CHECK(to_json(round) == to_json(cfg));
}
