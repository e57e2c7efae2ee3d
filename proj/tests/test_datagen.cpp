#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dire/datagen.hpp"

using namespace dire;
namespace fs = std::filesystem;

namespace {

WorldConfig small_world() {
  WorldConfig c;
  c.image_dim = 16;
  c.attribute_dim = 8;
  c.noun_dim = 8;
  c.n_categories = 6;
  c.entities_per_category = 4;
  c.n_attributes = 5;
  return c;
}

// Counts entities matching the query by enumerating all six from the
// debug labels alone.
std::vector<int> brute_force_matches(const Datapoint& dp) {
  const auto& d = *dp.debug;
  std::vector<int> found;
  for (int e = 0; e < 6; ++e) {
    std::set<std::string> attrs;
    for (std::size_t k = 0; k < d.exposure_entity.size(); ++k) {
      if (d.exposure_entity[k] == e) attrs.insert(d.exposure_attribute[k]);
    }
    if (d.entity_category[e] == d.query_category && attrs.count(d.query_attributes[0]) &&
        attrs.count(d.query_attributes[1])) {
      found.push_back(e);
    }
  }
  return found;
}

bool has_violation(const ValidationReport& r, const std::string& needle) {
  for (const auto& v : r.violations) {
    if (v.find(needle) != std::string::npos) return true;
  }
  return false;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dire_datagen_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("world vectors are unit length and reproducible") {
  const EmbeddingWorld a = make_world(small_world());
  const EmbeddingWorld b = make_world(small_world());
  for (std::size_t c = 0; c < a.entity_images.size(); ++c) {
    CHECK(std::abs(norm(a.nouns[c]) - 1.0) < 1e-12);
    for (std::size_t e = 0; e < a.entity_images[c].size(); ++e) {
      CHECK(std::abs(norm(a.entity_images[c][e]) - 1.0) < 1e-12);
      CHECK(a.entity_images[c][e] == b.entity_images[c][e]);
    }
  }
  for (const auto& v : a.attributes) CHECK(std::abs(norm(v) - 1.0) < 1e-12);
}

TEST_CASE("zero noise collapses each category to its prototype") {
  WorldConfig c = small_world();
  c.noise = 0.0;
  const EmbeddingWorld w = make_world(c);
  for (const auto& cat : w.entity_images) {
    for (const auto& img : cat) CHECK(img == cat.front());
  }
}

TEST_CASE("generated datapoints satisfy the design (property)") {
  const EmbeddingWorld w = make_world(small_world());
  Rng rng = make_stream(51, 0);
  for (int i = 0; i < 500; ++i) {
    const Datapoint dp = generate_datapoint(w, rng);
    const auto report = validate_datapoint(dp);
    INFO((report.violations.empty() ? std::string() : report.violations.front()));
    CHECK(report.ok());
    REQUIRE(dp.debug);
    const auto matches = brute_force_matches(dp);
    REQUIRE(matches.size() == 1);
    CHECK(dp.debug->candidate_entity[dp.gold] == matches.front());

    // Balance, counted independently from the labels.
    std::map<std::string, std::set<int>> holders;
    std::map<std::set<std::string>, int> pairs;
    std::map<int, std::set<std::string>> attrs_of;
    for (std::size_t k = 0; k < 12; ++k) {
      holders[dp.debug->exposure_attribute[k]].insert(dp.debug->exposure_entity[k]);
      attrs_of[dp.debug->exposure_entity[k]].insert(dp.debug->exposure_attribute[k]);
    }
    CHECK(holders.size() == 3);
    for (const auto& [a, ents] : holders) CHECK(ents.size() == 4);
    for (const auto& [e, as] : attrs_of) ++pairs[as];
    for (const auto& [p, count] : pairs) CHECK(count == 2);
  }
}

TEST_CASE("validation without labels falls back to structural checks") {
  const EmbeddingWorld w = make_world(small_world());
  Rng rng = make_stream(52, 0);
  Datapoint dp = generate_datapoint(w, rng);
  dp.debug.reset();
  for (auto& e : dp.exposures) e.entity_id = -1;
  const auto report = validate_datapoint(dp);
  CHECK(report.ok());
  CHECK_FALSE(report.notes.empty());
}

TEST_CASE("validation flags constructed violations") {
  const EmbeddingWorld w = make_world(small_world());
  Rng rng = make_stream(53, 0);
  const Datapoint good = generate_datapoint(w, rng);

  Datapoint missing = good;
  missing.exposures.pop_back();
  CHECK(has_violation(validate_datapoint(missing), "11 exposures"));

  Datapoint wrong_gold = good;
  const auto& d = *good.debug;
  for (std::size_t j = 0; j < 6; ++j) {
    if (j != good.gold && d.entity_category[d.candidate_entity[j]] == d.query_category) {
      wrong_gold.gold = j;
      break;
    }
  }
  REQUIRE(wrong_gold.gold != good.gold);
  CHECK(has_violation(validate_datapoint(wrong_gold), "gold"));
}

TEST_CASE("datasets are sized, valid and reproducible") {
  const EmbeddingWorld w = make_world(small_world());
  const DatasetSizes sizes{40, 5, 10};
  const Dataset a = generate_dataset(w, sizes, 9);
  CHECK(a.train.size() == 40);
  CHECK(a.val.size() == 5);
  CHECK(a.test.size() == 10);
  for (const auto& dp : a.test) CHECK(validate_datapoint(dp).ok());

  const auto d1 = scratch("a"), d2 = scratch("b");
  write_dataset(d1, a, true);
  write_dataset(d2, generate_dataset(w, sizes, 9), true);
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl"}) {
    std::ifstream x(d1 / f), y(d2 / f);
    std::stringstream sx, sy;
    sx << x.rdbuf();
    sy << y.rdbuf();
    CHECK(sx.str() == sy.str());
  }
  const Dataset back = read_dataset(d1);
  REQUIRE(back.test.size() == 10);
  CHECK(back.test[3].candidates == a.test[3].candidates);
  CHECK(back.test[3].gold == a.test[3].gold);
  CHECK(back.test[3].debug->query_attributes == a.test[3].debug->query_attributes);

  CHECK_THROWS(generate_dataset(w, {0, 1, 1}, 9));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("paper-scale split sizes are accepted") {
  WorldConfig c = small_world();
  c.image_dim = 4;
  c.attribute_dim = 4;
  c.noun_dim = 4;
  const Dataset big = generate_dataset(make_world(c), {40000, 5000, 10000}, 2);
  CHECK(big.train.size() == 40000);
  CHECK(big.val.size() == 5000);
  CHECK(big.test.size() == 10000);
}

TEST_CASE("load_vectors") {
  const auto dir = scratch("vec");
  std::ofstream(dir / "ok.txt") << "a 1 0\nb 0 1\n";
  const VectorTable t = load_vectors(dir / "ok.txt");
  REQUIRE(t.size() == 2);
  CHECK(t.at("a") == Vec{1, 0});
  CHECK(t.at("b") == Vec{0, 1});

  std::ofstream(dir / "ragged.txt") << "a 1 0\nb 0 1 2\n";
  try {
    load_vectors(dir / "ragged.txt");
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  std::ofstream(dir / "empty.txt");
  CHECK(load_vectors(dir / "empty.txt").empty());
  fs::remove_all(dir);
}

TEST_CASE("world_from_vectors feeds the generator") {
  VectorTable images, attributes, nouns;
  Rng rng = make_stream(54, 0);
  std::normal_distribution<double> normal;
  auto vec = [&](std::size_t n) {
    Vec v(n);
    for (auto& x : v) x = normal(rng);
    return v;
  };
  for (const char* cat : {"mug", "dog", "cat"}) {
    nouns[cat] = vec(4);
    for (int e = 0; e < 3; ++e) images[std::string(cat) + "/" + std::to_string(e)] = vec(6);
  }
  for (const char* a : {"amused", "evaluated", "instructed", "owned"}) attributes[a] = vec(5);
  const EmbeddingWorld w = world_from_vectors(images, attributes, nouns);
  for (int i = 0; i < 50; ++i) CHECK(validate_datapoint(generate_datapoint(w, rng)).ok());

  images.erase("dog/2");
  CHECK_THROWS(world_from_vectors(images, attributes, {{"mug", vec(4)}}));
}
