#include <doctest.h>

#include <cmath>

#include "dire/entity_library.hpp"
#include "helpers.hpp"

using namespace dire;

namespace {

bool near(const Vec& a, const Vec& b, double tol) {
  if (a.dim() != b.dim()) return false;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

bool near(const Mat& a, const Mat& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.flat()[i] - b.flat()[i]) > tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("init_library") {
  CHECK(init_library(Vec{1, 0}).entities() == Mat{{1, 0}});
  CHECK(init_library(Vec(3)).entities() == Mat(1, 3));
  const Library lib = init_library(Vec{0.3, -0.7});
  CHECK(lib.entities() == Mat{{0.3, -0.7}});
  CHECK(lib.step() == 1);
}

TEST_CASE("similarity_profile") {
  CHECK(similarity_profile(init_library(Vec{1, 0}), Vec{0, 1}) == Vec{0});
  CHECK(similarity_profile(Library(Mat::identity(2), 2), Vec{2, 3}) == Vec{2, 3});
  CHECK(similarity_profile(init_library(Vec{1, 1}), Vec{1, 1}) == Vec{2});
  CHECK_THROWS_AS(similarity_profile(init_library(Vec{1, 1}), Vec{1, 1, 1}), DimensionError);
}

TEST_CASE("old_probability") {
  CHECK(old_probability(Vec{0}, {1, 0}) == 0.5);
  CHECK(old_probability(Vec{2, -1}, {1, -2}) == 0.5);
  CHECK(std::abs(old_probability(Vec{10}, {5, 0}) - 1.0) < 1e-12);
}

TEST_CASE("insertion_distribution") {
  CHECK(insertion_distribution(Vec{0}, 0.5) == Vec{0.5, 0.5});
  CHECK(near(insertion_distribution(Vec{1, 1}, 0.8), Vec{0.4, 0.4, 0.2}, 1e-15));
  CHECK(insertion_distribution(Vec{4, -2, 7}, 0.0) == Vec{0, 0, 0, 1});
  CHECK_THROWS(insertion_distribution(Vec{1}, 1.5));
}

TEST_CASE("update") {
  const Library lib = init_library(Vec{1, 0});
  CHECK(update(lib, Vec{0, 1}, Vec{0.5, 0.5}).entities() == Mat{{1, 0.5}, {0, 0.5}});

  const Library two(Mat{{1, 2}, {3, 4}}, 2);
  const Library fresh = update(two, Vec{5, 6}, Vec{0, 0, 1});
  CHECK(fresh.entities() == Mat{{1, 2}, {3, 4}, {5, 6}});
  const Library merged = update(two, Vec{5, 6}, Vec{1, 0, 0});
  CHECK(merged.entities() == Mat{{6, 8}, {3, 4}, {0, 0}});
  CHECK(merged.step() == 3);

  CHECK_THROWS_AS(update(two, Vec{5, 6}, Vec{1, 0}), DimensionError);
  CHECK_THROWS_AS(update(two, Vec{5, 6, 7}, Vec{0, 0, 1}), DimensionError);
  CHECK_THROWS(update(two, Vec{5, 6}, Vec{0.5, 0.5, 0.5}));
}

TEST_CASE("build") {
  const std::vector<Vec> one{Vec{0.3, 0.2}};
  CHECK(build(one, {}).entities() == init_library(one[0]).entities());

  const std::vector<Vec> two{Vec{1, 0}, Vec{0, 1}};
  BuildTrace trace;
  const Library lib = build(two, {1, 0}, &trace);
  CHECK(lib.entities() == Mat{{1, 0.5}, {0, 0.5}});
  REQUIRE(trace.steps.size() == 1);
  CHECK(trace.steps[0].similarity == Vec{0});
  CHECK(trace.steps[0].p_old == 0.5);
  CHECK(trace.steps[0].z == Vec{0.5, 0.5});

  CHECK_THROWS(build(std::vector<Vec>{}, {}));
}

TEST_CASE("build with the gate forced shut stores every exposure verbatim") {
  Rng rng = make_stream(21, 0);
  std::vector<Vec> us;
  for (int i = 0; i < 7; ++i) us.push_back(testing::random_vec(5, rng));
  const Library lib = build(us, {}, nullptr, {0.0});
  for (std::size_t i = 0; i < us.size(); ++i) CHECK(lib.entities().row_vec(i) == us[i]);
}

TEST_CASE("library laws (property)") {
  Rng rng = make_stream(22, 0);
  std::uniform_real_distribution<double> wd(-3, 3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 24, m = 2 + rng() % 31;
    std::vector<Vec> us;
    Vec column_sum(m);
    for (std::size_t i = 0; i < n; ++i) {
      us.push_back(testing::random_vec(m, rng));
      column_sum += us.back();
    }
    BuildTrace trace;
    const Library lib = build(us, {wd(rng), wd(rng)}, &trace);
    CHECK(lib.rows() == n);
    CHECK(trace.steps.size() == n - 1);
    Vec sums(m);
    for (std::size_t j = 0; j < lib.rows(); ++j) sums += lib.entities().row_vec(j);
    CHECK(near(sums, column_sum, 1e-9));
    for (const auto& step : trace.steps) {
      double t = 0.0;
      for (double x : step.z) {
        CHECK(x >= 0.0);
        t += x;
      }
      CHECK(std::abs(t - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("retrieve") {
  const Library eye(Mat::identity(2), 2);
  const Retrieval flat = retrieve(eye, Vec{0, 0});
  CHECK(flat.attention == Vec{0.5, 0.5});
  CHECK(flat.read == Vec{0.5, 0.5});

  const Retrieval sharp = retrieve(eye, Vec{50, 0});
  CHECK(near(sharp.attention, Vec{1, 0}, 1e-12));
  CHECK(near(sharp.read, Vec{1, 0}, 1e-12));

  const Retrieval r = retrieve(Library(Mat{{2, 0}, {0, 2}}, 2), Vec{std::log(2.0) / 2, 0});
  CHECK(near(r.attention, Vec{2.0 / 3, 1.0 / 3}, 1e-15));
  CHECK(near(r.read, Vec{4.0 / 3, 2.0 / 3}, 1e-15));
}

TEST_CASE("build_backward matches finite differences") {
  Rng rng = make_stream(23, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 5, m = 3;
    std::vector<Vec> us;
    for (std::size_t i = 0; i < n; ++i) us.push_back(testing::random_vec(m, rng, 0.7));
    const GateParams gate{std::uniform_real_distribution<double>(0.5, 2)(rng),
                          std::uniform_real_distribution<double>(-1, 1)(rng)};
    const Mat weight = testing::random_mat(n, m, rng);
    auto loss_of = [&](const std::vector<Vec>& xs, GateParams g) {
      const Library lib = build(xs, g);
      double acc = 0.0;
      for (std::size_t i = 0; i < weight.size(); ++i) acc += weight.flat()[i] * lib.entities().flat()[i];
      return acc;
    };
    BuildTrace trace;
    build(us, gate, &trace);
    const BuildGradient grad = build_backward(trace, gate, weight);

    Vec flat;
    std::vector<double> packed;
    for (const auto& u : us) packed.insert(packed.end(), u.begin(), u.end());
    packed.push_back(gate.w);
    packed.push_back(gate.b);
    auto f = [&](std::span<const double> x) {
      std::vector<Vec> xs;
      for (std::size_t i = 0; i < n; ++i) xs.emplace_back(std::vector<double>(x.begin() + i * m, x.begin() + (i + 1) * m));
      return loss_of(xs, {x[n * m], x[n * m + 1]});
    };
    const Vec numeric = central_fd_gradient(f, Vec(packed), 1e-6);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < m; ++k) {
        CHECK(std::abs(grad.exposures[i][k] - numeric[i * m + k]) < 1e-6);
      }
    }
    CHECK(std::abs(grad.w - numeric[n * m]) < 1e-6);
    CHECK(std::abs(grad.b - numeric[n * m + 1]) < 1e-6);
  }
}

TEST_CASE("library_to_json dump") {
  const std::vector<Vec> us{Vec{1, 0}, Vec{0, 1}, Vec{1, 1}};
  BuildTrace trace;
  const Library lib = build(us, {}, &trace);
  const auto j = library_to_json(lib, &trace);
  CHECK(j["rows"] == 3);
  CHECK(j["row_norms"].size() == 3);
  CHECK(j["steps"].size() == 2);
}
