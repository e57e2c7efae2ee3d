#pragma once

// Shared fixtures and independent reference implementations for tests.
// The references deliberately avoid the library's own numerics so that a
// bug in a shared helper cannot hide on both sides of a comparison.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "dire/datagen.hpp"
#include "dire/models.hpp"
#include "dire/numerics.hpp"
#include "dire/rng.hpp"

namespace testing {

inline dire::Vec random_vec(std::size_t n, dire::Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  dire::Vec v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

inline dire::Mat random_mat(std::size_t r, std::size_t c, dire::Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  dire::Mat m(r, c);
  for (auto& x : m.flat()) x = normal(rng);
  return m;
}

using Row = std::vector<double>;
using Table = std::vector<Row>;

inline Table to_table(const dire::Mat& m) {
  Table t(m.rows(), Row(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t[i][j] = m(i, j);
  return t;
}

inline Row to_row(const dire::Vec& v) { return Row(v.begin(), v.end()); }

// Mᵀx with M stored input × output.
inline Row project(const Table& M, const Row& x) {
  Row y(M[0].size(), 0.0);
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += M[a][k] * x[a];
  return y;
}

inline Row plus(Row a, const Row& b) {
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  return a;
}

inline double inner(const Row& a, const Row& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline Row normalize_exp(const Row& s) {
  double mx = s[0];
  for (double x : s) mx = std::max(mx, x);
  Row e(s.size());
  double total = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) total += (e[j] = std::exp(s[j] - mx));
  for (auto& x : e) x /= total;
  return e;
}

struct OracleOutput {
  Row distribution;
  double loss = 0.0;
  Table library;  // DIRE input library, or MemN input memory
};

inline Row score_distribution(const Row& comparison, const Table& image_out,
                              const dire::Datapoint& dp) {
  Row scores;
  for (const auto& d : dp.candidates) scores.push_back(inner(comparison, project(image_out, to_row(d))));
  return normalize_exp(scores);
}

// Straight-line DIRE forward pass: embeddings, gated soft insertion over
// the whole sequence, soft retrieval, candidate softmax.
inline OracleOutput dire_oracle(const dire::Model& model, const dire::Datapoint& dp,
                                std::optional<double> fixed_p_old = std::nullopt) {
  const auto& P = model.params;
  const bool two = model.spec.matrix_sets == 2;
  const Table V = to_table(P.get("V")), A = to_table(P.get("A")), C = to_table(P.get("C"));
  const Table Vo = two ? to_table(P.get("V_out")) : V;
  const Table Ao = two ? to_table(P.get("A_out")) : A;
  const double w = P.get("w")(0, 0), b = P.get("b")(0, 0);

  Table E, Eo;
  for (const auto& ex : dp.exposures) {
    const Row u = plus(project(V, to_row(ex.image)), project(A, to_row(ex.attribute)));
    const Row uo = plus(project(Vo, to_row(ex.image)), project(Ao, to_row(ex.attribute)));
    if (E.empty()) {
      E.push_back(u);
      Eo.push_back(uo);
      continue;
    }
    Row s;
    for (const auto& row : E) s.push_back(inner(row, u));
    double mx = s[0];
    for (double x : s) mx = std::max(mx, x);
    const double p = fixed_p_old ? *fixed_p_old : 1.0 / (1.0 + std::exp(-(w * mx + b)));
    const Row soft = normalize_exp(s);
    Row z;
    for (double x : soft) z.push_back(p * x);
    z.push_back(1.0 - p);
    E.push_back(Row(u.size(), 0.0));
    Eo.push_back(Row(uo.size(), 0.0));
    for (std::size_t j = 0; j < E.size(); ++j) {
      for (std::size_t k = 0; k < u.size(); ++k) {
        E[j][k] += z[j] * u[k];
        Eo[j][k] += z[j] * uo[k];
      }
    }
  }
  const Row q = plus(plus(project(C, to_row(dp.query.noun)), project(A, to_row(dp.query.attributes[0]))),
                     project(A, to_row(dp.query.attributes[1])));
  Row comparison = q;
  if (model.spec.probe == dire::Probe::retrieved) {
    Row s;
    for (const auto& row : E) s.push_back(inner(row, q));
    const Row g = normalize_exp(s);
    comparison.assign(q.size(), 0.0);
    for (std::size_t j = 0; j < Eo.size(); ++j)
      for (std::size_t k = 0; k < q.size(); ++k) comparison[k] += g[j] * Eo[j][k];
  }
  OracleOutput out;
  out.distribution = score_distribution(comparison, Vo, dp);
  out.loss = -std::log(out.distribution[dp.gold]);
  out.library = E;
  return out;
}

// Straight-line memory network: one memory row per exposure, each hop
// probes with the query plus everything retrieved so far, candidates are
// compared with the last retrieved vector.
inline OracleOutput memn_oracle(const dire::Model& model, const dire::Datapoint& dp) {
  const auto& P = model.params;
  const bool two = model.spec.matrix_sets == 2;
  const Table V = to_table(P.get("V")), A = to_table(P.get("A")), C = to_table(P.get("C"));
  const Table Vo = two ? to_table(P.get("V_out")) : V;
  const Table Ao = two ? to_table(P.get("A_out")) : A;

  Table Min, Mout;
  for (const auto& ex : dp.exposures) {
    Min.push_back(plus(project(V, to_row(ex.image)), project(A, to_row(ex.attribute))));
    Mout.push_back(plus(project(Vo, to_row(ex.image)), project(Ao, to_row(ex.attribute))));
  }
  Row probe = plus(plus(project(C, to_row(dp.query.noun)), project(A, to_row(dp.query.attributes[0]))),
                   project(A, to_row(dp.query.attributes[1])));
  Row read;
  for (int h = 0; h < model.spec.hops; ++h) {
    Row s;
    for (const auto& row : Min) s.push_back(inner(row, probe));
    const Row att = normalize_exp(s);
    read.assign(probe.size(), 0.0);
    for (std::size_t j = 0; j < Mout.size(); ++j)
      for (std::size_t k = 0; k < read.size(); ++k) read[k] += att[j] * Mout[j][k];
    probe = plus(probe, read);
  }
  OracleOutput out;
  out.distribution = score_distribution(read, Vo, dp);
  out.loss = -std::log(out.distribution[dp.gold]);
  out.library = Min;
  return out;
}

inline double max_abs_diff(const Row& a, const dire::Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Small random model whose gate weights are randomized too.
inline dire::Model random_model(const dire::ModelSpec& spec, const dire::ModelDims& dims,
                                dire::Rng& rng) {
  dire::Model m = dire::init_model(spec, dims, rng());
  for (auto& block : m.params.blocks()) {
    for (auto& x : block.value.flat()) x = std::normal_distribution<double>(0.0, 0.5)(rng);
  }
  return m;
}

}  // namespace testing
