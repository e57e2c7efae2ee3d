#pragma once

// Entity library: an external memory that grows by one row per exposure.
// Each incoming exposure vector is softly inserted: part of its mass is
// merged into existing rows in proportion to how likely it is to be an old
// entity, the rest goes into a freshly opened blank row. Queries read the
// library back by softmax attention over rows.

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "dire/numerics.hpp"

namespace dire {

struct GateParams {
  double w = 1.0;
  double b = 0.0;
};

class Library {
 public:
  Library() = default;
  Library(Mat entities, std::size_t step) : entities_(std::move(entities)), step_(step) {}

  const Mat& entities() const { return entities_; }
  std::size_t rows() const { return entities_.rows(); }
  std::size_t cols() const { return entities_.cols(); }
  std::size_t step() const { return step_; }

  std::vector<double> row_norms() const;

 private:
  Mat entities_;
  std::size_t step_ = 0;
};

Library init_library(const Vec& first);
Vec similarity_profile(const Library& lib, const Vec& u);
double old_probability(const Vec& s, const GateParams& gate);
Vec insertion_distribution(const Vec& s, double p_old);
Library update(const Library& lib, const Vec& u, const Vec& z);

// Everything a single insertion (exposure 2..n) computed.
struct InsertionStep {
  Vec similarity;
  std::size_t max_index = 0;  // subgradient of max() flows here only
  double s_max = 0.0;
  double p_old = 0.0;
  Vec attention;  // softmax(similarity)
  Vec z;
};

struct BuildTrace {
  std::vector<Vec> exposures;
  std::vector<InsertionStep> steps;  // one per exposure after the first
  std::vector<Library> states;       // E_1 .. E_n
};

struct BuildOptions {
  // Overrides the gate for every insertion; 0 turns every exposure into a
  // new entity.
  std::optional<double> fixed_p_old;
};

Library build(std::span<const Vec> exposures, const GateParams& gate,
              BuildTrace* trace = nullptr, const BuildOptions& options = {});

struct Retrieval {
  Vec attention;  // g
  Vec read;       // r
};

// g = softmax(keys·q); r = valuesᵀ·g. DIRE uses the same library for keys and
// values; the two-matrix variants read from a parallel library.
Retrieval retrieve(const Library& lib, const Vec& q);
Retrieval attend_and_read(const Mat& keys, const Mat& values, const Vec& q);

struct RetrievalGradient {
  Mat keys;
  Mat values;
  Vec query;
};

RetrievalGradient attend_and_read_backward(const Mat& keys, const Mat& values, const Vec& q,
                                           const Retrieval& forward, const Vec& d_read);

// Gradients of a built library with respect to its inputs.
struct BuildGradient {
  std::vector<Vec> exposures;
  double w = 0.0;
  double b = 0.0;
};

// Backpropagates d_library (gradient on E_n) through the whole build.
// extra_dz optionally carries additional gradient on each insertion's z
// (index k belongs to exposure k+2), which is how a parallel library that
// reuses these weights feeds back into the gate.
BuildGradient build_backward(const BuildTrace& trace, const GateParams& gate, const Mat& d_library,
                             std::span<const Vec> extra_dz = {},
                             const BuildOptions& options = {});

// Replays the insertion weights of a trace over a different set of exposure
// vectors: E[j] = Σ_i z_i[j]·u_i.
Mat replay_insertions(const BuildTrace& trace, std::span<const Vec> exposures);

struct ReplayGradient {
  std::vector<Vec> exposures;
  std::vector<Vec> dz;  // per insertion step, aligned with trace.steps
};

ReplayGradient replay_insertions_backward(const BuildTrace& trace, std::span<const Vec> exposures,
                                          const Mat& d_library);

// step, rows, cols, E (row-major), row_norms, and the per-step gate log when
// a trace is given.
nlohmann::json library_to_json(const Library& lib, const BuildTrace* trace = nullptr);

}  // namespace dire
