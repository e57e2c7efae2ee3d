#pragma once

// Entity-tracking models. Every model maps a datapoint to a probability
// distribution over its candidate images and is trained with cross-entropy.
//
//   dire   entity library built by soft insertion, queried by soft retrieval
//   memn   memory network: one memory row per exposure, 1-3 retrieval hops
//   ff     feed-forward net over the concatenated exposures and query
//   rnn    simple recurrent net over the exposures, then one hidden layer
//   random uniform distribution, no parameters
//
// All learned models share the same embedding layer (V for images, A for
// attributes, C for the query noun) and the same candidate scorer. Mapping
// matrices are stored input-dim × m and applied as Mᵀ·x.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dire/datagen.hpp"
#include "dire/entity_library.hpp"
#include "dire/params.hpp"

namespace dire {

enum class ModelKind { random, ff, rnn, dire, memn };

// Which vector the candidates are compared against in DIRE.
enum class Probe { retrieved, query };

struct ModelSpec {
  ModelKind kind = ModelKind::dire;
  int matrix_sets = 1;  // 1m or 2m (dire, memn)
  int hops = 1;         // memn only
  Probe probe = Probe::retrieved;

  std::string name() const;
  bool operator==(const ModelSpec&) const = default;
};

// Accepts random, ff, rnn, dire-1m, dire-2m, memn-{1m,2m}-{1h,2h,3h}.
ModelSpec parse_model_spec(std::string_view name);

// Every trainable variant, in results-table order.
std::vector<ModelSpec> all_trainable_specs();

struct ModelDims {
  std::size_t image = 64;
  std::size_t attribute = 32;
  std::size_t noun = 32;
  std::size_t multimodal = 64;
  std::size_t exposures = 12;  // fixed input width of ff
  std::size_t hidden = 300;

  bool operator==(const ModelDims&) const = default;
};

struct Model {
  ModelSpec spec;
  ModelDims dims;
  ParamSet params;
};

// Matrices uniform in ±1/sqrt(fan_in), biases zero, gate w = 1, b = 0.
Model init_model(const ModelSpec& spec, const ModelDims& dims, std::uint64_t seed);

struct ForwardOptions {
  bool training = false;
  double dropout = 0.0;
  std::uint64_t dropout_seed = 0;
  // Forces the DIRE gate; 0 makes every exposure a new entity.
  std::optional<double> fixed_p_old;
};

struct DireCache {
  std::vector<Vec> masks;      // dropout multipliers per exposure
  std::vector<Vec> exposures;  // u_i after dropout (input matrix set)
  std::vector<Vec> exposures_out;  // 2m only
  BuildTrace build;
  Library library;
  Mat values;  // library read at retrieval; differs from keys in 2m
  Vec query;
  Retrieval retrieval;
};

struct MemnCache {
  std::vector<Vec> masks;
  Mat memory_in;
  Mat memory_out;
  Vec query;
  std::vector<Vec> probes;  // probe_1 .. probe_{H+1}
  std::vector<Retrieval> hops;
};

struct FfCache {
  std::vector<Vec> masks;  // per exposure
  Vec query;
  Vec input;
  Vec hidden1;
  Vec hidden1_mask;
  Vec hidden1_out;
  Vec hidden2;
  Vec hidden2_mask;
  Vec hidden2_out;
};

struct RnnCache {
  std::vector<Vec> masks;
  std::vector<Vec> exposures;
  std::vector<Vec> states;  // h_0 .. h_n
  Vec final_mask;
  Vec query;
  Vec top_input;
  Vec hidden;
  Vec hidden_mask;
  Vec hidden_out;
};

struct ForwardTrace {
  ModelSpec spec;
  std::uint64_t params_fingerprint = 0;
  ForwardOptions options;
  Vec comparison;  // vector the candidates are scored against
  std::vector<Vec> mapped_candidates;
  Vec scores;
  Vec distribution;
  std::size_t gold = 0;
  std::size_t prediction = 0;
  double loss = 0.0;
  std::variant<std::monostate, DireCache, MemnCache, FfCache, RnnCache> cache;
};

class DatapointError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Shape checks a datapoint against model dimensions; throws DatapointError
// naming the offending field.
void check_datapoint(const ModelDims& dims, ModelKind kind, const Datapoint& dp);

Vec embed_exposure(const Vec& image, const Vec& attribute, const Mat& image_map,
                   const Mat& attribute_map);
Vec embed_query(const Vec& noun, const Vec& a1, const Vec& a2, const Mat& noun_map,
                const Mat& attribute_map);
// softmax over dot(probe, image_mapᵀ·candidate_j)
Vec score_candidates(const Vec& probe, const std::vector<Vec>& candidates, const Mat& image_map);

ForwardTrace dire_forward(const Model& model, const Datapoint& dp, const ForwardOptions& opt = {});
ForwardTrace memn_forward(const Model& model, const Datapoint& dp, const ForwardOptions& opt = {});
ForwardTrace ff_forward(const Model& model, const Datapoint& dp, const ForwardOptions& opt = {});
ForwardTrace rnn_forward(const Model& model, const Datapoint& dp, const ForwardOptions& opt = {});
ForwardTrace random_forward(const Model& model, const Datapoint& dp);

ParamSet dire_backward(const Model& model, const Datapoint& dp, const ForwardTrace& trace);
ParamSet memn_backward(const Model& model, const Datapoint& dp, const ForwardTrace& trace);
ParamSet ff_backward(const Model& model, const Datapoint& dp, const ForwardTrace& trace);
ParamSet rnn_backward(const Model& model, const Datapoint& dp, const ForwardTrace& trace);

// Dispatch on model.spec.kind.
ForwardTrace forward(const Model& model, const Datapoint& dp, const ForwardOptions& opt = {});
// Throws std::invalid_argument when the trace was produced with different
// parameters (stale trace).
ParamSet backward(const Model& model, const Datapoint& dp, const ForwardTrace& trace);
// Same as backward, writing into grad and reusing its storage when the layout
// already matches.
void backward_into(const Model& model, const Datapoint& dp, const ForwardTrace& trace,
                   ParamSet& grad);

// Re-runs the forward pass with the trace's recorded options.
double replay_loss(const Model& model, const Datapoint& dp, const ForwardTrace& trace);

}  // namespace dire
