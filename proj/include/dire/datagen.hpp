#pragma once

// Cross-modal entity-tracking datasets. A datapoint shows six entities from
// two categories, each twice with a different attribute (twelve exposures),
// then asks for the one entity matching a category noun and two attributes.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dire/numerics.hpp"
#include "dire/rng.hpp"

namespace dire {

inline constexpr std::size_t kExposuresPerDatapoint = 12;
inline constexpr std::size_t kCandidatesPerDatapoint = 6;
inline constexpr std::size_t kEntitiesPerCategory = 3;
inline constexpr std::size_t kAttributesPerDatapoint = 3;

struct Exposure {
  Vec image;
  Vec attribute;
  std::size_t step = 0;  // 1-based presentation index
  int entity_id = -1;    // hidden label, -1 when unknown
};

struct Query {
  Vec noun;
  std::array<Vec, 2> attributes;
};

// Ground-truth labels kept alongside a datapoint for validation and error
// analysis. Entities are numbered 0..5 locally; 0..2 belong to category 0.
struct DebugInfo {
  std::array<std::string, 2> category_names;
  std::vector<int> entity_category;
  std::vector<int> exposure_entity;
  std::vector<std::string> exposure_attribute;
  std::vector<int> candidate_entity;
  int query_category = 0;
  std::array<std::string, 2> query_attributes;
  // permutation[k] is the canonical (entity-major) index of the exposure
  // presented at position k.
  std::vector<int> permutation;
};

struct Datapoint {
  std::vector<Exposure> exposures;
  Query query;
  std::vector<Vec> candidates;
  std::size_t gold = 0;
  std::optional<DebugInfo> debug;
};

struct WorldConfig {
  std::size_t image_dim = 64;
  std::size_t attribute_dim = 32;
  std::size_t noun_dim = 32;
  std::size_t n_categories = 40;
  std::size_t entities_per_category = 8;
  std::size_t n_attributes = 24;
  double noise = 0.1;
  std::uint64_t seed = 1;
};

struct EmbeddingWorld {
  std::vector<std::string> category_names;
  std::vector<Vec> prototypes;                 // image space
  std::vector<Vec> nouns;                      // noun space, one per category
  std::vector<std::vector<Vec>> entity_images; // [category][entity]
  std::vector<std::string> attribute_names;
  std::vector<Vec> attributes;

  std::size_t image_dim() const;
  std::size_t attribute_dim() const;
  std::size_t noun_dim() const;
};

EmbeddingWorld make_world(const WorldConfig& config);

using VectorTable = std::map<std::string, Vec>;

// Builds a world from precomputed vectors. Image names must be
// "<category>/<anything>"; every category needs a noun vector under its
// own name.
EmbeddingWorld world_from_vectors(const VectorTable& images, const VectorTable& attributes,
                                  const VectorTable& nouns);

Datapoint generate_datapoint(const EmbeddingWorld& world, Rng& rng);

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> notes;  // checks skipped for lack of labels
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_datapoint(const Datapoint& dp);

// True when the datapoint holds both kinds of distractor: a same-category
// entity sharing exactly one query attribute, and an other-category entity
// carrying both query attributes. Requires debug labels.
bool has_confounders(const Datapoint& dp);

struct DatasetSizes {
  std::size_t train = 4000;
  std::size_t val = 500;
  std::size_t test = 1000;
};

struct Dataset {
  std::vector<Datapoint> train;
  std::vector<Datapoint> val;
  std::vector<Datapoint> test;
};

std::vector<Datapoint> generate_split(const EmbeddingWorld& world, std::size_t count,
                                      std::uint64_t seed, std::uint64_t stream);
Dataset generate_dataset(const EmbeddingWorld& world, const DatasetSizes& sizes,
                         std::uint64_t seed);

// Whitespace separated "name v1 v2 ..." per line.
VectorTable load_vectors(const std::filesystem::path& path);

nlohmann::json datapoint_to_json(const Datapoint& dp, bool with_debug);
Datapoint datapoint_from_json(const nlohmann::json& j);

void write_jsonl(const std::filesystem::path& path, const std::vector<Datapoint>& data,
                 bool with_debug);
std::vector<Datapoint> read_jsonl(const std::filesystem::path& path);

void write_dataset(const std::filesystem::path& dir, const Dataset& data, bool with_debug);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace dire
