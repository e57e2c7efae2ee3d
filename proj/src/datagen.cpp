#include "dire/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace dire {

namespace {

Vec gaussian_vec(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

Vec normalized(Vec v) {
  const double n = norm(v);
  if (n == 0.0) throw std::domain_error("cannot normalize a zero vector");
  v *= 1.0 / n;
  return v;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

// k distinct indices from [0, n), in random order.
std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(k);
  return all;
}

// The three attribute sets of size two built from three attributes.
constexpr std::array<std::array<std::size_t, 2>, 3> kAttributeSets{{{0, 1}, {0, 2}, {1, 2}}};

// Groups vectors by exact equality; returns the group id of each input.
std::vector<int> identity_groups(const std::vector<const Vec*>& vecs) {
  std::vector<const Vec*> reps;
  std::vector<int> ids;
  for (const Vec* v : vecs) {
    int id = -1;
    for (std::size_t r = 0; r < reps.size(); ++r) {
      if (*reps[r] == *v) {
        id = static_cast<int>(r);
        break;
      }
    }
    if (id < 0) {
      id = static_cast<int>(reps.size());
      reps.push_back(v);
    }
    ids.push_back(id);
  }
  return ids;
}

}  // namespace

std::size_t EmbeddingWorld::image_dim() const { return prototypes.front().dim(); }
std::size_t EmbeddingWorld::attribute_dim() const { return attributes.front().dim(); }
std::size_t EmbeddingWorld::noun_dim() const { return nouns.front().dim(); }

EmbeddingWorld make_world(const WorldConfig& c) {
  if (c.n_categories < 2) throw std::invalid_argument("make_world: need at least 2 categories");
  if (c.entities_per_category < kEntitiesPerCategory) {
    throw std::invalid_argument("make_world: need at least 3 entities per category");
  }
  if (c.n_attributes < kAttributesPerDatapoint) {
    throw std::invalid_argument("make_world: need at least 3 attributes");
  }
  if (!(c.noise >= 0.0)) throw std::invalid_argument("make_world: noise must be >= 0");
  if (c.image_dim == 0 || c.attribute_dim == 0 || c.noun_dim == 0) {
    throw std::invalid_argument("make_world: dimensions must be positive");
  }

  Rng rng = make_stream(c.seed, streams::world);
  EmbeddingWorld w;
  for (std::size_t k = 0; k < c.n_categories; ++k) {
    w.category_names.push_back(numbered("cat", k));
    w.prototypes.push_back(normalized(gaussian_vec(c.image_dim, rng)));
    w.nouns.push_back(normalized(gaussian_vec(c.noun_dim, rng)));
    std::vector<Vec> images;
    for (std::size_t e = 0; e < c.entities_per_category; ++e) {
      Vec noise = gaussian_vec(c.image_dim, rng);
      noise *= c.noise;
      images.push_back(normalized(w.prototypes.back() + noise));
    }
    w.entity_images.push_back(std::move(images));
  }
  for (std::size_t a = 0; a < c.n_attributes; ++a) {
    w.attribute_names.push_back(numbered("attr", a));
    w.attributes.push_back(normalized(gaussian_vec(c.attribute_dim, rng)));
  }
  return w;
}

EmbeddingWorld world_from_vectors(const VectorTable& images, const VectorTable& attributes,
                                  const VectorTable& nouns) {
  EmbeddingWorld w;
  std::map<std::string, std::vector<Vec>> by_category;
  for (const auto& [name, v] : images) {
    const auto slash = name.find('/');
    if (slash == std::string::npos || slash == 0) {
      throw std::invalid_argument("world_from_vectors: image name '" + name +
                                  "' is not <category>/<id>");
    }
    by_category[name.substr(0, slash)].push_back(v);
  }
  for (auto& [cat, vecs] : by_category) {
    auto noun = nouns.find(cat);
    if (noun == nouns.end()) {
      throw std::invalid_argument("world_from_vectors: no noun vector for category " + cat);
    }
    Vec proto(vecs.front().dim());
    for (const auto& v : vecs) proto += v;
    proto *= 1.0 / static_cast<double>(vecs.size());
    w.category_names.push_back(cat);
    w.prototypes.push_back(std::move(proto));
    w.nouns.push_back(noun->second);
    w.entity_images.push_back(std::move(vecs));
  }
  for (const auto& [name, v] : attributes) {
    w.attribute_names.push_back(name);
    w.attributes.push_back(v);
  }
  if (w.category_names.size() < 2) {
    throw std::invalid_argument("world_from_vectors: need at least 2 categories");
  }
  for (std::size_t k = 0; k < w.entity_images.size(); ++k) {
    if (w.entity_images[k].size() < kEntitiesPerCategory) {
      throw std::invalid_argument("world_from_vectors: category " + w.category_names[k] +
                                  " has fewer than 3 images");
    }
  }
  if (w.attributes.size() < kAttributesPerDatapoint) {
    throw std::invalid_argument("world_from_vectors: need at least 3 attributes");
  }
  return w;
}

Datapoint generate_datapoint(const EmbeddingWorld& world, Rng& rng) {
  if (world.category_names.size() < 2 || world.attributes.size() < kAttributesPerDatapoint) {
    throw std::invalid_argument("generate_datapoint: world inventory too small");
  }
  for (const auto& imgs : world.entity_images) {
    if (imgs.size() < kEntitiesPerCategory) {
      throw std::invalid_argument("generate_datapoint: category with fewer than 3 entities");
    }
  }

  const auto cats = sample_distinct(world.category_names.size(), 2, rng);
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t c = 0; c < 2; ++c) {
    members[c] = sample_distinct(world.entity_images[cats[c]].size(), kEntitiesPerCategory, rng);
  }
  const auto attrs = sample_distinct(world.attributes.size(), kAttributesPerDatapoint, rng);

  // Local entity e = 3c + k; entity_set[e] indexes kAttributeSets.
  std::array<std::size_t, 6> entity_set{};
  for (std::size_t c = 0; c < 2; ++c) {
    std::array<std::size_t, 3> order{0, 1, 2};
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < 3; ++k) entity_set[3 * c + k] = order[k];
  }
  auto image_of = [&](std::size_t e) -> const Vec& {
    return world.entity_images[cats[e / 3]][members[e / 3][e % 3]];
  };
  auto attr_of = [&](std::size_t e, std::size_t slot) {
    return attrs[kAttributeSets[entity_set[e]][slot]];
  };

  std::vector<int> permutation(kExposuresPerDatapoint);
  std::iota(permutation.begin(), permutation.end(), 0);
  std::shuffle(permutation.begin(), permutation.end(), rng);

  Datapoint dp;
  DebugInfo debug;
  debug.category_names = {world.category_names[cats[0]], world.category_names[cats[1]]};
  debug.entity_category = {0, 0, 0, 1, 1, 1};
  for (std::size_t k = 0; k < kExposuresPerDatapoint; ++k) {
    const auto canonical = static_cast<std::size_t>(permutation[k]);
    const std::size_t e = canonical / 2;
    const std::size_t a = attr_of(e, canonical % 2);
    dp.exposures.push_back({image_of(e), world.attributes[a], k + 1, static_cast<int>(e)});
    debug.exposure_entity.push_back(static_cast<int>(e));
    debug.exposure_attribute.push_back(world.attribute_names[a]);
  }
  debug.permutation = permutation;

  std::uniform_int_distribution<std::size_t> pick_cat(0, 1);
  std::uniform_int_distribution<std::size_t> pick_set(0, 2);
  const std::size_t query_cat = pick_cat(rng);
  const std::size_t query_set = pick_set(rng);
  std::size_t target = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    if (entity_set[3 * query_cat + k] == query_set) target = 3 * query_cat + k;
  }
  std::array<std::size_t, 2> qa{attrs[kAttributeSets[query_set][0]],
                                attrs[kAttributeSets[query_set][1]]};
  if (pick_cat(rng) == 1) std::swap(qa[0], qa[1]);
  dp.query.noun = world.nouns[cats[query_cat]];
  dp.query.attributes = {world.attributes[qa[0]], world.attributes[qa[1]]};
  debug.query_category = static_cast<int>(query_cat);
  debug.query_attributes = {world.attribute_names[qa[0]], world.attribute_names[qa[1]]};

  std::vector<int> order(kCandidatesPerDatapoint);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t j = 0; j < order.size(); ++j) {
    dp.candidates.push_back(image_of(static_cast<std::size_t>(order[j])));
    if (static_cast<std::size_t>(order[j]) == target) dp.gold = j;
  }
  debug.candidate_entity = order;
  dp.debug = std::move(debug);
  return dp;
}

ValidationReport validate_datapoint(const Datapoint& dp) {
  ValidationReport report;
  auto flag = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };

  const std::size_t n = dp.exposures.size();
  if (n != kExposuresPerDatapoint) {
    flag(std::to_string(n) + " exposures (expected 12)");
  }
  if (dp.candidates.size() != kCandidatesPerDatapoint) {
    flag(std::to_string(dp.candidates.size()) + " candidates (expected 6)");
  }
  if (dp.gold >= dp.candidates.size()) {
    flag("gold index " + std::to_string(dp.gold) + " out of range");
  }
  if (n == 0 || dp.candidates.empty()) return report;

  const std::size_t v = dp.exposures.front().image.dim();
  const std::size_t t = dp.exposures.front().attribute.dim();
  for (const auto& e : dp.exposures) {
    if (e.image.dim() != v || e.attribute.dim() != t) {
      flag("inconsistent exposure dimensions");
      return report;
    }
  }
  for (const auto& c : dp.candidates) {
    if (c.dim() != v) {
      flag("candidate dimension differs from exposure images");
      return report;
    }
  }
  if (dp.query.attributes[0].dim() != t || dp.query.attributes[1].dim() != t) {
    flag("query attribute dimension differs from exposure attributes");
    return report;
  }

  // Entity identity: hidden labels when present, otherwise image equality.
  std::vector<int> entity(n);
  const bool labelled = std::all_of(dp.exposures.begin(), dp.exposures.end(),
                                    [](const Exposure& e) { return e.entity_id >= 0; });
  std::vector<const Vec*> images;
  for (const auto& e : dp.exposures) images.push_back(&e.image);
  if (labelled) {
    for (std::size_t i = 0; i < n; ++i) entity[i] = dp.exposures[i].entity_id;
  } else {
    entity = identity_groups(images);
  }
  std::map<int, std::vector<std::size_t>> occurrences;
  for (std::size_t i = 0; i < n; ++i) occurrences[entity[i]].push_back(i);
  if (occurrences.size() != kCandidatesPerDatapoint) {
    flag(std::to_string(occurrences.size()) + " distinct entities (expected 6)");
  }

  std::vector<const Vec*> attr_ptrs;
  for (const auto& e : dp.exposures) attr_ptrs.push_back(&e.attribute);
  attr_ptrs.push_back(&dp.query.attributes[0]);
  attr_ptrs.push_back(&dp.query.attributes[1]);
  const auto attr_group = identity_groups(attr_ptrs);
  const int query_a = attr_group[n];
  const int query_b = attr_group[n + 1];

  std::map<int, std::set<int>> entity_attrs;
  std::map<int, const Vec*> entity_image;
  for (const auto& [id, idx] : occurrences) {
    if (idx.size() != 2) {
      flag("entity " + std::to_string(id) + " appears in " + std::to_string(idx.size()) +
           " exposures (expected 2)");
    }
    for (std::size_t i : idx) {
      entity_attrs[id].insert(attr_group[i]);
      if (!(dp.exposures[i].image == dp.exposures[idx.front()].image)) {
        flag("entity " + std::to_string(id) + " is shown with different images");
      }
    }
    if (entity_attrs[id].size() != idx.size()) {
      flag("entity " + std::to_string(id) + " repeats an attribute");
    }
    entity_image[id] = &dp.exposures[idx.front()].image;
  }
  if (labelled) {
    const auto img_groups = identity_groups(images);
    std::map<int, int> first_entity_of_image;
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, inserted] = first_entity_of_image.emplace(img_groups[i], entity[i]);
      if (!inserted && it->second != entity[i]) {
        report.notes.push_back("distinct entities share an identical image vector");
        break;
      }
    }
  }

  const std::set<int> distinct_attrs(attr_group.begin(), attr_group.begin() + n);
  if (distinct_attrs.size() != kAttributesPerDatapoint) {
    flag(std::to_string(distinct_attrs.size()) + " distinct attributes (expected 3)");
  }
  // Six entities holding two of three attributes each: every attribute is
  // carried by four entities (two per category), every pair by two.
  for (int a : distinct_attrs) {
    std::size_t count = 0;
    for (const auto& [id, set] : entity_attrs) count += set.count(a);
    if (count != 4) {
      flag("attribute carried by " + std::to_string(count) + " entities (expected 4)");
    }
  }
  std::map<std::set<int>, std::size_t> pair_count;
  for (const auto& [id, set] : entity_attrs) ++pair_count[set];
  for (const auto& [set, count] : pair_count) {
    if (count != 2) {
      flag("attribute pair carried by " + std::to_string(count) + " entities (expected 2)");
    }
  }

  if (query_a == query_b) flag("query repeats one attribute");
  if (!distinct_attrs.count(query_a) || !distinct_attrs.count(query_b)) {
    flag("query attribute not present in the exposures");
  }

  // Candidates must be exactly the entity images, once each.
  std::vector<int> candidate_entity(dp.candidates.size(), -1);
  for (std::size_t j = 0; j < dp.candidates.size(); ++j) {
    for (const auto& [id, img] : entity_image) {
      if (*img == dp.candidates[j]) {
        candidate_entity[j] = id;
        break;
      }
    }
    if (candidate_entity[j] < 0) flag("candidate " + std::to_string(j) + " is not a shown entity");
  }
  if (dp.debug && dp.debug->candidate_entity.size() == dp.candidates.size()) {
    candidate_entity.assign(dp.debug->candidate_entity.begin(), dp.debug->candidate_entity.end());
  }
  if (std::set<int>(candidate_entity.begin(), candidate_entity.end()).size() !=
      dp.candidates.size()) {
    flag("candidates do not cover distinct entities");
  }

  const std::set<int> query_pair{query_a, query_b};
  const bool have_categories =
      dp.debug && dp.debug->entity_category.size() == kCandidatesPerDatapoint && labelled;
  if (have_categories) {
    const auto& cat = dp.debug->entity_category;
    std::array<std::size_t, 2> per_category{};
    std::map<std::pair<int, std::set<int>>, std::size_t> per_category_pair;
    for (const auto& [id, set] : entity_attrs) {
      if (id < 0 || id >= static_cast<int>(cat.size())) {
        flag("entity id " + std::to_string(id) + " has no category label");
        return report;
      }
      ++per_category[static_cast<std::size_t>(cat[id])];
      ++per_category_pair[{cat[id], set}];
    }
    if (per_category[0] != kEntitiesPerCategory || per_category[1] != kEntitiesPerCategory) {
      flag("categories hold " + std::to_string(per_category[0]) + " and " +
           std::to_string(per_category[1]) + " entities (expected 3 each)");
    }
    for (const auto& [key, count] : per_category_pair) {
      if (count != 1) flag("attribute pair repeated within one category");
    }
    std::vector<int> matches;
    for (const auto& [id, set] : entity_attrs) {
      if (cat[id] == dp.debug->query_category && set == query_pair) matches.push_back(id);
    }
    if (matches.size() != 1) {
      flag("query matches " + std::to_string(matches.size()) + " entities (expected exactly 1)");
    } else if (dp.gold < candidate_entity.size() && candidate_entity[dp.gold] != matches.front()) {
      flag("gold candidate is not the unique matching entity");
    }
  } else {
    report.notes.push_back("no category labels; category checks skipped");
    std::size_t holders = 0;
    for (const auto& [id, set] : entity_attrs) holders += (set == query_pair);
    if (holders != 2) {
      flag("query attribute pair held by " + std::to_string(holders) + " entities (expected 2)");
    }
    if (dp.gold < candidate_entity.size() && candidate_entity[dp.gold] >= 0 &&
        entity_attrs[candidate_entity[dp.gold]] != query_pair) {
      flag("gold candidate does not carry both query attributes");
    }
  }
  return report;
}

bool has_confounders(const Datapoint& dp) {
  if (!dp.debug) throw std::invalid_argument("has_confounders: datapoint has no debug labels");
  const auto& d = *dp.debug;
  const std::set<std::string> query(d.query_attributes.begin(), d.query_attributes.end());
  std::map<int, std::set<std::string>> attrs;
  for (std::size_t i = 0; i < d.exposure_entity.size(); ++i) {
    attrs[d.exposure_entity[i]].insert(d.exposure_attribute[i]);
  }
  bool same_category_one_attr = false;
  bool other_category_both_attrs = false;
  for (const auto& [id, set] : attrs) {
    std::size_t shared = 0;
    for (const auto& a : set) shared += query.count(a);
    const bool same_cat = d.entity_category[id] == d.query_category;
    if (same_cat && shared == 1) same_category_one_attr = true;
    if (!same_cat && shared == 2) other_category_both_attrs = true;
  }
  return same_category_one_attr && other_category_both_attrs;
}

std::vector<Datapoint> generate_split(const EmbeddingWorld& world, std::size_t count,
                                      std::uint64_t seed, std::uint64_t stream) {
  std::vector<Datapoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_stream(seed, stream, i);
    out.push_back(generate_datapoint(world, rng));
  }
  return out;
}

Dataset generate_dataset(const EmbeddingWorld& world, const DatasetSizes& sizes,
                         std::uint64_t seed) {
  if (sizes.train == 0 || sizes.val == 0 || sizes.test == 0) {
    throw std::invalid_argument("generate_dataset: every split needs at least one datapoint");
  }
  Dataset d;
  d.train = generate_split(world, sizes.train, seed, streams::train_split);
  d.val = generate_split(world, sizes.val, seed, streams::val_split);
  d.test = generate_split(world, sizes.test, seed, streams::test_split);
  return d;
}

VectorTable load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_vectors: cannot open " + path.string());
  VectorTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream iss(line);
    std::string name;
    if (!(iss >> name)) continue;
    std::vector<double> values;
    std::string token;
    while (iss >> token) {
      char* end = nullptr;
      const double x = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": not a number: " + token);
      }
      values.push_back(x);
    }
    if (values.empty()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": vector has no components");
    }
    if (table.empty()) {
      dim = values.size();
    } else if (values.size() != dim) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": dimension " +
                               std::to_string(values.size()) + " differs from " +
                               std::to_string(dim));
    }
    if (!table.emplace(name, Vec(std::move(values))).second) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": duplicate name " + name);
    }
  }
  return table;
}

nlohmann::json datapoint_to_json(const Datapoint& dp, bool with_debug) {
  using nlohmann::json;
  json exposures = json::array();
  for (const auto& e : dp.exposures) {
    exposures.push_back({{"image", e.image.values()}, {"attribute", e.attribute.values()}});
  }
  json candidates = json::array();
  for (const auto& c : dp.candidates) candidates.push_back(c.values());
  json out{{"exposures", std::move(exposures)},
           {"query",
            {{"noun", dp.query.noun.values()},
             {"attrs", {dp.query.attributes[0].values(), dp.query.attributes[1].values()}}}},
           {"candidates", std::move(candidates)},
           {"gold", dp.gold}};
  if (with_debug && dp.debug) {
    const auto& d = *dp.debug;
    out["debug"] = {{"category_names", d.category_names},
                    {"entity_category", d.entity_category},
                    {"exposure_entity", d.exposure_entity},
                    {"exposure_attribute", d.exposure_attribute},
                    {"candidate_entity", d.candidate_entity},
                    {"query_category", d.query_category},
                    {"query_attributes", d.query_attributes},
                    {"permutation", d.permutation}};
  }
  return out;
}

Datapoint datapoint_from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) { return Vec(a.get<std::vector<double>>()); };
  Datapoint dp;
  std::size_t step = 1;
  for (const auto& e : j.at("exposures")) {
    dp.exposures.push_back({vec(e.at("image")), vec(e.at("attribute")), step++, -1});
  }
  const auto& q = j.at("query");
  dp.query.noun = vec(q.at("noun"));
  const auto& attrs = q.at("attrs");
  if (attrs.size() != 2) throw std::runtime_error("datapoint query must carry 2 attributes");
  dp.query.attributes = {vec(attrs[0]), vec(attrs[1])};
  for (const auto& c : j.at("candidates")) dp.candidates.push_back(vec(c));
  dp.gold = j.at("gold").get<std::size_t>();
  if (j.contains("debug")) {
    const auto& d = j["debug"];
    DebugInfo info;
    info.category_names = d.at("category_names").get<std::array<std::string, 2>>();
    info.entity_category = d.at("entity_category").get<std::vector<int>>();
    info.exposure_entity = d.at("exposure_entity").get<std::vector<int>>();
    info.exposure_attribute = d.at("exposure_attribute").get<std::vector<std::string>>();
    info.candidate_entity = d.at("candidate_entity").get<std::vector<int>>();
    info.query_category = d.at("query_category").get<int>();
    info.query_attributes = d.at("query_attributes").get<std::array<std::string, 2>>();
    info.permutation = d.at("permutation").get<std::vector<int>>();
    if (info.exposure_entity.size() == dp.exposures.size()) {
      for (std::size_t i = 0; i < dp.exposures.size(); ++i) {
        dp.exposures[i].entity_id = info.exposure_entity[i];
      }
    }
    dp.debug = std::move(info);
  }
  return dp;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Datapoint>& data,
                 bool with_debug) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_jsonl: cannot open " + path.string());
  for (const auto& dp : data) out << datapoint_to_json(dp, with_debug).dump() << '\n';
  if (!out) throw std::runtime_error("write_jsonl: write failed for " + path.string());
}

std::vector<Datapoint> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_jsonl: cannot open " + path.string());
  std::vector<Datapoint> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(datapoint_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data, bool with_debug) {
  std::filesystem::create_directories(dir);
  write_jsonl(dir / "train.jsonl", data.train, with_debug);
  write_jsonl(dir / "val.jsonl", data.val, with_debug);
  write_jsonl(dir / "test.jsonl", data.test, with_debug);
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset d;
  d.train = read_jsonl(dir / "train.jsonl");
  d.val = read_jsonl(dir / "val.jsonl");
  d.test = read_jsonl(dir / "test.jsonl");
  return d;
}

}  // namespace dire
