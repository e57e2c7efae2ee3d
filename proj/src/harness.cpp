#include "dire/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "dire/checkpoint.hpp"

namespace dire {

EvalResult evaluate(const Model& model, std::span<const Datapoint> data) {
  if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
  EvalResult result;
  result.n = data.size();
  for (const auto& dp : data) {
    try {
      check_datapoint(model.dims, model.spec.kind, dp);
    } catch (const DatapointError& e) {
      throw DimensionError(std::string("evaluate: dataset does not fit the model: ") + e.what());
    }
    const ForwardTrace trace = forward(model, dp);
    EvalRecord rec{trace.prediction, dp.gold, std::nullopt};
    if (dp.debug && dp.debug->candidate_entity.size() == dp.candidates.size()) {
      const int entity = dp.debug->candidate_entity[rec.predicted];
      rec.same_category = dp.debug->entity_category.at(entity) == dp.debug->query_category;
    }
    result.correct += rec.predicted == rec.gold;
    result.records.push_back(rec);
  }
  return result;
}

ErrorAnalysis error_analysis(const EvalResult& eval, std::span<const Datapoint> data) {
  if (eval.records.size() != data.size()) {
    throw std::invalid_argument("error_analysis: evaluation and dataset sizes differ");
  }
  for (const auto& dp : data) {
    if (!dp.debug) {
      throw std::invalid_argument(
          "error_analysis: dataset has no debug labels; regenerate it with gen-data --debug");
    }
  }
  ErrorAnalysis out;
  out.n = data.size();
  for (const char* key : {"correct", "same_category_one_attribute",
                          "other_category_both_attributes", "other_category_one_attribute"}) {
    out.confusion[key] = 0;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& rec = eval.records[i];
    const auto& d = *data[i].debug;
    if (rec.predicted == rec.gold) {
      ++out.confusion["correct"];
      continue;
    }
    ++out.errors;
    const int entity = d.candidate_entity.at(rec.predicted);
    const bool same_cat = d.entity_category.at(entity) == d.query_category;
    std::set<std::string> attrs;
    for (std::size_t k = 0; k < d.exposure_entity.size(); ++k) {
      if (d.exposure_entity[k] == entity) attrs.insert(d.exposure_attribute[k]);
    }
    const std::size_t shared = attrs.count(d.query_attributes[0]) + attrs.count(d.query_attributes[1]);
    if (same_cat) {
      ++out.wrong_attribute;
      ++out.confusion[shared == 1 ? "same_category_one_attribute" : "same_category_other"];
    } else {
      ++out.wrong_category;
      ++out.confusion[shared == 2 ? "other_category_both_attributes"
                                  : "other_category_one_attribute"];
    }
  }
  return out;
}

nlohmann::json eval_report_json(const EvalResult& eval, const std::optional<ErrorAnalysis>& errors) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : eval.records) {
    nlohmann::json rec{{"predicted", r.predicted}, {"gold", r.gold}};
    rec["same_category"] = r.same_category ? nlohmann::json(*r.same_category) : nlohmann::json();
    records.push_back(std::move(rec));
  }
  nlohmann::json out{{"n", eval.n},
                     {"correct", eval.correct},
                     {"accuracy", eval.accuracy()},
                     {"records", std::move(records)}};
  if (errors) {
    out["error_analysis"] = {{"errors", errors->errors},
                             {"error_rate", errors->error_rate()},
                             {"wrong_category", errors->wrong_category},
                             {"wrong_category_rate", errors->wrong_category_rate()},
                             {"wrong_attribute", errors->wrong_attribute},
                             {"wrong_attribute_rate", errors->wrong_attribute_rate()},
                             {"confusion", errors->confusion}};
  }
  return out;
}

std::vector<std::string> expand_model_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "all") {
      out.push_back("random");
      for (const auto& spec : all_trainable_specs()) out.push_back(spec.name());
    } else {
      out.push_back(item);
    }
  }
  return out;
}

std::vector<SuiteRow> run_suite(const Dataset& data, const SuiteConfig& cfg,
                                const SuiteProgress& progress) {
  if (data.train.empty() || data.val.empty() || data.test.empty()) {
    throw std::invalid_argument("run_suite: dataset splits must be non-empty");
  }
  std::vector<SuiteRow> rows;
  for (const auto& name : cfg.models) {
    SuiteRow row;
    row.name = name;
    const auto start = std::chrono::steady_clock::now();
    try {
      const ModelSpec spec = parse_model_spec(name);
      row.name = spec.name();
      Model model = init_model(spec, cfg.dims, cfg.init_seed);
      Checkpoint ckpt{model, {{"init_seed", cfg.init_seed}}};
      if (spec.kind == ModelKind::random) {
        row.val_accuracy = accuracy(model, data.val);
      } else {
        EpochCallback cb;
        if (progress) cb = [&](const EpochRecord& r) { progress(row.name, r); };
        TrainResult tr = train(model, data.train, data.val, cfg.train, cb);
        row.val_accuracy = tr.log.best_val_accuracy;
        row.epochs_run = tr.log.epochs.size();
        ckpt = std::move(tr.best);
        ckpt.lineage["init_seed"] = cfg.init_seed;
      }
      row.test_accuracy = accuracy(ckpt.model, data.test);
      if (cfg.checkpoint_dir) save_checkpoint(*cfg.checkpoint_dir / (row.name + ".ckpt"), ckpt);
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string suite_csv(const std::vector<SuiteRow>& rows, bool with_seconds) {
  std::string out = "name,val_acc,test_acc,epochs_run,seconds,status\n";
  char buf[256];
  for (const auto& r : rows) {
    std::string status = r.status;
    for (char& c : status) {
      if (c == ',' || c == '\n') c = ';';
    }
    const bool ok = r.status == "ok";
    if (ok) {
      std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%zu,", r.name.c_str(), r.val_accuracy,
                    r.test_accuracy, r.epochs_run);
    } else {
      std::snprintf(buf, sizeof buf, "%s,NA,NA,%zu,", r.name.c_str(), r.epochs_run);
    }
    out += buf;
    if (with_seconds) {
      std::snprintf(buf, sizeof buf, "%.2f", r.seconds);
      out += buf;
    } else {
      out += "NA";
    }
    out += "," + status + "\n";
  }
  return out;
}

nlohmann::json inspect(const Model& model, std::span<const Datapoint> data, std::size_t index) {
  if (index >= data.size()) {
    throw std::out_of_range("inspect: index " + std::to_string(index) + " out of range (" +
                            std::to_string(data.size()) + " datapoints)");
  }
  const Datapoint& dp = data[index];
  const ForwardTrace trace = forward(model, dp);
  nlohmann::json out{{"model", model.spec.name()},
                     {"index", index},
                     {"gold", dp.gold},
                     {"prediction", trace.prediction},
                     {"loss", trace.loss},
                     {"scores", trace.scores.values()},
                     {"distribution", trace.distribution.values()}};
  if (const auto* c = std::get_if<DireCache>(&trace.cache)) {
    std::vector<double> p_old, s_max;
    nlohmann::json z = nlohmann::json::array();
    for (const auto& step : c->build.steps) {
      p_old.push_back(step.p_old);
      s_max.push_back(step.s_max);
      z.push_back(step.z.values());
    }
    out["p_old"] = p_old;
    out["s_max"] = s_max;
    out["z"] = std::move(z);
    out["library"] = library_to_json(c->library, &c->build);
    out["row_norms"] = c->library.row_norms();
    out["attention"] = c->retrieval.attention.values();
    out["retrieved"] = c->retrieval.read.values();
  } else if (const auto* mc = std::get_if<MemnCache>(&trace.cache)) {
    nlohmann::json hops = nlohmann::json::array();
    for (const auto& h : mc->hops) hops.push_back({{"attention", h.attention.values()}});
    out["memory_rows"] = mc->memory_in.rows();
    out["hops"] = std::move(hops);
  }
  if (dp.debug) out["debug"] = datapoint_to_json(dp, true)["debug"];
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration

nlohmann::json to_json(const RunConfig& c) {
  return {
      {"world",
       {{"image_dim", c.world.image_dim},
        {"attribute_dim", c.world.attribute_dim},
        {"noun_dim", c.world.noun_dim},
        {"n_categories", c.world.n_categories},
        {"entities_per_category", c.world.entities_per_category},
        {"n_attributes", c.world.n_attributes},
        {"noise", c.world.noise},
        {"seed", c.world.seed}}},
      {"sizes", {{"train", c.sizes.train}, {"val", c.sizes.val}, {"test", c.sizes.test}}},
      {"data_seed", c.data_seed},
      {"debug", c.debug},
      {"model", c.model},
      {"dims", dims_to_json(c.dims)},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"minibatch", c.train.minibatch},
        {"dropout", c.train.dropout},
        {"max_epochs", c.train.max_epochs},
        {"seed", c.train.seed},
        {"patience", c.train.patience},
        {"threads", c.train.threads}}},
      {"init_seed", c.init_seed},
      {"deterministic", c.deterministic},
  };
}

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (const char* k : known) found = found || key == k;
    if (!found) throw std::invalid_argument("config: unknown key '" + where + key + "'");
  }
}

}  // namespace

void merge_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  reject_unknown(j,
                 {"world", "sizes", "data_seed", "debug", "model", "dims", "train", "init_seed",
                  "deterministic"},
                 "");
  if (j.contains("world")) {
    const auto& w = j["world"];
    reject_unknown(w,
                   {"image_dim", "attribute_dim", "noun_dim", "n_categories",
                    "entities_per_category", "n_attributes", "noise", "seed"},
                   "world.");
    take(w, "image_dim", c.world.image_dim);
    take(w, "attribute_dim", c.world.attribute_dim);
    take(w, "noun_dim", c.world.noun_dim);
    take(w, "n_categories", c.world.n_categories);
    take(w, "entities_per_category", c.world.entities_per_category);
    take(w, "n_attributes", c.world.n_attributes);
    take(w, "noise", c.world.noise);
    take(w, "seed", c.world.seed);
  }
  if (j.contains("sizes")) {
    const auto& s = j["sizes"];
    reject_unknown(s, {"train", "val", "test"}, "sizes.");
    take(s, "train", c.sizes.train);
    take(s, "val", c.sizes.val);
    take(s, "test", c.sizes.test);
  }
  if (j.contains("dims")) {
    const auto& d = j["dims"];
    reject_unknown(d, {"image", "attribute", "noun", "multimodal", "exposures", "hidden"}, "dims.");
    take(d, "image", c.dims.image);
    take(d, "attribute", c.dims.attribute);
    take(d, "noun", c.dims.noun);
    take(d, "multimodal", c.dims.multimodal);
    take(d, "exposures", c.dims.exposures);
    take(d, "hidden", c.dims.hidden);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    reject_unknown(t,
                   {"learning_rate", "minibatch", "dropout", "max_epochs", "seed", "patience",
                    "threads"},
                   "train.");
    take(t, "learning_rate", c.train.learning_rate);
    take(t, "minibatch", c.train.minibatch);
    take(t, "dropout", c.train.dropout);
    take(t, "max_epochs", c.train.max_epochs);
    take(t, "seed", c.train.seed);
    take(t, "patience", c.train.patience);
    take(t, "threads", c.train.threads);
  }
  take(j, "data_seed", c.data_seed);
  take(j, "debug", c.debug);
  take(j, "model", c.model);
  take(j, "init_seed", c.init_seed);
  take(j, "deterministic", c.deterministic);
}

}  // namespace dire
