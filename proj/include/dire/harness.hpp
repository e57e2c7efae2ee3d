#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dire/datagen.hpp"
#include "dire/models.hpp"
#include "dire/training.hpp"

namespace dire {

struct EvalRecord {
  std::size_t predicted = 0;
  std::size_t gold = 0;
  // Whether the predicted entity has the query's category; unknown without
  // debug labels.
  std::optional<bool> same_category;
};

struct EvalResult {
  std::size_t correct = 0;
  std::size_t n = 0;
  std::vector<EvalRecord> records;

  double accuracy() const { return static_cast<double>(correct) / static_cast<double>(n); }
};

EvalResult evaluate(const Model& model, std::span<const Datapoint> data);

struct ErrorAnalysis {
  std::size_t n = 0;
  std::size_t errors = 0;
  std::size_t wrong_category = 0;   // picked an entity of the other category
  std::size_t wrong_attribute = 0;  // right category, wrong entity
  // Counts of what the prediction was, by relation to the query:
  // correct, same_category_one_attribute, other_category_both_attributes,
  // other_category_one_attribute.
  std::map<std::string, std::size_t> confusion;

  double error_rate() const { return static_cast<double>(errors) / static_cast<double>(n); }
  double wrong_category_rate() const {
    return static_cast<double>(wrong_category) / static_cast<double>(n);
  }
  double wrong_attribute_rate() const {
    return static_cast<double>(wrong_attribute) / static_cast<double>(n);
  }
};

// Requires debug labels on every datapoint.
ErrorAnalysis error_analysis(const EvalResult& eval, std::span<const Datapoint> data);

nlohmann::json eval_report_json(const EvalResult& eval, const std::optional<ErrorAnalysis>& errors);

struct SuiteConfig {
  std::vector<std::string> models;  // names accepted by parse_model_spec
  ModelDims dims;
  TrainConfig train;
  std::uint64_t init_seed = 1;
  std::optional<std::filesystem::path> checkpoint_dir;
  bool record_seconds = true;
};

struct SuiteRow {
  std::string name;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t epochs_run = 0;
  double seconds = 0.0;
  std::string status = "ok";
};

using SuiteProgress = std::function<void(const std::string& model, const EpochRecord&)>;

// Trains and evaluates each requested model on the same splits. A failing
// variant is recorded with its error and does not stop the others.
std::vector<SuiteRow> run_suite(const Dataset& data, const SuiteConfig& cfg,
                                const SuiteProgress& progress = {});

// name,val_acc,test_acc,epochs_run,seconds,status with 4-decimal accuracies.
std::string suite_csv(const std::vector<SuiteRow>& rows, bool with_seconds);

// Expands "all" and comma-separated lists into model names; "all" means
// random plus every trainable variant.
std::vector<std::string> expand_model_list(const std::string& list);

// Forward trace of one datapoint as JSON: distribution, loss, and for DIRE
// the per-exposure gate log, library dump and retrieval attention.
nlohmann::json inspect(const Model& model, std::span<const Datapoint> data, std::size_t index);

// Everything a CLI run can be configured with. Precedence: flags > JSON
// config file > these defaults.
struct RunConfig {
  WorldConfig world;
  DatasetSizes sizes;
  std::uint64_t data_seed = 1;
  bool debug = false;
  std::string model = "dire-1m";
  ModelDims dims;
  TrainConfig train;
  std::uint64_t init_seed = 1;
  bool deterministic = true;
};

nlohmann::json to_json(const RunConfig& cfg);
// Overlays the keys present in j onto cfg; unknown keys are rejected.
void merge_json(RunConfig& cfg, const nlohmann::json& j);

}  // namespace dire
