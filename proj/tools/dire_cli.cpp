// dire: command-line driver for dataset generation, training, evaluation,
// gradient checking, the results table and trace inspection.
//
// Exit codes: 0 success, 1 validation or assertion failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dire/checkpoint.hpp"
#include "dire/datagen.hpp"
#include "dire/harness.hpp"
#include "dire/models.hpp"
#include "dire/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag values only override the config when they were given on the command
// line, which is what makes flags > file > defaults work.
template <typename T>
void set_if(const CLI::Option* opt, const T& value, T& field) {
  if (opt->count() > 0) field = value;
}

dire::RunConfig resolve(const std::string& config_path) {
  dire::RunConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open config " + config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError("config " + config_path + ": " + e.what());
    }
    try {
      dire::merge_json(cfg, j);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  return cfg;
}

void log_config(const std::string& command, const dire::RunConfig& cfg) {
  std::cerr << "[" << command << "] config " << dire::to_json(cfg).dump() << '\n';
}

std::vector<dire::Datapoint> read_split(const fs::path& path) {
  if (fs::is_directory(path)) return dire::read_jsonl(path / "test.jsonl");
  return dire::read_jsonl(path);
}

// Input dimensions come from the data; multimodal and hidden sizes from
// the config.
dire::ModelDims dims_for(const dire::Datapoint& dp, dire::ModelDims dims) {
  dims.image = dp.candidates.at(0).dim();
  dims.attribute = dp.exposures.at(0).attribute.dim();
  dims.noun = dp.query.noun.dim();
  dims.exposures = dp.exposures.size();
  return dims;
}

std::string fmt2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

struct TrainFlags {
  std::size_t epochs = 0;
  double lr = 0.0;
  std::size_t minibatch = 0;
  double dropout = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 0;
  std::size_t patience = 0;
  std::size_t threads = 0;
  std::size_t hidden = 0;
  std::size_t multimodal = 0;
  CLI::Option* o_epochs = nullptr;
  CLI::Option* o_lr = nullptr;
  CLI::Option* o_minibatch = nullptr;
  CLI::Option* o_dropout = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_init_seed = nullptr;
  CLI::Option* o_patience = nullptr;
  CLI::Option* o_threads = nullptr;
  CLI::Option* o_hidden = nullptr;
  CLI::Option* o_multimodal = nullptr;

  void attach(CLI::App* app) {
    o_epochs = app->add_option("--epochs", epochs, "maximum epochs");
    o_lr = app->add_option("--lr", lr, "learning rate");
    o_minibatch = app->add_option("--minibatch", minibatch, "minibatch size");
    o_dropout = app->add_option("--dropout", dropout, "dropout probability");
    o_seed = app->add_option("--seed", seed, "training seed (shuffling, dropout)");
    o_init_seed = app->add_option("--init-seed", init_seed, "parameter initialization seed");
    o_patience = app->add_option("--patience", patience, "early stopping patience, 0 = off");
    o_threads = app->add_option("--threads", threads, "worker threads per minibatch");
    o_hidden = app->add_option("--hidden", hidden, "hidden layer width of ff/rnn");
    o_multimodal = app->add_option("--dim", multimodal, "multimodal space size m");
  }

  void apply(dire::RunConfig& cfg) const {
    set_if(o_epochs, epochs, cfg.train.max_epochs);
    set_if(o_lr, lr, cfg.train.learning_rate);
    set_if(o_minibatch, minibatch, cfg.train.minibatch);
    set_if(o_dropout, dropout, cfg.train.dropout);
    set_if(o_seed, seed, cfg.train.seed);
    set_if(o_init_seed, init_seed, cfg.init_seed);
    set_if(o_patience, patience, cfg.train.patience);
    set_if(o_threads, threads, cfg.train.threads);
    set_if(o_hidden, hidden, cfg.dims.hidden);
    set_if(o_multimodal, multimodal, cfg.dims.multimodal);
  }
};

int cmd_gen_data(const fs::path& out, dire::RunConfig cfg, const std::string& images,
                 const std::string& attributes, const std::string& nouns) {
  log_config("gen-data", cfg);
  dire::EmbeddingWorld world;
  if (!images.empty() || !attributes.empty() || !nouns.empty()) {
    if (images.empty() || attributes.empty() || nouns.empty()) {
      throw UsageError("--images, --attributes and --nouns must be given together");
    }
    world = dire::world_from_vectors(dire::load_vectors(images), dire::load_vectors(attributes),
                                     dire::load_vectors(nouns));
  } else {
    world = dire::make_world(cfg.world);
  }
  const dire::Dataset data = dire::generate_dataset(world, cfg.sizes, cfg.data_seed);
  std::size_t failures = 0;
  for (const auto* split : {&data.train, &data.val, &data.test}) {
    for (const auto& dp : *split) {
      const auto report = dire::validate_datapoint(dp);
      if (!report.ok()) {
        if (failures < 5) std::cerr << "invalid datapoint: " << report.violations.front() << '\n';
        ++failures;
      }
    }
  }
  if (failures > 0) throw ValidationFailure(std::to_string(failures) + " invalid datapoints");
  dire::write_dataset(out, data, cfg.debug);
  std::ofstream(out / "config.json") << dire::to_json(cfg).dump(2) << '\n';
  std::cout << "wrote " << data.train.size() << "/" << data.val.size() << "/" << data.test.size()
            << " datapoints to " << out.string() << '\n';
  return 0;
}

int cmd_train(const fs::path& data_dir, const fs::path& out, const std::string& log_path,
              const std::string& last_path, dire::RunConfig cfg) {
  log_config("train", cfg);
  const dire::ModelSpec spec = dire::parse_model_spec(cfg.model);
  const dire::Dataset data = dire::read_dataset(data_dir);
  const dire::ModelDims dims = dims_for(data.train.at(0), cfg.dims);
  const dire::Model init = dire::init_model(spec, dims, cfg.init_seed);
  if (spec.kind == dire::ModelKind::random) {
    dire::save_checkpoint(out, {init, {{"init_seed", cfg.init_seed}}});
    std::cout << spec.name() << " val_acc " << fmt2(dire::accuracy(init, data.val)) << '\n';
    return 0;
  }
  auto progress = [](const dire::EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << " loss " << r.train_loss << " val_acc "
              << fmt2(r.val_accuracy) << " (" << fmt2(r.seconds) << "s)\n";
  };
  dire::TrainResult result = dire::train(init, data.train, data.val, cfg.train, progress);
  result.best.lineage["init_seed"] = cfg.init_seed;
  result.last.lineage["init_seed"] = cfg.init_seed;
  dire::save_checkpoint(out, result.best);
  if (!last_path.empty()) dire::save_checkpoint(last_path, result.last);
  if (!log_path.empty()) dire::write_train_log_csv(log_path, result.log, !cfg.deterministic);
  std::cout << spec.name() << " best epoch " << result.log.best_epoch << " val_acc "
            << fmt2(result.log.best_val_accuracy) << " test_acc "
            << fmt2(dire::accuracy(result.best.model, data.test)) << '\n';
  return 0;
}

int cmd_eval(const fs::path& ckpt_path, const fs::path& data_path, const std::string& report) {
  const dire::Checkpoint ckpt = dire::load_checkpoint(ckpt_path);
  const auto data = read_split(data_path);
  const dire::EvalResult eval = dire::evaluate(ckpt.model, data);
  std::optional<dire::ErrorAnalysis> errors;
  const bool labelled =
      std::all_of(data.begin(), data.end(), [](const auto& dp) { return dp.debug.has_value(); });
  if (labelled) errors = dire::error_analysis(eval, data);
  std::cout << ckpt.model.spec.name() << " accuracy " << fmt2(eval.accuracy()) << " ("
            << eval.correct << "/" << eval.n << ")\n";
  if (errors) {
    std::cout << "wrong category " << fmt2(errors->wrong_category_rate()) << ", wrong attribute "
              << fmt2(errors->wrong_attribute_rate()) << '\n';
  } else {
    std::cerr << "no debug labels; error analysis needs data generated with gen-data --debug\n";
  }
  if (!report.empty()) {
    std::ofstream out(report);
    if (!out) throw std::runtime_error("cannot write " + report);
    out << dire::eval_report_json(eval, errors).dump(2) << '\n';
  }
  return 0;
}

int cmd_grad_check(const std::string& models, dire::GradCheckConfig cfg) {
  bool ok = true;
  std::vector<std::string> names = dire::expand_model_list(models);
  for (const auto& name : names) {
    const dire::ModelSpec spec = dire::parse_model_spec(name);
    if (spec.kind == dire::ModelKind::random) continue;
    const auto report = dire::grad_check(spec, cfg);
    std::printf("%-14s %s max_rel_error %.3e over %zu trials\n", report.model.c_str(),
                report.passed ? "PASS" : "FAIL", report.max_rel_error, report.trials);
    for (const auto& b : report.blocks) {
      std::printf("  %-6s rel %.3e abs %.3e (%zu coords)\n", b.name.c_str(), b.max_rel_error,
                  b.max_abs_error, b.checked);
    }
    ok = ok && report.passed;
  }
  if (!ok) throw ValidationFailure("gradient check failed");
  return 0;
}

int cmd_suite(const std::string& models, const fs::path& data_dir, const fs::path& out,
              const std::string& ckpt_dir, dire::RunConfig cfg) {
  log_config("suite", cfg);
  const dire::Dataset data = dire::read_dataset(data_dir);
  dire::SuiteConfig sc;
  sc.models = dire::expand_model_list(models);
  sc.dims = dims_for(data.train.at(0), cfg.dims);
  sc.train = cfg.train;
  sc.init_seed = cfg.init_seed;
  sc.record_seconds = !cfg.deterministic;
  if (!ckpt_dir.empty()) sc.checkpoint_dir = ckpt_dir;
  auto progress = [](const std::string& model, const dire::EpochRecord& r) {
    std::cerr << model << " epoch " << r.epoch << " val_acc " << fmt2(r.val_accuracy) << '\n';
  };
  const auto rows = dire::run_suite(data, sc, progress);
  std::ofstream csv(out, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + out.string());
  csv << dire::suite_csv(rows, sc.record_seconds);
  for (const auto& r : rows) {
    std::cout << r.name << " val " << fmt2(r.val_accuracy) << " test " << fmt2(r.test_accuracy)
              << " " << r.status << '\n';
    std::cerr << r.name << " took " << fmt2(r.seconds) << "s\n";
  }
  return 0;
}

int cmd_inspect(const fs::path& ckpt_path, const fs::path& data_path, std::size_t index,
                const std::string& out_path) {
  const dire::Checkpoint ckpt = dire::load_checkpoint(ckpt_path);
  const auto data = read_split(data_path);
  const json dump = dire::inspect(ckpt.model, data, index);
  if (out_path.empty()) {
    std::cout << dump.dump(2) << '\n';
  } else {
    std::ofstream(out_path) << dump.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity library tracking models: data, training, evaluation"};
  app.require_subcommand(1);

  std::string config_path;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate and validate a synthetic dataset");
  std::string gen_out, images, attributes, nouns;
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  std::uint64_t data_seed = 0, world_seed = 0;
  double noise = 0.0;
  bool debug = false;
  gen->add_option("--out", gen_out, "output directory")->required();
  auto* o_train = gen->add_option("--train", n_train, "training datapoints");
  auto* o_val = gen->add_option("--val", n_val, "validation datapoints");
  auto* o_test = gen->add_option("--test", n_test, "test datapoints");
  auto* o_seed = gen->add_option("--seed", data_seed, "dataset seed");
  auto* o_world_seed = gen->add_option("--world-seed", world_seed, "embedding world seed");
  auto* o_noise = gen->add_option("--noise", noise, "entity image noise level");
  auto* o_debug = gen->add_flag("--debug", debug, "store ground-truth labels");
  gen->add_option("--images", images, "image vector file (name v1 v2 ...)");
  gen->add_option("--attributes", attributes, "attribute vector file");
  gen->add_option("--nouns", nouns, "noun vector file");
  gen->add_option("--config", config_path, "JSON config file");

  // train
  auto* tr = app.add_subcommand("train", "train one model variant");
  std::string model, data_dir, ckpt_out, log_path, last_path;
  bool timed = false;
  auto* o_model = tr->add_option("--model", model, "model variant, e.g. dire-1m");
  tr->add_option("--data", data_dir, "dataset directory")->required();
  tr->add_option("--out", ckpt_out, "checkpoint to write (best validation epoch)")->required();
  tr->add_option("--log", log_path, "training log CSV");
  tr->add_option("--last", last_path, "also write the final-epoch checkpoint");
  tr->add_option("--config", config_path, "JSON config file");
  auto* o_timed = tr->add_flag("--timed", timed, "record wall times in the log");
  TrainFlags train_flags;
  train_flags.attach(tr);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt_in, eval_data, report;
  ev->add_option("--ckpt", ckpt_in, "checkpoint")->required();
  ev->add_option("--data", eval_data, "JSONL split, or a dataset directory (uses test)")
      ->required();
  ev->add_option("--report", report, "JSON report to write");

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "compare analytic and numeric gradients");
  std::string gc_models = "all";
  dire::GradCheckConfig gc_cfg;
  gc->add_option("--model", gc_models, "model variant, comma list, or all");
  gc->add_option("--trials", gc_cfg.trials, "random instances per model");
  gc->add_option("--tol", gc_cfg.tolerance, "maximum relative error");
  gc->add_option("--step", gc_cfg.step, "finite-difference step");
  gc->add_option("--seed", gc_cfg.seed, "seed");

  // suite
  auto* su = app.add_subcommand("suite", "train and evaluate several variants");
  std::string suite_models = "all", suite_data, suite_out, ckpt_dir;
  su->add_option("--models", suite_models, "comma list of variants, or all");
  su->add_option("--data", suite_data, "dataset directory")->required();
  su->add_option("--out", suite_out, "results CSV")->required();
  su->add_option("--ckpt-dir", ckpt_dir, "directory for per-variant checkpoints");
  su->add_option("--config", config_path, "JSON config file");
  auto* o_suite_timed = su->add_flag("--timed", timed, "record wall times in the CSV");
  TrainFlags suite_flags;
  suite_flags.attach(su);

  // inspect
  auto* in = app.add_subcommand("inspect", "dump the forward trace of one datapoint");
  std::string in_ckpt, in_data, in_out;
  std::size_t index = 0;
  in->add_option("--ckpt", in_ckpt, "checkpoint")->required();
  in->add_option("--data", in_data, "JSONL split, or a dataset directory (uses test)")
      ->required();
  in->add_option("--index", index, "datapoint index")->required();
  in->add_option("--out", in_out, "write JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      dire::RunConfig cfg = resolve(config_path);
      set_if(o_train, n_train, cfg.sizes.train);
      set_if(o_val, n_val, cfg.sizes.val);
      set_if(o_test, n_test, cfg.sizes.test);
      set_if(o_seed, data_seed, cfg.data_seed);
      set_if(o_world_seed, world_seed, cfg.world.seed);
      set_if(o_noise, noise, cfg.world.noise);
      set_if(o_debug, debug, cfg.debug);
      return cmd_gen_data(gen_out, cfg, images, attributes, nouns);
    }
    if (tr->parsed()) {
      dire::RunConfig cfg = resolve(config_path);
      set_if(o_model, model, cfg.model);
      if (o_timed->count() > 0) cfg.deterministic = false;
      train_flags.apply(cfg);
      return cmd_train(data_dir, ckpt_out, log_path, last_path, cfg);
    }
    if (ev->parsed()) return cmd_eval(ckpt_in, eval_data, report);
    if (gc->parsed()) return cmd_grad_check(gc_models, gc_cfg);
    if (su->parsed()) {
      dire::RunConfig cfg = resolve(config_path);
      if (o_suite_timed->count() > 0) cfg.deterministic = false;
      suite_flags.apply(cfg);
      return cmd_suite(suite_models, suite_data, suite_out, ckpt_dir, cfg);
    }
    if (in->parsed()) return cmd_inspect(in_ckpt, in_data, index, in_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
