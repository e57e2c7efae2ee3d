#include "dire/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

namespace dire {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0,1)");
  if (minibatch == 0) throw std::invalid_argument("minibatch must be >= 1");
  if (threads == 0) throw std::invalid_argument("threads must be >= 1");
}

TrainingDiverged::TrainingDiverged(std::size_t e, std::size_t b)
    : std::runtime_error("non-finite loss in epoch " + std::to_string(e) + ", minibatch " +
                         std::to_string(b)),
      epoch(e),
      minibatch(b) {}

void sgd_step(ParamSet& params, const ParamSet& grads, double lr) {
  if (!params.same_layout(grads)) {
    throw DimensionError("sgd_step: gradient layout does not match parameters");
  }
  params.add_scaled(grads, -lr);
}

double accuracy(const Model& model, std::span<const Datapoint> data) {
  if (data.empty()) throw std::invalid_argument("accuracy: empty dataset");
  std::size_t correct = 0;
  for (const auto& dp : data) correct += forward(model, dp).prediction == dp.gold;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

struct MemberResult {
  ParamSet grad;
  double loss = 0.0;
};

void member_gradient(const Model& model, const Datapoint& dp, const ForwardOptions& opt,
                     MemberResult& out) {
  const ForwardTrace trace = forward(model, dp, opt);
  backward_into(model, dp, trace, out.grad);
  out.loss = trace.loss;
}

}  // namespace

TrainResult train(const Model& initial, std::span<const Datapoint> train_set,
                  std::span<const Datapoint> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) {
    throw std::invalid_argument("train: training and validation splits must be non-empty");
  }
  using clock = std::chrono::steady_clock;

  Model model = initial;
  TrainResult result;
  auto lineage = [&](std::size_t epoch) {
    return nlohmann::json{{"train_seed", cfg.seed}, {"epoch", epoch}};
  };
  result.best = {model, lineage(0)};
  result.log.best_val_accuracy = -1.0;

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::size_t since_best = 0;
  // Per-member gradient buffers, reused across minibatches.
  std::vector<MemberResult> members;
  ParamSet grad;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = clock::now();
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = make_stream(cfg.seed, streams::shuffle, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.minibatch, ++batch_index) {
      const std::size_t end = std::min(n, begin + cfg.minibatch);
      members.resize(end - begin);
      auto run = [&](std::size_t k) {
        const std::size_t idx = order[begin + k];
        ForwardOptions opt;
        opt.training = true;
        opt.dropout = cfg.dropout;
        opt.dropout_seed = make_stream(cfg.seed, streams::dropout, epoch * n + idx)();
        member_gradient(model, train_set[idx], opt, members[k]);
      };
      if (cfg.threads > 1 && members.size() > 1) {
        std::vector<std::thread> workers;
        const std::size_t nt = std::min(cfg.threads, members.size());
        for (std::size_t t = 0; t < nt; ++t) {
          workers.emplace_back([&, t] {
            for (std::size_t k = t; k < members.size(); k += nt) run(k);
          });
        }
        for (auto& w : workers) w.join();
      } else {
        for (std::size_t k = 0; k < members.size(); ++k) run(k);
      }

      reset_gradient(model.params, grad);
      double batch_loss = 0.0;
      for (const auto& mr : members) {
        grad.add_scaled(mr.grad, 1.0);
        batch_loss += mr.loss;
      }
      if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, batch_index);
      loss_sum += batch_loss;
      sgd_step(model.params, grad, cfg.learning_rate / static_cast<double>(members.size()));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.val_accuracy = accuracy(model, val_set);
    rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_accuracy > result.log.best_val_accuracy) {
      result.log.best_val_accuracy = rec.val_accuracy;
      result.log.best_epoch = epoch;
      result.best = {model, lineage(epoch)};
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  if (result.log.epochs.empty()) result.log.best_val_accuracy = accuracy(model, val_set);
  result.last = {model, lineage(result.log.epochs.size())};
  return result;
}

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log,
                         bool with_seconds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,val_acc,seconds\n";
  char buf[128];
  for (const auto& r : log.epochs) {
    if (with_seconds) {
      std::snprintf(buf, sizeof buf, "%zu,%.6f,%.4f,%.2f\n", r.epoch, r.train_loss,
                    r.val_accuracy, r.seconds);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,%.6f,%.4f,NA\n", r.epoch, r.train_loss,
                    r.val_accuracy);
    }
    out << buf;
  }
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelErrorFloor});
  return std::abs(analytic - numeric) / denom;
}

Datapoint random_datapoint(const ModelDims& dims, std::size_t candidates, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto vec = [&](std::size_t d) {
    Vec v(d);
    for (auto& x : v) x = normal(rng);
    return (1.0 / norm(v)) * v;
  };
  Datapoint dp;
  for (std::size_t i = 0; i < dims.exposures; ++i) {
    dp.exposures.push_back({vec(dims.image), vec(dims.attribute), i + 1, -1});
  }
  dp.query.noun = vec(dims.noun);
  dp.query.attributes = {vec(dims.attribute), vec(dims.attribute)};
  for (std::size_t j = 0; j < candidates; ++j) dp.candidates.push_back(vec(dims.image));
  dp.gold = std::uniform_int_distribution<std::size_t>(0, candidates - 1)(rng);
  return dp;
}

void grad_check_instance(const Model& model, const Datapoint& dp, const GradCheckConfig& cfg,
                         Rng& rng, GradCheckReport& report) {
  const ForwardTrace trace = forward(model, dp);
  const ParamSet analytic = backward(model, dp, trace);

  Model probe = model;
  for (std::size_t bi = 0; bi < model.params.blocks().size(); ++bi) {
    const auto& block = model.params.blocks()[bi];
    std::vector<std::size_t> coords(block.value.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords.size() > cfg.max_coords_per_block) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(cfg.max_coords_per_block);
    }
    Vec x0(coords.size());
    for (std::size_t k = 0; k < coords.size(); ++k) x0[k] = block.value.flat()[coords[k]];

    auto f = [&](std::span<const double> x) {
      auto dst = probe.params.blocks()[bi].value.flat();
      for (std::size_t k = 0; k < coords.size(); ++k) dst[coords[k]] = x[k];
      return forward(probe, dp).loss;
    };
    const Vec numeric = central_fd_gradient(f, x0, cfg.step);
    auto dst = probe.params.blocks()[bi].value.flat();
    for (std::size_t k = 0; k < coords.size(); ++k) dst[coords[k]] = x0[k];

    auto it = std::find_if(report.blocks.begin(), report.blocks.end(),
                           [&](const BlockCheck& b) { return b.name == block.name; });
    if (it == report.blocks.end()) {
      report.blocks.push_back({block.name});
      it = report.blocks.end() - 1;
    }
    const auto a = analytic.blocks()[bi].value.flat();
    for (std::size_t k = 0; k < coords.size(); ++k) {
      const double rel = relative_error(a[coords[k]], numeric[k]);
      it->max_rel_error = std::max(it->max_rel_error, rel);
      it->max_abs_error = std::max(it->max_abs_error, std::abs(a[coords[k]] - numeric[k]));
      report.max_rel_error = std::max(report.max_rel_error, rel);
    }
    it->checked += coords.size();
  }
}

GradCheckReport grad_check(const ModelSpec& spec, const GradCheckConfig& cfg) {
  if (cfg.trials == 0) throw std::invalid_argument("grad_check: trials must be >= 1");
  if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("grad_check: tolerance must be > 0");
  GradCheckReport report;
  report.model = spec.name();
  report.trials = cfg.trials;
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    Rng rng = make_stream(cfg.seed, streams::grad_check, trial);
    Model model = init_model(spec, cfg.dims, rng());
    if (spec.kind == ModelKind::dire) {
      model.params.get("w")(0, 0) = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
      model.params.get("b")(0, 0) = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    }
    const Datapoint dp = random_datapoint(cfg.dims, cfg.candidates, rng);
    grad_check_instance(model, dp, cfg, rng, report);
  }
  report.passed = report.max_rel_error <= cfg.tolerance;
  return report;
}

}  // namespace dire
