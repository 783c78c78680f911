#include "mixact/schedule.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>

#include "mixact/checkpoint.hpp"
#include "mixact/errors.hpp"
#include "mixact/mixture.hpp"
#include "mixact/tape.hpp"

namespace mixact {

Schedule Schedule::three_cycle_default() {
  Schedule s;
  s.phases = {PhaseConfig{"backbone", 1e-3, 10}, PhaseConfig{"mixture", 1e-2, 10},
              PhaseConfig{"backbone", 1e-3, 10}};
  return s;
}

namespace {

constexpr std::size_t kEvalChunk = 256;

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_metric(std::ofstream& out, std::size_t phase, std::size_t epoch,
                  const char* split, const char* metric, double value) {
  if (!out.is_open()) return;
  out << phase << ',' << epoch << ',' << split << ',' << metric << ','
      << format_value(value) << '\n';
  out.flush();
}

}  // namespace

double evaluate_loss(Model& model, const Dataset& data) {
  const std::size_t n = data.count();
  if (n == 0) throw Error("evaluate: empty dataset");
  const std::vector<std::size_t> order = identity_order(n);
  double total = 0.0;
  for (std::size_t from = 0; from < n; from += kEvalChunk) {
    const std::size_t to = std::min(n, from + kEvalChunk);
    const Batch b = take_batch(data, order, from, to);
    Tape tape;
    const NodeId x = tape.constant(b.images);
    const NodeId logits = model_forward(tape, model, x);
    const NodeId loss = tape.softmax_cross_entropy(logits, b.labels);
    total += tape.value(loss).data[0] * static_cast<double>(to - from);
  }
  return total / static_cast<double>(n);
}

double evaluate_accuracy(Model& model, const Dataset& data) {
  const std::size_t n = data.count();
  if (n == 0) throw Error("evaluate: empty dataset");
  const std::vector<std::size_t> order = identity_order(n);
  const std::size_t k = static_cast<std::size_t>(model.dims.classes);
  std::size_t correct = 0;
  for (std::size_t from = 0; from < n; from += kEvalChunk) {
    const std::size_t to = std::min(n, from + kEvalChunk);
    const Batch b = take_batch(data, order, from, to);
    const Tensor logits = eval_logits(model, b.images);
    for (std::size_t i = 0; i < to - from; ++i) {
      const double* row = logits.data.data() + i * k;
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (row[c] > row[best]) best = c;  // ties keep the lower class index
      }
      if (static_cast<int>(best) == b.labels[i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

TrainReport run_schedule(Model& model, const Dataset& train, const Dataset& test,
                         const Schedule& schedule, const TrainOptions& options) {
  for (const PhaseConfig& phase : schedule.phases) {
    if (phase.trainable_group != "backbone" && phase.trainable_group != "mixture") {
      throw ConfigError("schedule: unknown parameter group '" +
                        phase.trainable_group + "' (expected backbone or mixture)");
    }
    if (!(phase.lr > 0.0)) {
      throw ConfigError("schedule: learning rate must be positive");
    }
  }

  const Dataset* test_used = &test;
  Dataset test_subset;
  if (options.subset_test > 0 && options.subset_test < test.count()) {
    test_subset = subset_dataset(test, options.subset_test, options.seed);
    test_used = &test_subset;
  }

  std::optional<std::size_t> train_subset;
  if (options.subset_train > 0 && options.subset_train < train.count()) {
    train_subset = options.subset_train;
  }
  Batcher batcher(train, options.batch_size, options.seed, train_subset);

  const std::vector<ParamRef> params = model.parameters();
  Adam adam(params);

  std::ofstream metrics;
  std::filesystem::path ckpt_dir;
  if (options.write_outputs) {
    std::filesystem::create_directories(options.out_dir);
    ckpt_dir = options.out_dir / "checkpoints";
    std::filesystem::create_directories(ckpt_dir);
    metrics.open(options.out_dir / "metrics.csv", std::ios::trunc);
    if (!metrics) {
      throw DataError("train: cannot write metrics.csv under '" +
                      options.out_dir.string() + "'");
    }
    metrics << "phase,epoch,split,metric,value\n";
    metrics.flush();
  }

  TrainReport report;
  report.seed = options.seed;

  for (std::size_t pi = 0; pi < schedule.phases.size(); ++pi) {
    const PhaseConfig& phase = schedule.phases[pi];
    const std::size_t phase_no = pi + 1;
    const auto phase_start = std::chrono::steady_clock::now();

    set_trainable(model, "backbone", phase.trainable_group == "backbone");
    set_trainable(model, "mixture", phase.trainable_group == "mixture");
    if (options.adam_reset_t_per_phase) adam.reset_step_counter();

    for (std::size_t epoch = 1; epoch <= phase.epochs; ++epoch) {
      const std::vector<Batch> batches = batcher.make_batches();
      double loss_sum = 0.0;
      std::size_t sample_sum = 0;
      for (std::size_t bi = 0; bi < batches.size(); ++bi) {
        const Batch& b = batches[bi];
        for (const ParamRef& p : params) p.tensor->zero_grad();
        Tape tape;
        const NodeId x = tape.constant(b.images);
        const NodeId logits = model_forward(tape, model, x);
        const NodeId loss = tape.softmax_cross_entropy(logits, b.labels);
        const double value = tape.value(loss).data[0];
        if (!std::isfinite(value)) {
          throw NumericError("train: non-finite loss at phase " +
                             std::to_string(phase_no) + " epoch " +
                             std::to_string(epoch) + " batch " +
                             std::to_string(bi + 1));
        }
        tape.backward(loss);
        adam.step(params, phase.lr);
        loss_sum += value * static_cast<double>(b.labels.size());
        sample_sum += b.labels.size();
      }
      EpochRecord rec;
      rec.phase = phase_no;
      rec.epoch = epoch;
      rec.train_loss = loss_sum / static_cast<double>(sample_sum);
      rec.test_accuracy = evaluate_accuracy(model, *test_used);
      report.records.push_back(rec);
      write_metric(metrics, phase_no, epoch, "train", "loss", rec.train_loss);
      write_metric(metrics, phase_no, epoch, "test", "accuracy", rec.test_accuracy);
    }

    const auto phase_end = std::chrono::steady_clock::now();
    report.phase_seconds.push_back(
        std::chrono::duration<double>(phase_end - phase_start).count());

    if (options.write_outputs) {
      Checkpoint ckpt = snapshot(model, &adam, &batcher, options.seed);
      ckpt.save(ckpt_dir / ("phase" + std::to_string(phase_no) + ".ckpt"));
    }
  }

  const MixtureWeights* acts[3] = {&model.act1, &model.act2, &model.act3};
  for (std::size_t i = 0; i < 3; ++i) {
    const SimplexCoords coords = normalize_weights(*acts[i]);
    report.final_coords[i] = coords.p;
  }
  report.final_accuracy = report.records.empty()
                              ? evaluate_accuracy(model, *test_used)
                              : report.records.back().test_accuracy;
  return report;
}

}  // namespace mixact
