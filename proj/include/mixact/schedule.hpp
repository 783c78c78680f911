#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mixact/data.hpp"
#include "mixact/model.hpp"
#include "mixact/optim.hpp"

namespace mixact {

// One freeze/unfreeze phase: only `trainable_group` receives updates.
struct PhaseConfig {
  std::string trainable_group;  // "backbone" or "mixture"
  double lr = 1e-3;
  std::size_t epochs = 10;
};

struct Schedule {
  std::vector<PhaseConfig> phases;

  // backbone@1e-3 x10, mixture@1e-2 x10, backbone@1e-3 x10
  static Schedule three_cycle_default();
};

struct TrainOptions {
  std::uint64_t seed = 42;
  std::size_t batch_size = 64;
  std::size_t subset_train = 0;  // 0 = full split
  std::size_t subset_test = 0;
  std::filesystem::path out_dir = "out";
  bool adam_reset_t_per_phase = true;
  bool write_outputs = true;  // metrics.csv + checkpoints under out_dir
};

struct EpochRecord {
  std::size_t phase = 0;  // 1-based
  std::size_t epoch = 0;  // 1-based within phase
  double train_loss = 0.0;
  double test_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> records;
  std::array<std::array<double, 3>, 3> final_coords{};  // act1..act3 simplex rows
  std::vector<double> phase_seconds;
  std::uint64_t seed = 0;
  double final_accuracy = 0.0;
};

// Mean cross-entropy over one forward pass (no gradients) in fixed chunks.
double evaluate_loss(Model& model, const Dataset& data);

// Top-1 accuracy; argmax ties resolve to the lower class index.
double evaluate_accuracy(Model& model, const Dataset& data);

// Runs the full phase list. Emits metrics.csv rows and per-phase checkpoints
// under options.out_dir when write_outputs is set. A non-finite training loss
// aborts with NumericError naming phase/epoch/batch.
TrainReport run_schedule(Model& model, const Dataset& train, const Dataset& test,
                         const Schedule& schedule, const TrainOptions& options);

}  // namespace mixact
