#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "mixact/checkpoint.hpp"
#include "mixact/config.hpp"
#include "mixact/data.hpp"
#include "mixact/errors.hpp"
#include "mixact/gradcheck.hpp"
#include "mixact/mixture.hpp"
#include "mixact/model.hpp"
#include "mixact/report.hpp"
#include "mixact/schedule.hpp"

namespace {

using namespace mixact;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitGradCheck = 5;

// Holds raw flag values; only flags the user actually passed are applied, so
// command-line values always override config-file values.
struct Flags {
  std::string config_file;
  std::string dataset;
  std::string data_root;
  std::string out;
  std::uint64_t seed = 0;
  std::uint64_t batch_size = 0;
  std::uint64_t subset_train = 0;
  std::uint64_t subset_test = 0;
  double epochs_scale = 0.0;
  std::vector<std::string> ranges;
};

void add_common_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config_file, "key = value settings file");
  cmd->add_option("--dataset", flags.dataset, "dataset name (mnist, fashion_mnist, kmnist)");
  cmd->add_option("--data-root", flags.data_root, "directory holding <dataset>/ IDX files");
  cmd->add_option("--out", flags.out, "run output directory");
  cmd->add_option("--seed", flags.seed, "rng seed");
  cmd->add_option("--batch-size", flags.batch_size, "training batch size");
  cmd->add_option("--subset-train", flags.subset_train, "use only this many training samples");
  cmd->add_option("--subset-test", flags.subset_test, "use only this many test samples");
  cmd->add_option("--epochs-scale", flags.epochs_scale, "multiply every phase's epochs");
  cmd->add_option("--range", flags.ranges, "curve range lo:hi (repeatable)");
}

RunConfig resolve_config(const CLI::App* cmd, const Flags& flags) {
  RunConfig cfg;
  if (cmd->count("--config")) apply_config_file(cfg, flags.config_file);
  if (cmd->count("--dataset")) apply_config_value(cfg, "dataset", flags.dataset);
  if (cmd->count("--data-root")) apply_config_value(cfg, "data_root", flags.data_root);
  if (cmd->count("--out")) apply_config_value(cfg, "out_dir", flags.out);
  if (cmd->count("--seed"))
    apply_config_value(cfg, "seed", std::to_string(flags.seed));
  if (cmd->count("--batch-size"))
    apply_config_value(cfg, "batch_size", std::to_string(flags.batch_size));
  if (cmd->count("--subset-train"))
    apply_config_value(cfg, "subset_train", std::to_string(flags.subset_train));
  if (cmd->count("--subset-test"))
    apply_config_value(cfg, "subset_test", std::to_string(flags.subset_test));
  if (cmd->count("--epochs-scale")) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", flags.epochs_scale);
    apply_config_value(cfg, "epochs_scale", buf);
  }
  if (cmd->count("--range")) {
    std::string joined;
    for (std::size_t i = 0; i < flags.ranges.size(); ++i) {
      joined += (i ? "," : "") + flags.ranges[i];
    }
    apply_config_value(cfg, "curve_ranges", joined);
  }
  return cfg;
}

void write_config_echo(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream f(cfg.out_dir / "config_echo", std::ios::trunc);
  if (!f) {
    throw DataError("cannot write config_echo under '" + cfg.out_dir.string() + "'");
  }
  f << render_config(cfg);
}

// One train run per out_dir: created with fopen("wx") so a second concurrent
// run fails fast instead of interleaving writes.
class LockFile {
 public:
  explicit LockFile(const std::filesystem::path& path) : path_(path) {
    std::FILE* f = std::fopen(path.string().c_str(), "wx");
    if (f == nullptr) {
      throw ConfigError("train: lockfile '" + path.string() +
                        "' already exists — another run owns this out_dir "
                        "(delete it if that run is gone)");
    }
    std::fputs("locked\n", f);
    std::fclose(f);
  }
  ~LockFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  std::filesystem::path path_;
};

void print_analysis(Model& model, const RunConfig& cfg) {
  const std::vector<WeightRow> rows = weight_table(model);
  std::cout << format_weight_table(rows);

  std::vector<CurveSample> curves;
  const MixtureWeights* acts[3] = {&model.act1, &model.act2, &model.act3};
  for (const MixtureWeights* act : acts) {
    for (const auto& [lo, hi] : cfg.curve_ranges) {
      curves.push_back(sample_curve(*act, lo, hi, kCurveSamples));
    }
  }
  export_curves(curves, cfg.out_dir / "curves");
  std::cout << "curves: wrote " << curves.size() << " csv/svg pairs under "
            << (cfg.out_dir / "curves").string() << "\n";

  for (const MixtureWeights* act : acts) {
    const LeakyFit fit = fit_leaky_relu(*act, -1.0, 1.0);
    char line[160];
    std::snprintf(line, sizeof(line),
                  "%s two-slope fit on [-1, 1]: h1=%.6f h2=%.6f rms=%.3e\n",
                  act->layer_name.c_str(), fit.h1, fit.h2, fit.residual);
    std::cout << line;
  }
  std::cout << trend_annotation(rows);
}

void save_weight_table(Model& model, const RunConfig& cfg) {
  std::ofstream f(cfg.out_dir / "weight_table.txt", std::ios::trunc);
  if (f) f << format_weight_table(weight_table(model));
}

int cmd_train(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  LockFile lock(cfg.out_dir / ".lock");
  write_config_echo(cfg);

  const Dataset train = load_dataset(cfg.data_root, cfg.dataset, /*train=*/true);
  const Dataset test = load_dataset(cfg.data_root, cfg.dataset, /*train=*/false);

  Model model = build_model(cfg.seed);
  TrainOptions options;
  options.seed = cfg.seed;
  options.batch_size = cfg.batch_size;
  options.subset_train = cfg.subset_train;
  options.subset_test = cfg.subset_test;
  options.out_dir = cfg.out_dir;
  options.adam_reset_t_per_phase = cfg.adam_reset_t_per_phase;
  const Schedule schedule = scaled_schedule(cfg);

  const TrainReport report = run_schedule(model, train, test, schedule, options);

  for (std::size_t i = 0; i < schedule.phases.size(); ++i) {
    char line[128];
    std::snprintf(line, sizeof(line), "phase %zu (%s): %.1f s\n", i + 1,
                  schedule.phases[i].trainable_group.c_str(),
                  report.phase_seconds[i]);
    std::cout << line;
  }
  char acc_line[64];
  std::snprintf(acc_line, sizeof(acc_line), "final test accuracy: %.4f\n",
                report.final_accuracy);
  std::cout << acc_line;

  save_weight_table(model, cfg);
  print_analysis(model, cfg);
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path) {
  write_config_echo(cfg);
  const Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  Model model = model_from_checkpoint(ckpt);
  Dataset test = load_dataset(cfg.data_root, cfg.dataset, /*train=*/false);
  if (cfg.subset_test > 0 && cfg.subset_test < test.count()) {
    test = subset_dataset(test, cfg.subset_test, cfg.seed);
  }
  char line[96];
  std::snprintf(line, sizeof(line), "test loss: %.6f\ntest accuracy: %.4f\n",
                evaluate_loss(model, test), evaluate_accuracy(model, test));
  std::cout << line;
  return kExitOk;
}

int cmd_report(const RunConfig& cfg, const std::string& checkpoint_path) {
  write_config_echo(cfg);
  const Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  Model model = model_from_checkpoint(ckpt);
  save_weight_table(model, cfg);
  print_analysis(model, cfg);
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& cfg, double tol) {
  write_config_echo(cfg);
  Model model = build_model(cfg.seed, ModelDims::reduced());

  // Central differences at h=1e-3 are only meaningful if no perturbation can
  // push a pre-activation across the relu kink or flip a pool argmax. Biases
  // and batch are redrawn together (deterministically) until every decision
  // point clears a margin several times wider than any single +-h step can
  // move it; checking at a random-bias point also exercises the gradients at
  // a generic location instead of the special all-zero-bias one.
  // z margin covers the worst absolute pre-activation shift (h * window
  // abs-sum <= 9e-3); the pool gap only closes by the *differential* shift
  // between two units of one window (~h * value spread <= ~2e-3), so it can
  // sit lower.
  constexpr double kZMargin = 1.2e-2;
  constexpr double kGapMargin = 1.0e-2;
  constexpr std::size_t kMaxDraws = 200000;
  const std::size_t batch = 4;
  const std::size_t image = model.dims.image;
  Tensor images({batch, 1, image, image});
  std::vector<int> labels(batch);
  std::mt19937_64 rng(cfg.seed + 1);
  std::uniform_real_distribution<double> pixel(0.0, 1.0);
  std::uniform_real_distribution<double> bias(-1.0, 1.0);
  std::uniform_int_distribution<int> label(0, model.dims.classes - 1);
  std::size_t draws = 0;
  for (;; ++draws) {
    if (draws == kMaxDraws) {
      throw NumericError("gradcheck: no margin-safe batch after " +
                         std::to_string(kMaxDraws) + " draws");
    }
    for (Tensor* b : {&model.conv1.bias, &model.conv2.bias, &model.fc1.bias,
                      &model.fc2.bias}) {
      for (double& v : b->data) v = bias(rng);
    }
    for (double& v : images.data) v = pixel(rng);
    for (int& v : labels) v = label(rng);
    if (perturbation_margins_ok(model, images, kZMargin, kGapMargin)) break;
  }

  const auto build = [&](Tape& tape) {
    const NodeId x = tape.constant(images);
    const NodeId logits = model_forward(tape, model, x);
    return tape.softmax_cross_entropy(logits, labels);
  };
  std::vector<Tensor*> params;
  for (const ParamRef& p : model.parameters()) params.push_back(p.tensor);

  const GradCheckResult result = gradcheck(build, params, 1e-3);
  char line[128];
  std::snprintf(line, sizeof(line),
                "gradcheck: max relative error %.6e over %zu elements "
                "(tolerance %g)\n",
                result.max_rel_error, result.elements, tol);
  std::cout << line;
  if (!(result.max_rel_error < tol)) {
    std::cout << "gradcheck: FAIL\n";
    return kExitGradCheck;
  }
  std::cout << "gradcheck: ok\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learnable mixture-activation trainer"};
  app.require_subcommand(1);

  Flags train_flags, eval_flags, report_flags, grad_flags;
  std::string eval_checkpoint, report_checkpoint;
  double grad_tol = 1e-4;

  CLI::App* train = app.add_subcommand("train", "run the freeze/unfreeze schedule");
  add_common_flags(train, train_flags);

  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on the test split");
  add_common_flags(eval, eval_flags);
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();

  CLI::App* report = app.add_subcommand("report", "weight table + curves from a checkpoint");
  add_common_flags(report, report_flags);
  report->add_option("--checkpoint", report_checkpoint, "checkpoint file")->required();

  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  add_common_flags(grad, grad_flags);
  grad->add_option("--tol", grad_tol, "max relative error allowed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(resolve_config(train, train_flags));
    if (eval->parsed()) return cmd_eval(resolve_config(eval, eval_flags), eval_checkpoint);
    if (report->parsed())
      return cmd_report(resolve_config(report, report_flags), report_checkpoint);
    if (grad->parsed()) return cmd_gradcheck(resolve_config(grad, grad_flags), grad_tol);
    std::cerr << "no subcommand\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
}
