#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mixact/synth.hpp"

// Emits a synthetic glyph dataset in IDX format so the trainer has something
// to chew on when no real dataset files are available. Write into
// <data_root>/<dataset_name>/ (e.g. data/mnist) to make it loadable.
int main(int argc, char** argv) {
  CLI::App app{"synthetic IDX dataset writer"};
  std::string out_dir = "data/mnist";
  std::uint64_t train_count = 2000;
  std::uint64_t test_count = 1000;
  std::uint64_t seed = 42;
  app.add_option("dir", out_dir, "output directory for the four IDX files");
  app.add_option("--train", train_count, "training sample count");
  app.add_option("--test", test_count, "test sample count");
  app.add_option("--seed", seed, "rng seed");
  CLI11_PARSE(app, argc, argv);

  try {
    mixact::write_synth_idx(out_dir, train_count, test_count, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "wrote synthetic dataset (" << train_count << " train, "
            << test_count << " test) to " << out_dir << "\n";
  return 0;
}
