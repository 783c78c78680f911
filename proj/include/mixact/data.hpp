#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mixact/tensor.hpp"

namespace mixact {

/// Raw IDX container: big-endian magic + dims header, then unsigned bytes.
struct IdxFile {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

IdxFile read_idx(const std::filesystem::path& path);
void write_idx(const IdxFile& f, const std::filesystem::path& path);

// Images become [n,1,28,28] float64 scaled by 1/255 (no other preprocessing);
// labels must be in [0,9].
Tensor load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);

struct Dataset {
  Tensor images;            // [n,1,28,28]
  std::vector<int> labels;  // n entries
  std::string name;

  std::size_t count() const { return labels.size(); }
};

// Standard split filenames inside <data_root>/<dataset_name>/.
std::array<std::string, 2> split_filenames(bool train);  // {images, labels}
const std::vector<std::string>& known_dataset_names();   // mnist, fashion_mnist, kmnist

// Loads one split; a missing file raises DataError naming the expected path
// and listing the files the layout wants.
Dataset load_dataset(const std::filesystem::path& data_root, const std::string& name,
                     bool train);

// First n items after one shuffle seeded with `seed`.
Dataset subset_dataset(const Dataset& d, std::size_t n, std::uint64_t seed);

struct Batch {
  Tensor images;            // [b,1,28,28]
  std::vector<int> labels;  // b entries
};

// Copies rows [from, to) of d into a batch.
Batch take_batch(const Dataset& d, const std::vector<std::size_t>& order,
                 std::size_t from, std::size_t to);

// Deterministic batch producer. Construction optionally restricts to the
// first `subset` items after one seeded shuffle; each make_batches() call
// reshuffles with the same generator (so epochs differ but the whole stream
// replays identically for a given seed) and keeps the short final batch.
class Batcher {
 public:
  Batcher(const Dataset& d, std::size_t batch_size, std::uint64_t seed,
          std::optional<std::size_t> subset = {});

  std::vector<Batch> make_batches();

  std::size_t sample_count() const { return indices_.size(); }
  std::string rng_state() const;
  void set_rng_state(const std::string& state);

 private:
  const Dataset* data_;
  std::size_t batch_size_;
  std::vector<std::size_t> indices_;
  std::mt19937_64 rng_;
};

}  // namespace mixact
