#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mixact/model.hpp"
#include "mixact/optim.hpp"

namespace mixact {

class Batcher;

// Named-array + named-blob container with a little-endian binary file format.
// Entries keep their insertion order, so writing the same logical state twice
// produces byte-identical files.
class Checkpoint {
 public:
  struct Array {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;
  };
  struct Blob {
    std::string name;
    std::vector<std::uint8_t> data;
  };

  void add_array(const std::string& name, const std::vector<std::size_t>& shape,
                 const std::vector<double>& data);
  void add_blob(const std::string& name, const std::vector<std::uint8_t>& data);
  void add_text(const std::string& name, const std::string& text);

  bool has_array(const std::string& name) const;
  bool has_blob(const std::string& name) const;
  const Array& array(const std::string& name) const;  // Error if absent
  const Blob& blob(const std::string& name) const;    // Error if absent
  std::string text(const std::string& name) const;

  const std::vector<Array>& arrays() const { return arrays_; }
  const std::vector<Blob>& blobs() const { return blobs_; }

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::vector<Array> arrays_;
  std::vector<Blob> blobs_;
};

// Captures model parameters, optimizer moments/step, batcher rng state, and
// the run seed under a fixed naming scheme:
//   param/<name>, adam/m/<name>, adam/v/<name>, adam/t,
//   meta/arch, rng/batcher, meta/seed
Checkpoint snapshot(Model& model, const Adam* adam, const Batcher* batcher,
                    std::uint64_t seed);

// Writes checkpoint arrays back into an existing model (shapes must match).
void restore_model(Model& model, const Checkpoint& ckpt);

// Rebuilds a model whose dimensions come from the checkpoint's meta/arch entry.
Model model_from_checkpoint(const Checkpoint& ckpt);

// Restores Adam moment slots and step counter for the given parameter set.
void restore_adam(Adam& adam, const Checkpoint& ckpt);

}  // namespace mixact
