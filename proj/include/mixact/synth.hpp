#pragma once

#include <cstdint>
#include <filesystem>

namespace mixact {

// Writes a deterministic synthetic 10-class digit-glyph dataset in the
// standard IDX layout (train-images/train-labels/t10k-images/t10k-labels)
// into `dir`. Samples are 28x28 grayscale renderings with random shift,
// stroke intensity, per-pixel jitter, and background noise, so an untrained
// classifier sits at chance. Intended as a stand-in for smoke runs and tests
// when no real dataset files are present.
void write_synth_idx(const std::filesystem::path& dir, std::size_t train_count,
                     std::size_t test_count, std::uint64_t seed);

}  // namespace mixact
