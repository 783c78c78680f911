#include "mixact/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "mixact/data.hpp"

namespace mixact {
namespace {

// 5x7 glyph font for digits 0-9; '#' marks a stroke pixel.
constexpr std::array<const char*, 10> kGlyphs = {
    " ### "
    "#   #"
    "#  ##"
    "# # #"
    "##  #"
    "#   #"
    " ### ",  // 0
    "  #  "
    " ##  "
    "  #  "
    "  #  "
    "  #  "
    "  #  "
    " ### ",  // 1
    " ### "
    "#   #"
    "    #"
    "   # "
    "  #  "
    " #   "
    "#####",  // 2
    " ### "
    "#   #"
    "    #"
    "  ## "
    "    #"
    "#   #"
    " ### ",  // 3
    "   # "
    "  ## "
    " # # "
    "#  # "
    "#####"
    "   # "
    "   # ",  // 4
    "#####"
    "#    "
    "#### "
    "    #"
    "    #"
    "#   #"
    " ### ",  // 5
    " ### "
    "#    "
    "#    "
    "#### "
    "#   #"
    "#   #"
    " ### ",  // 6
    "#####"
    "    #"
    "   # "
    "  #  "
    "  #  "
    "  #  "
    "  #  ",  // 7
    " ### "
    "#   #"
    "#   #"
    " ### "
    "#   #"
    "#   #"
    " ### ",  // 8
    " ### "
    "#   #"
    "#   #"
    " ####"
    "    #"
    "    #"
    " ### ",  // 9
};

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr int kScale = 3;
constexpr int kImage = 28;
constexpr int kBaseX = 6;  // glyph block base origin: 28 - 15 = 13 wide margin
constexpr int kBaseY = 3;  // 28 - 21 = 7 tall margin

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer over seed ^ salt; decorrelates the two stream seeds.
  std::uint64_t z = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4da2b82f8e3a5ULL;
  return z ^ (z >> 31);
}

void render_split(const std::filesystem::path& dir, bool train,
                  std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> label_dist(0, 9);
  std::uniform_int_distribution<int> shift_dist(-3, 3);
  std::uniform_real_distribution<double> intensity_dist(0.55, 1.0);
  std::uniform_real_distribution<double> jitter_dist(-0.15, 0.15);
  std::uniform_real_distribution<double> noise_dist(0.0, 0.08);

  std::vector<std::uint8_t> images(count * kImage * kImage);
  std::vector<std::uint8_t> labels(count);

  for (std::size_t i = 0; i < count; ++i) {
    const int label = label_dist(rng);
    const int dx = shift_dist(rng);
    const int dy = shift_dist(rng);
    const double intensity = intensity_dist(rng);
    labels[i] = static_cast<std::uint8_t>(label);

    std::array<double, kImage * kImage> pix{};
    for (int y = 0; y < kImage; ++y) {
      for (int x = 0; x < kImage; ++x) {
        pix[static_cast<std::size_t>(y * kImage + x)] = noise_dist(rng);
      }
    }
    const char* glyph = kGlyphs[static_cast<std::size_t>(label)];
    for (int gy = 0; gy < kGlyphH; ++gy) {
      for (int gx = 0; gx < kGlyphW; ++gx) {
        if (glyph[gy * kGlyphW + gx] != '#') continue;
        for (int sy = 0; sy < kScale; ++sy) {
          for (int sx = 0; sx < kScale; ++sx) {
            const int y = kBaseY + dy + gy * kScale + sy;
            const int x = kBaseX + dx + gx * kScale + sx;
            if (y < 0 || y >= kImage || x < 0 || x >= kImage) continue;
            const double v = intensity * (1.0 + jitter_dist(rng));
            pix[static_cast<std::size_t>(y * kImage + x)] = v;
          }
        }
      }
    }
    std::uint8_t* out = images.data() + i * kImage * kImage;
    for (int j = 0; j < kImage * kImage; ++j) {
      const double v = std::clamp(pix[static_cast<std::size_t>(j)], 0.0, 1.0);
      out[j] = static_cast<std::uint8_t>(std::llround(v * 255.0));
    }
  }

  const std::array<std::string, 2> names = split_filenames(train);
  IdxFile image_file;
  image_file.magic = kIdxImagesMagic;
  image_file.dims = {static_cast<std::uint32_t>(count), kImage, kImage};
  image_file.bytes = std::move(images);
  write_idx(image_file, dir / names[0]);

  IdxFile label_file;
  label_file.magic = kIdxLabelsMagic;
  label_file.dims = {static_cast<std::uint32_t>(count)};
  label_file.bytes = std::move(labels);
  write_idx(label_file, dir / names[1]);
}

}  // namespace

void write_synth_idx(const std::filesystem::path& dir, std::size_t train_count,
                     std::size_t test_count, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  render_split(dir, /*train=*/true, train_count, seed);
  render_split(dir, /*train=*/false, test_count, mix(seed, 1));
}

}  // namespace mixact
