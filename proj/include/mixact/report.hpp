#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "mixact/mixture.hpp"
#include "mixact/model.hpp"

namespace mixact {

inline constexpr std::size_t kCurveSamples = 601;  // plot/export grid
inline constexpr std::size_t kFitSamples = 201;    // slope-fit grid

struct WeightRow {
  std::string layer;
  std::array<double, 3> p{};  // simplex coordinates (relu, tanh, sin)
};

std::vector<WeightRow> weight_table(Model& m);

// Fixed-width text table, one row per activation layer, 4 decimal places.
std::string format_weight_table(const std::vector<WeightRow>& rows);

struct CurvePoint {
  double x = 0.0;
  double a = 0.0;
};

struct CurveSample {
  std::string layer;
  double x_min = 0.0;
  double x_max = 0.0;
  std::vector<CurvePoint> points;  // ascending x, endpoints included
};

// Evaluates the normalized mixture at n uniform points on [x_min, x_max].
// Requires x_min < x_max and n >= 2.
CurveSample sample_curve(const MixtureWeights& w, double x_min, double x_max,
                         std::size_t n);

// Two-slope straight-line approximation through the origin.
struct LeakyFit {
  double h1 = 0.0;       // least-squares slope over samples with x >= 0
  double h2 = 0.0;       // least-squares slope over samples with x < 0
  double residual = 0.0; // RMS error of the two-piece fit over all samples
};

// Per-side least squares through the origin (h = sum(x*A)/sum(x^2)) on an
// n-point uniform grid. The range must straddle zero so both sides have
// samples; otherwise Error.
LeakyFit fit_leaky_relu(const MixtureWeights& w, double x_min, double x_max,
                        std::size_t n = kFitSamples);

// Writes `<layer>_<xmin>_<xmax>.csv` (header "x,A", 12 significant digits)
// and a matching .svg polyline for each curve into out_dir.
void export_curves(const std::vector<CurveSample>& samples,
                   const std::filesystem::path& out_dir);

// 1-based index of the largest coordinate; ties take the lower index.
int dominant_basis(const std::array<double, 3>& p);

// One line per layer naming its dominant basis, then a summary of whether the
// layers follow the usual pattern (first activation layer relu-dominated,
// deeper layers favoring the bounded bases tanh/sin).
std::string trend_annotation(const std::vector<WeightRow>& rows);

}  // namespace mixact
