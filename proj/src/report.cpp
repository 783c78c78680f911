#include "mixact/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mixact/errors.hpp"

namespace mixact {

std::vector<WeightRow> weight_table(Model& m) {
  std::vector<WeightRow> rows;
  const MixtureWeights* acts[3] = {&m.act1, &m.act2, &m.act3};
  for (const MixtureWeights* act : acts) {
    WeightRow row;
    row.layer = act->layer_name;
    row.p = normalize_weights(*act).p;
    rows.push_back(row);
  }
  return rows;
}

std::string format_weight_table(const std::vector<WeightRow>& rows) {
  std::ostringstream out;
  out << "layer      P1_relu  P2_tanh  P3_sin\n";
  for (const WeightRow& row : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-9s %8.4f %8.4f %7.4f\n",
                  row.layer.c_str(), row.p[0], row.p[1], row.p[2]);
    out << line;
  }
  return out.str();
}

CurveSample sample_curve(const MixtureWeights& w, double x_min, double x_max,
                         std::size_t n) {
  if (!(x_min < x_max)) throw Error("sample_curve: x_min must be below x_max");
  if (n < 2) throw Error("sample_curve: need at least 2 samples");
  const SimplexCoords coords = normalize_weights(w);
  CurveSample curve;
  curve.layer = w.layer_name;
  curve.x_min = x_min;
  curve.x_max = x_max;
  curve.points.resize(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    // Affine blend keeps symmetric ranges exactly symmetric (x and -x pair up
    // bit-for-bit), which the slope fits below rely on.
    const double x = (x_min * static_cast<double>(n - 1 - i) +
                      x_max * static_cast<double>(i)) /
                     denom;
    curve.points[i] = CurvePoint{x, mixture_eval(coords, x)};
  }
  return curve;
}

LeakyFit fit_leaky_relu(const MixtureWeights& w, double x_min, double x_max,
                        std::size_t n) {
  const CurveSample curve = sample_curve(w, x_min, x_max, n);
  double pos_xa = 0.0, pos_xx = 0.0;
  double neg_xa = 0.0, neg_xx = 0.0;
  std::size_t pos_count = 0, neg_count = 0;
  for (const CurvePoint& pt : curve.points) {
    if (pt.x >= 0.0) {
      pos_xa += pt.x * pt.a;
      pos_xx += pt.x * pt.x;
      ++pos_count;
    } else {
      neg_xa += pt.x * pt.a;
      neg_xx += pt.x * pt.x;
      ++neg_count;
    }
  }
  if (pos_count == 0 || neg_count == 0 || pos_xx == 0.0) {
    throw Error("fit_leaky_relu: range [" + std::to_string(x_min) + ", " +
                std::to_string(x_max) + "] leaves one side of 0 without samples");
  }
  LeakyFit fit;
  fit.h1 = pos_xa / pos_xx;
  fit.h2 = neg_xa / neg_xx;
  double sq_sum = 0.0;
  for (const CurvePoint& pt : curve.points) {
    const double predicted = pt.x >= 0.0 ? fit.h1 * pt.x : fit.h2 * pt.x;
    const double r = pt.a - predicted;
    sq_sum += r * r;
  }
  fit.residual = std::sqrt(sq_sum / static_cast<double>(n));
  return fit;
}

namespace {

std::string range_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void write_svg(const CurveSample& curve, const std::filesystem::path& path) {
  constexpr double kL = 50.0, kR = 610.0, kT = 20.0, kB = 370.0;
  double y_min = curve.points.front().a, y_max = y_min;
  for (const CurvePoint& pt : curve.points) {
    y_min = std::min(y_min, pt.a);
    y_max = std::max(y_max, pt.a);
  }
  if (y_max - y_min < 1e-12) {
    y_min -= 1.0;
    y_max += 1.0;
  }
  const auto sx = [&](double x) {
    return kL + (x - curve.x_min) / (curve.x_max - curve.x_min) * (kR - kL);
  };
  const auto sy = [&](double y) {
    return kB - (y - y_min) / (y_max - y_min) * (kB - kT);
  };
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("export_curves: cannot write '" + path.string() + "'");
  char buf[160];
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 400\">\n";
  f << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  if (curve.x_min < 0.0 && curve.x_max > 0.0) {
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"#bbbbbb\"/>\n",
                  sx(0.0), kT, sx(0.0), kB);
    f << buf;
  }
  if (y_min < 0.0 && y_max > 0.0) {
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"#bbbbbb\"/>\n",
                  kL, sy(0.0), kR, sy(0.0));
    f << buf;
  }
  f << "<polyline fill=\"none\" stroke=\"#1f6feb\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", i == 0 ? "" : " ",
                  sx(curve.points[i].x), sy(curve.points[i].a));
    f << buf;
  }
  f << "\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.0f\" y=\"392\" font-family=\"monospace\" "
                "font-size=\"13\">%s on [%s, %s]</text>\n",
                kL, curve.layer.c_str(), range_tag(curve.x_min).c_str(),
                range_tag(curve.x_max).c_str());
  f << buf;
  f << "</svg>\n";
}

}  // namespace

void export_curves(const std::vector<CurveSample>& samples,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const CurveSample& curve : samples) {
    const std::string stem = curve.layer + "_" + range_tag(curve.x_min) + "_" +
                             range_tag(curve.x_max);
    std::ofstream csv(out_dir / (stem + ".csv"), std::ios::trunc);
    if (!csv) {
      throw DataError("export_curves: cannot write into '" + out_dir.string() +
                      "'");
    }
    csv << "x,A\n";
    for (const CurvePoint& pt : curve.points) {
      char line[96];
      std::snprintf(line, sizeof(line), "%.12g,%.12g\n", pt.x, pt.a);
      csv << line;
    }
    write_svg(curve, out_dir / (stem + ".svg"));
  }
}

int dominant_basis(const std::array<double, 3>& p) {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(best)])
      best = i;
  }
  return best + 1;
}

std::string trend_annotation(const std::vector<WeightRow>& rows) {
  std::ostringstream out;
  bool first_is_relu = false;
  bool deeper_bounded = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int basis = dominant_basis(rows[i].p);
    out << rows[i].layer << " dominant basis: " << basis_name(basis) << "\n";
    if (i == 0) {
      first_is_relu = basis == 1;
    } else if (basis == 1) {
      deeper_bounded = false;
    }
  }
  out << "pattern (first activation layer relu-dominated, deeper layers "
         "favoring bounded bases): "
      << (first_is_relu && deeper_bounded ? "agrees" : "differs") << "\n";
  return out.str();
}

}  // namespace mixact
