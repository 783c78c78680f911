#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "known_mixtures.hpp"
#include "mixact/errors.hpp"
#include "mixact/model.hpp"
#include "mixact/report.hpp"

using namespace mixact;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mixact_test_report_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct ParsedRow {
  std::string layer;
  std::array<double, 3> p;
};

ParsedRow parse_row(const std::string& line) {
  ParsedRow r;
  char name[64];
  REQUIRE(std::sscanf(line.c_str(), "%63s %lf %lf %lf", name, &r.p[0], &r.p[1],
                      &r.p[2]) == 4);
  r.layer = name;
  return r;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

MixtureWeights pure(const char* layer, int basis) {
  MixtureWeights mw(layer);
  mw.w.data = {0.0, 0.0, 0.0};
  mw.w.data[static_cast<std::size_t>(basis - 1)] = 1.0;
  return mw;
}

}  // namespace

TEST_CASE("a fresh model prints the uniform table") {
  Model m = build_model(42);
  const auto rows = weight_table(m);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].layer == "act1");
  CHECK(rows[2].layer == "act3");

  const std::string table = format_weight_table(rows);
  std::istringstream in(table);
  std::string header;
  std::getline(in, header);
  CHECK(header == "layer      P1_relu  P2_tanh  P3_sin");
  std::string line;
  while (std::getline(in, line)) {
    const ParsedRow r = parse_row(line);
    for (double p : r.p) CHECK(p == doctest::Approx(0.3333).epsilon(1e-4));
  }
}

TEST_CASE("recorded rows print back to their 4-decimal values") {
  for (const KnownMixture& k : kKnownMixtures) {
    Model m = build_model(1);
    m.act1 = mixture_from(k);
    const std::string table = format_weight_table(weight_table(m));
    std::istringstream in(table);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    const ParsedRow r = parse_row(line);
    CHECK(r.layer == k.layer);
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      // renormalization moves a 4-decimal row by at most ~p*5e-4, printing
      // rounds by at most 5e-5
      CHECK(std::fabs(r.p[idx] - k.p[idx]) <= 6e-4);
      sum += r.p[idx];
    }
    CHECK(std::fabs(sum - 1.0) <= 2e-4);
  }
}

TEST_CASE("curve sampling hits both endpoints and pairs x with -x exactly") {
  MixtureWeights mw("act1");
  const CurveSample c = sample_curve(mw, -3.0, 3.0, kCurveSamples);
  REQUIRE(c.points.size() == kCurveSamples);
  CHECK(c.points.front().x == -3.0);
  CHECK(c.points.back().x == 3.0);
  CHECK(c.points[300].x == 0.0);
  CHECK(c.points[300].a == 0.0);
  for (std::size_t i = 0; i < kCurveSamples; ++i)
    CHECK(c.points[i].x == -c.points[kCurveSamples - 1 - i].x);

  CHECK_THROWS_AS(sample_curve(mw, 1.0, 1.0, 10), Error);
  CHECK_THROWS_AS(sample_curve(mw, -1.0, 1.0, 1), Error);
}

TEST_CASE("pure mixtures reproduce their basis exactly") {
  const CurveSample r = sample_curve(pure("a", 1), -2.0, 2.0, 101);
  const CurveSample t = sample_curve(pure("a", 2), -2.0, 2.0, 101);
  const CurveSample s = sample_curve(pure("a", 3), -2.0, 2.0, 101);
  for (std::size_t i = 0; i < 101; ++i) {
    CHECK(r.points[i].a == std::max(r.points[i].x, 0.0));
    CHECK(t.points[i].a == std::tanh(t.points[i].x));
    CHECK(s.points[i].a == std::sin(s.points[i].x));
  }
}

TEST_CASE("a sin-dominated mixture stays bounded and oscillates") {
  const MixtureWeights mw = mixture_from(kKnownMixtures[8]);  // sin-heavy row
  const CurveSample c = sample_curve(mw, -10.0, 10.0, kCurveSamples);
  int direction_changes = 0;
  for (std::size_t i = 0; i + 2 < c.points.size(); ++i) {
    const double d1 = c.points[i + 1].a - c.points[i].a;
    const double d2 = c.points[i + 2].a - c.points[i + 1].a;
    if (d1 * d2 < 0.0) ++direction_changes;
  }
  CHECK(direction_changes >= 4);
  for (const CurvePoint& pt : c.points) {
    CHECK(pt.a < 1.8);
    CHECK(pt.a > -1.8);
  }
  // every mixture passes through the origin
  for (const KnownMixture& k : kKnownMixtures) {
    const CurveSample kc = sample_curve(mixture_from(k), -3.0, 3.0, 5);
    CHECK(kc.points[2].x == 0.0);
    CHECK(kc.points[2].a == 0.0);
  }
}

TEST_CASE("two-slope fits recover pure relu exactly") {
  const LeakyFit f = fit_leaky_relu(pure("a", 1), -1.0, 1.0);
  CHECK(std::fabs(f.h1 - 1.0) <= 1e-12);
  CHECK(std::fabs(f.h2) <= 1e-12);
  CHECK(f.residual <= 1e-12);
}

TEST_CASE("odd bounded bases fit the same slope on both sides") {
  const LeakyFit t = fit_leaky_relu(pure("a", 2), -1.0, 1.0);
  CHECK(std::fabs(t.h1 - t.h2) <= 1e-9);
  CHECK(t.residual > 0.0);  // tanh is not a line

  const LeakyFit s = fit_leaky_relu(pure("a", 3), -1.0, 1.0);
  CHECK(std::fabs(s.h1 - s.h2) <= 1e-9);
}

TEST_CASE("the fit equals per-side least squares computed by hand") {
  const MixtureWeights mw = mixture_from(kKnownMixtures[0]);
  const double lo = -2.0, hi = 2.0;
  const std::size_t n = kFitSamples;
  const LeakyFit f = fit_leaky_relu(mw, lo, hi, n);

  const SimplexCoords c = normalize_weights(mw);
  double pos_xa = 0.0, pos_xx = 0.0, neg_xa = 0.0, neg_xx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (lo * static_cast<double>(n - 1 - i) +
                      hi * static_cast<double>(i)) /
                     static_cast<double>(n - 1);
    const double a = c.p[0] * std::max(x, 0.0) + c.p[1] * std::tanh(x) +
                     c.p[2] * std::sin(x);
    (x >= 0.0 ? pos_xa : neg_xa) += x * a;
    (x >= 0.0 ? pos_xx : neg_xx) += x * x;
  }
  CHECK(f.h1 == doctest::Approx(pos_xa / pos_xx).epsilon(1e-12));
  CHECK(f.h2 == doctest::Approx(neg_xa / neg_xx).epsilon(1e-12));

  // relu-heavy rows slope up on the right harder than on the left
  CHECK(f.h1 > f.h2);
}

TEST_CASE("fits demand samples on both sides of zero") {
  MixtureWeights mw;
  CHECK_THROWS_AS(fit_leaky_relu(mw, 0.1, 1.0), Error);
  CHECK_THROWS_AS(fit_leaky_relu(mw, -1.0, -0.1), Error);
  CHECK_THROWS_AS(fit_leaky_relu(mw, -1.0, 0.0), Error);
}

TEST_CASE("curve exports round-trip through csv and draw an svg polyline") {
  const fs::path dir = fresh_dir("curves");
  const CurveSample curve = sample_curve(mixture_from(kKnownMixtures[0]), -1.0,
                                         1.0, kCurveSamples);
  export_curves({curve}, dir);

  const fs::path csv = dir / "act1_-1_1.csv";
  const fs::path svg = dir / "act1_-1_1.svg";
  REQUIRE(fs::exists(csv));
  REQUIRE(fs::exists(svg));

  const auto lines = read_lines(csv);
  REQUIRE(lines.size() == kCurveSamples + 1);
  CHECK(lines[0] == "x,A");
  for (std::size_t i = 0; i < kCurveSamples; ++i) {
    double x = 0.0, a = 0.0;
    REQUIRE(std::sscanf(lines[i + 1].c_str(), "%lf,%lf", &x, &a) == 2);
    // 12 significant digits round-trip to ~1e-12 relative
    CHECK(std::fabs(x - curve.points[i].x) <= 1e-10);
    CHECK(std::fabs(a - curve.points[i].a) <= 1e-10);
  }

  std::ifstream in(svg);
  const std::string body((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  CHECK(body.find("<svg") != std::string::npos);
  CHECK(body.find("polyline") != std::string::npos);

  // fractional bounds keep the %g naming scheme
  const CurveSample frac = sample_curve(mixture_from(kKnownMixtures[0]), -0.5,
                                        1.5, 11);
  export_curves({frac}, dir);
  CHECK(fs::exists(dir / "act1_-0.5_1.5.csv"));
}

TEST_CASE("dominant bases and the depth pattern read off the table") {
  CHECK(dominant_basis({0.5, 0.3, 0.2}) == 1);
  CHECK(dominant_basis({0.2, 0.5, 0.3}) == 2);
  CHECK(dominant_basis({0.2, 0.3, 0.5}) == 3);
  CHECK(dominant_basis({0.4, 0.4, 0.2}) == 1);  // tie takes the lower index

  std::vector<WeightRow> rows;
  for (int i = 0; i < 3; ++i) {
    WeightRow r;
    r.layer = kKnownMixtures[static_cast<std::size_t>(i)].layer;
    r.p = kKnownMixtures[static_cast<std::size_t>(i)].p;
    rows.push_back(r);
  }
  const std::string note = trend_annotation(rows);
  CHECK(note.find("act1 dominant basis: relu") != std::string::npos);
  CHECK(note.find("act2 dominant basis: tanh") != std::string::npos);
  CHECK(note.find("act3 dominant basis: sin") != std::string::npos);
  CHECK(note.find("agrees") != std::string::npos);

  std::swap(rows[0].p, rows[1].p);  // first layer now tanh-led: pattern broken
  CHECK(trend_annotation(rows).find("differs") != std::string::npos);
}
