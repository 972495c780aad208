#include <doctest.h>

#include "boneage/core_data.hpp"
#include "boneage/error.hpp"
#include "boneage/features.hpp"
#include "boneage/geometry.hpp"
#include "boneage/outline.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace boneage;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "boneage_unit";
  fs::create_directories(dir);
  return dir / name;
}

PointMatrix circle(double r, int n, Point2 c = Point2::Zero()) {
  PointMatrix p(n, 2);
  for (int i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * i / n;
    p(i, 0) = c.x() + r * std::cos(t);
    p(i, 1) = c.y() + r * std::sin(t);
  }
  return p;
}

PointMatrix ellipse(double a, double b, int n, double rot = 0.0, Point2 c = Point2::Zero()) {
  PointMatrix p(n, 2);
  const double cr = std::cos(rot), sr = std::sin(rot);
  for (int i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * i / n;
    const double x = a * std::cos(t), y = b * std::sin(t);
    p(i, 0) = c.x() + cr * x - sr * y;
    p(i, 1) = c.y() + sr * x + cr * y;
  }
  return p;
}

BoneRecord record(PointMatrix phalanx, std::optional<PointMatrix> epi = std::nullopt) {
  BoneRecord r;
  r.subject.subject_id = "s1";
  r.subject.age_years = 9.0;
  r.phalanx = Outline(std::move(phalanx));
  if (epi) r.epiphysis = Outline(std::move(*epi));
  r.tw_stage = epi ? TWStage::E : TWStage::I;
  return r;
}

}  // namespace

TEST_CASE("dataset single line round trip") {
  auto ds = generate_synthetic(1, 7, {});
  ds.records.resize(1);
  auto path = tmp_file("one.jsonl");
  save_dataset(ds, path);
  auto back = load_dataset(path);
  REQUIRE(back.records.size() == 1);
  CHECK(back.records[0] == ds.records[0]);
}

TEST_CASE("empty dataset writes no data lines") {
  auto path = tmp_file("empty.jsonl");
  save_dataset(Dataset{}, path);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] == '{') ++lines;
  CHECK(lines == 0);
  CHECK(load_dataset(path).records.empty());
}

TEST_CASE("synthetic dataset survives save and load") {
  auto ds = generate_synthetic(50, 11, {});
  auto path = tmp_file("fifty.jsonl");
  save_dataset(ds, path);
  auto back = load_dataset(path);
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) CHECK(back.records[i] == ds.records[i]);
}

TEST_CASE("short outline is rejected with its line number") {
  auto ds = generate_synthetic(1, 3, {});
  auto line = record_to_json_line(ds.records[0]);
  auto j = nlohmann::json::parse(line);
  j["phalanx"] = {{0, 0}, {1, 0}, {0, 1}};
  auto path = tmp_file("short.jsonl");
  {
    std::ofstream out(path);
    out << line << "\n" << j.dump() << "\n";
  }
  try {
    load_dataset(path);
    FAIL("expected an error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("outline too short") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
}

TEST_CASE("duplicate subject and bone is rejected") {
  auto ds = generate_synthetic(1, 3, {});
  auto line = record_to_json_line(ds.records[0]);
  auto path = tmp_file("dup.jsonl");
  {
    std::ofstream out(path);
    out << line << "\n" << line << "\n";
  }
  CHECK_THROWS_AS(load_dataset(path), DataError);
}

TEST_CASE("generator is deterministic and respects stage rules") {
  GeneratorConfig cfg;
  cfg.coord_noise_sd = 0.0;
  auto a = generate_synthetic(1, 7, cfg);
  auto b = generate_synthetic(1, 7, cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i] == b.records[i]);

  auto big = generate_synthetic(300, 2, {});
  for (const auto& r : big.records) {
    REQUIRE(r.tw_stage);
    if (*r.tw_stage == TWStage::I) CHECK_FALSE(r.epiphysis);
    if (stage_index(*r.tw_stage) <= stage_index(TWStage::G)) CHECK(r.epiphysis);
  }
}

TEST_CASE("stage is monotone in maturity") {
  GeneratorConfig cfg;
  int last = 0;
  for (double m = 0.0; m <= 1.0; m += 0.01) {
    const int s = stage_index(stage_for_maturity(cfg, m));
    CHECK(s >= last);
    last = s;
  }
}

TEST_CASE("age correlates with phalanx height") {
  auto ds = generate_synthetic(200, 1, {});
  std::vector<double> age, h;
  for (const auto& r : ds.records) {
    age.push_back(r.subject.age_years);
    h.push_back(extract_features(r).f(4));
  }
  Eigen::Map<Eigen::VectorXd> x(age.data(), age.size()), y(h.data(), h.size());
  const Eigen::VectorXd xc = x.array() - x.mean(), yc = y.array() - y.mean();
  CHECK(xc.dot(yc) / (xc.norm() * yc.norm()) > 0.5);
}

TEST_CASE("bad generator config") {
  GeneratorConfig cfg;
  cfg.coord_noise_sd = -1;
  CHECK_THROWS_AS(generate_synthetic(5, 1, cfg), Error);
  CHECK_THROWS(generate_synthetic(0, 1, {}));
}

TEST_CASE("polygon basics on a square") {
  PointMatrix sq(4, 2);
  sq << 0, 0, 2, 0, 2, 2, 0, 2;
  CHECK(geometry::area(sq) == doctest::Approx(4.0));
  CHECK(geometry::perimeter(sq) == doctest::Approx(8.0));
  auto c = geometry::centroid(sq);
  CHECK(c.x() == doctest::Approx(1.0));
  CHECK(c.y() == doctest::Approx(1.0));
  CHECK(geometry::chord_length(sq, {1, 1}, {1, 0}) == doctest::Approx(2.0));
}

TEST_CASE("circle gives a flat profile and zero tail") {
  auto s = to_radial_series(record(circle(10, 400, {37, -12})));
  CHECK(s.values.size() == 80);
  for (int i = 0; i < 50; ++i) CHECK(s.values(i) == doctest::Approx(10.0).epsilon(1e-3));
  for (int i = 50; i < 80; ++i) CHECK(s.values(i) == 0.0);
  CHECK_FALSE(s.has_epiphysis());
}

TEST_CASE("epiphysis circle fills the tail") {
  auto s = to_radial_series(record(ellipse(5, 20, 256), circle(3, 256, {0, 30})));
  for (int i = 50; i < 80; ++i) CHECK(s.values(i) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("ellipse profile spans the axes") {
  auto s = to_radial_series(record(ellipse(5, 2, 2000)));
  const auto head = s.values.head<50>();
  CHECK(head.minCoeff() == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(head.maxCoeff() == doctest::Approx(5.0).epsilon(1e-2));
}

TEST_CASE("series translate and scale") {
  auto rec = generate_synthetic(3, 5, {}).records[0];
  auto base = to_radial_series(rec);
  auto moved = rec;
  moved.phalanx = Outline(rec.phalanx.points().rowwise() + Eigen::RowVector2d(13.5, -7.25));
  if (rec.epiphysis) moved.epiphysis = Outline(rec.epiphysis->points().rowwise() + Eigen::RowVector2d(13.5, -7.25));
  CHECK((to_radial_series(moved).values - base.values).cwiseAbs().maxCoeff() < 1e-9);

  auto scaled = rec;
  scaled.phalanx = Outline(rec.phalanx.points() * 2.5);
  if (rec.epiphysis) scaled.epiphysis = Outline(rec.epiphysis->points() * 2.5);
  CHECK((to_radial_series(scaled).values - 2.5 * base.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("degenerate outline is reported") {
  PointMatrix line(8, 2);
  for (int i = 0; i < 8; ++i) line.row(i) << i, i;
  BoneRecord r;
  r.subject.subject_id = "flat";
  r.phalanx = Outline(line);
  CHECK_THROWS(to_radial_series(r));
}

TEST_CASE("series csv round trip") {
  auto path = tmp_file("series.csv");
  series_to_csv({}, path);
  CHECK(csv_to_series(path).empty());

  auto recs = generate_synthetic(20, 9, {}).records;
  auto batch = to_radial_series(recs);
  series_to_csv(batch, path);
  auto back = csv_to_series(path);
  REQUIRE(back.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) CHECK(back[i] == batch[i]);
}

TEST_CASE("ellipse fit recovers generating parameters") {
  auto e = fit_ellipse(ellipse(5, 2, 64));
  CHECK(e.major_axis_len == doctest::Approx(10.0).epsilon(1e-3));
  CHECK(e.minor_axis_len == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(std::min(e.orientation, std::numbers::pi - e.orientation) < 1e-3);

  auto c = fit_ellipse(circle(7, 64));
  CHECK(c.major_axis_len == doctest::Approx(14.0).epsilon(1e-6));
  CHECK(c.minor_axis_len == doctest::Approx(14.0).epsilon(1e-6));

  auto r = fit_ellipse(ellipse(5, 2, 64, std::numbers::pi / 6, {3, 4}));
  CHECK(r.orientation == doctest::Approx(std::numbers::pi / 6).epsilon(1e-3));
  CHECK(r.center.x() == doctest::Approx(3.0));
}

TEST_CASE("collinear points cannot be fitted") {
  PointMatrix line(10, 2);
  for (int i = 0; i < 10; ++i) line.row(i) << i, 2 * i;
  CHECK_THROWS(fit_ellipse(line));
}

TEST_CASE("circle feature identities") {
  const double r = 6.0;
  auto f = extract_features(record(circle(r, 720)));
  CHECK(f.f(1) == 0.0);
  CHECK(f.f(9) == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(f.f(10) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(f.f(11) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(f.f(12) == doctest::Approx(r / 2).epsilon(1e-3));
  for (int k = 16; k <= 25; ++k) CHECK(f.f(k) == 0.0);
}

TEST_CASE("features for ellipse plus epiphysis") {
  auto f = extract_features(record(ellipse(2, 5, 512), circle(1.5, 256, {0, 8})));
  CHECK(f.f(1) == 1.0);
  CHECK(f.f(21) == doctest::Approx(8.0).epsilon(1e-3));
  CHECK(f.f(19) == doctest::Approx(3.0).epsilon(1e-2));
  CHECK(f.f(13) == f.f(6) / f.f(5));
  CHECK(f.f(14) == f.f(7) / f.f(5));
  CHECK(f.f(15) == f.f(8) / f.f(5));
  CHECK(f.f(25) == f.f(19) / f.f(8));
}

TEST_CASE("superellipse height and width") {
  const double W = 20, H = 50;
  auto f = extract_features(record(superellipse_points(W / 2, H / 2, 4.0, 128)));
  CHECK(f.f(4) == doctest::Approx(H).epsilon(0.02));
  CHECK(f.f(5) == doctest::Approx(W).epsilon(0.02));
}

TEST_CASE("features are invariant to rigid motion and covariant to scale") {
  auto rec = generate_synthetic(4, 8, {}).records[1];
  auto base = extract_features(rec);
  const double th = 0.7;
  Eigen::Matrix2d R;
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  auto moved = rec;
  moved.phalanx = Outline((rec.phalanx.points() * R.transpose()).rowwise() + Eigen::RowVector2d(5, 9));
  if (rec.epiphysis) moved.epiphysis = Outline((rec.epiphysis->points() * R.transpose()).rowwise() + Eigen::RowVector2d(5, 9));
  auto fm = extract_features(moved);
  for (int k = 1; k <= 25; ++k) CHECK(fm.f(k) == doctest::Approx(base.f(k)).epsilon(1e-6));

  auto scaled = rec;
  scaled.phalanx = Outline(rec.phalanx.points() * 3.0);
  if (rec.epiphysis) scaled.epiphysis = Outline(rec.epiphysis->points() * 3.0);
  auto fs_ = extract_features(scaled);
  for (int k : {2, 3, 4, 5, 6, 7, 8, 12}) CHECK(fs_.f(k) == doctest::Approx(3.0 * base.f(k)).epsilon(1e-9));
  for (int k : {1, 9, 10, 11, 13, 14, 15}) CHECK(fs_.f(k) == doctest::Approx(base.f(k)).epsilon(1e-9));
}
