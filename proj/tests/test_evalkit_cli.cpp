#include <doctest.h>

#include "boneage/error.hpp"
#include "boneage/evalkit.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

using namespace boneage;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(BONEAGE_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch() {
  auto d = fs::temp_directory_path() / "boneage_unit_cli";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("balanced folds") {
  std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  auto f = stratified_kfold(y, 5, 3);
  std::map<int, std::map<int, int>> per;
  for (std::size_t i = 0; i < y.size(); ++i) ++per[f[i]][y[i]];
  CHECK(per.size() == 5);
  for (auto& [fold, counts] : per) {
    CHECK(counts[0] == 1);
    CHECK(counts[1] == 1);
  }
  CHECK(loocv(3) == std::vector<int>{0, 1, 2});
}

TEST_CASE("large stratified split keeps proportions") {
  std::vector<int> y;
  for (int i = 0; i < 498; ++i) y.push_back(i % 7 == 0 ? 0 : (i % 3 == 0 ? 1 : 2));
  auto f = stratified_kfold(y, 10, 42);
  std::map<int, int> total;
  for (int v : y) ++total[v];
  for (int fold = 0; fold < 10; ++fold)
    for (auto [c, n] : total) {
      int got = 0;
      for (std::size_t i = 0; i < y.size(); ++i) got += f[i] == fold && y[i] == c;
      CHECK(std::abs(got - n / 10.0) <= 1.0);
    }
}

TEST_CASE("classification metrics edge cases") {
  std::vector<TWStage> t{TWStage::D, TWStage::E, TWStage::F, TWStage::G};
  auto same = classification_metrics(t, t);
  CHECK(same.accuracy == 1.0);
  CHECK(same.within_one == 1.0);
  std::vector<TWStage> off{TWStage::E, TWStage::F, TWStage::G, TWStage::H};
  auto o = classification_metrics(t, off);
  CHECK(o.accuracy == 0.0);
  CHECK(o.within_one == 1.0);
}

TEST_CASE("regression metrics") {
  std::vector<double> t{1, 2, 3, 4, 5};
  auto same = regression_metrics(t, t);
  CHECK(same.rmse == 0.0);
  CHECK(same.mae == 0.0);
  CHECK(*same.r2 == 1.0);
  std::vector<double> plus{2, 3, 4, 5, 6};
  auto p = regression_metrics(t, plus);
  CHECK(p.rmse == doctest::Approx(1.0));
  CHECK(p.mae == doctest::Approx(1.0));
  std::vector<double> q{1.5, 1.0, 3.5, 4.0, 6.0};
  auto m = regression_metrics(t, q);
  // errors .5 -1 .5 0 1
  CHECK(m.mae == doctest::Approx(3.0 / 5).epsilon(1e-12));
  CHECK(m.rmse == doctest::Approx(std::sqrt(2.5 / 5)).epsilon(1e-12));
  CHECK(*m.r2 == doctest::Approx(1.0 - 2.5 / 10.0).epsilon(1e-12));
  CHECK_FALSE(regression_metrics({2, 2, 2}, {1, 2, 3}).r2);
}

TEST_CASE("mcnemar") {
  std::vector<int> t{1, 2, 3}, a{1, 2, 1};
  CHECK(mcnemar(t, a, a).p_value == 1.0);
  CHECK(mcnemar_from_counts(15, 0).p_value == doctest::Approx(2.0 * std::pow(0.5, 15)).epsilon(1e-9));
  CHECK(mcnemar_from_counts(10, 10).p_value == doctest::Approx(1.0));
}

TEST_CASE("empty report and a small scatter") {
  EvaluationReport r;
  r.task = "regression";
  auto j = nlohmann::json::parse(report_to_json(r).dump());
  CHECK(j["metrics"].is_object());
  CHECK(j["metrics"].empty());

  auto svg = scratch() / "three.svg";
  emit_scatter({1, 2, 3}, {1.1, 2.2, 2.9}, svg);
  const auto text = slurp(svg);
  std::size_t count = 0;
  for (auto pos = text.find("class=\"point\""); pos != std::string::npos; pos = text.find("class=\"point\"", pos + 1)) ++count;
  CHECK(count == 3);
  CHECK(text.find("<svg") != std::string::npos);
  CHECK(text.find("</svg>") != std::string::npos);
}

TEST_CASE("cli exit codes") {
  const auto d = scratch();
  CHECK(cli("--bogus") == 2);
  CHECK(cli("synth --n 0 --output " + (d / "x.jsonl").string()) != 0);
  CHECK(cli("transform --input " + (d / "missing.jsonl").string() + " --output " + (d / "y.csv").string()) == 3);
  {
    std::ofstream bad(d / "bad.jsonl");
    bad << "{not json\n";
  }
  CHECK(cli("transform --input " + (d / "bad.jsonl").string() + " --output " + (d / "y.csv").string()) == 3);
}

TEST_CASE("synth is byte stable") {
  const auto d = scratch();
  const auto a = d / "a.jsonl", b = d / "b.jsonl";
  REQUIRE(cli("synth --n 50 --seed 1 --output " + a.string()) == 0);
  REQUIRE(cli("synth --n 50 --seed 1 --output " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("evaluate on the confusion fixture") {
  const auto d = scratch();
  const auto out = d / "fixture_eval";
  REQUIRE(cli("evaluate --confusion " + std::string(BONEAGE_FIXTURES) + "/svmq_test_confusion.csv --output " +
              out.string()) == 0);
  const auto md = slurp(out / "report.md");
  CHECK(md.find("76.51") != std::string::npos);
  CHECK(md.find("99.40") != std::string::npos);
}
