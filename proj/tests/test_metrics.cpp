#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftwatch/metrics.hpp"
#include "driftwatch/rng.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace driftwatch;

TEST_CASE("window counts reproduce reported precision and recall") {
  auto r = from_counts({11, 4, 0, 600});
  CHECK(r.precision == doctest::Approx(0.7333).epsilon(1e-3));
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == doctest::Approx(2.0 * (11.0 / 15.0) / (11.0 / 15.0 + 1.0)));
}

TEST_CASE("counts are authoritative even when a printed figure disagrees") {
  // 7 true positives and 2 false negatives is arithmetically recall 0.7778.
  auto r = from_counts({7, 9, 2, 600});
  CHECK(r.precision == doctest::Approx(0.4375).epsilon(1e-4));
  CHECK(r.recall == doctest::Approx(0.7778).epsilon(1e-4));
}

TEST_CASE("zero denominators flag and report zero") {
  auto r = from_counts({0, 0, 0, 10});
  CHECK(r.precision == 0.0);
  CHECK(!r.precision_defined);
  CHECK(r.recall == 0.0);
  CHECK(!r.recall_defined);
  CHECK(r.accuracy == 1.0);
  CHECK(r.accuracy_defined);
  CHECK(r.f1 == 0.0);
  CHECK(!r.f1_defined);
}

TEST_CASE("metrics stay in bounds and f1 vanishes with precision*recall") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    MetricCounts c{draw_below(rng, 20), draw_below(rng, 20), draw_below(rng, 20),
                   draw_below(rng, 20)};
    auto r = from_counts(c);
    for (double v : {r.precision, r.recall, r.accuracy, r.f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    if (r.precision * r.recall == 0.0) CHECK(r.f1 == 0.0);
    else CHECK(r.f1 > 0.0);
  }
}

namespace {

std::filesystem::path write_labels(const std::string& text) {
  auto path = std::filesystem::temp_directory_path() / "dw_labels_test.jsonl";
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("label loading and unit scoring") {
  auto path = write_labels(R"({"window_index":0,"label":"benign"}
{"window_index":1,"label":"attack"}
{"window_index":2,"label":"attack"}
{"window_index":3,"label":"benign"}
{"node_uuid":"a","label":"attack"}
{"node_uuid":"b","label":"benign"}
)");
  auto truth = load_labels(path);
  REQUIRE(truth.windows.size() == 4);
  REQUIRE(truth.nodes.size() == 2);

  SUBCASE("window scoring") {
    auto r = score_windows({1, 3}, truth);
    CHECK(r.counts.tp == 1);
    CHECK(r.counts.fp == 1);
    CHECK(r.counts.fn == 1);
    CHECK(r.counts.tn == 1);
  }

  SUBCASE("node scoring") {
    auto r = score_nodes({"a"}, truth);
    CHECK(r.counts.tp == 1);
    CHECK(r.counts.fp == 0);
    CHECK(r.precision == 1.0);
  }

  SUBCASE("unknown predicted units raise an error naming them") {
    CHECK_THROWS_WITH_AS(score_windows({9}, truth),
                         "eval: predicted windows absent from labels: 9", EvalError);
    CHECK_THROWS_AS(score_nodes({"zzz"}, truth), EvalError);
  }

  SUBCASE("graph level groups consecutive windows") {
    // graphs of 2 windows: graph 0 = {0,1} attack, graph 1 = {2,3} attack
    auto r = score_graphs({0}, truth, 2);
    CHECK(r.counts.tp == 1);  // graph 0 contains window 1 (attack)
    CHECK(r.counts.fn == 1);  // graph 1 missed
    CHECK(r.counts.fp == 0);
  }

  std::filesystem::remove(path);
}

TEST_CASE("report serialization stays consistent") {
  auto r = from_counts({3, 1, 1, 5});
  auto table = r.text_table();
  CHECK(table.find("0.75") != std::string::npos);
  auto j = r.json();
  CHECK(j.find("\"tp\":3") != std::string::npos);
}
