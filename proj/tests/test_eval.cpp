#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "hinclus/errors.hpp"
#include "hinclus/eval.hpp"
#include "toy.hpp"

using namespace hinclus;
using test_helpers::TempDir;

TEST_CASE("nmi is exactly 1 on identical partitions") {
  std::vector<int> labels = {0, 0, 1, 1, 2};
  CHECK(nmi(labels, labels) == 1.0);
}

TEST_CASE("nmi is exactly 0 on independent partitions") {
  std::vector<int> truth = {0, 0, 1, 1};
  std::vector<int> pred = {0, 1, 0, 1};
  CHECK(nmi(pred, truth) == 0.0);
}

TEST_CASE("nmi is exactly 1 under any relabeling") {
  std::vector<int> truth = {0, 0, 1, 1, 2, 2};
  std::vector<int> pred = {5, 5, 3, 3, 9, 9};
  CHECK(nmi(pred, truth) == 1.0);
  CHECK(nmi(truth, pred) == 1.0);
}

TEST_CASE("nmi handles degenerate single-cluster inputs") {
  std::vector<int> constant = {1, 1, 1, 1};
  std::vector<int> split = {0, 0, 1, 1};
  CHECK(nmi(constant, split) == 0.0);
  CHECK(nmi(split, constant) == 0.0);
}

TEST_CASE("nmi rejects mismatched or empty inputs") {
  std::vector<int> a = {0, 1};
  std::vector<int> b = {0};
  CHECK_THROWS_AS(nmi(a, b), std::invalid_argument);
  CHECK_THROWS_AS(nmi(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("nmi is symmetric and matches a hand contingency computation") {
  std::vector<int> truth = {0, 0, 1, 1};
  std::vector<int> pred = {0, 1, 1, 1};

  // contingency: n(0,0)=1 n(0,1)=0 n(1,0)=1 n(1,1)=2, n=4
  double n = 4;
  double mi = 0;
  auto term = [&](double nij, double ni, double nj) {
    if (nij > 0) mi += nij / n * std::log(n * nij / (ni * nj));
  };
  term(1, 1, 2);  // pred 0 with truth 0
  term(1, 3, 2);  // pred 1 with truth 0
  term(2, 3, 2);  // pred 1 with truth 1
  double hp = -(1.0 / 4) * std::log(1.0 / 4) - (3.0 / 4) * std::log(3.0 / 4);
  double ht = -std::log(0.5);
  double expected = mi / std::sqrt(hp * ht);

  CHECK(nmi(pred, truth) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(nmi(truth, pred) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("nmi stays invariant under independent relabelings") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> a(12), b(12);
    for (int i = 0; i < 12; ++i) {
      a[static_cast<size_t>(i)] = static_cast<int>(rng() % 3);
      b[static_cast<size_t>(i)] = static_cast<int>(rng() % 3);
    }
    double base = nmi(a, b);
    std::vector<int> shuffled_names = {7, 2, 9};
    std::vector<int> a2(12);
    for (int i = 0; i < 12; ++i)
      a2[static_cast<size_t>(i)] = shuffled_names[static_cast<size_t>(a[static_cast<size_t>(i)])];
    CHECK(nmi(a2, b) == doctest::Approx(base).epsilon(1e-12));
    CHECK(nmi(b, a) == doctest::Approx(base).epsilon(1e-12));
  }
}

namespace {

RunResult fake_run(std::vector<int> doc_labels, int kd) {
  RunResult run;
  run.state.labels_doc = std::move(doc_labels);
  run.state.K_d = kd;
  run.trace = {1.5, 1.2, 1.199};
  run.iterations = 3;
  run.converged = true;
  return run;
}

}  // namespace

TEST_CASE("report assembles document-side metrics") {
  std::vector<std::vector<double>> dw = {{1, 1}, {1, 1}, {1, 1}, {1, 1}};
  Hin hin = toy::hin_from_dense(dw);
  hin.truth_labels = {0, 0, 1, 1};
  hin.truth_classes = {"x", "y"};

  RunResult perfect = fake_run({1, 1, 0, 0}, 2);
  EvalReport rep = report(perfect.state, hin, perfect, 42);
  CHECK(rep.nmi_score == 1.0);
  CHECK(rep.runtime_ms == 42);
  CHECK(rep.iterations == 3);
  REQUIRE(rep.contingency.size() == 2);
  CHECK(rep.contingency[1][0] == 2);
  CHECK(rep.contingency[0][1] == 2);

  RunResult collapsed = fake_run({0, 0, 0, 0}, 1);
  CHECK(report(collapsed.state, hin, collapsed, 0).nmi_score == 0.0);
}

TEST_CASE("report requires truth labels") {
  std::vector<std::vector<double>> dw = {{1, 1}, {1, 1}};
  Hin hin = toy::hin_from_dense(dw);
  RunResult run = fake_run({0, 1}, 2);
  CHECK_THROWS_AS(report(run.state, hin, run, 0), IntegrityError);
}

TEST_CASE("metrics and trace JSON files carry the expected fields") {
  TempDir dir;
  std::vector<std::vector<double>> dw = {{1, 1}, {1, 1}};
  Hin hin = toy::hin_from_dense(dw);
  hin.truth_labels = {0, 1};
  hin.truth_classes = {"x", "y"};
  RunResult run = fake_run({0, 1}, 2);
  EvalReport rep = report(run.state, hin, run, 7);
  write_metrics_json(rep, dir.file("metrics.json"));
  write_trace_json(run, dir.file("trace.json"));

  std::string metrics = test_helpers::read_file(dir.file("metrics.json"));
  CHECK(metrics.find("\"nmi\"") != std::string::npos);
  CHECK(metrics.find("\"objective\"") != std::string::npos);
  CHECK(metrics.find("\"iterations\"") != std::string::npos);
  CHECK(metrics.find("\"runtime_ms\"") != std::string::npos);
  std::string trace = test_helpers::read_file(dir.file("trace.json"));
  CHECK(trace.find("\"converged\"") != std::string::npos);
}
