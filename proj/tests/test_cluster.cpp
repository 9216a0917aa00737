#include <doctest.h>

#include <cmath>
#include <random>

#include "hinclus/cluster.hpp"
#include "hinclus/eval.hpp"
#include "oracle.hpp"
#include "toy.hpp"

using namespace hinclus;

namespace {

ClusterState make_state(const Hin& hin, std::vector<int> ld, std::vector<int> lw,
                        std::vector<std::vector<int>> le, int kd, int kw,
                        std::vector<int> ke, double eps = 1e-10) {
  ClusterState s;
  s.K_d = kd;
  s.K_w = kw;
  s.K_e = std::move(ke);
  s.labels_doc = std::move(ld);
  s.labels_word = std::move(lw);
  s.labels_ent = std::move(le);
  s.m_dw.eps = eps;
  s.m_de.resize(static_cast<size_t>(hin.num_types()));
  s.m_ee.resize(hin.p_ee.size());
  for (const EdgeId& e : edge_list(hin)) update_model_q(hin, s, e);
  return s;
}

oracle::Edge edge_eval(const Hin& hin, const EdgeId& id, const ClusterState& st) {
  oracle::Edge e;
  e.eps = st.m_dw.eps;
  switch (id.kind) {
    case EdgeId::Kind::DocWord:
      e.p = toy::dense_of(hin.p_dw, hin.num_docs(), hin.num_words());
      e.q_rows = st.labels_doc;
      e.q_cols = st.labels_word;
      e.k_rows = st.K_d;
      e.k_cols = st.K_w;
      break;
    case EdgeId::Kind::DocEntity:
      e.p = toy::dense_of(hin.p_de[static_cast<size_t>(id.t)], hin.num_docs(),
                          hin.num_entities(id.t));
      e.q_rows = st.labels_doc;
      e.q_cols = st.labels_ent[static_cast<size_t>(id.t)];
      e.k_rows = st.K_d;
      e.k_cols = st.K_e[static_cast<size_t>(id.t)];
      break;
    case EdgeId::Kind::EntityEntity:
      e.p = toy::dense_of(joint_of(hin, id), hin.num_entities(id.t),
                          hin.num_entities(id.s));
      e.q_rows = st.labels_ent[static_cast<size_t>(id.t)];
      e.q_cols = st.labels_ent[static_cast<size_t>(id.s)];
      e.k_rows = st.K_e[static_cast<size_t>(id.t)];
      e.k_cols = st.K_e[static_cast<size_t>(id.s)];
      break;
  }
  return e;
}

double oracle_hinc(const Hin& hin, const ClusterState& st) {
  double total = 0;
  for (const EdgeId& id : edge_list(hin)) {
    oracle::Edge e = edge_eval(hin, id, st);
    total += oracle::edge_objective(e, e.q_rows);
  }
  return total;
}

double oracle_chinc(const Hin& hin, const ClusterState& st, const ConstraintSet& cs) {
  double total = oracle_hinc(hin, st);
  for (int t = 0; t < cs.num_types(); ++t) {
    oracle::Dense de = toy::dense_of(hin.p_de[static_cast<size_t>(t)],
                                     hin.num_docs(), hin.num_entities(t));
    const auto& labels = st.labels_ent[static_cast<size_t>(t)];
    double d_max = 0;
    for (const ConstraintPair& p : cs.cannot[static_cast<size_t>(t)])
      d_max = std::max(d_max, oracle::column_kl(de, static_cast<size_t>(p.a),
                                                static_cast<size_t>(p.b)));
    for (const ConstraintPair& p : cs.must[static_cast<size_t>(t)])
      if (labels[static_cast<size_t>(p.a)] != labels[static_cast<size_t>(p.b)])
        total += cs.w_must * oracle::column_kl(de, static_cast<size_t>(p.a),
                                               static_cast<size_t>(p.b));
    for (const ConstraintPair& p : cs.cannot[static_cast<size_t>(t)])
      if (labels[static_cast<size_t>(p.a)] == labels[static_cast<size_t>(p.b)])
        total += cs.w_cannot *
                 (d_max - oracle::column_kl(de, static_cast<size_t>(p.a),
                                            static_cast<size_t>(p.b)));
  }
  return total;
}

// Eq. 10 value for one entity (data KL terms plus penalties from its own
// perspective), evaluated densely and independently.
double oracle_entity_value(const Hin& hin, const ClusterState& st,
                           const ConstraintSet& cs, int t, int i, int k) {
  double total = 0;
  {
    oracle::Edge e = edge_eval(hin, {EdgeId::Kind::DocEntity, t, -1}, st);
    oracle::Pieces q = oracle::pieces(e);
    if (q.pc[static_cast<size_t>(i)] > 0)
      total += oracle::col_score(e, q, static_cast<size_t>(i), k);
  }
  for (const Hin::EntityEdge& ee : hin.p_ee) {
    oracle::Edge e = edge_eval(hin, {EdgeId::Kind::EntityEntity, ee.t, ee.s}, st);
    oracle::Pieces q = oracle::pieces(e);
    if (ee.t == t && q.pr[static_cast<size_t>(i)] > 0)
      total += oracle::row_score(e, q, static_cast<size_t>(i), k);
    if (ee.s == t && q.pc[static_cast<size_t>(i)] > 0)
      total += oracle::col_score(e, q, static_cast<size_t>(i), k);
  }
  oracle::Dense de = toy::dense_of(hin.p_de[static_cast<size_t>(t)], hin.num_docs(),
                                   hin.num_entities(t));
  double d_max = 0;
  for (const ConstraintPair& p : cs.cannot[static_cast<size_t>(t)])
    d_max = std::max(d_max, oracle::column_kl(de, static_cast<size_t>(p.a),
                                              static_cast<size_t>(p.b)));
  const auto& labels = st.labels_ent[static_cast<size_t>(t)];
  auto other_of = [&](const ConstraintPair& p) { return p.a == i ? p.b : p.a; };
  for (const ConstraintPair& p : cs.must[static_cast<size_t>(t)]) {
    if (p.a != i && p.b != i) continue;
    int o = other_of(p);
    if (labels[static_cast<size_t>(o)] != k)
      total += cs.w_must * oracle::column_kl(de, static_cast<size_t>(p.a),
                                             static_cast<size_t>(p.b));
  }
  for (const ConstraintPair& p : cs.cannot[static_cast<size_t>(t)]) {
    if (p.a != i && p.b != i) continue;
    int o = other_of(p);
    if (labels[static_cast<size_t>(o)] == k)
      total += cs.w_cannot * (d_max - oracle::column_kl(de, static_cast<size_t>(p.a),
                                                        static_cast<size_t>(p.b)));
  }
  return total;
}

}  // namespace

TEST_CASE("kl_div conventions and reference values") {
  std::vector<double> p = {0.5, 0.5};
  CHECK(kl_div(p, p) == doctest::Approx(0.0).epsilon(1e-15));

  std::vector<double> q = {0.25, 0.75};
  double expected = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
  CHECK(kl_div(p, q) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(kl_div(p, q) == doctest::Approx(0.143841).epsilon(1e-5));

  std::vector<double> point = {1.0, 0.0};
  CHECK(kl_div(point, p) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  std::vector<double> shorter = {1.0};
  CHECK_THROWS_AS(kl_div(p, shorter), std::invalid_argument);
}

TEST_CASE("singleton clusters make centroids equal node rows") {
  std::vector<std::vector<double>> dw = {{2, 1, 0}, {0, 1, 3}};
  Hin hin = toy::hin_from_dense(dw);
  ClusterState st = make_state(hin, {0, 1}, {0, 1, 2}, {}, 2, 3, {});
  for (int i = 0; i < 2; ++i) {
    auto node = node_conditional(hin.p_dw, true, i);
    auto cent = centroid_conditional(hin.p_dw, st.m_dw, true, i);
    REQUIRE(node.size() == cent.size());
    for (size_t j = 0; j < node.size(); ++j)
      CHECK(node[j] == doctest::Approx(cent[j]).epsilon(1e-12));
  }
}

TEST_CASE("uniform joints have uniform centroids") {
  std::vector<std::vector<double>> dw = {{1, 1}, {1, 1}};
  Hin hin = toy::hin_from_dense(dw);
  ClusterState st = make_state(hin, {0, 1}, {0, 0}, {}, 2, 1, {});
  auto cent = centroid_conditional(hin.p_dw, st.m_dw, true, 0);
  for (double v : cent) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("centroids follow the q factorization on a 3x4 joint") {
  std::vector<std::vector<double>> dw = {
      {4, 2, 1, 1}, {1, 3, 2, 2}, {2, 2, 5, 1}};
  Hin hin = toy::hin_from_dense(dw);
  std::vector<int> lw = {0, 0, 1, 1};  // K_w = 2
  ClusterState st = make_state(hin, {0, 1, 1}, lw, {}, 2, 2, {});

  oracle::Edge e = edge_eval(hin, {EdgeId::Kind::DocWord, -1, -1}, st);
  oracle::Pieces q = oracle::pieces(e);
  for (int k = 0; k < 2; ++k) {
    auto cent = centroid_conditional(hin.p_dw, st.m_dw, true, k);
    for (size_t j = 0; j < 4; ++j)
      CHECK(cent[j] == doctest::Approx(oracle::row_centroid_at(e, q, k, j)).epsilon(1e-12));
  }
}

TEST_CASE("lossless partitions have zero objective") {
  std::vector<std::vector<double>> dw = {{2, 1, 0}, {0, 1, 3}, {1, 0, 1}};
  Hin hin = toy::hin_from_dense(dw);
  ClusterState st = make_state(hin, {0, 1, 2}, {0, 1, 2}, {}, 3, 3, {});
  CHECK(objective_hinc(hin, st) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("block-diagonal joints score zero only for the correct partition") {
  std::vector<std::vector<double>> dw = {
      {1, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 1, 1}, {0, 0, 1, 1}};
  Hin hin = toy::hin_from_dense(dw);
  ClusterState correct = make_state(hin, {0, 0, 1, 1}, {0, 0, 1, 1}, {}, 2, 2, {});
  CHECK(objective_hinc(hin, correct) == doctest::Approx(0.0).epsilon(1e-12));

  ClusterState merged = make_state(hin, {0, 1, 0, 1}, {0, 0, 1, 1}, {}, 2, 2, {});
  double expected = oracle_hinc(hin, merged);
  CHECK(expected > 0.1);
  CHECK(objective_hinc(hin, merged) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("must and cannot costs follow their definitions") {
  std::vector<std::vector<double>> dw = {{1, 1}, {1, 1}};
  std::vector<std::vector<std::vector<double>>> de = {
      {{0.5, 0.25}, {0.5, 0.75}}};  // columns [0.5,0.5] and [0.25,0.75]
  Hin hin = toy::hin_from_dense(dw, de);

  ClusterState equal = make_state(hin, {0, 1}, {0, 1}, {{0, 0}}, 2, 2, {2});
  CHECK(must_cost(hin, equal, 0, {0, 1}, 1.0) == 0.0);

  ClusterState differ = make_state(hin, {0, 1}, {0, 1}, {{0, 1}}, 2, 2, {2});
  double kl = must_cost(hin, differ, 0, {0, 1}, 1.0);
  CHECK(kl == doctest::Approx(0.143841).epsilon(1e-5));

  // cannot: zero when labels differ; d_max - KL when equal
  CHECK(cannot_cost(hin, differ, 0, {0, 1}, 0.7, 1.0) == 0.0);
  CHECK(cannot_cost(hin, equal, 0, {0, 1}, 0.7, 1.0) ==
        doctest::Approx(0.7 - kl).epsilon(1e-10));

  // identical rows: zero KL either way
  std::vector<std::vector<std::vector<double>>> same = {{{0.5, 0.5}, {0.5, 0.5}}};
  Hin hin2 = toy::hin_from_dense(dw, same);
  ClusterState st2 = make_state(hin2, {0, 1}, {0, 1}, {{0, 1}}, 2, 2, {2});
  CHECK(must_cost(hin2, st2, 0, {0, 1}, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("objective_chinc reduces to objective_hinc without constraints") {
  std::vector<std::vector<double>> dw = {{1, 2, 1}, {2, 1, 1}, {1, 1, 2}};
  std::vector<std::vector<std::vector<double>>> de = {{{1, 0}, {0, 1}, {1, 1}}};
  Hin hin = toy::hin_from_dense(dw, de);
  ClusterState st = make_state(hin, {0, 1, 0}, {0, 1, 1}, {{0, 1}}, 2, 2, {2});

  ConstraintSet none = ConstraintSet::empty_for(hin);
  CHECK(objective_chinc(hin, st, none) ==
        doctest::Approx(objective_hinc(hin, st)).epsilon(1e-12));

  // satisfied constraints contribute nothing
  ConstraintSet satisfied = ConstraintSet::empty_for(hin);
  satisfied.w_must = satisfied.w_cannot = 1.0;
  satisfied.cannot[0].push_back({0, 1});  // labels 0 and 1 differ: no cost
  compute_d_max(hin, satisfied, 0);
  CHECK(objective_chinc(hin, st, satisfied) ==
        doctest::Approx(objective_hinc(hin, st)).epsilon(1e-12));
}

TEST_CASE("objective_chinc matches the from-scratch dense evaluation") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    int m = 3 + static_cast<int>(rng() % 4);  // <= 6 docs
    int n = 4 + static_cast<int>(rng() % 5);  // <= 8 words
    int v = 2 + static_cast<int>(rng() % 3);  // <= 4 entities
    auto random_dense = [&](int rows, int cols) {
      std::vector<std::vector<double>> w(static_cast<size_t>(rows),
                                         std::vector<double>(static_cast<size_t>(cols), 0.0));
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          if (rng() % 10 < 6) w[static_cast<size_t>(i)][static_cast<size_t>(j)] = unif(rng);
      for (int i = 0; i < rows; ++i)
        w[static_cast<size_t>(i)][static_cast<size_t>(i % cols)] = unif(rng);
      for (int j = 0; j < cols; ++j)
        w[static_cast<size_t>(j % rows)][static_cast<size_t>(j)] = unif(rng);
      return w;
    };
    Hin hin = toy::hin_from_dense(random_dense(m, n), {random_dense(m, v)},
                                  {{0, 0, random_dense(v, v)}});

    auto random_labels = [&](int count, int K) {
      std::vector<int> l(static_cast<size_t>(count));
      for (int i = 0; i < count; ++i) l[static_cast<size_t>(i)] = static_cast<int>(rng() % K);
      return l;
    };
    ClusterState st = make_state(hin, random_labels(m, 2), random_labels(n, 2),
                                 {random_labels(v, 2)}, 2, 2, {2});

    ConstraintSet cs = ConstraintSet::empty_for(hin);
    cs.w_must = cs.w_cannot = 0.5;
    for (int a = 0; a < v; ++a)
      for (int b = a + 1; b < v; ++b) {
        if (rng() % 2)
          cs.must[0].push_back({a, b});
        else
          cs.cannot[0].push_back({a, b});
      }
    compute_d_max(hin, cs, 0);

    double expected = oracle_chinc(hin, st, cs);
    CHECK(objective_chinc(hin, st, cs) == doctest::Approx(expected).epsilon(1e-10));
    validate_state(hin, st);
  }
}

TEST_CASE("document label updates match the exhaustive argmin") {
  std::mt19937_64 rng(7311);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    int m = 4, n = 5 + static_cast<int>(rng() % 3), v = 3;
    auto random_dense = [&](int rows, int cols) {
      std::vector<std::vector<double>> w(static_cast<size_t>(rows),
                                         std::vector<double>(static_cast<size_t>(cols), 0.0));
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          if ((rng() % 10) < 7) w[static_cast<size_t>(i)][static_cast<size_t>(j)] = unif(rng);
      for (int i = 0; i < rows; ++i)
        w[static_cast<size_t>(i)][static_cast<size_t>(i % cols)] = unif(rng);
      for (int j = 0; j < cols; ++j)
        w[static_cast<size_t>(j % rows)][static_cast<size_t>(j)] = unif(rng);
      return w;
    };
    Hin hin = toy::hin_from_dense(random_dense(m, n), {random_dense(m, v)});
    auto random_labels = [&](int count, int K) {
      std::vector<int> l(static_cast<size_t>(count));
      for (int i = 0; i < count; ++i) l[static_cast<size_t>(i)] = static_cast<int>(rng() % K);
      return l;
    };
    ClusterState st = make_state(hin, random_labels(m, 2), random_labels(n, 3),
                                 {random_labels(v, 2)}, 2, 3, {2});

    // oracle: per-document exhaustive argmin over the summed KL terms
    oracle::Edge ew = edge_eval(hin, {EdgeId::Kind::DocWord, -1, -1}, st);
    oracle::Edge ee = edge_eval(hin, {EdgeId::Kind::DocEntity, 0, -1}, st);
    oracle::Pieces qw = oracle::pieces(ew);
    oracle::Pieces qe = oracle::pieces(ee);
    std::vector<int> expected(static_cast<size_t>(m), 0);
    for (int d = 0; d < m; ++d) {
      double best = 1e300;
      for (int k = 0; k < 2; ++k) {
        double s = 0;
        if (qw.pr[static_cast<size_t>(d)] > 0)
          s += oracle::row_score(ew, qw, static_cast<size_t>(d), k);
        if (qe.pr[static_cast<size_t>(d)] > 0)
          s += oracle::row_score(ee, qe, static_cast<size_t>(d), k);
        if (s < best) {
          best = s;
          expected[static_cast<size_t>(d)] = k;
        }
      }
    }
    CHECK(update_doc_labels(hin, st) == expected);

    // words: single-edge argmin
    std::vector<int> expected_w(static_cast<size_t>(n), 0);
    for (int j = 0; j < n; ++j) {
      double best = 1e300;
      for (int k = 0; k < 3; ++k) {
        double s = qw.pc[static_cast<size_t>(j)] > 0
                       ? oracle::col_score(ew, qw, static_cast<size_t>(j), k)
                       : 0.0;
        if (s < best) {
          best = s;
          expected_w[static_cast<size_t>(j)] = k;
        }
      }
    }
    CHECK(update_word_labels(hin, st) == expected_w);
  }
}

TEST_CASE("trivial label updates") {
  std::vector<std::vector<double>> dw = {{1, 2}, {2, 1}, {1, 1}};
  Hin hin = toy::hin_from_dense(dw);
  ClusterState st = make_state(hin, {0, 0, 0}, {0, 0}, {}, 1, 1, {});
  auto ld = update_doc_labels(hin, st);
  for (int l : ld) CHECK(l == 0);
  auto lw = update_word_labels(hin, st);
  for (int l : lw) CHECK(l == 0);
}

TEST_CASE("documents matching a centroid stay in that cluster") {
  std::vector<std::vector<double>> dw = {{4, 4, 2}, {1, 2, 7}};
  Hin hin = toy::hin_from_dense(dw);
  // singleton doc clusters and singleton word clusters: centroid k is doc k
  ClusterState st = make_state(hin, {0, 1}, {0, 1, 2}, {}, 2, 3, {});
  CHECK(update_doc_labels(hin, st) == std::vector<int>{0, 1});
}

TEST_CASE("update_model_q aggregates block sums") {
  std::vector<std::vector<double>> dw = {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  Hin hin = toy::hin_from_dense(dw);
  ClusterState st = make_state(hin, {0, 0, 1}, {0, 1, 1}, {}, 2, 2, {});
  double total = 45;
  auto dense = toy::dense_of(hin.p_dw, 3, 3);
  double q00 = dense[0][0] + dense[1][0];
  double q01 = dense[0][1] + dense[0][2] + dense[1][1] + dense[1][2];
  double q10 = dense[2][0];
  double q11 = dense[2][1] + dense[2][2];
  CHECK(st.m_dw.q(0, 0) == doctest::Approx(q00).epsilon(1e-12));
  CHECK(st.m_dw.q(0, 1) == doctest::Approx(q01).epsilon(1e-12));
  CHECK(st.m_dw.q(1, 0) == doctest::Approx(q10).epsilon(1e-12));
  CHECK(st.m_dw.q(1, 1) == doctest::Approx(q11).epsilon(1e-12));
  CHECK(q00 + q01 + q10 + q11 == doctest::Approx(45 / total).epsilon(1e-12));

  // singleton clusters reproduce p elementwise
  ClusterState singleton = make_state(hin, {0, 1, 2}, {0, 1, 2}, {}, 3, 3, {});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(singleton.m_dw.q(i, j) == doctest::Approx(dense[static_cast<size_t>(i)][static_cast<size_t>(j)]).epsilon(1e-12));

  // one cluster per side absorbs all mass
  ClusterState one = make_state(hin, {0, 0, 0}, {0, 0, 0}, {}, 1, 1, {});
  CHECK(one.m_dw.q(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  validate_state(hin, one);
}

TEST_CASE("ICM obeys strong must-links and cannot-links") {
  std::vector<std::vector<double>> dw = {{1, 1}, {1, 1}};

  SUBCASE("must-linked near-identical entities end up together") {
    std::vector<std::vector<std::vector<double>>> de = {
        {{0.50, 0.49}, {0.50, 0.51}}};
    Hin hin = toy::hin_from_dense(dw, de);
    ConstraintSet cs = ConstraintSet::empty_for(hin);
    cs.w_must = cs.w_cannot = 100.0;
    cs.must[0].push_back({0, 1});
    compute_d_max(hin, cs, 0);

    for (std::vector<int> init : {std::vector<int>{0, 1}, std::vector<int>{1, 0}}) {
      ClusterState st = make_state(hin, {0, 1}, {0, 1}, {init}, 2, 2, {2});
      auto labels = update_entity_labels_icm(hin, st, cs, 0);
      CHECK(labels[0] == labels[1]);

      // enumeration oracle: the fixed point attains the minimum over all
      // four assignments of data terms plus the once-counted penalty
      double best = 1e300;
      std::vector<int> best_assign;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          double value =
              oracle_entity_value(hin, st, ConstraintSet::empty_for(hin), 0, 0, a) +
              oracle_entity_value(hin, st, ConstraintSet::empty_for(hin), 0, 1, b);
          if (a != b) {
            oracle::Dense dense = toy::dense_of(hin.p_de[0], 2, 2);
            value += cs.w_must * oracle::column_kl(dense, 0, 1);
          }
          if (value < best) {
            best = value;
            best_assign = {a, b};
          }
        }
      CHECK(labels[0] == labels[1]);
      CHECK(best_assign[0] == best_assign[1]);
    }
  }

  SUBCASE("cannot-linked identical entities split apart") {
    // e0 and e1 identical; e2 distinct sets a positive d_max via its pair
    std::vector<std::vector<std::vector<double>>> de = {
        {{0.3, 0.3, 0.05}, {0.3, 0.3, 0.55}}};
    Hin hin = toy::hin_from_dense(dw, de);
    ConstraintSet cs = ConstraintSet::empty_for(hin);
    cs.w_must = cs.w_cannot = 100.0;
    cs.cannot[0].push_back({0, 1});
    cs.cannot[0].push_back({0, 2});
    compute_d_max(hin, cs, 0);
    REQUIRE(cs.d_max[0] > 0.1);

    ClusterState st = make_state(hin, {0, 1}, {0, 1}, {{0, 0, 1}}, 2, 2, {2});
    auto labels = update_entity_labels_icm(hin, st, cs, 0);
    CHECK(labels[0] != labels[1]);

    // at the fixed point no single flip lowers any entity's own value
    ClusterState final_st = st;
    final_st.labels_ent[0] = labels;
    for (int i = 0; i < 3; ++i) {
      double own = oracle_entity_value(hin, final_st, cs, 0, i,
                                       labels[static_cast<size_t>(i)]);
      for (int k = 0; k < 2; ++k)
        CHECK(own <= oracle_entity_value(hin, final_st, cs, 0, i, k) + 1e-12);
    }
  }

  SUBCASE("single entity cluster count collapses to zero labels") {
    std::vector<std::vector<std::vector<double>>> de = {{{0.5, 0.2}, {0.5, 0.8}}};
    Hin hin = toy::hin_from_dense(dw, de);
    ConstraintSet cs = ConstraintSet::empty_for(hin);
    ClusterState st = make_state(hin, {0, 1}, {0, 1}, {{0, 0}}, 2, 2, {1});
    auto labels = update_entity_labels_icm(hin, st, cs, 0);
    for (int l : labels) CHECK(l == 0);
  }
}

TEST_CASE("ICM fixed points are single-flip optimal on random instances") {
  std::mt19937_64 rng(817);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    int m = 3, v = 2 + static_cast<int>(rng() % 3);
    auto random_dense = [&](int rows, int cols) {
      std::vector<std::vector<double>> w(static_cast<size_t>(rows),
                                         std::vector<double>(static_cast<size_t>(cols), 0.0));
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) w[static_cast<size_t>(i)][static_cast<size_t>(j)] = unif(rng);
      return w;
    };
    Hin hin = toy::hin_from_dense(random_dense(m, 4), {random_dense(m, v)});
    ConstraintSet cs = ConstraintSet::empty_for(hin);
    cs.w_must = cs.w_cannot = 0.3;
    for (int a = 0; a < v; ++a)
      for (int b = a + 1; b < v; ++b)
        if (rng() % 3 == 0)
          cs.must[0].push_back({a, b});
        else if (rng() % 3 == 1)
          cs.cannot[0].push_back({a, b});
    compute_d_max(hin, cs, 0);

    std::vector<int> init(static_cast<size_t>(v));
    for (int i = 0; i < v; ++i) init[static_cast<size_t>(i)] = static_cast<int>(rng() % 2);
    ClusterState st = make_state(hin, {0, 1, 1}, {0, 1, 1, 0}, {init}, 2, 2, {2});
    auto labels = update_entity_labels_icm(hin, st, cs, 0, 50);

    ClusterState final_st = st;
    final_st.labels_ent[0] = labels;
    for (int i = 0; i < v; ++i) {
      double own = oracle_entity_value(hin, final_st, cs, 0, i,
                                       labels[static_cast<size_t>(i)]);
      for (int k = 0; k < 2; ++k)
        CHECK(own <= oracle_entity_value(hin, final_st, cs, 0, i, k) + 1e-12);
    }
  }
}

namespace {

// 2-block planted network: docs/words/entities split evenly, plus a same-type
// entity edge and block-aligned constraints.
Hin planted_hin() {
  std::vector<std::vector<double>> dw(6, std::vector<double>(8, 0.0));
  for (int d = 0; d < 3; ++d)
    for (int w = 0; w < 4; ++w) dw[static_cast<size_t>(d)][static_cast<size_t>(w)] = 1.0;
  for (int d = 3; d < 6; ++d)
    for (int w = 4; w < 8; ++w) dw[static_cast<size_t>(d)][static_cast<size_t>(w)] = 1.0;
  std::vector<std::vector<double>> de(6, std::vector<double>(4, 0.0));
  for (int d = 0; d < 3; ++d)
    for (int e = 0; e < 2; ++e) de[static_cast<size_t>(d)][static_cast<size_t>(e)] = 1.0;
  for (int d = 3; d < 6; ++d)
    for (int e = 2; e < 4; ++e) de[static_cast<size_t>(d)][static_cast<size_t>(e)] = 1.0;
  std::vector<std::vector<double>> ee(4, std::vector<double>(4, 0.0));
  ee[0][1] = ee[1][0] = 1.0;
  ee[2][3] = ee[3][2] = 1.0;
  return toy::hin_from_dense(dw, {de}, {{0, 0, ee}});
}

ConstraintSet planted_constraints(const Hin& hin) {
  ConstraintSet cs = ConstraintSet::empty_for(hin);
  cs.w_must = cs.w_cannot = 0.25;
  cs.must[0].push_back({0, 1});
  cs.must[0].push_back({2, 3});
  cs.cannot[0].push_back({0, 2});
  cs.cannot[0].push_back({0, 3});
  cs.cannot[0].push_back({1, 2});
  cs.cannot[0].push_back({1, 3});
  return cs;
}

}  // namespace

TEST_CASE("run_chinc recovers a noiseless planted 2-block network") {
  Hin hin = planted_hin();
  ConstraintSet cs = planted_constraints(hin);
  std::vector<int> truth = {0, 0, 0, 1, 1, 1};
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    OptimizerConfig cfg;
    cfg.k_docs = 2;
    cfg.seed = seed;
    RunResult run = run_chinc(hin, cs, cfg);
    CHECK(nmi(run.state.labels_doc, truth) == 1.0);
    CHECK(run.trace.back() <= run.trace.front() + 1e-9);
    validate_state(hin, run.state);
  }
}

TEST_CASE("run_chinc trace length follows max_iter") {
  Hin hin = planted_hin();
  OptimizerConfig cfg;
  cfg.k_docs = 2;
  cfg.max_iter = 1;
  RunResult run = run_chinc(hin, ConstraintSet{}, cfg);
  CHECK(run.trace.size() == 1);
  CHECK(run.iterations == 1);
}

TEST_CASE("run_chinc objective trace never increases across iterations") {
  Hin hin = planted_hin();
  ConstraintSet cs = planted_constraints(hin);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    OptimizerConfig cfg;
    cfg.k_docs = 2;
    cfg.seed = seed;
    cfg.max_delta = 0.0;  // run all iterations
    cfg.max_iter = 10;
    RunResult run = run_chinc(hin, cs, cfg);
    for (size_t i = 1; i < run.trace.size(); ++i)
      CHECK(run.trace[i] <= run.trace[i - 1] + 1e-9);
  }
}

TEST_CASE("run_chinc with no entities reduces to run_itcc") {
  std::vector<std::vector<double>> dw = {
      {1, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 1, 1}, {0, 0, 1, 1}};
  Hin hin = toy::hin_from_dense(dw);
  for (std::uint64_t seed : {0ULL, 7ULL, 13ULL}) {
    OptimizerConfig cfg;
    cfg.k_docs = 2;
    cfg.seed = seed;
    RunResult a = run_chinc(hin, ConstraintSet{}, cfg);
    RunResult b = run_itcc(hin, cfg);
    CHECK(a.state.labels_doc == b.state.labels_doc);
    CHECK(a.state.labels_word == b.state.labels_word);
    CHECK(a.trace == b.trace);
  }
}

TEST_CASE("run_itcc recovers block-diagonal structure") {
  std::vector<std::vector<double>> dw = {
      {1, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 1, 1}, {0, 0, 1, 1}};
  Hin hin = toy::hin_from_dense(dw);
  std::vector<int> truth = {0, 0, 1, 1};
  OptimizerConfig cfg;
  cfg.k_docs = 2;
  cfg.k_words = 2;
  cfg.seed = 5;
  RunResult run = run_itcc(hin, cfg);
  CHECK(nmi(run.state.labels_doc, truth) == 1.0);
  CHECK(run.trace.back() <= 1e-12);
}

TEST_CASE("run_itcc with one cluster per node reaches a zero objective") {
  std::vector<std::vector<double>> dw = {{3, 1, 0, 1, 0},
                                         {0, 2, 1, 0, 1},
                                         {1, 0, 2, 2, 0},
                                         {0, 1, 0, 1, 3}};
  Hin hin = toy::hin_from_dense(dw);
  OptimizerConfig cfg;
  cfg.k_docs = 4;
  cfg.k_words = 5;
  cfg.seed = 11;
  RunResult run = run_itcc(hin, cfg);
  CHECK(run.trace.back() <= 1e-9);
}

TEST_CASE("run_itcc traces are bit-identical across runs with one seed") {
  std::vector<std::vector<double>> dw = {
      {1, 2, 0, 1}, {0, 1, 2, 1}, {2, 0, 1, 1}, {1, 1, 1, 0}};
  Hin hin = toy::hin_from_dense(dw);
  OptimizerConfig cfg;
  cfg.k_docs = 2;
  cfg.seed = 99;
  RunResult a = run_itcc(hin, cfg);
  RunResult b = run_itcc(hin, cfg);
  CHECK(a.trace == b.trace);
  CHECK(a.state.labels_doc == b.state.labels_doc);
}

TEST_CASE("run_itcc rejects entity-bearing networks; infeasible counts throw") {
  std::vector<std::vector<double>> dw = {{1, 1}, {1, 1}};
  std::vector<std::vector<std::vector<double>>> de = {{{1, 0}, {0, 1}}};
  Hin with_entities = toy::hin_from_dense(dw, de);
  OptimizerConfig cfg;
  cfg.k_docs = 2;
  CHECK_THROWS_AS(run_itcc(with_entities, cfg), std::invalid_argument);

  Hin hin = toy::hin_from_dense(dw);
  OptimizerConfig bad;
  bad.k_docs = 5;
  CHECK_THROWS_AS(run_chinc(hin, ConstraintSet{}, bad), std::invalid_argument);
  OptimizerConfig none;
  none.k_docs = 0;
  CHECK_THROWS_AS(run_chinc(hin, ConstraintSet{}, none), std::invalid_argument);
}

TEST_CASE("step-level recording shows non-increasing objectives") {
  Hin hin = planted_hin();
  ConstraintSet cs = planted_constraints(hin);
  OptimizerConfig cfg;
  cfg.k_docs = 2;
  cfg.seed = 3;
  cfg.record_steps = true;
  cfg.max_iter = 6;
  RunResult run = run_chinc(hin, cs, cfg);
  REQUIRE(run.step_trace.size() > 4);
  // model updates never increase the objective given fresh labels
  for (size_t i = 1; i < run.step_trace.size(); ++i) {
    if (run.step_trace[i].first.find("model") == std::string::npos) continue;
    CHECK(run.step_trace[i].second <= run.step_trace[i - 1].second + 1e-9);
  }
}
