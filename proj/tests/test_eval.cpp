#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "json.hpp"
#include "oracles.hpp"
#include "rmvh/eval.hpp"

using namespace rmvh;

namespace {

CodeMatrix to_codes(const oracle::Codes& c) {
  CodeMatrix out(static_cast<Index>(c.size()), static_cast<Index>(c.front().size()));
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t p = 0; p < c[i].size(); ++p) out.set(static_cast<Index>(i), static_cast<Index>(p), c[i][p]);
  return out;
}

oracle::Codes negate(oracle::Codes c) {
  for (auto& row : c)
    for (auto& v : row) v = -v;
  return c;
}

std::vector<int> random_labels(int n, int classes, std::mt19937_64& rng) {
  std::vector<int> l(n);
  for (auto& v : l) v = static_cast<int>(rng() % classes);
  return l;
}

}  // namespace

TEST_CASE("hamming_distance examples") {
  const std::vector<int> a{1, 1, -1}, b{1, 1, -1};
  CHECK(hamming_distance(a, b) == 0);
  const std::vector<int> c{1, -1, 1, 1}, d{1, 1, 1, -1};
  CHECK(hamming_distance(c, d) == 2);

  std::mt19937_64 rng(1);
  const auto code = oracle::random_codes(1, 32, rng);
  const CodeMatrix x = to_codes(code), y = to_codes(negate(code));
  CHECK(hamming_distance(x, 0, y, 0) == 32);
  CHECK(hamming_distance(x, 0, x, 0) == 0);
  CHECK_THROWS_AS(hamming_distance(a, c), InvalidArgument);
  CHECK_THROWS_AS(hamming_distance(x, 0, to_codes(oracle::random_codes(1, 31, rng)), 0), InvalidArgument);
}

TEST_CASE("average_precision examples") {
  const bool r1[] = {true, false, true};
  CHECK(average_precision(r1, 2) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-15));
  CHECK(average_precision(r1, 2) == doctest::Approx(0.8333333333).epsilon(1e-9));
  const bool all[] = {true, true, true, true};
  CHECK(average_precision(all, 4) == 1.0);
  const bool none[] = {false, false};
  CHECK(average_precision(none, 3) == 0.0);
  CHECK_THROWS_AS(average_precision(none, 0), InvalidArgument);
}

TEST_CASE("mean_average_precision examples") {
  // Every database item relevant.
  std::mt19937_64 rng(2);
  const CodeMatrix q = to_codes(oracle::random_codes(1, 8, rng));
  const CodeMatrix db = to_codes(oracle::random_codes(30, 8, rng));
  const Relevance same = Relevance::single_label({0}, std::vector<int>(30, 0));
  CHECK(mean_average_precision(q, db, same, 30) == 1.0);
  CHECK(mean_average_precision(q, db, same, 10, ApNormalizer::retrieved_relevant) == 1.0);
  // Whole-database normalizer: truncation caps AP at top_k / L_q.
  CHECK(mean_average_precision(q, db, same, 10) == doctest::Approx(10.0 / 30.0).epsilon(1e-15));

  // Item i sits at Hamming distance i from both queries; L_q = 5 for each.
  // Top 3: query 0 sees (rel, rel, irr) -> 2/5, query 1 sees three hits -> 3/5.
  CodeMatrix q2(2, 8), db2(8, 8);
  for (Index p = 0; p < 8; ++p) {
    q2.set(0, p, 1);
    q2.set(1, p, 1);
  }
  for (Index i = 0; i < 8; ++i)
    for (Index p = 0; p < 8; ++p) db2.set(i, p, p < i ? -1 : 1);
  const Relevance rel({{1}, {2}}, {{1, 2}, {1, 2}, {2}, {0}, {1}, {1}, {1, 2}, {2}});
  CHECK(rel.relevant_count(0) == 5);
  CHECK(rel.relevant_count(1) == 5);
  const CodeMatrix only0 = q2.rows({0}), only1 = q2.rows({1});
  const std::vector<std::vector<int>> items{{1, 2}, {1, 2}, {2}, {0}, {1}, {1}, {1, 2}, {2}};
  CHECK(mean_average_precision(only0, db2, Relevance({{1}}, items), 3) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(mean_average_precision(only1, db2, Relevance({{2}}, items), 3) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(mean_average_precision(q2, db2, rel, 3) == doctest::Approx(0.5).epsilon(1e-15));

  const Relevance empty_q({}, {{1}});
  CHECK_THROWS_AS(mean_average_precision(CodeMatrix(0, 4), db2, empty_q, 5), InvalidArgument);
  CHECK_THROWS_AS(mean_average_precision(q2, db2, rel, 0), InvalidArgument);
}

TEST_CASE("ranking ties break by database index") {
  CodeMatrix q(1, 2), db(4, 2);
  for (Index p = 0; p < 2; ++p) q.set(0, p, 1);
  const int signs[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  for (Index i = 0; i < 4; ++i)
    for (Index p = 0; p < 2; ++p) db.set(i, p, signs[i][p]);
  CHECK(hamming_ranking(q, 0, db) == std::vector<Index>{2, 1, 3, 0});
}

TEST_CASE("lookup examples") {
  std::mt19937_64 rng(3);
  const auto qc = oracle::random_codes(4, 6, rng);
  const auto dc = oracle::random_codes(40, 6, rng);
  const auto ql = random_labels(4, 3, rng), dl = random_labels(40, 3, rng);
  const Relevance rel = Relevance::single_label(ql, dl);
  const LookupStats full = hash_lookup_precision(to_codes(qc), to_codes(dc), rel, 6);
  CHECK(full.coverage == 1.0);
  double expect = 0.0;
  for (int i = 0; i < 4; ++i) expect += static_cast<double>(std::count(dl.begin(), dl.end(), ql[i])) / 40.0;
  CHECK(full.mean == doctest::Approx(expect / 4).epsilon(1e-15));

  // Radius 0 with exact duplicate relevant codes only.
  oracle::Codes dup;
  std::vector<int> dup_labels;
  for (int i = 0; i < 4; ++i) {
    dup.push_back(qc[i]);
    dup.push_back(qc[i]);
    dup_labels.push_back(ql[i]);
    dup_labels.push_back(ql[i]);
  }
  const LookupStats exact = hash_lookup_precision(to_codes(qc), to_codes(dup), Relevance::single_label(ql, dup_labels), 0);
  bool distinct = true;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) distinct = distinct && (qc[i] != qc[j] || ql[i] == ql[j]);
  REQUIRE(distinct);
  CHECK(exact.mean == 1.0);
  CHECK(exact.coverage == 1.0);
  CHECK(exact.stddev == 0.0);

  CHECK_THROWS_AS(hash_lookup_precision(to_codes(qc), CodeMatrix(0, 6), Relevance::single_label(ql, {}), 2),
                  InvalidArgument);
  CHECK_THROWS_AS(hash_lookup_precision(to_codes(qc), to_codes(dc), rel, -1), InvalidArgument);
}

TEST_CASE("brute-force oracles on 20 random instances") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const int nq = 1 + static_cast<int>(rng() % 10), nd = 20 + static_cast<int>(rng() % 181);
    const int bits = 4 + static_cast<int>(rng() % 13);
    const auto qc = oracle::random_codes(nq, bits, rng);
    const auto dc = oracle::random_codes(nd, bits, rng);
    const auto ql = random_labels(nq, 4, rng), dl = random_labels(nd, 4, rng);
    const Relevance rel = Relevance::single_label(ql, dl);
    const CodeMatrix q = to_codes(qc), db = to_codes(dc);
    for (int top_k : {1, 10, 100, 1000})
      CHECK(mean_average_precision(q, db, rel, top_k) == doctest::Approx(oracle::ref_map(qc, dc, ql, dl, top_k))
                                                             .epsilon(1e-15));
    for (int radius : {0, 1, 2, bits}) {
      const LookupStats got = hash_lookup_precision(q, db, rel, radius);
      const oracle::RefLookup ref = oracle::ref_lookup(qc, dc, ql, dl, radius);
      CHECK(got.mean == doctest::Approx(ref.mean).epsilon(1e-15));
      CHECK(got.stddev == doctest::Approx(ref.stddev).epsilon(1e-12));
      CHECK(got.coverage == ref.coverage);
    }
    const auto pr = pr_curve(q, db, rel);
    const oracle::RefPr ref = oracle::ref_pr(qc, dc, ql, dl);
    REQUIRE(pr.size() == static_cast<std::size_t>(bits + 1));
    for (int r = 0; r <= bits; ++r) {
      CHECK(pr[r].radius == r);
      CHECK(pr[r].recall == doctest::Approx(ref.recall[r]).epsilon(1e-15));
      CHECK(pr[r].precision == doctest::Approx(ref.precision[r]).epsilon(1e-15));
      if (r > 0) CHECK(pr[r].recall >= pr[r - 1].recall);
    }
    bool all_have_neighbors = true;
    for (int i = 0; i < nq; ++i) all_have_neighbors = all_have_neighbors && rel.relevant_count(i) > 0;
    if (all_have_neighbors) CHECK(pr.back().recall == 1.0);

    // Global bit flip on both sides changes nothing.
    const CodeMatrix fq = to_codes(negate(qc)), fd = to_codes(negate(dc));
    CHECK(mean_average_precision(fq, fd, rel, 50) == mean_average_precision(q, db, rel, 50));
    CHECK(hash_lookup_precision(fq, fd, rel, 2).mean == hash_lookup_precision(q, db, rel, 2).mean);
    const auto fpr = pr_curve(fq, fd, rel);
    for (int r = 0; r <= bits; ++r) CHECK(fpr[r].precision == pr[r].precision);
  }
}

TEST_CASE("multi-label relevance") {
  const Relevance rel({{1, 3}, {2, 2}}, {{3}, {4, 1}, {5}, {2, 9}});
  CHECK(rel(0, 0));
  CHECK(rel(0, 1));
  CHECK_FALSE(rel(0, 2));
  CHECK(rel(1, 3));
  CHECK(rel.relevant_count(0) == 2);
  CHECK(rel.relevant_count(1) == 1);
}

TEST_CASE("report serialization") {
  std::mt19937_64 rng(5);
  const auto qc = oracle::random_codes(5, 8, rng);
  const auto dc = oracle::random_codes(60, 8, rng);
  const auto ql = random_labels(5, 3, rng), dl = random_labels(60, 3, rng);
  const EvalReport r = evaluate(to_codes(qc), to_codes(dc), Relevance::single_label(ql, dl), 100, 2);
  CHECK(r.map == doctest::Approx(oracle::ref_map(qc, dc, ql, dl, 100)).epsilon(1e-15));
  CHECK(r.num_queries == 5);
  CHECK(r.num_items == 60);
  CHECK(r.bits == 8);
  std::ostringstream js;
  r.write_json(js);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j["map"].get<double>() == r.map);
  CHECK(j["top_k"].get<int>() == 100);
  CHECK(j["radius"].get<int>() == 2);
  std::ostringstream csv;
  r.write_pr_csv(csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "radius,recall,precision");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 9);
}
