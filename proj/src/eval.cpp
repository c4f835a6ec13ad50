#include "rmvh/eval.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>

#include "json.hpp"

namespace rmvh {

Relevance::Relevance(std::vector<std::vector<int>> query_labels, std::vector<std::vector<int>> db_labels)
    : query_(std::move(query_labels)), db_(std::move(db_labels)) {
  for (auto* sets : {&query_, &db_}) {
    for (auto& s : *sets) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
  }
}

Relevance Relevance::single_label(const std::vector<int>& query_labels, const std::vector<int>& db_labels) {
  std::vector<std::vector<int>> q, d;
  for (int l : query_labels) q.push_back({l});
  for (int l : db_labels) d.push_back({l});
  return Relevance(std::move(q), std::move(d));
}

bool Relevance::operator()(Index query, Index item) const {
  const auto& a = query_[static_cast<std::size_t>(query)];
  const auto& b = db_[static_cast<std::size_t>(item)];
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

Index Relevance::relevant_count(Index query) const {
  Index c = 0;
  for (Index j = 0; j < num_items(); ++j) c += (*this)(query, j) ? 1 : 0;
  return c;
}

Index hamming_distance(const CodeMatrix& a, Index i, const CodeMatrix& b, Index j) {
  require(a.bits() == b.bits(), "hamming_distance: code lengths differ (" + std::to_string(a.bits()) + " vs " +
                                    std::to_string(b.bits()) + ")");
  return hamming(a.row(i), b.row(j));
}

Index hamming_distance(std::span<const int> a, std::span<const int> b) {
  require(a.size() == b.size(), "hamming_distance: code lengths differ (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
  Index d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] >= 0) != (b[i] >= 0) ? 1 : 0;
  return d;
}

namespace {

void check_sets(const CodeMatrix& queries, const CodeMatrix& db, const Relevance& rel) {
  require(queries.size() >= 1, "evaluation: empty query set");
  require(db.size() >= 1, "evaluation: empty database");
  require(queries.bits() == db.bits(), "evaluation: query codes have " + std::to_string(queries.bits()) +
                                           " bits, database codes " + std::to_string(db.bits()));
  require(rel.num_queries() == queries.size() && rel.num_items() == db.size(),
          "evaluation: relevance oracle does not match the code sets");
}

}  // namespace

LookupStats hash_lookup_precision(const CodeMatrix& queries, const CodeMatrix& db, const Relevance& rel,
                                  Index radius) {
  require(radius >= 0, "hash_lookup_precision: negative radius");
  check_sets(queries, db, rel);
  std::vector<double> precision(static_cast<std::size_t>(queries.size()), 0.0);
  Index covered = 0;
  double nonempty_sum = 0.0;
  for (Index q = 0; q < queries.size(); ++q) {
    Index retrieved = 0, relevant = 0;
    for (Index j = 0; j < db.size(); ++j) {
      if (hamming(queries.row(q), db.row(j)) <= radius) {
        ++retrieved;
        relevant += rel(q, j) ? 1 : 0;
      }
    }
    if (retrieved > 0) {
      precision[q] = static_cast<double>(relevant) / static_cast<double>(retrieved);
      ++covered;
      nonempty_sum += precision[q];
    }
  }
  LookupStats s;
  const auto nq = static_cast<double>(queries.size());
  s.mean = std::accumulate(precision.begin(), precision.end(), 0.0) / nq;
  double var = 0.0;
  for (double p : precision) var += (p - s.mean) * (p - s.mean);
  s.stddev = std::sqrt(var / nq);
  s.coverage = static_cast<double>(covered) / nq;
  s.mean_nonempty = covered > 0 ? nonempty_sum / static_cast<double>(covered) : 0.0;
  return s;
}

double average_precision(std::span<const bool> ranked_relevance, Index relevant_total) {
  require(relevant_total >= 1, "average_precision: L_q must be >= 1");
  double sum = 0.0;
  Index hits = 0;
  for (std::size_t z = 0; z < ranked_relevance.size(); ++z) {
    if (!ranked_relevance[z]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(z + 1);
  }
  return sum / static_cast<double>(relevant_total);
}

std::vector<Index> hamming_ranking(const CodeMatrix& queries, Index q, const CodeMatrix& db) {
  // Counting sort on distance keeps index order within a distance bucket.
  const Index bits = db.bits();
  std::vector<std::vector<Index>> bucket(static_cast<std::size_t>(bits + 1));
  for (Index j = 0; j < db.size(); ++j) bucket[static_cast<std::size_t>(hamming(queries.row(q), db.row(j)))].push_back(j);
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(db.size()));
  for (const auto& b : bucket) order.insert(order.end(), b.begin(), b.end());
  return order;
}

double mean_average_precision(const CodeMatrix& queries, const CodeMatrix& db, const Relevance& rel, Index top_k,
                              ApNormalizer normalizer) {
  require(top_k >= 1, "mean_average_precision: top_k must be >= 1");
  check_sets(queries, db, rel);
  double total = 0.0;
  const auto depth = static_cast<std::size_t>(std::min(top_k, db.size()));
  const auto flags = std::make_unique<bool[]>(depth);
  for (Index q = 0; q < queries.size(); ++q) {
    const auto order = hamming_ranking(queries, q, db);
    Index hits = 0;
    for (std::size_t z = 0; z < depth; ++z) {
      flags[z] = rel(q, order[z]);
      hits += flags[z] ? 1 : 0;
    }
    const Index norm = normalizer == ApNormalizer::ground_truth ? rel.relevant_count(q) : hits;
    if (norm == 0) continue;  // AP of a query with nothing to find is 0
    total += average_precision(std::span<const bool>(flags.get(), depth), norm);
  }
  return total / static_cast<double>(queries.size());
}

std::vector<PrPoint> pr_curve(const CodeMatrix& queries, const CodeMatrix& db, const Relevance& rel) {
  check_sets(queries, db, rel);
  const Index bits = db.bits();
  std::vector<double> precision(static_cast<std::size_t>(bits + 1), 0.0);
  std::vector<double> recall(static_cast<std::size_t>(bits + 1), 0.0);
  std::vector<Index> all(static_cast<std::size_t>(bits + 1)), good(static_cast<std::size_t>(bits + 1));
  for (Index q = 0; q < queries.size(); ++q) {
    std::fill(all.begin(), all.end(), 0);
    std::fill(good.begin(), good.end(), 0);
    Index relevant_total = 0;
    for (Index j = 0; j < db.size(); ++j) {
      const auto d = static_cast<std::size_t>(hamming(queries.row(q), db.row(j)));
      ++all[d];
      if (rel(q, j)) {
        ++good[d];
        ++relevant_total;
      }
    }
    Index retrieved = 0, hits = 0;
    for (Index r = 0; r <= bits; ++r) {
      retrieved += all[r];
      hits += good[r];
      if (retrieved > 0) precision[r] += static_cast<double>(hits) / static_cast<double>(retrieved);
      if (relevant_total > 0) recall[r] += static_cast<double>(hits) / static_cast<double>(relevant_total);
    }
  }
  std::vector<PrPoint> out;
  const auto nq = static_cast<double>(queries.size());
  for (Index r = 0; r <= bits; ++r) out.push_back({r, recall[r] / nq, precision[r] / nq});
  return out;
}

EvalReport evaluate(const CodeMatrix& queries, const CodeMatrix& db, const Relevance& rel, Index top_k,
                    Index radius, ApNormalizer normalizer) {
  EvalReport r;
  r.top_k = top_k;
  r.radius = radius;
  r.map = mean_average_precision(queries, db, rel, top_k, normalizer);
  r.lookup = hash_lookup_precision(queries, db, rel, radius);
  r.pr = pr_curve(queries, db, rel);
  r.num_queries = queries.size();
  r.num_items = db.size();
  r.bits = db.bits();
  return r;
}

void EvalReport::write_json(std::ostream& out) const {
  nlohmann::ordered_json j;
  j["map"] = map;
  j["top_k"] = top_k;
  j["radius"] = radius;
  j["lookup_precision_mean"] = lookup.mean;
  j["lookup_precision_std"] = lookup.stddev;
  j["lookup_coverage"] = lookup.coverage;
  j["lookup_precision_mean_nonempty"] = lookup.mean_nonempty;
  j["num_queries"] = num_queries;
  j["num_items"] = num_items;
  j["bits"] = bits;
  auto& curve = j["pr_curve"] = nlohmann::ordered_json::array();
  for (const auto& p : pr) curve.push_back({{"radius", p.radius}, {"recall", p.recall}, {"precision", p.precision}});
  out << j.dump(2) << '\n';
}

void EvalReport::write_pr_csv(std::ostream& out) const {
  out << "radius,recall,precision\n";
  out.precision(17);
  for (const auto& p : pr) out << p.radius << ',' << p.recall << ',' << p.precision << '\n';
}

}  // namespace rmvh
