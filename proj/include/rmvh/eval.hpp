#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "rmvh/codes.hpp"
#include "rmvh/common.hpp"

namespace rmvh {

/// Ground truth: a query and a database item are neighbors when their label
/// sets share at least one label. Single-label data reduce to equality.
class Relevance {
 public:
  Relevance(std::vector<std::vector<int>> query_labels, std::vector<std::vector<int>> db_labels);
  static Relevance single_label(const std::vector<int>& query_labels, const std::vector<int>& db_labels);

  bool operator()(Index query, Index item) const;
  Index num_queries() const { return static_cast<Index>(query_.size()); }
  Index num_items() const { return static_cast<Index>(db_.size()); }
  /// Number of relevant database items for a query (L_q).
  Index relevant_count(Index query) const;

 private:
  std::vector<std::vector<int>> query_;  // each sorted, unique
  std::vector<std::vector<int>> db_;
};

/// Number of differing bits. Throws InvalidArgument on a length mismatch.
Index hamming_distance(const CodeMatrix& a, Index i, const CodeMatrix& b, Index j);
Index hamming_distance(std::span<const int> a, std::span<const int> b);

struct LookupStats {
  double mean = 0.0;           // empty balls count as precision 0
  double stddev = 0.0;         // population standard deviation
  double coverage = 0.0;       // fraction of queries with a non-empty ball
  double mean_nonempty = 0.0;  // mean over queries with a non-empty ball only
};

LookupStats hash_lookup_precision(const CodeMatrix& queries, const CodeMatrix& db, const Relevance& rel,
                                  Index radius);

/// (1 / L_q) sum_z P(z) [item z relevant] over the given ranked list.
double average_precision(std::span<const bool> ranked_relevance, Index relevant_total);

/// How AP is normalized when only the top_k of the ranking is scored.
///  ground_truth:       L_q, the relevant count in the whole database
///  retrieved_relevant: the number of relevant items inside the top_k
enum class ApNormalizer { ground_truth, retrieved_relevant };

/// Database indices sorted by Hamming distance to query q, ties by index.
std::vector<Index> hamming_ranking(const CodeMatrix& queries, Index q, const CodeMatrix& db);

double mean_average_precision(const CodeMatrix& queries, const CodeMatrix& db, const Relevance& rel, Index top_k,
                              ApNormalizer normalizer = ApNormalizer::ground_truth);

struct PrPoint {
  Index radius = 0;
  double recall = 0.0;
  double precision = 0.0;
};

/// Mean precision and recall of Hamming-ball retrieval at radius 0..P.
/// Queries with an empty ball contribute precision 0; queries without any
/// relevant item contribute recall 0.
std::vector<PrPoint> pr_curve(const CodeMatrix& queries, const CodeMatrix& db, const Relevance& rel);

struct EvalReport {
  double map = 0.0;
  Index top_k = 100;
  Index radius = 2;
  LookupStats lookup;
  std::vector<PrPoint> pr;
  Index num_queries = 0;
  Index num_items = 0;
  Index bits = 0;

  void write_json(std::ostream& out) const;
  /// "radius,recall,precision".
  void write_pr_csv(std::ostream& out) const;
};

EvalReport evaluate(const CodeMatrix& queries, const CodeMatrix& db, const Relevance& rel, Index top_k,
                    Index radius, ApNormalizer normalizer = ApNormalizer::ground_truth);

}  // namespace rmvh
