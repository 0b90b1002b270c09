#pragma once
// Ranking protocol and metrics: MRR, Hits@K, Sem@K, reported overall, per
// prediction side, and per relation bucket (B1/B2/B3 by semantically valid
// candidate count).
//
// Queries are independent and may be scored in parallel; aggregation walks
// the results in a fixed order with compensated summation, so reports are
// bit-identical for any thread count.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semkge/kg.hpp"
#include "semkge/models.hpp"

namespace semkge {

enum class RankMode { raw, filtered };
enum class TieBreak { optimistic, pessimistic };

const char* rank_mode_name(RankMode m);
RankMode rank_mode_from_name(const std::string& name);  // throws ValidationError
const char* tie_break_name(TieBreak t);
TieBreak tie_break_from_name(const std::string& name);  // throws ValidationError

struct RankResult {
    Triple query;
    Side side = Side::tail;           // the predicted slot
    std::uint64_t rank = 0;           // >= 1
    std::vector<EntityId> topk;       // best first; removed candidates excluded
    std::vector<char> topk_valid;     // predicted entity satisfies its constraint
};

// Ranks the ground-truth entity among all completions of the query slot.
// Filtered mode removes other known-true completions from the candidate set
// entirely (they appear in neither the rank count nor topk). Optimistic
// tie-breaking ranks the truth above equal scores, pessimistic below; topk
// itself orders by (score desc, id asc).
RankResult rank_query(const ModelParams& params, const Triple& t, Side side,
                      const KnowledgeGraph& kg, const SemValidIndex& index, RankMode mode,
                      TieBreak ties = TieBreak::optimistic, std::size_t topk = 10);

// Aggregates. All of them reject an empty result set.
double mrr(std::span<const RankResult> results);
double hits_at_k(std::span<const RankResult> results, std::size_t k);
// Mean share of semantically valid entities among each query's top-k
// (denominator min(k, |topk|) when a tiny candidate set truncates the list).
double sem_at_k(std::span<const RankResult> results, std::size_t k);

// Closed interval of semantically valid candidate counts.
struct BucketInterval {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    bool contains(std::uint64_t n) const { return n >= lo && n <= hi; }
};

enum class Bucket { B1, B2, B3, unbucketed };
const char* bucket_name(Bucket b);

// Per-side B1/B2/B3 intervals. Relations whose candidate count falls in a
// gap between intervals stay unbucketed.
struct BucketSpec {
    std::array<std::optional<BucketInterval>, 3> head;
    std::array<std::optional<BucketInterval>, 3> tail;

    void validate() const;  // intervals per side must be disjoint
    Bucket assign(Side side, std::uint64_t candidate_count) const;

    // TSV rows `side<TAB>bucket<TAB>lo<TAB>hi`, `#` comments allowed.
    static BucketSpec load(const std::filesystem::path& path);
};

// bucket per (relation, side), from |sem_valid_candidates(r, side)|.
struct BucketAssignment {
    std::vector<Bucket> head;  // indexed by relation
    std::vector<Bucket> tail;

    Bucket at(RelationId r, Side side) const {
        return side == Side::head ? head.at(r) : tail.at(r);
    }
};

BucketAssignment bucket_assign(const KnowledgeGraph& kg, const BucketSpec& spec);

struct GroupMetrics {
    std::uint64_t num_queries = 0;
    double mrr = 0.0;
    std::vector<double> hits;  // aligned with EvalReport::ks
    std::vector<double> sem;
};

struct EvalReport {
    std::string split;
    RankMode mode = RankMode::filtered;
    std::vector<std::size_t> ks;
    GroupMetrics overall;
    GroupMetrics by_side[2];                    // indexed by Side
    GroupMetrics by_bucket[4];                  // indexed by Bucket
    std::uint64_t num_queries = 0;

    std::string to_json() const;  // stable layout, null metrics for empty groups
};

enum class SplitKind { train, valid, test };
const char* split_name(SplitKind s);
SplitKind split_from_name(const std::string& name);  // throws ValidationError

struct EvalOptions {
    RankMode mode = RankMode::filtered;
    TieBreak ties = TieBreak::optimistic;
    std::vector<std::size_t> ks = {1, 3, 10};
    const BucketSpec* buckets = nullptr;  // null leaves every query unbucketed
    unsigned threads = 1;
    std::ostream* rank_dump = nullptr;    // one JSON line per query when set
};

// Runs rank_query on both sides of every triple in the split and aggregates.
// Throws ValidationError on an empty split.
EvalReport evaluate(const ModelParams& params, const KnowledgeGraph& kg, SplitKind split,
                    const EvalOptions& opts);

}  // namespace semkge
