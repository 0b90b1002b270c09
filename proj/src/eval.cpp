#include "semkge/eval.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "semkge/numeric.hpp"

namespace semkge {

const char* rank_mode_name(RankMode m) { return m == RankMode::raw ? "raw" : "filtered"; }

RankMode rank_mode_from_name(const std::string& name) {
    if (name == "raw") return RankMode::raw;
    if (name == "filtered") return RankMode::filtered;
    throw ValidationError("unknown rank mode '" + name + "' (expected raw|filtered)");
}

const char* tie_break_name(TieBreak t) {
    return t == TieBreak::optimistic ? "optimistic" : "pessimistic";
}

TieBreak tie_break_from_name(const std::string& name) {
    if (name == "optimistic") return TieBreak::optimistic;
    if (name == "pessimistic") return TieBreak::pessimistic;
    throw ValidationError("unknown tie break '" + name + "' (expected optimistic|pessimistic)");
}

const char* bucket_name(Bucket b) {
    switch (b) {
        case Bucket::B1: return "B1";
        case Bucket::B2: return "B2";
        case Bucket::B3: return "B3";
        case Bucket::unbucketed: return "unbucketed";
    }
    return "?";
}

const char* split_name(SplitKind s) {
    switch (s) {
        case SplitKind::train: return "train";
        case SplitKind::valid: return "valid";
        case SplitKind::test: return "test";
    }
    return "?";
}

SplitKind split_from_name(const std::string& name) {
    if (name == "train") return SplitKind::train;
    if (name == "valid") return SplitKind::valid;
    if (name == "test") return SplitKind::test;
    throw ValidationError("unknown split '" + name + "' (expected train|valid|test)");
}

namespace {

// Known-true completions of one query slot, used for filtered ranking.
// Sorted, excludes nothing yet; the ground truth is skipped at use site.
using CompletionMap = std::unordered_map<std::uint64_t, std::vector<EntityId>>;

std::uint64_t completion_key(EntityId fixed, RelationId r) {
    return (static_cast<std::uint64_t>(fixed) << 32) | r;
}

struct CompletionIndex {
    CompletionMap heads;  // key (tail, r) -> true heads
    CompletionMap tails;  // key (head, r) -> true tails

    explicit CompletionIndex(const KnowledgeGraph& kg) {
        for (const Triple& t : kg.all_true) {
            heads[completion_key(t.tail, t.rel)].push_back(t.head);
            tails[completion_key(t.head, t.rel)].push_back(t.tail);
        }
        for (auto* m : {&heads, &tails}) {
            for (auto& [k, v] : *m) std::sort(v.begin(), v.end());
        }
    }

    const std::vector<EntityId>* known(const Triple& t, Side side) const {
        const CompletionMap& m = side == Side::head ? heads : tails;
        EntityId fixed = side == Side::head ? t.tail : t.head;
        auto it = m.find(completion_key(fixed, t.rel));
        return it == m.end() ? nullptr : &it->second;
    }
};

RankResult rank_with_removed(const ModelParams& params, const Triple& t, Side side,
                             const SemValidIndex& index, const std::vector<EntityId>* known_true,
                             RankMode mode, TieBreak ties, std::size_t topk) {
    EntityId truth = side == Side::head ? t.head : t.tail;
    EntityId fixed = side == Side::head ? t.tail : t.head;
    std::vector<double> scores = score_all(params, t.rel, fixed, side);

    auto removed = [&](EntityId e) {
        if (mode != RankMode::filtered || e == truth || known_true == nullptr) return false;
        return std::binary_search(known_true->begin(), known_true->end(), e);
    };

    double truth_score = scores[truth];
    std::uint64_t greater = 0, equal = 0;
    // Top-k kept as a (score desc, id asc) sorted insertion buffer.
    std::vector<std::pair<double, EntityId>> best;
    best.reserve(topk + 1);
    auto better = [](const std::pair<double, EntityId>& a, const std::pair<double, EntityId>& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    };
    for (EntityId e = 0; e < scores.size(); ++e) {
        if (removed(e)) continue;
        if (e != truth) {
            if (scores[e] > truth_score) ++greater;
            else if (scores[e] == truth_score) ++equal;
        }
        std::pair<double, EntityId> cand{scores[e], e};
        if (best.size() < topk || better(cand, best.back())) {
            best.insert(std::upper_bound(best.begin(), best.end(), cand, better), cand);
            if (best.size() > topk) best.pop_back();
        }
    }

    RankResult out;
    out.query = t;
    out.side = side;
    out.rank = 1 + greater + (ties == TieBreak::pessimistic ? equal : 0);
    out.topk.reserve(best.size());
    out.topk_valid.reserve(best.size());
    for (const auto& [score, e] : best) {
        out.topk.push_back(e);
        out.topk_valid.push_back(index.contains(t.rel, side, e) ? 1 : 0);
    }
    return out;
}

double sem_share(const RankResult& r, std::size_t k) {
    std::size_t limit = std::min(k, r.topk.size());
    if (limit == 0) return 0.0;
    std::size_t valid = 0;
    for (std::size_t i = 0; i < limit; ++i) valid += r.topk_valid[i] ? 1 : 0;
    return static_cast<double>(valid) / static_cast<double>(limit);
}

}  // namespace

RankResult rank_query(const ModelParams& params, const Triple& t, Side side,
                      const KnowledgeGraph& kg, const SemValidIndex& index, RankMode mode,
                      TieBreak ties, std::size_t topk) {
    kg.check_bounds(t);
    // One-off variant: collect known-true completions by probing all_true.
    std::vector<EntityId> known;
    if (mode == RankMode::filtered) {
        for (EntityId e = 0; e < kg.num_entities; ++e) {
            Triple probe = t;
            (side == Side::head ? probe.head : probe.tail) = e;
            if (kg.is_true(probe)) known.push_back(e);
        }
    }
    return rank_with_removed(params, t, side, index, &known, mode, ties, topk);
}

double mrr(std::span<const RankResult> results) {
    if (results.empty()) throw ValidationError("mrr of an empty result set is undefined");
    KahanSum sum;
    for (const RankResult& r : results) sum.add(1.0 / static_cast<double>(r.rank));
    return sum.value() / static_cast<double>(results.size());
}

double hits_at_k(std::span<const RankResult> results, std::size_t k) {
    if (results.empty()) throw ValidationError("hits@k of an empty result set is undefined");
    KahanSum sum;
    for (const RankResult& r : results) sum.add(r.rank <= k ? 1.0 : 0.0);
    return sum.value() / static_cast<double>(results.size());
}

double sem_at_k(std::span<const RankResult> results, std::size_t k) {
    if (results.empty()) throw ValidationError("sem@k of an empty result set is undefined");
    KahanSum sum;
    for (const RankResult& r : results) sum.add(sem_share(r, k));
    return sum.value() / static_cast<double>(results.size());
}

void BucketSpec::validate() const {
    for (const auto* side : {&head, &tail}) {
        for (std::size_t i = 0; i < 3; ++i) {
            if (!(*side)[i]) continue;
            if ((*side)[i]->lo > (*side)[i]->hi) {
                throw ValidationError("bucket interval with lo > hi");
            }
            for (std::size_t j = i + 1; j < 3; ++j) {
                if (!(*side)[j]) continue;
                bool disjoint = (*side)[i]->hi < (*side)[j]->lo || (*side)[j]->hi < (*side)[i]->lo;
                if (!disjoint) throw ValidationError("bucket intervals overlap");
            }
        }
    }
}

Bucket BucketSpec::assign(Side side, std::uint64_t candidate_count) const {
    const auto& intervals = side == Side::head ? head : tail;
    for (std::size_t i = 0; i < 3; ++i) {
        if (intervals[i] && intervals[i]->contains(candidate_count)) {
            return static_cast<Bucket>(i);
        }
    }
    return Bucket::unbucketed;
}

BucketSpec BucketSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open bucket spec " + path.string());
    BucketSpec spec;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string side_s, bucket_s;
        std::uint64_t lo = 0, hi = 0;
        if (!(row >> side_s >> bucket_s >> lo >> hi)) {
            throw ParseError(path.string(), line_no, "expected: side bucket lo hi");
        }
        auto& intervals = [&]() -> std::array<std::optional<BucketInterval>, 3>& {
            if (side_s == "head") return spec.head;
            if (side_s == "tail") return spec.tail;
            throw ParseError(path.string(), line_no, "side must be head or tail");
        }();
        std::size_t idx;
        if (bucket_s == "B1") idx = 0;
        else if (bucket_s == "B2") idx = 1;
        else if (bucket_s == "B3") idx = 2;
        else throw ParseError(path.string(), line_no, "bucket must be B1, B2, or B3");
        if (intervals[idx]) {
            throw ParseError(path.string(), line_no, "duplicate bucket definition");
        }
        intervals[idx] = BucketInterval{lo, hi};
    }
    spec.validate();
    return spec;
}

BucketAssignment bucket_assign(const KnowledgeGraph& kg, const BucketSpec& spec) {
    spec.validate();
    BucketAssignment out;
    out.head.resize(kg.num_relations);
    out.tail.resize(kg.num_relations);
    for (RelationId r = 0; r < kg.num_relations; ++r) {
        out.head[r] = spec.assign(Side::head, sem_valid_candidates(r, Side::head, kg).size());
        out.tail[r] = spec.assign(Side::tail, sem_valid_candidates(r, Side::tail, kg).size());
    }
    return out;
}

namespace {

// Running sums for one report group; finalized into GroupMetrics.
struct GroupAccum {
    std::uint64_t count = 0;
    KahanSum mrr_sum;
    std::vector<KahanSum> hits_sum;
    std::vector<KahanSum> sem_sum;

    explicit GroupAccum(std::size_t num_ks) : hits_sum(num_ks), sem_sum(num_ks) {}

    void add(const RankResult& r, const std::vector<std::size_t>& ks) {
        ++count;
        mrr_sum.add(1.0 / static_cast<double>(r.rank));
        for (std::size_t i = 0; i < ks.size(); ++i) {
            hits_sum[i].add(r.rank <= ks[i] ? 1.0 : 0.0);
            sem_sum[i].add(sem_share(r, ks[i]));
        }
    }

    GroupMetrics finalize(std::size_t num_ks) const {
        GroupMetrics m;
        m.num_queries = count;
        m.hits.assign(num_ks, 0.0);
        m.sem.assign(num_ks, 0.0);
        if (count == 0) return m;
        double n = static_cast<double>(count);
        m.mrr = mrr_sum.value() / n;
        for (std::size_t i = 0; i < num_ks; ++i) {
            m.hits[i] = hits_sum[i].value() / n;
            m.sem[i] = sem_sum[i].value() / n;
        }
        return m;
    }
};

void append_group_json(std::string& out, const GroupMetrics& g,
                       const std::vector<std::size_t>& ks) {
    if (g.num_queries == 0) {
        out += "null";
        return;
    }
    out += "{\"mrr\":" + json_number(g.mrr) + ",\"hits\":{";
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (i) out += ",";
        out += "\"" + std::to_string(ks[i]) + "\":" + json_number(g.hits[i]);
    }
    out += "},\"sem\":{";
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (i) out += ",";
        out += "\"" + std::to_string(ks[i]) + "\":" + json_number(g.sem[i]);
    }
    out += "},\"num_queries\":" + std::to_string(g.num_queries) + "}";
}

void dump_rank_line(std::ostream& os, const RankResult& r) {
    os << "{\"h\":" << r.query.head << ",\"r\":" << r.query.rel << ",\"t\":" << r.query.tail
       << ",\"side\":\"" << side_name(r.side) << "\",\"rank\":" << r.rank << ",\"topk\":[";
    for (std::size_t i = 0; i < r.topk.size(); ++i) {
        if (i) os << ",";
        os << r.topk[i];
    }
    os << "],\"topk_valid\":[";
    for (std::size_t i = 0; i < r.topk_valid.size(); ++i) {
        if (i) os << ",";
        os << (r.topk_valid[i] ? 1 : 0);
    }
    os << "]}\n";
}

}  // namespace

std::string EvalReport::to_json() const {
    std::string out = "{\"split\":\"" + split + "\",\"mode\":\"" + rank_mode_name(mode) + "\"";
    out += ",\"overall\":";
    append_group_json(out, overall, ks);
    out += ",\"by_side\":{\"head\":";
    append_group_json(out, by_side[0], ks);
    out += ",\"tail\":";
    append_group_json(out, by_side[1], ks);
    out += "},\"by_bucket\":{";
    for (int b = 0; b < 4; ++b) {
        if (b) out += ",";
        out += "\"" + std::string(bucket_name(static_cast<Bucket>(b))) + "\":";
        append_group_json(out, by_bucket[b], ks);
    }
    out += "},\"num_queries\":" + std::to_string(num_queries) + "}";
    return out;
}

EvalReport evaluate(const ModelParams& params, const KnowledgeGraph& kg, SplitKind split,
                    const EvalOptions& opts) {
    const std::vector<Triple>& triples = split == SplitKind::train ? kg.train
                                       : split == SplitKind::valid ? kg.valid
                                                                   : kg.test;
    if (triples.empty()) {
        throw ValidationError(std::string("cannot evaluate: split '") + split_name(split) +
                              "' is empty");
    }
    if (opts.ks.empty()) throw ValidationError("evaluate needs at least one K");
    for (std::size_t k : opts.ks) {
        if (k == 0) throw ValidationError("K values must be positive");
    }
    if (params.num_entities != kg.num_entities || params.num_relations != kg.num_relations) {
        throw ValidationError("model tables do not match the dataset vocabularies");
    }
    if (opts.buckets) opts.buckets->validate();

    SemValidIndex index(kg);
    CompletionIndex completions(kg);
    std::optional<BucketAssignment> buckets;
    if (opts.buckets) buckets = bucket_assign(kg, *opts.buckets);
    std::size_t topk = *std::max_element(opts.ks.begin(), opts.ks.end());

    // Query 2i is the head-side query of triple i, 2i+1 the tail-side one.
    std::size_t num_queries = triples.size() * 2;
    std::vector<RankResult> results(num_queries);
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q) {
            const Triple& t = triples[q / 2];
            Side side = q % 2 == 0 ? Side::head : Side::tail;
            results[q] = rank_with_removed(params, t, side, index, completions.known(t, side),
                                           opts.mode, opts.ties, topk);
        }
    };
    unsigned threads = std::max(1u, opts.threads);
    if (threads == 1 || num_queries < 2 * threads) {
        run_range(0, num_queries);
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (num_queries + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w) {
            std::size_t begin = w * chunk;
            std::size_t end = std::min(num_queries, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(run_range, begin, end);
        }
        for (std::thread& th : pool) th.join();
    }

    EvalReport report;
    report.split = split_name(split);
    report.mode = opts.mode;
    report.ks = opts.ks;
    report.num_queries = num_queries;
    std::size_t nk = opts.ks.size();
    GroupAccum overall(nk);
    GroupAccum by_side[2] = {GroupAccum(nk), GroupAccum(nk)};
    GroupAccum by_bucket[4] = {GroupAccum(nk), GroupAccum(nk), GroupAccum(nk), GroupAccum(nk)};
    for (const RankResult& r : results) {
        overall.add(r, opts.ks);
        by_side[static_cast<int>(r.side)].add(r, opts.ks);
        Bucket b = buckets ? buckets->at(r.query.rel, r.side) : Bucket::unbucketed;
        by_bucket[static_cast<int>(b)].add(r, opts.ks);
        if (opts.rank_dump) dump_rank_line(*opts.rank_dump, r);
    }
    report.overall = overall.finalize(nk);
    for (int s = 0; s < 2; ++s) report.by_side[s] = by_side[s].finalize(nk);
    for (int b = 0; b < 4; ++b) report.by_bucket[b] = by_bucket[b].finalize(nk);
    return report;
}

}  // namespace semkge
