#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "semkge/eval.hpp"
#include "semkge/numeric.hpp"
#include "support/testutil.hpp"

using namespace semkge;

namespace {

// DistMult with dim 1 gives full control over the score vector: with the
// relation weight at 1, score(h, r, t) is just value(h) * value(t).
ModelParams dim1_distmult(const std::vector<double>& entity_values) {
    ModelParams p;
    p.kind = ModelKind::DistMult;
    p.num_entities = static_cast<std::uint32_t>(entity_values.size());
    p.num_relations = 1;
    p.dim = 1;
    p.tables.emplace_back(entity_values.size(), 1);
    p.tables[0].data = entity_values;
    p.tables.emplace_back(1, 1);
    p.tables[1].data = {1.0};
    return p;
}

Schema untyped_schema(std::uint32_t num_entities, std::uint32_t num_relations) {
    Schema s;
    s.num_classes = 0;
    s.entity_classes.resize(num_entities);
    s.rel_domain.resize(num_relations);
    s.rel_range.resize(num_relations);
    return s;
}

struct TempFile {
    std::filesystem::path path;

    explicit TempFile(const std::string& contents) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("semkge_eval_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

// Rank and top-k recomputed from score_one, one entity at a time.
struct OracleRank {
    std::uint64_t rank = 0;
    std::vector<EntityId> topk;
};

OracleRank oracle_rank(const ModelParams& params, const Triple& t, Side side,
                       const KnowledgeGraph& kg, RankMode mode, TieBreak ties,
                       std::size_t k = 10) {
    EntityId truth = side == Side::head ? t.head : t.tail;
    double truth_score = score_one(params, t);
    std::uint64_t greater = 0, equal = 0;
    std::vector<std::pair<double, EntityId>> kept;
    for (EntityId e = 0; e < kg.num_entities; ++e) {
        Triple probe = t;
        (side == Side::head ? probe.head : probe.tail) = e;
        if (mode == RankMode::filtered && e != truth && kg.is_true(probe)) continue;
        double s = score_one(params, probe);
        kept.push_back({s, e});
        if (e == truth) continue;
        if (s > truth_score) ++greater;
        else if (s == truth_score) ++equal;
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    OracleRank out;
    out.rank = 1 + greater + (ties == TieBreak::pessimistic ? equal : 0);
    for (std::size_t i = 0; i < std::min(k, kept.size()); ++i) out.topk.push_back(kept[i].second);
    return out;
}

}  // namespace

TEST_CASE("names round-trip") {
    CHECK(rank_mode_from_name("raw") == RankMode::raw);
    CHECK(rank_mode_from_name(rank_mode_name(RankMode::filtered)) == RankMode::filtered);
    CHECK_THROWS_AS(rank_mode_from_name("both"), ValidationError);
    CHECK(tie_break_from_name("pessimistic") == TieBreak::pessimistic);
    CHECK(tie_break_from_name(tie_break_name(TieBreak::optimistic)) == TieBreak::optimistic);
    CHECK_THROWS_AS(tie_break_from_name("mean"), ValidationError);
    CHECK(split_from_name("train") == SplitKind::train);
    CHECK(split_from_name("valid") == SplitKind::valid);
    CHECK(split_from_name(split_name(SplitKind::test)) == SplitKind::test);
    CHECK_THROWS_AS(split_from_name("dev"), ValidationError);
    CHECK(std::string(bucket_name(Bucket::B1)) == "B1");
    CHECK(std::string(bucket_name(Bucket::unbucketed)) == "unbucketed");
}

TEST_CASE("rank_query on a hand-built score vector") {
    // Tail scores for (0, 0, ?) are 5 * value(e): 25, 20, 15, 10, 5.
    ModelParams params = dim1_distmult({5, 4, 3, 2, 1});
    KnowledgeGraph kg = KnowledgeGraph::make(5, 1, {{0, 0, 1}}, {}, {}, untyped_schema(5, 1));
    SemValidIndex index(kg);

    RankResult r = rank_query(params, {0, 0, 1}, Side::tail, kg, index, RankMode::raw);
    CHECK(r.rank == 2);  // only entity 0 scores higher
    CHECK(r.topk == std::vector<EntityId>{0, 1, 2, 3, 4});
    CHECK(r.side == Side::tail);

    // Head side of the same triple: scores are 4 * value(e), truth head 0 wins.
    RankResult h = rank_query(params, {0, 0, 1}, Side::head, kg, index, RankMode::raw);
    CHECK(h.rank == 1);
}

TEST_CASE("tie-breaking is optimistic or pessimistic on equal scores") {
    // Entities 1 and 2 share the value 4, so the truth (tail 1) ties with 2.
    ModelParams params = dim1_distmult({5, 4, 4, 2, 1});
    KnowledgeGraph kg = KnowledgeGraph::make(5, 1, {{0, 0, 1}}, {}, {}, untyped_schema(5, 1));
    SemValidIndex index(kg);

    RankResult opt =
        rank_query(params, {0, 0, 1}, Side::tail, kg, index, RankMode::raw, TieBreak::optimistic);
    CHECK(opt.rank == 2);
    RankResult pes =
        rank_query(params, {0, 0, 1}, Side::tail, kg, index, RankMode::raw, TieBreak::pessimistic);
    CHECK(pes.rank == 3);
    // The top-k list itself breaks ties by ascending id.
    CHECK(opt.topk == std::vector<EntityId>{0, 1, 2, 3, 4});
}

TEST_CASE("filtered mode removes other known-true completions entirely") {
    ModelParams params = dim1_distmult({5, 4, 3, 2, 1});
    // (0,0,0) is a known positive and would outrank the truth (0,0,1).
    KnowledgeGraph kg =
        KnowledgeGraph::make(5, 1, {{0, 0, 1}, {0, 0, 0}}, {}, {}, untyped_schema(5, 1));
    SemValidIndex index(kg);

    RankResult raw = rank_query(params, {0, 0, 1}, Side::tail, kg, index, RankMode::raw);
    CHECK(raw.rank == 2);
    CHECK(raw.topk == std::vector<EntityId>{0, 1, 2, 3, 4});

    RankResult filt = rank_query(params, {0, 0, 1}, Side::tail, kg, index, RankMode::filtered);
    CHECK(filt.rank == 1);
    // The removed candidate vanishes from the top-k too; it is not padded.
    CHECK(filt.topk == std::vector<EntityId>{1, 2, 3, 4});

    // The ground truth itself is never removed, even though it is known true.
    RankResult self = rank_query(params, {0, 0, 0}, Side::tail, kg, index, RankMode::filtered);
    CHECK(self.rank == 1);
}

TEST_CASE("rank_query rejects out-of-range queries") {
    ModelParams params = dim1_distmult({1, 2});
    KnowledgeGraph kg = KnowledgeGraph::make(2, 1, {{0, 0, 1}}, {}, {}, untyped_schema(2, 1));
    SemValidIndex index(kg);
    CHECK_THROWS_AS(rank_query(params, {0, 0, 2}, Side::tail, kg, index, RankMode::raw),
                    ValidationError);
    CHECK_THROWS_AS(rank_query(params, {0, 1, 1}, Side::tail, kg, index, RankMode::raw),
                    ValidationError);
}

TEST_CASE("ranks and top-k match a brute-force oracle on random graphs") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        KnowledgeGraph kg = testutil::random_kg(seed, 20, 4, 3, 40, 10, 10);
        ModelKind kind = static_cast<ModelKind>(seed % 5);
        ModelParams params = init_params(kind, kg.num_entities, kg.num_relations, 8, seed);
        SemValidIndex index(kg);
        for (const Triple& t : kg.test) {
            for (Side side : {Side::head, Side::tail}) {
                for (RankMode mode : {RankMode::raw, RankMode::filtered}) {
                    for (TieBreak ties : {TieBreak::optimistic, TieBreak::pessimistic}) {
                        RankResult got = rank_query(params, t, side, kg, index, mode, ties);
                        OracleRank want = oracle_rank(params, t, side, kg, mode, ties);
                        CHECK(got.rank == want.rank);
                        CHECK(got.topk == want.topk);
                        // Validity flags must reflect the predicted slot.
                        for (std::size_t i = 0; i < got.topk.size(); ++i) {
                            bool valid = index.contains(t.rel, side, got.topk[i]);
                            CHECK(static_cast<bool>(got.topk_valid[i]) == valid);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("filtering never hurts the rank") {
    KnowledgeGraph kg = testutil::random_kg(3, 15, 3, 3, 50, 10, 10);
    ModelParams params = init_params(ModelKind::ComplEx, kg.num_entities, kg.num_relations, 6, 9);
    SemValidIndex index(kg);
    for (const Triple& t : kg.valid) {
        for (Side side : {Side::head, Side::tail}) {
            RankResult raw = rank_query(params, t, side, kg, index, RankMode::raw);
            RankResult filt = rank_query(params, t, side, kg, index, RankMode::filtered);
            CHECK(filt.rank <= raw.rank);
        }
    }
}

TEST_CASE("aggregate hand values") {
    RankResult a, b, c;
    a.rank = 1;
    b.rank = 2;
    c.rank = 4;
    a.topk = {0, 1};
    a.topk_valid = {1, 0};
    b.topk = {0, 1};
    b.topk_valid = {1, 1};
    c.topk = {0};
    c.topk_valid = {0};
    std::vector<RankResult> rs = {a, b, c};

    CHECK(mrr(rs) == doctest::Approx((1.0 + 0.5 + 0.25) / 3.0).epsilon(1e-15));
    CHECK(hits_at_k(rs, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(hits_at_k(rs, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(hits_at_k(rs, 10) == 1.0);
    // Sem@2 shares: 1/2, 2/2, and 0/1 for the truncated list.
    CHECK(sem_at_k(rs, 2) == doctest::Approx((0.5 + 1.0 + 0.0) / 3.0).epsilon(1e-15));
    // Sem@1 shares: 1, 1, 0.
    CHECK(sem_at_k(rs, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    std::vector<RankResult> empty;
    CHECK_THROWS_AS(mrr(empty), ValidationError);
    CHECK_THROWS_AS(hits_at_k(empty, 1), ValidationError);
    CHECK_THROWS_AS(sem_at_k(empty, 1), ValidationError);
}

TEST_CASE("sem@k truncates its denominator with the candidate list") {
    // Four entities; two non-truth tails of (0,0,1) are known true, so the
    // filtered candidate list holds just 2 entries even at k = 3.
    ModelParams params = dim1_distmult({5, 4, 3, 2});
    Schema s;
    s.num_classes = 1;
    s.entity_classes = {{0}, {0}, {}, {}};
    s.rel_domain = {std::optional<std::vector<ClassId>>{}};
    s.rel_range = {std::vector<ClassId>{0}};
    KnowledgeGraph kg =
        KnowledgeGraph::make(4, 1, {{0, 0, 1}, {0, 0, 0}, {0, 0, 2}}, {}, {}, s);
    SemValidIndex index(kg);
    RankResult r = rank_query(params, {0, 0, 1}, Side::tail, kg, index, RankMode::filtered, // -
                              TieBreak::optimistic, 3);
    REQUIRE(r.topk.size() == 2);  // candidates 1 and 3
    CHECK(r.topk == std::vector<EntityId>{1, 3});
    CHECK(static_cast<bool>(r.topk_valid[0]) == true);   // tail 1 is typed
    CHECK(static_cast<bool>(r.topk_valid[1]) == false);  // tail 3 is untyped
    std::vector<RankResult> rs = {r};
    CHECK(sem_at_k(rs, 3) == 0.5);
}

TEST_CASE("bucket specs load, validate, and assign") {
    TempFile spec_file(
        "# side bucket lo hi\n"
        "head\tB1\t1\t10\n"
        "head\tB2\t20\t30\n"
        "head\tB3\t31\t40\n"
        "tail\tB1\t5\t5\n");
    BucketSpec spec = BucketSpec::load(spec_file.path);

    CHECK(spec.assign(Side::head, 1) == Bucket::B1);
    CHECK(spec.assign(Side::head, 10) == Bucket::B1);   // closed on both ends
    CHECK(spec.assign(Side::head, 11) == Bucket::unbucketed);  // gap
    CHECK(spec.assign(Side::head, 20) == Bucket::B2);
    CHECK(spec.assign(Side::head, 30) == Bucket::B2);
    CHECK(spec.assign(Side::head, 31) == Bucket::B3);
    CHECK(spec.assign(Side::head, 41) == Bucket::unbucketed);
    CHECK(spec.assign(Side::head, 0) == Bucket::unbucketed);
    CHECK(spec.assign(Side::tail, 5) == Bucket::B1);
    CHECK(spec.assign(Side::tail, 6) == Bucket::unbucketed);
    // Undeclared tail B2/B3 leave everything else unbucketed.
    CHECK(spec.assign(Side::tail, 25) == Bucket::unbucketed);
}

TEST_CASE("bucket spec rejects malformed input") {
    {
        TempFile f("head\tB1\t10\t5\n");
        CHECK_THROWS_AS(BucketSpec::load(f.path), ValidationError);  // lo > hi
    }
    {
        TempFile f("head\tB1\t1\t10\nhead\tB2\t10\t20\n");
        CHECK_THROWS_AS(BucketSpec::load(f.path), ValidationError);  // overlap at 10
    }
    {
        TempFile f("# ok\nmiddle\tB1\t1\t2\n");
        try {
            BucketSpec::load(f.path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }
    {
        TempFile f("head\tB4\t1\t2\n");
        CHECK_THROWS_AS(BucketSpec::load(f.path), ParseError);
    }
    {
        TempFile f("head\tB1\t1\n");
        CHECK_THROWS_AS(BucketSpec::load(f.path), ParseError);  // missing hi
    }
    {
        TempFile f("head\tB1\t1\t2\nhead\tB1\t4\t5\n");
        CHECK_THROWS_AS(BucketSpec::load(f.path), ParseError);  // duplicate
    }
    CHECK_THROWS_AS(BucketSpec::load("/nonexistent/buckets.tsv"), ValidationError);
}

TEST_CASE("bucket assignment reflects semantically valid candidate counts") {
    // Two typed blocks: relations alternate domain/range between the blocks,
    // so candidate counts per side are exactly the block sizes.
    testutil::TypedBlocks tb = testutil::typed_blocks_kg(1, 10, 2, 60, 10, 10);
    BucketSpec spec;
    spec.head = {BucketInterval{10, 10}, std::nullopt, std::nullopt};
    spec.tail = {std::nullopt, BucketInterval{10, 10}, std::nullopt};
    BucketAssignment assign = bucket_assign(tb.kg, spec);
    for (RelationId r = 0; r < tb.kg.num_relations; ++r) {
        CHECK(assign.at(r, Side::head) == Bucket::B1);
        CHECK(assign.at(r, Side::tail) == Bucket::B2);
    }
    // Brute-force recount of the candidate sets behind the assignment.
    for (RelationId r = 0; r < tb.kg.num_relations; ++r) {
        CHECK(sem_valid_candidates(r, Side::head, tb.kg).size() == 10);
        CHECK(sem_valid_candidates(r, Side::tail, tb.kg).size() == 10);
    }
}

TEST_CASE("evaluate validates its inputs") {
    KnowledgeGraph kg = testutil::random_kg(5, 12, 2, 2, 20, 5, 0);
    ModelParams params = init_params(ModelKind::TransE, kg.num_entities, kg.num_relations, 4, 1);
    EvalOptions opts;
    CHECK_THROWS_AS(evaluate(params, kg, SplitKind::test, opts), ValidationError);  // empty split

    EvalOptions no_ks;
    no_ks.ks = {};
    CHECK_THROWS_AS(evaluate(params, kg, SplitKind::valid, no_ks), ValidationError);
    EvalOptions zero_k;
    zero_k.ks = {0};
    CHECK_THROWS_AS(evaluate(params, kg, SplitKind::valid, zero_k), ValidationError);

    ModelParams wrong =
        init_params(ModelKind::TransE, kg.num_entities + 1, kg.num_relations, 4, 1);
    CHECK_THROWS_AS(evaluate(wrong, kg, SplitKind::valid, opts), ValidationError);

    BucketSpec bad;
    bad.head = {BucketInterval{1, 10}, BucketInterval{5, 20}, std::nullopt};
    EvalOptions with_bad;
    with_bad.buckets = &bad;
    CHECK_THROWS_AS(evaluate(params, kg, SplitKind::valid, with_bad), ValidationError);
}

TEST_CASE("evaluate aggregates exactly what rank_query reports") {
    KnowledgeGraph kg = testutil::random_kg(7, 18, 3, 3, 40, 12, 12);
    ModelParams params = init_params(ModelKind::SimplE, kg.num_entities, kg.num_relations, 6, 2);
    SemValidIndex index(kg);
    EvalOptions opts;
    opts.ks = {1, 3, 10};
    EvalReport rep = evaluate(params, kg, SplitKind::test, opts);

    CHECK(rep.num_queries == kg.test.size() * 2);
    CHECK(rep.overall.num_queries == rep.num_queries);
    CHECK(rep.by_side[0].num_queries + rep.by_side[1].num_queries == rep.num_queries);
    // No bucket spec: everything lands in the unbucketed group.
    CHECK(rep.by_bucket[3].num_queries == rep.num_queries);
    CHECK(rep.by_bucket[0].num_queries == 0);

    // Recompute overall MRR and Hits in query order with the same compensated
    // summation; the results must agree to the last bit.
    KahanSum inv_rank, hits10;
    for (const Triple& t : kg.test) {
        for (Side side : {Side::head, Side::tail}) {
            RankResult r =
                rank_query(params, t, side, kg, index, opts.mode, opts.ties, 10);
            inv_rank.add(1.0 / static_cast<double>(r.rank));
            hits10.add(r.rank <= 10 ? 1.0 : 0.0);
        }
    }
    double n = static_cast<double>(rep.num_queries);
    CHECK(rep.overall.mrr == inv_rank.value() / n);
    CHECK(rep.overall.hits[2] == hits10.value() / n);
}

TEST_CASE("reports are identical for any thread count") {
    KnowledgeGraph kg = testutil::random_kg(9, 20, 4, 3, 60, 15, 15);
    ModelParams params = init_params(ModelKind::TransH, kg.num_entities, kg.num_relations, 8, 4);
    EvalOptions opts;
    opts.threads = 1;
    std::string one = evaluate(params, kg, SplitKind::test, opts).to_json();
    opts.threads = 4;
    std::string four = evaluate(params, kg, SplitKind::test, opts).to_json();
    opts.threads = 31;  // more threads than queries
    std::string many = evaluate(params, kg, SplitKind::test, opts).to_json();
    CHECK(one == four);
    CHECK(one == many);
}

TEST_CASE("report JSON carries every group and nulls for empty ones") {
    testutil::TypedBlocks tb = testutil::typed_blocks_kg(2, 12, 2, 80, 20, 20);
    ModelParams params =
        init_params(ModelKind::DistMult, tb.kg.num_entities, tb.kg.num_relations, 4, 3);
    BucketSpec spec;
    spec.head = {BucketInterval{12, 12}, std::nullopt, std::nullopt};
    spec.tail = {BucketInterval{12, 12}, std::nullopt, std::nullopt};
    EvalOptions opts;
    opts.buckets = &spec;
    EvalReport rep = evaluate(params, tb.kg, SplitKind::valid, opts);

    nlohmann::json j = nlohmann::json::parse(rep.to_json());
    CHECK(j.at("split") == "valid");
    CHECK(j.at("mode") == "filtered");
    CHECK(j.at("num_queries") == tb.kg.valid.size() * 2);
    CHECK(j.at("overall").at("num_queries") == tb.kg.valid.size() * 2);
    CHECK(j.at("overall").at("hits").contains("10"));
    CHECK(j.at("overall").at("sem").contains("1"));
    CHECK(j.at("by_side").at("head").at("num_queries") == tb.kg.valid.size());
    // Every candidate count is 12, so all queries land in B1 and the other
    // bucket groups render as null.
    CHECK(j.at("by_bucket").at("B1").at("num_queries") == tb.kg.valid.size() * 2);
    CHECK(j.at("by_bucket").at("B2").is_null());
    CHECK(j.at("by_bucket").at("B3").is_null());
    CHECK(j.at("by_bucket").at("unbucketed").is_null());

    double b1_mrr = j.at("by_bucket").at("B1").at("mrr").get<double>();
    CHECK(b1_mrr == rep.overall.mrr);
}

TEST_CASE("the rank dump replays into the reported metrics") {
    KnowledgeGraph kg = testutil::random_kg(13, 16, 3, 3, 40, 10, 10);
    ModelParams params = init_params(ModelKind::TransE, kg.num_entities, kg.num_relations, 6, 8);
    std::ostringstream dump;
    EvalOptions opts;
    opts.rank_dump = &dump;
    EvalReport rep = evaluate(params, kg, SplitKind::test, opts);

    std::istringstream lines(dump.str());
    std::string line;
    std::size_t count = 0;
    KahanSum inv_rank;
    std::vector<KahanSum> hits(3);
    while (std::getline(lines, line)) {
        nlohmann::json j = nlohmann::json::parse(line);
        const Triple& t = kg.test[count / 2];
        CHECK(j.at("h") == t.head);
        CHECK(j.at("r") == t.rel);
        CHECK(j.at("t") == t.tail);
        CHECK(j.at("side") == (count % 2 == 0 ? "head" : "tail"));
        std::uint64_t rank = j.at("rank").get<std::uint64_t>();
        CHECK(rank >= 1);
        inv_rank.add(1.0 / static_cast<double>(rank));
        std::size_t ks[3] = {1, 3, 10};
        for (int i = 0; i < 3; ++i) hits[i].add(rank <= ks[i] ? 1.0 : 0.0);
        CHECK(j.at("topk").size() == j.at("topk_valid").size());
        ++count;
    }
    REQUIRE(count == rep.num_queries);
    double n = static_cast<double>(count);
    CHECK(rep.overall.mrr == inv_rank.value() / n);
    for (int i = 0; i < 3; ++i) CHECK(rep.overall.hits[i] == hits[i].value() / n);
}
