#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "semkge/ingest.hpp"
#include "support/testutil.hpp"

using namespace semkge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("semkge-ingest-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path file(const std::string& name, const std::string& content) const {
        fs::path p = path / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// A dataset with two entity blocks and one untyped stray entity. Relation
// `likes` is fully declared; `knows` lacks a range.
DatasetPaths write_sample(const TempDir& dir) {
    return DatasetPaths{
        dir.file("train.tsv",
                 "alice\tlikes\tparis\n"
                 "bob\tlikes\trome\n"
                 "carol\tlikes\tparis\n"
                 "alice\tknows\tbob\n"),
        dir.file("valid.tsv", "carol\tlikes\trome\n"),
        dir.file("test.tsv", "bob\tlikes\tparis\n"),
        dir.file("entity_types.tsv",
                 "alice\tPerson\n"
                 "bob\tPerson\n"
                 "carol\tPerson\n"
                 "paris\tCity\n"
                 "rome\tCity\n"),
        dir.file("domains.tsv", "likes\tPerson\nknows\tPerson\n"),
        dir.file("ranges.tsv", "likes\tCity\n"),
    };
}

}  // namespace

TEST_CASE("load_triples assigns dense ids in first-appearance order") {
    TempDir dir;
    fs::path p = dir.file("t.tsv", "a\tr\tb\nb\tr\tc\n");
    Vocab entities, relations;
    std::vector<Triple> ts = load_triples(p, entities, relations);
    REQUIRE(ts.size() == 2);
    CHECK(ts[0] == Triple{0, 0, 1});
    CHECK(ts[1] == Triple{1, 0, 2});
    CHECK(entities.size() == 3);
    CHECK(relations.size() == 1);
    CHECK(entities.name(0) == "a");
    CHECK(entities.name(2) == "c");
}

TEST_CASE("load_triples handles empty files and reports malformed lines") {
    TempDir dir;
    Vocab e, r;
    CHECK(load_triples(dir.file("empty.tsv", ""), e, r).empty());
    CHECK(load_triples(dir.file("blank.tsv", "\n\n"), e, r).empty());

    fs::path bad = dir.file("bad.tsv", "a\tr\n");
    try {
        load_triples(bad, e, r);
        FAIL("expected ParseError");
    } catch (const ParseError& ex) {
        CHECK(ex.line() == 1);
    }
    fs::path wide = dir.file("wide.tsv", "a\tr\tb\na\tr\tb\tc\n");
    try {
        load_triples(wide, e, r);
        FAIL("expected ParseError");
    } catch (const ParseError& ex) {
        CHECK(ex.line() == 2);
    }
    CHECK_THROWS_AS(load_triples(dir.path / "missing.tsv", e, r), ValidationError);
}

TEST_CASE("load_schema accumulates classes and warns on unknown labels") {
    TempDir dir;
    Vocab entities, relations, classes;
    entities.add_or_get("a");
    relations.add_or_get("r");
    fs::path types = dir.file("types.tsv", "a\tPerson\na\tPolitician\nghost\tPerson\n");
    fs::path domains = dir.file("domains.tsv", "r\tPerson\n");
    fs::path ranges = dir.file("ranges.tsv", "r\tCountry\nphantom\tCountry\n");
    std::vector<std::string> warnings;
    Schema s = load_schema(types, domains, ranges, entities, relations, classes, &warnings);
    CHECK(s.entity_classes[0].size() == 2);
    REQUIRE(s.rel_domain[0].has_value());
    REQUIRE(s.rel_range[0].has_value());
    CHECK(s.rel_domain[0]->size() == 1);
    CHECK(classes.size() == 3);  // Person, Politician, Country
    CHECK(warnings.size() == 2);  // ghost entity, phantom relation
}

TEST_CASE("an empty domain file leaves every relation unconstrained on the head side") {
    TempDir dir;
    Vocab entities, relations, classes;
    entities.add_or_get("a");
    relations.add_or_get("r");
    Schema s = load_schema(dir.file("t.tsv", ""), dir.file("d.tsv", ""),
                           dir.file("g.tsv", "r\tC\n"), entities, relations, classes, nullptr);
    CHECK_FALSE(s.has_domain(0));
    CHECK(s.has_range(0));
    CHECK(satisfies_side(0, 0, Side::head, s));
}

TEST_CASE("load_dataset wires splits, schema, and vocabularies together") {
    TempDir dir;
    LoadedDataset ds = load_dataset(write_sample(dir));
    DatasetStats st = stats(ds.kg);
    CHECK(st.num_entities == 5);
    CHECK(st.num_relations == 2);
    CHECK(st.num_train == 4);
    CHECK(st.num_valid == 1);
    CHECK(st.num_test == 1);
    CHECK(stats_json(st) ==
          "{\"entities\": 5, \"relations\": 2, \"train\": 4, \"valid\": 1, \"test\": 1}");
    CHECK(ds.kg.is_true({ds.entities.find("alice").value(), ds.relations.find("likes").value(),
                         ds.entities.find("paris").value()}));
}

TEST_CASE("stats of an empty graph is all zeros") {
    KnowledgeGraph kg;
    DatasetStats st = stats(kg);
    CHECK(st.num_entities == 0);
    CHECK(st.num_train == 0);
    CHECK(stats_json(st) ==
          "{\"entities\": 0, \"relations\": 0, \"train\": 0, \"valid\": 0, \"test\": 0}");
}

TEST_CASE("filter drops train relations lacking a declared domain or range") {
    TempDir dir;
    LoadedDataset ds = load_dataset(write_sample(dir));
    KnowledgeGraph out = filter_dataset(ds.kg);
    RelationId knows = ds.relations.find("knows").value();
    for (const Triple& t : out.train) CHECK(t.rel != knows);
    // `likes` triples need alternative valid heads and tails; Persons and
    // Cities both have >= 2 members, so they survive.
    CHECK(out.train.size() == 3);
    // Vocabulary untouched: ids remain stable even after dropping triples.
    CHECK(out.num_entities == ds.kg.num_entities);
    CHECK(out.num_relations == ds.kg.num_relations);
}

TEST_CASE("filter enforces alternative valid counterparts for train triples") {
    // Relation r: domain {A}, range {B}; only one entity of type B exists, so
    // no alternative tail is available and the triple must go.
    Schema s;
    s.num_classes = 2;
    s.entity_classes = {{0}, {0}, {1}};
    s.rel_domain = {std::vector<ClassId>{0}};
    s.rel_range = {std::vector<ClassId>{1}};
    KnowledgeGraph kg = KnowledgeGraph::make(3, 1, {{0, 0, 2}, {1, 0, 2}}, {}, {}, s);
    CHECK_THROWS_AS(filter_dataset(kg), ValidationError);  // nothing survives
}

TEST_CASE("eval-side relations need strictly more than 10 candidates") {
    // 12 heads of type A, exactly 10 tails of type B fail the >10 rule for
    // test triples; train triples themselves are fine (alternatives exist).
    for (std::uint32_t tails : {10u, 11u}) {
        std::uint32_t heads = 12;
        Schema s;
        s.num_classes = 2;
        s.entity_classes.resize(heads + tails);
        for (std::uint32_t e = 0; e < heads + tails; ++e) {
            s.entity_classes[e] = {static_cast<ClassId>(e < heads ? 0 : 1)};
        }
        s.rel_domain = {std::vector<ClassId>{0}};
        s.rel_range = {std::vector<ClassId>{1}};
        std::vector<Triple> train;
        for (std::uint32_t i = 0; i < heads; ++i) {
            train.push_back({i, 0, static_cast<EntityId>(heads + (i % tails))});
        }
        KnowledgeGraph kg = KnowledgeGraph::make(
            heads + tails, 1, train, {},
            {{0, 0, static_cast<EntityId>(heads + tails - 1)}},
            s);
        KnowledgeGraph out = filter_dataset(kg);
        if (tails == 10) {
            CHECK(out.test.empty());
            CHECK_FALSE(out.train.empty());
        } else {
            CHECK(out.test.size() == 1);
        }
    }
}

TEST_CASE("filtered output matches a brute-force fixed point of the four conditions") {
    auto brute_force = [](const KnowledgeGraph& kg) {
        std::vector<Triple> train = kg.train, valid = kg.valid, test = kg.test;
        bool changed = true;
        while (changed) {
            changed = false;
            KnowledgeGraph cur = KnowledgeGraph::make(kg.num_entities, kg.num_relations, train,
                                                      valid, test, kg.schema);
            std::unordered_set<EntityId> train_entities;
            std::unordered_set<RelationId> train_rels;
            for (const Triple& t : train) {
                train_entities.insert(t.head);
                train_entities.insert(t.tail);
                train_rels.insert(t.rel);
            }
            auto alt_exists = [&](const Triple& t, Side side) {
                std::vector<EntityId> cand = sem_valid_candidates(t.rel, side, cur);
                EntityId ground = side == Side::head ? t.head : t.tail;
                for (EntityId e : cand) {
                    if (e != ground) return true;
                }
                return false;
            };
            std::vector<Triple> keep;
            for (const Triple& t : train) {
                if (kg.schema.has_domain(t.rel) && kg.schema.has_range(t.rel) &&
                    alt_exists(t, Side::head) && alt_exists(t, Side::tail)) {
                    keep.push_back(t);
                } else {
                    changed = true;
                }
            }
            train = keep;
            for (std::vector<Triple>* split : {&valid, &test}) {
                std::vector<Triple> kept;
                for (const Triple& t : *split) {
                    bool ok = kg.schema.has_domain(t.rel) && kg.schema.has_range(t.rel) &&
                              sem_valid_candidates(t.rel, Side::head, cur).size() > 10 &&
                              sem_valid_candidates(t.rel, Side::tail, cur).size() > 10 &&
                              train_rels.contains(t.rel) && train_entities.contains(t.head) &&
                              train_entities.contains(t.tail);
                    if (ok) {
                        kept.push_back(t);
                    } else {
                        changed = true;
                    }
                }
                *split = kept;
            }
        }
        return KnowledgeGraph::make(kg.num_entities, kg.num_relations, train, valid, test,
                                    kg.schema);
    };

    int nontrivial = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        KnowledgeGraph kg = testutil::random_kg(seed, 30, 5, 3, 60, 20, 20);
        KnowledgeGraph expect;
        bool expect_throw = false;
        try {
            expect = brute_force(kg);
        } catch (const ValidationError&) {
            expect_throw = true;
        }
        if (expect_throw || expect.train.empty()) {
            CHECK_THROWS_AS(filter_dataset(kg), ValidationError);
            continue;
        }
        KnowledgeGraph got = filter_dataset(kg);
        CHECK(got.train == expect.train);
        CHECK(got.valid == expect.valid);
        CHECK(got.test == expect.test);
        if (got.train.size() < kg.train.size()) ++nontrivial;
    }
    CHECK(nontrivial > 5);  // the corpus actually exercises the filter
}

TEST_CASE("filter_dataset is idempotent") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        KnowledgeGraph kg = testutil::random_kg(seed, 30, 5, 3, 80, 20, 20);
        KnowledgeGraph once;
        try {
            once = filter_dataset(kg);
        } catch (const ValidationError&) {
            continue;
        }
        KnowledgeGraph twice = filter_dataset(once);
        CHECK(once.train == twice.train);
        CHECK(once.valid == twice.valid);
        CHECK(once.test == twice.test);
    }
}

TEST_CASE("after filtering every train triple has spare valid counterparts") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        KnowledgeGraph kg = testutil::random_kg(seed, 30, 5, 3, 80, 20, 20);
        KnowledgeGraph out;
        try {
            out = filter_dataset(kg);
        } catch (const ValidationError&) {
            continue;
        }
        for (const Triple& t : out.train) {
            for (Side side : {Side::head, Side::tail}) {
                std::vector<EntityId> cand = sem_valid_candidates(t.rel, side, out);
                EntityId ground = side == Side::head ? t.head : t.tail;
                std::size_t alternatives = cand.size();
                for (EntityId e : cand) {
                    if (e == ground) --alternatives;
                }
                CHECK(alternatives >= 1);
            }
        }
        for (const std::vector<Triple>* split : {&out.valid, &out.test}) {
            for (const Triple& t : *split) {
                CHECK(sem_valid_candidates(t.rel, Side::head, out).size() > 10);
                CHECK(sem_valid_candidates(t.rel, Side::tail, out).size() > 10);
            }
        }
    }
}

TEST_CASE("write then reload round-trips, and refiltering is byte-stable") {
    TempDir dir;
    LoadedDataset ds = load_dataset(write_sample(dir));
    KnowledgeGraph filtered = filter_dataset(ds.kg);

    TempDir out1;
    DatasetPaths p1{out1.path / "train.tsv",        out1.path / "valid.tsv",
                    out1.path / "test.tsv",         out1.path / "entity_types.tsv",
                    out1.path / "domains.tsv",      out1.path / "ranges.tsv"};
    write_dataset(filtered, ds.entities, ds.relations, ds.classes, p1);

    LoadedDataset reloaded = load_dataset(p1);
    CHECK(stats(reloaded.kg).num_train == filtered.train.size());
    KnowledgeGraph refiltered = filter_dataset(reloaded.kg);

    TempDir out2;
    DatasetPaths p2{out2.path / "train.tsv",        out2.path / "valid.tsv",
                    out2.path / "test.tsv",         out2.path / "entity_types.tsv",
                    out2.path / "domains.tsv",      out2.path / "ranges.tsv"};
    write_dataset(refiltered, reloaded.entities, reloaded.relations, reloaded.classes, p2);

    CHECK(slurp(p1.train) == slurp(p2.train));
    CHECK(slurp(p1.valid) == slurp(p2.valid));
    CHECK(slurp(p1.test) == slurp(p2.test));
    CHECK(slurp(p1.entity_types) == slurp(p2.entity_types));
    CHECK(slurp(p1.domains) == slurp(p2.domains));
    CHECK(slurp(p1.ranges) == slurp(p2.ranges));
}

TEST_CASE("loading is deterministic") {
    TempDir dir;
    DatasetPaths paths = write_sample(dir);
    LoadedDataset a = load_dataset(paths);
    LoadedDataset b = load_dataset(paths);
    CHECK(a.kg.train == b.kg.train);
    CHECK(a.entities.size() == b.entities.size());
    for (std::uint32_t i = 0; i < a.entities.size(); ++i) {
        CHECK(a.entities.name(i) == b.entities.name(i));
    }
}
