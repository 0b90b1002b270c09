#include "semkge/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

namespace semkge {

namespace {

// Splits a line on tabs. Returns false unless exactly `want` fields.
bool split_fields(std::string_view line, int want, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return static_cast<int>(out.size()) == want;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return in;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

void sort_unique(std::vector<ClassId>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::uint32_t Vocab::add_or_get(std::string_view name) {
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    std::uint32_t id = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
}

std::optional<std::uint32_t> Vocab::find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

std::vector<Triple> load_triples(const std::filesystem::path& path, Vocab& entities,
                                 Vocab& relations) {
    std::ifstream in = open_or_throw(path);
    std::vector<Triple> triples;
    std::vector<std::string_view> fields;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        if (!split_fields(line, 3, fields)) {
            throw ParseError(path.string(), lineno,
                             "expected 3 tab-separated fields, got " +
                                 std::to_string(fields.size()));
        }
        Triple t;
        t.head = entities.add_or_get(fields[0]);
        t.rel = relations.add_or_get(fields[1]);
        t.tail = entities.add_or_get(fields[2]);
        triples.push_back(t);
    }
    if (in.bad()) {
        throw RuntimeFailure("I/O error reading " + path.string());
    }
    return triples;
}

Schema load_schema(const std::filesystem::path& entity_types, const std::filesystem::path& domains,
                   const std::filesystem::path& ranges, const Vocab& entities,
                   const Vocab& relations, Vocab& classes, std::vector<std::string>* warnings) {
    Schema schema;
    schema.entity_classes.resize(entities.size());
    schema.rel_domain.resize(relations.size());
    schema.rel_range.resize(relations.size());

    auto warn = [&](const std::filesystem::path& file, std::size_t lineno, std::string_view what,
                    std::string_view name) {
        if (warnings) {
            warnings->push_back(file.string() + ":" + std::to_string(lineno) + ": " +
                                std::string(what) + " '" + std::string(name) +
                                "' not seen in any triple file; row skipped");
        }
    };

    auto load_two_col = [&](const std::filesystem::path& path, auto&& consume) {
        std::ifstream in = open_or_throw(path);
        std::vector<std::string_view> fields;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            strip_cr(line);
            if (line.empty()) continue;
            if (!split_fields(line, 2, fields)) {
                throw ParseError(path.string(), lineno,
                                 "expected 2 tab-separated fields, got " +
                                     std::to_string(fields.size()));
            }
            consume(path, lineno, fields[0], fields[1]);
        }
        if (in.bad()) {
            throw RuntimeFailure("I/O error reading " + path.string());
        }
    };

    load_two_col(entity_types, [&](const auto& file, std::size_t lineno, std::string_view ent,
                                   std::string_view cls) {
        auto eid = entities.find(ent);
        if (!eid) {
            warn(file, lineno, "entity", ent);
            return;
        }
        schema.entity_classes[*eid].push_back(classes.add_or_get(cls));
    });

    auto consume_rel = [&](auto& map, const auto& file, std::size_t lineno, std::string_view rel,
                           std::string_view cls) {
        auto rid = relations.find(rel);
        if (!rid) {
            warn(file, lineno, "relation", rel);
            return;
        }
        auto& slot = map[*rid];
        if (!slot) slot.emplace();
        slot->push_back(classes.add_or_get(cls));
    };
    load_two_col(domains, [&](const auto& file, std::size_t lineno, std::string_view rel,
                              std::string_view cls) {
        consume_rel(schema.rel_domain, file, lineno, rel, cls);
    });
    load_two_col(ranges, [&](const auto& file, std::size_t lineno, std::string_view rel,
                             std::string_view cls) {
        consume_rel(schema.rel_range, file, lineno, rel, cls);
    });

    schema.num_classes = classes.size();
    for (auto& cls : schema.entity_classes) sort_unique(cls);
    for (auto& dom : schema.rel_domain) {
        if (dom) sort_unique(*dom);
    }
    for (auto& rng : schema.rel_range) {
        if (rng) sort_unique(*rng);
    }
    return schema;
}

LoadedDataset load_dataset(const DatasetPaths& paths) {
    LoadedDataset ds;
    std::vector<Triple> train = load_triples(paths.train, ds.entities, ds.relations);
    std::vector<Triple> valid = load_triples(paths.valid, ds.entities, ds.relations);
    std::vector<Triple> test = load_triples(paths.test, ds.entities, ds.relations);
    Schema schema = load_schema(paths.entity_types, paths.domains, paths.ranges, ds.entities,
                                ds.relations, ds.classes, &ds.warnings);
    ds.kg = KnowledgeGraph::make(ds.entities.size(), ds.relations.size(), std::move(train),
                                 std::move(valid), std::move(test), std::move(schema));
    return ds;
}

KnowledgeGraph filter_dataset(const KnowledgeGraph& kg) {
    SemValidIndex index(kg);

    auto has_alternative = [&](RelationId r, Side side, EntityId truth) {
        const auto& cand = index.candidates(r, side);
        std::size_t n = cand.size();
        if (std::binary_search(cand.begin(), cand.end(), truth)) --n;
        return n >= 1;
    };

    std::vector<Triple> train = kg.train;
    std::vector<Triple> valid = kg.valid;
    std::vector<Triple> test = kg.test;

    bool changed = true;
    while (changed) {
        changed = false;

        auto train_keep = [&](const Triple& t) {
            if (!kg.schema.has_domain(t.rel) || !kg.schema.has_range(t.rel)) return false;
            return has_alternative(t.rel, Side::head, t.head) &&
                   has_alternative(t.rel, Side::tail, t.tail);
        };
        std::size_t before = train.size();
        std::erase_if(train, [&](const Triple& t) { return !train_keep(t); });
        changed |= train.size() != before;

        std::vector<char> entity_in_train(kg.num_entities, 0);
        std::vector<char> rel_in_train(kg.num_relations, 0);
        for (const Triple& t : train) {
            entity_in_train[t.head] = 1;
            entity_in_train[t.tail] = 1;
            rel_in_train[t.rel] = 1;
        }

        auto eval_keep = [&](const Triple& t) {
            if (!kg.schema.has_domain(t.rel) || !kg.schema.has_range(t.rel)) return false;
            if (index.candidates(t.rel, Side::head).size() <= 10) return false;
            if (index.candidates(t.rel, Side::tail).size() <= 10) return false;
            return rel_in_train[t.rel] && entity_in_train[t.head] && entity_in_train[t.tail];
        };
        for (std::vector<Triple>* split : {&valid, &test}) {
            before = split->size();
            std::erase_if(*split, [&](const Triple& t) { return !eval_keep(t); });
            changed |= split->size() != before;
        }
    }

    if (train.empty()) {
        throw ValidationError("dataset filter removed every train triple");
    }
    return KnowledgeGraph::make(kg.num_entities, kg.num_relations, std::move(train),
                                std::move(valid), std::move(test), kg.schema);
}

DatasetStats stats(const KnowledgeGraph& kg) {
    DatasetStats s;
    s.num_entities = kg.num_entities;
    s.num_relations = kg.num_relations;
    s.num_train = kg.train.size();
    s.num_valid = kg.valid.size();
    s.num_test = kg.test.size();
    return s;
}

std::string stats_json(const DatasetStats& s) {
    std::string out = "{";
    out += "\"entities\": " + std::to_string(s.num_entities);
    out += ", \"relations\": " + std::to_string(s.num_relations);
    out += ", \"train\": " + std::to_string(s.num_train);
    out += ", \"valid\": " + std::to_string(s.num_valid);
    out += ", \"test\": " + std::to_string(s.num_test);
    out += "}";
    return out;
}

void write_dataset(const KnowledgeGraph& kg, const Vocab& entities, const Vocab& relations,
                   const Vocab& classes, const DatasetPaths& out_paths) {
    auto write_triples = [&](const std::filesystem::path& path, const std::vector<Triple>& ts) {
        std::ofstream out(path);
        if (!out) throw RuntimeFailure("cannot write " + path.string());
        for (const Triple& t : ts) {
            out << entities.name(t.head) << '\t' << relations.name(t.rel) << '\t'
                << entities.name(t.tail) << '\n';
        }
    };
    write_triples(out_paths.train, kg.train);
    write_triples(out_paths.valid, kg.valid);
    write_triples(out_paths.test, kg.test);

    std::vector<char> entity_used(kg.num_entities, 0);
    std::vector<char> rel_used(kg.num_relations, 0);
    for (const std::vector<Triple>* split : {&kg.train, &kg.valid, &kg.test}) {
        for (const Triple& t : *split) {
            entity_used[t.head] = 1;
            entity_used[t.tail] = 1;
            rel_used[t.rel] = 1;
        }
    }

    // Schema rows are sets; emit them sorted by label so the byte layout is
    // independent of id assignment and survives a reload round-trip.
    auto write_sorted_pairs = [](const std::filesystem::path& path,
                                 std::vector<std::pair<std::string, std::string>> rows) {
        std::sort(rows.begin(), rows.end());
        std::ofstream out(path);
        if (!out) throw RuntimeFailure("cannot write " + path.string());
        for (const auto& [key, cls] : rows) {
            out << key << '\t' << cls << '\n';
        }
    };

    std::vector<std::pair<std::string, std::string>> rows;
    for (EntityId e = 0; e < kg.num_entities; ++e) {
        if (!entity_used[e]) continue;
        for (ClassId c : kg.schema.entity_classes[e]) {
            rows.emplace_back(entities.name(e), classes.name(c));
        }
    }
    write_sorted_pairs(out_paths.entity_types, std::move(rows));

    auto write_rel_constraints = [&](const std::filesystem::path& path, Side side) {
        std::vector<std::pair<std::string, std::string>> rel_rows;
        for (RelationId r = 0; r < kg.num_relations; ++r) {
            if (!rel_used[r]) continue;
            const auto& constraint = kg.schema.constraint(r, side);
            if (!constraint) continue;
            for (ClassId c : *constraint) {
                rel_rows.emplace_back(relations.name(r), classes.name(c));
            }
        }
        write_sorted_pairs(path, std::move(rel_rows));
    };
    write_rel_constraints(out_paths.domains, Side::head);
    write_rel_constraints(out_paths.ranges, Side::tail);
}

}  // namespace semkge
