#pragma once
// Dataset loading and filtering.
//
// Triple files are 3-column TSV (head, relation, tail), schema files are
// 2-column TSV (entity/relation, class). Labels are opaque UTF-8 strings;
// dense ids are assigned in first-appearance order, which makes vocabulary
// construction deterministic and seed-independent.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semkge/kg.hpp"

namespace semkge {

// Insertion-ordered string-to-dense-id map.
class Vocab {
public:
    std::uint32_t add_or_get(std::string_view name);
    std::optional<std::uint32_t> find(std::string_view name) const;
    const std::string& name(std::uint32_t id) const { return names_.at(id); }
    std::uint32_t size() const { return static_cast<std::uint32_t>(names_.size()); }

private:
    std::unordered_map<std::string, std::uint32_t> ids_;
    std::vector<std::string> names_;
};

struct DatasetPaths {
    std::filesystem::path train;
    std::filesystem::path valid;
    std::filesystem::path test;
    std::filesystem::path entity_types;
    std::filesystem::path domains;
    std::filesystem::path ranges;
};

struct DatasetStats {
    std::uint64_t num_entities = 0;
    std::uint64_t num_relations = 0;
    std::uint64_t num_train = 0;
    std::uint64_t num_valid = 0;
    std::uint64_t num_test = 0;
};

// One triple per non-empty line, vocabularies extended in first-appearance
// order. Throws ParseError (with line number) on lines that do not have
// exactly three tab-separated fields.
std::vector<Triple> load_triples(const std::filesystem::path& path, Vocab& entities,
                                 Vocab& relations);

// entity_types: `entity<TAB>class`; domains/ranges: `relation<TAB>class`.
// Repeated keys accumulate into sets. Rows naming an entity or relation that
// never appeared in a triple file are skipped and recorded in `warnings`.
Schema load_schema(const std::filesystem::path& entity_types, const std::filesystem::path& domains,
                   const std::filesystem::path& ranges, const Vocab& entities,
                   const Vocab& relations, Vocab& classes, std::vector<std::string>* warnings);

struct LoadedDataset {
    KnowledgeGraph kg;
    Vocab entities;
    Vocab relations;
    Vocab classes;
    std::vector<std::string> warnings;
};

LoadedDataset load_dataset(const DatasetPaths& paths);

// Removes triples until all of the following hold, iterated to a fixed point:
//   1. every train relation has a declared domain and range;
//   2. every train triple has an alternative semantically valid head != h
//      and an alternative semantically valid tail != t;
//   3. every valid/test relation has a declared domain and range with more
//      than 10 semantically valid candidates on each side;
//   4. valid/test triples whose relation or entities vanished from the
//      filtered train set are dropped.
// The vocabulary is left intact (ids stable); only triple lists shrink.
// Throws ValidationError if no train triple survives.
KnowledgeGraph filter_dataset(const KnowledgeGraph& kg);

DatasetStats stats(const KnowledgeGraph& kg);
std::string stats_json(const DatasetStats& s);

// Writes the splits back out as label TSVs, plus schema files restricted to
// entities/relations that still appear in some split. Row order follows the
// in-memory order, so filtering an already-filtered dataset reproduces the
// input byte for byte.
void write_dataset(const KnowledgeGraph& kg, const Vocab& entities, const Vocab& relations,
                   const Vocab& classes, const DatasetPaths& out_paths);

}  // namespace semkge
