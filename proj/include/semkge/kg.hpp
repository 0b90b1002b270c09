#pragma once
// Identifier spaces, triples, the schema, and semantic validity.
//
// A triple (h, r, t) is semantically valid when the head's type set
// intersects the relation's declared domain and the tail's type set
// intersects the declared range. An undeclared domain or range counts as
// satisfied; an entity with no types fails every declared constraint.
// Everything downstream (losses, sampler, metrics) consumes this predicate.

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "semkge/error.hpp"

namespace semkge {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using ClassId = std::uint32_t;

enum class Side { head, tail };

inline const char* side_name(Side s) { return s == Side::head ? "head" : "tail"; }

struct Triple {
    EntityId head;
    RelationId rel;
    EntityId tail;

    friend bool operator==(const Triple&, const Triple&) = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept {
        std::uint64_t x = (static_cast<std::uint64_t>(t.head) << 32) | t.tail;
        x ^= static_cast<std::uint64_t>(t.rel) * 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return static_cast<std::size_t>(x ^ (x >> 31));
    }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

// Entity type assertions plus per-relation domain/range class sets.
// Maps may be partial: a relation without a declared domain (or range) is
// represented with nullopt and is unconstrained on that side.
struct Schema {
    std::uint32_t num_classes = 0;
    std::vector<std::vector<ClassId>> entity_classes;                  // |E|, each sorted unique
    std::vector<std::optional<std::vector<ClassId>>> rel_domain;       // |R|, sorted unique
    std::vector<std::optional<std::vector<ClassId>>> rel_range;        // |R|, sorted unique

    std::uint32_t num_entities() const { return static_cast<std::uint32_t>(entity_classes.size()); }
    std::uint32_t num_relations() const { return static_cast<std::uint32_t>(rel_domain.size()); }

    bool has_domain(RelationId r) const { return rel_domain.at(r).has_value(); }
    bool has_range(RelationId r) const { return rel_range.at(r).has_value(); }

    const std::optional<std::vector<ClassId>>& constraint(RelationId r, Side side) const {
        return side == Side::head ? rel_domain.at(r) : rel_range.at(r);
    }

    // Checks id bounds and sortedness of all class sets.
    void validate() const;
};

struct KnowledgeGraph {
    std::uint32_t num_entities = 0;
    std::uint32_t num_relations = 0;
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
    Schema schema;
    TripleSet all_true;  // exact union of the three splits

    // Builds all_true and enforces the structural invariants: ids in bounds,
    // splits pairwise disjoint, schema shape matching the vocabularies.
    static KnowledgeGraph make(std::uint32_t num_entities, std::uint32_t num_relations,
                               std::vector<Triple> train, std::vector<Triple> valid,
                               std::vector<Triple> test, Schema schema);

    bool is_true(const Triple& t) const { return all_true.contains(t); }
    void check_bounds(const Triple& t) const;
};

// type(h) ∩ domain(r) ≠ ∅  ∧  type(t) ∩ range(r) ≠ ∅, with an undeclared
// side treated as satisfied. Throws ValidationError on out-of-bounds ids.
bool is_sem_valid(const Triple& t, const Schema& schema);

// One side of the predicate: does the entity satisfy the relation's
// constraint on that side?
bool satisfies_side(EntityId e, RelationId r, Side side, const Schema& schema);

// All entities that may legally serve on `side` of relation `r`. Returns
// every entity when that side's constraint is undeclared. Sorted ascending.
std::vector<EntityId> sem_valid_candidates(RelationId r, Side side, const KnowledgeGraph& kg);

// Precomputed sem_valid_candidates for every (relation, side), plus the
// complements. Immutable after construction; shared freely across threads.
class SemValidIndex {
public:
    explicit SemValidIndex(const KnowledgeGraph& kg);

    const std::vector<EntityId>& candidates(RelationId r, Side side) const {
        return side == Side::head ? head_candidates_.at(r) : tail_candidates_.at(r);
    }
    const std::vector<EntityId>& complement(RelationId r, Side side) const {
        return side == Side::head ? head_complement_.at(r) : tail_complement_.at(r);
    }
    bool contains(RelationId r, Side side, EntityId e) const;
    std::uint32_t num_entities() const { return num_entities_; }

private:
    std::uint32_t num_entities_;
    std::vector<std::vector<EntityId>> head_candidates_, tail_candidates_;
    std::vector<std::vector<EntityId>> head_complement_, tail_complement_;
};

}  // namespace semkge
