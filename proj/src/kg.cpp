#include "semkge/kg.hpp"

#include <algorithm>
#include <string>

namespace semkge {

namespace {

bool sorted_unique(const std::vector<ClassId>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i - 1] >= v[i]) return false;
    }
    return true;
}

bool intersects(const std::vector<ClassId>& a, const std::vector<ClassId>& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            return true;
        }
    }
    return false;
}

void check_class_set(const std::vector<ClassId>& v, std::uint32_t num_classes,
                     const char* what) {
    if (!sorted_unique(v)) {
        throw ValidationError(std::string(what) + ": class set not sorted/unique");
    }
    if (!v.empty() && v.back() >= num_classes) {
        throw ValidationError(std::string(what) + ": class id " + std::to_string(v.back()) +
                              " out of bounds (num_classes=" + std::to_string(num_classes) + ")");
    }
}

}  // namespace

void Schema::validate() const {
    if (rel_domain.size() != rel_range.size()) {
        throw ValidationError("schema: domain/range maps disagree on relation count");
    }
    for (const auto& cls : entity_classes) {
        check_class_set(cls, num_classes, "schema entity");
    }
    for (const auto& dom : rel_domain) {
        if (dom) check_class_set(*dom, num_classes, "schema domain");
    }
    for (const auto& rng : rel_range) {
        if (rng) check_class_set(*rng, num_classes, "schema range");
    }
}

void KnowledgeGraph::check_bounds(const Triple& t) const {
    if (t.head >= num_entities || t.tail >= num_entities) {
        throw ValidationError("triple entity id out of bounds: (" + std::to_string(t.head) +
                              "," + std::to_string(t.rel) + "," + std::to_string(t.tail) +
                              ") with |E|=" + std::to_string(num_entities));
    }
    if (t.rel >= num_relations) {
        throw ValidationError("triple relation id out of bounds: " + std::to_string(t.rel) +
                              " with |R|=" + std::to_string(num_relations));
    }
}

KnowledgeGraph KnowledgeGraph::make(std::uint32_t num_entities, std::uint32_t num_relations,
                                    std::vector<Triple> train, std::vector<Triple> valid,
                                    std::vector<Triple> test, Schema schema) {
    KnowledgeGraph kg;
    kg.num_entities = num_entities;
    kg.num_relations = num_relations;
    kg.train = std::move(train);
    kg.valid = std::move(valid);
    kg.test = std::move(test);
    kg.schema = std::move(schema);

    if (kg.schema.entity_classes.size() != num_entities) {
        throw ValidationError("schema covers " + std::to_string(kg.schema.entity_classes.size()) +
                              " entities, graph has " + std::to_string(num_entities));
    }
    if (kg.schema.rel_domain.size() != num_relations) {
        throw ValidationError("schema covers " + std::to_string(kg.schema.rel_domain.size()) +
                              " relations, graph has " + std::to_string(num_relations));
    }
    kg.schema.validate();

    kg.all_true.reserve(kg.train.size() + kg.valid.size() + kg.test.size());
    const std::vector<Triple>* splits[] = {&kg.train, &kg.valid, &kg.test};
    const char* names[] = {"train", "valid", "test"};
    for (int si = 0; si < 3; ++si) {
        TripleSet seen_here;
        for (const Triple& t : *splits[si]) {
            kg.check_bounds(t);
            // Duplicates within one split are tolerated; a triple in two
            // different splits breaks the disjointness invariant.
            if (kg.all_true.contains(t) && !seen_here.contains(t)) {
                throw ValidationError(std::string("splits not disjoint: triple (") +
                                      std::to_string(t.head) + "," + std::to_string(t.rel) + "," +
                                      std::to_string(t.tail) + ") reappears in " + names[si]);
            }
            seen_here.insert(t);
            kg.all_true.insert(t);
        }
    }
    return kg;
}

bool satisfies_side(EntityId e, RelationId r, Side side, const Schema& schema) {
    if (e >= schema.num_entities()) {
        throw ValidationError("entity id " + std::to_string(e) + " out of bounds");
    }
    if (r >= schema.num_relations()) {
        throw ValidationError("relation id " + std::to_string(r) + " out of bounds");
    }
    const auto& constraint = schema.constraint(r, side);
    if (!constraint) return true;  // undeclared: treated as satisfied
    return intersects(schema.entity_classes[e], *constraint);
}

bool is_sem_valid(const Triple& t, const Schema& schema) {
    return satisfies_side(t.head, t.rel, Side::head, schema) &&
           satisfies_side(t.tail, t.rel, Side::tail, schema);
}

std::vector<EntityId> sem_valid_candidates(RelationId r, Side side, const KnowledgeGraph& kg) {
    if (r >= kg.num_relations) {
        throw ValidationError("relation id " + std::to_string(r) + " out of bounds");
    }
    std::vector<EntityId> out;
    const auto& constraint = kg.schema.constraint(r, side);
    if (!constraint) {
        out.resize(kg.num_entities);
        for (EntityId e = 0; e < kg.num_entities; ++e) out[e] = e;
        return out;
    }
    for (EntityId e = 0; e < kg.num_entities; ++e) {
        if (intersects(kg.schema.entity_classes[e], *constraint)) out.push_back(e);
    }
    return out;
}

SemValidIndex::SemValidIndex(const KnowledgeGraph& kg) : num_entities_(kg.num_entities) {
    head_candidates_.resize(kg.num_relations);
    tail_candidates_.resize(kg.num_relations);
    head_complement_.resize(kg.num_relations);
    tail_complement_.resize(kg.num_relations);
    for (RelationId r = 0; r < kg.num_relations; ++r) {
        head_candidates_[r] = sem_valid_candidates(r, Side::head, kg);
        tail_candidates_[r] = sem_valid_candidates(r, Side::tail, kg);
        for (Side side : {Side::head, Side::tail}) {
            const auto& cand = side == Side::head ? head_candidates_[r] : tail_candidates_[r];
            auto& comp = side == Side::head ? head_complement_[r] : tail_complement_[r];
            comp.reserve(kg.num_entities - cand.size());
            std::size_t ci = 0;
            for (EntityId e = 0; e < kg.num_entities; ++e) {
                if (ci < cand.size() && cand[ci] == e) {
                    ++ci;
                } else {
                    comp.push_back(e);
                }
            }
        }
    }
}

bool SemValidIndex::contains(RelationId r, Side side, EntityId e) const {
    const auto& cand = candidates(r, side);
    return std::binary_search(cand.begin(), cand.end(), e);
}

}  // namespace semkge
