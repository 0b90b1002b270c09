#include "semkge/sampler.hpp"

#include <string>

namespace semkge {

namespace {

constexpr int kMaxRetries = 100;

Side other(Side s) { return s == Side::head ? Side::tail : Side::head; }

Triple with_slot(const Triple& t, Side side, EntityId e) {
    Triple out = t;
    (side == Side::head ? out.head : out.tail) = e;
    return out;
}

std::string describe(const Triple& t) {
    return "(" + std::to_string(t.head) + ", " + std::to_string(t.rel) + ", " +
           std::to_string(t.tail) + ")";
}

}  // namespace

NegativeSampler::NegativeSampler(const KnowledgeGraph& kg, const SemValidIndex& index,
                                 std::uint64_t master_seed)
    : kg_(kg), index_(index), master_seed_(master_seed) {
    if (kg.num_entities < 2) {
        throw ValidationError("negative sampling needs at least two entities");
    }
}

Triple NegativeSampler::corrupt_uniform(const Triple& t, Side side, SplitMix64& rng) const {
    kg_.check_bounds(t);
    EntityId ground = side == Side::head ? t.head : t.tail;
    Triple candidate = t;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        // Uniform over all entities except the ground truth.
        EntityId e = static_cast<EntityId>(rng.next_below(kg_.num_entities - 1));
        if (e >= ground) ++e;
        candidate = with_slot(t, side, e);
        if (!kg_.is_true(candidate)) return candidate;
    }
    escape_hatch_.fetch_add(1, std::memory_order_relaxed);
    return candidate;
}

EntityId NegativeSampler::draw_from(const std::vector<EntityId>& pool, const Triple& positive,
                                    Side side, SplitMix64& rng, bool& found) const {
    EntityId ground = side == Side::head ? positive.head : positive.tail;
    for (int attempt = 0; attempt < kMaxRetries && !pool.empty(); ++attempt) {
        EntityId e = pool[rng.next_below(pool.size())];
        if (e == ground) continue;
        if (!kg_.is_true(with_slot(positive, side, e))) {
            found = true;
            return e;
        }
    }
    // The pool is dominated by exclusions (or empty); enumerate exactly.
    std::vector<EntityId> admissible;
    for (EntityId e : pool) {
        if (e != ground && !kg_.is_true(with_slot(positive, side, e))) admissible.push_back(e);
    }
    if (admissible.empty()) {
        found = false;
        return 0;
    }
    found = true;
    return admissible[rng.next_below(admissible.size())];
}

NegativePair NegativeSampler::sample_pair(const Triple& t, SplitMix64& rng) const {
    kg_.check_bounds(t);
    NegativePair pair;

    // Valid negative: the kept slot must itself satisfy its constraint, or
    // no corruption of the other slot can produce a fully valid triple.
    auto valid_possible = [&](Side s) {
        EntityId fixed = s == Side::head ? t.tail : t.head;
        return index_.contains(t.rel, other(s), fixed) && !index_.candidates(t.rel, s).empty();
    };
    bool got_valid = false;
    Side first = rng.next_bool() ? Side::head : Side::tail;
    for (Side s : {first, other(first)}) {
        if (!valid_possible(s)) continue;
        bool found = false;
        EntityId e = draw_from(index_.candidates(t.rel, s), t, s, rng, found);
        if (found) {
            pair.valid_neg = with_slot(t, s, e);
            pair.valid_side = s;
            got_valid = true;
            break;
        }
    }
    if (!got_valid) {
        throw RuntimeFailure("no semantically valid negative exists for train triple " +
                             describe(t));
    }

    // Invalid negative: any entity outside the corrupted side's candidate
    // set breaks that constraint, so the fixed slot does not matter.
    bool got_invalid = false;
    first = rng.next_bool() ? Side::head : Side::tail;
    for (Side s : {first, other(first)}) {
        const std::vector<EntityId>& pool = index_.complement(t.rel, s);
        if (pool.empty()) continue;
        bool found = false;
        EntityId e = draw_from(pool, t, s, rng, found);
        if (found) {
            pair.invalid_neg = with_slot(t, s, e);
            pair.invalid_side = s;
            got_invalid = true;
            break;
        }
    }
    if (!got_invalid) {
        throw RuntimeFailure("no semantically invalid negative exists for train triple " +
                             describe(t));
    }
    return pair;
}

NegativePair NegativeSampler::pair_for(std::uint64_t epoch, std::uint64_t index) const {
    if (index >= kg_.train.size()) {
        throw ValidationError("negative pair requested for an out-of-range train index");
    }
    SplitMix64 rng = seeded_rng({master_seed_, rng_stream::negatives, epoch, index});
    return sample_pair(kg_.train[index], rng);
}

std::vector<NegativePair> NegativeSampler::epoch_negatives(std::uint64_t epoch) const {
    std::vector<NegativePair> out;
    out.reserve(kg_.train.size());
    for (std::uint64_t i = 0; i < kg_.train.size(); ++i) out.push_back(pair_for(epoch, i));
    return out;
}

}  // namespace semkge
