#pragma once
// Negative sampling: plain uniform corruption and the paired protocol that
// couples every positive with one semantically valid and one semantically
// invalid negative.
//
// All draws are pure functions of (master seed, epoch, triple index), so two
// models trained with the same master seed consume exactly the same negative
// stream regardless of batch size or thread count.

#include <atomic>
#include <cstdint>
#include <vector>

#include "semkge/kg.hpp"
#include "semkge/rng.hpp"

namespace semkge {

struct NegativePair {
    Triple valid_neg;    // passes is_sem_valid
    Triple invalid_neg;  // fails is_sem_valid
    Side valid_side;     // slot corrupted to build valid_neg
    Side invalid_side;   // slot corrupted to build invalid_neg
};

class NegativeSampler {
public:
    // Keeps references: kg and index must outlive the sampler.
    NegativeSampler(const KnowledgeGraph& kg, const SemValidIndex& index,
                    std::uint64_t master_seed);

    // Replaces the `side` slot of t with an entity drawn uniformly from all
    // entities except the ground truth. Redraws on hits in all_true, up to
    // 100 tries; after that the (possibly positive) draw is accepted and
    // counted in escape_hatch_count().
    Triple corrupt_uniform(const Triple& t, Side side, SplitMix64& rng) const;

    // The paired draw. The corruption side for each negative is chosen
    // uniformly among the sides that can actually produce one; throws
    // RuntimeFailure if no side can.
    NegativePair sample_pair(const Triple& t, SplitMix64& rng) const;

    // Pair for train triple `index` at `epoch`; pure in (master_seed, epoch,
    // index) and independent of call order.
    NegativePair pair_for(std::uint64_t epoch, std::uint64_t index) const;

    // All pairs for one epoch, in train order.
    std::vector<NegativePair> epoch_negatives(std::uint64_t epoch) const;

    // Number of corrupt_uniform draws that exhausted their retry budget and
    // were emitted unfiltered.
    std::uint64_t escape_hatch_count() const { return escape_hatch_.load(); }

private:
    EntityId draw_from(const std::vector<EntityId>& pool, const Triple& positive, Side side,
                       SplitMix64& rng, bool& found) const;

    const KnowledgeGraph& kg_;
    const SemValidIndex& index_;
    std::uint64_t master_seed_;
    mutable std::atomic<std::uint64_t> escape_hatch_{0};
};

}  // namespace semkge
