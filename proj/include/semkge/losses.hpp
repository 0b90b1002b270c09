#pragma once
// Loss family: pairwise hinge (PHL), 1-N binary cross-entropy (BCEL), and
// pointwise logistic (PLL), each in a vanilla and a semantic flavor.
//
// The semantic variants treat semantically valid negatives more gently than
// invalid ones:
//   PHL-S   shrinks the margin to gamma * epsilon for valid negatives.
//   BCEL-S  labels valid negatives epsilon instead of 0.
//   PLL-S   flips a valid negative's label from -1 to +1 with probability
//           epsilon, drawn fresh per (epoch, batch).
// The primed variants swap the last two constructions:
//   BCEL-S' keeps binary labels but flips a valid negative's label to 1 with
//           probability epsilon.
//   PLL-S'  gives valid negatives the soft label epsilon instead of -1
//           (epsilon may be negative).
// PHL has no primed variant.
//
// Every operation returns the loss together with its derivative w.r.t. the
// raw input scores ("upstream weights"), which the trainer feeds into the
// models' analytic gradients.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semkge/kg.hpp"

namespace semkge {

enum class LossFamily { PHL, BCEL, PLL };
enum class LossVariant { vanilla, S, SPrime };

const char* loss_family_name(LossFamily f);
const char* loss_variant_name(LossVariant v);
LossFamily loss_family_from_name(const std::string& name);    // throws ValidationError
LossVariant loss_variant_from_name(const std::string& name);  // throws ValidationError

struct LossSpec {
    LossFamily family = LossFamily::PHL;
    LossVariant variant = LossVariant::vanilla;
    double margin = 1.0;    // PHL only
    double epsilon = 0.0;   // S / S' only
    std::uint64_t seed = 0; // stochastic relabeling (PLL-S, BCEL-S')

    // Enforces the per-variant parameter ranges:
    //   PHL: margin > 0; S needs 0 < epsilon <= 1; no S' variant.
    //   BCEL: S needs 0 <= epsilon < 1; S' needs 0 <= epsilon <= 1.
    //   PLL: S needs 0 <= epsilon <= 1; S' needs -1 <= epsilon <= 1.
    void validate() const;

    std::string display_name() const;  // e.g. "phl-S", "pll"
};

// Identifies the (epoch, batch) a loss evaluation belongs to, so stochastic
// relabeling draws are reproducible and independent of evaluation order.
struct BatchKey {
    std::uint64_t epoch = 0;
    std::uint64_t batch = 0;
};

// flags[i] = is_sem_valid(batch[i]). Losses consume these flags instead of
// touching the schema themselves.
std::vector<char> classify_negatives(std::span<const Triple> batch, const Schema& schema);

struct PairwiseLoss {
    double loss = 0.0;
    std::vector<double> pos_weights;  // dL/d f(pos_i)
    std::vector<double> neg_weights;  // dL/d f(neg_j)
};

// Hinge loss over aligned positives and negatives. Negatives for positive i
// occupy neg[i*k, (i+1)*k) with k = neg.size() / pos.size(). neg_valid may
// be empty for the vanilla variant; otherwise it must align with neg.
PairwiseLoss phl(const LossSpec& spec, std::span<const double> pos, std::span<const double> neg,
                 std::span<const char> neg_valid);

struct PointwiseLoss {
    double loss = 0.0;
    std::vector<double> weights;  // dL/d raw score
};

// Binary cross-entropy over one 1-N row: scores and targets have one entry
// per candidate entity. Targets must lie in [0, 1]; sigmoid outputs are
// clamped to [1e-7, 1 - 1e-7] so the log terms stay finite (weights are 0
// where the clamp is pinned).
PointwiseLoss bcel(const LossSpec& spec, std::span<const double> scores,
                   std::span<const double> targets);

// Builds the target row for the query (fixed, r, *) or (*, r, fixed).
// `positives` lists the entities whose completion is a known true triple;
// every one of them is labeled 1. For the semantic variants, candidates that
// complete to a semantically valid triple receive epsilon (S) or flip to 1
// with probability epsilon (S', drawn per completed triple and BatchKey).
std::vector<double> bcel_targets(const LossSpec& spec, RelationId r, EntityId fixed,
                                 Side predicted, const SemValidIndex& index,
                                 std::span<const EntityId> positives, const BatchKey& key);

// Logistic loss over labeled triples. Labels must be exactly -1 or +1.
// valid_negative aligns with scores and marks semantically valid triples;
// it may be empty for the vanilla variant. Under S, each entry with label
// -1 and a set flag flips to +1 with probability epsilon (drawn per index
// and BatchKey); under S', such entries get the soft label epsilon.
PointwiseLoss pll(const LossSpec& spec, std::span<const double> scores,
                  std::span<const double> labels, std::span<const char> valid_negative,
                  const BatchKey& key);

}  // namespace semkge
