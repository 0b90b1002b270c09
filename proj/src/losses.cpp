#include "semkge/losses.hpp"

#include <algorithm>
#include <cmath>

#include "semkge/numeric.hpp"
#include "semkge/rng.hpp"

namespace semkge {

namespace {
constexpr double kSigmoidLo = 1e-7;
constexpr double kSigmoidHi = 1.0 - 1e-7;
}  // namespace

const char* loss_family_name(LossFamily f) {
    switch (f) {
        case LossFamily::PHL: return "phl";
        case LossFamily::BCEL: return "bcel";
        case LossFamily::PLL: return "pll";
    }
    return "?";
}

const char* loss_variant_name(LossVariant v) {
    switch (v) {
        case LossVariant::vanilla: return "vanilla";
        case LossVariant::S: return "S";
        case LossVariant::SPrime: return "S'";
    }
    return "?";
}

LossFamily loss_family_from_name(const std::string& name) {
    if (name == "phl") return LossFamily::PHL;
    if (name == "bcel") return LossFamily::BCEL;
    if (name == "pll") return LossFamily::PLL;
    throw ValidationError("unknown loss family '" + name + "' (expected phl|bcel|pll)");
}

LossVariant loss_variant_from_name(const std::string& name) {
    if (name == "vanilla") return LossVariant::vanilla;
    if (name == "S" || name == "s") return LossVariant::S;
    if (name == "S'" || name == "s'" || name == "sprime" || name == "s-prime") {
        return LossVariant::SPrime;
    }
    throw ValidationError("unknown loss variant '" + name + "' (expected vanilla|S|S')");
}

void LossSpec::validate() const {
    if (family == LossFamily::PHL) {
        if (!(margin > 0.0) || !std::isfinite(margin)) {
            throw ValidationError("phl margin must be a positive finite number");
        }
        if (variant == LossVariant::S && !(epsilon > 0.0 && epsilon <= 1.0)) {
            throw ValidationError("phl-S requires 0 < epsilon <= 1");
        }
        if (variant == LossVariant::SPrime) {
            throw ValidationError("phl has no S' variant");
        }
    } else if (family == LossFamily::BCEL) {
        if (variant == LossVariant::S && !(epsilon >= 0.0 && epsilon < 1.0)) {
            throw ValidationError("bcel-S requires 0 <= epsilon < 1");
        }
        if (variant == LossVariant::SPrime && !(epsilon >= 0.0 && epsilon <= 1.0)) {
            throw ValidationError("bcel-S' requires a flip probability 0 <= epsilon <= 1");
        }
    } else {
        if (variant == LossVariant::S && !(epsilon >= 0.0 && epsilon <= 1.0)) {
            throw ValidationError("pll-S requires a flip probability 0 <= epsilon <= 1");
        }
        if (variant == LossVariant::SPrime && !(epsilon >= -1.0 && epsilon <= 1.0)) {
            throw ValidationError("pll-S' requires a soft label -1 <= epsilon <= 1");
        }
    }
}

std::string LossSpec::display_name() const {
    std::string out = loss_family_name(family);
    if (variant != LossVariant::vanilla) {
        out += "-";
        out += loss_variant_name(variant);
    }
    return out;
}

std::vector<char> classify_negatives(std::span<const Triple> batch, const Schema& schema) {
    std::vector<char> flags(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        flags[i] = is_sem_valid(batch[i], schema) ? 1 : 0;
    }
    return flags;
}

PairwiseLoss phl(const LossSpec& spec, std::span<const double> pos, std::span<const double> neg,
                 std::span<const char> neg_valid) {
    spec.validate();
    if (spec.family != LossFamily::PHL) throw ValidationError("phl called with a non-phl spec");
    if (pos.empty()) throw ValidationError("phl needs at least one positive score");
    if (neg.size() % pos.size() != 0) {
        throw ValidationError("phl negatives must align k-per-positive with the positives");
    }
    bool semantic = spec.variant == LossVariant::S;
    if (semantic && neg_valid.size() != neg.size()) {
        throw ValidationError("phl-S needs one validity flag per negative");
    }
    if (!neg_valid.empty() && neg_valid.size() != neg.size()) {
        throw ValidationError("phl validity flags misaligned with negatives");
    }

    std::size_t k = neg.size() / pos.size();
    PairwiseLoss out;
    out.pos_weights.assign(pos.size(), 0.0);
    out.neg_weights.assign(neg.size(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        for (std::size_t j = i * k; j < (i + 1) * k; ++j) {
            // Vanilla is the label == 1 case of the same expression, so the
            // two variants follow identical arithmetic when epsilon == 1.
            double label = semantic && neg_valid[j] ? spec.epsilon : 1.0;
            double term = spec.margin * label + neg[j] - pos[i];
            // max keeps a NaN from an overflowed score in the sum, so
            // divergence surfaces instead of passing as an inactive term.
            loss += std::max(term, 0.0);
            if (term > 0.0) {
                out.neg_weights[j] += 1.0;
                out.pos_weights[i] -= 1.0;
            }
        }
    }
    out.loss = loss;
    return out;
}

PointwiseLoss bcel(const LossSpec& spec, std::span<const double> scores,
                   std::span<const double> targets) {
    spec.validate();
    if (spec.family != LossFamily::BCEL) throw ValidationError("bcel called with a non-bcel spec");
    if (scores.empty()) throw ValidationError("bcel needs a non-empty score row");
    if (scores.size() != targets.size()) {
        throw ValidationError("bcel scores and targets misaligned");
    }
    for (double t : targets) {
        if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("bcel target outside [0, 1]");
    }
    std::size_t n = scores.size();
    double inv_n = 1.0 / static_cast<double>(n);
    PointwiseLoss out;
    out.weights.assign(n, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double p = sigmoid(scores[i]);
        bool pinned = p < kSigmoidLo || p > kSigmoidHi;
        double pc = std::clamp(p, kSigmoidLo, kSigmoidHi);
        acc += targets[i] * std::log(pc) + (1.0 - targets[i]) * std::log(1.0 - pc);
        // Where the clamp pins the probability the loss is locally flat.
        out.weights[i] = pinned ? 0.0 : (p - targets[i]) * inv_n;
    }
    out.loss = -acc * inv_n;
    return out;
}

std::vector<double> bcel_targets(const LossSpec& spec, RelationId r, EntityId fixed,
                                 Side predicted, const SemValidIndex& index,
                                 std::span<const EntityId> positives, const BatchKey& key) {
    spec.validate();
    if (spec.family != LossFamily::BCEL) {
        throw ValidationError("bcel_targets called with a non-bcel spec");
    }
    std::vector<double> targets(index.num_entities(), 0.0);
    if (spec.variant != LossVariant::vanilla) {
        // A completion is only semantically valid if the fixed entity also
        // satisfies its own side of the constraint.
        Side fixed_side = predicted == Side::head ? Side::tail : Side::head;
        if (index.contains(r, fixed_side, fixed)) {
            for (EntityId e : index.candidates(r, predicted)) {
                if (spec.variant == LossVariant::S) {
                    targets[e] = spec.epsilon;
                } else {
                    Triple full = predicted == Side::head ? Triple{e, r, fixed}
                                                          : Triple{fixed, r, e};
                    double draw = seeded_rng({spec.seed, rng_stream::bcel_flip, key.epoch,
                                              key.batch, full.head, full.rel, full.tail})
                                      .next_unit();
                    if (draw < spec.epsilon) targets[e] = 1.0;
                }
            }
        }
    }
    for (EntityId e : positives) {
        if (e >= targets.size()) throw ValidationError("bcel positive entity out of bounds");
        targets[e] = 1.0;
    }
    return targets;
}

PointwiseLoss pll(const LossSpec& spec, std::span<const double> scores,
                  std::span<const double> labels, std::span<const char> valid_negative,
                  const BatchKey& key) {
    spec.validate();
    if (spec.family != LossFamily::PLL) throw ValidationError("pll called with a non-pll spec");
    if (scores.size() != labels.size()) throw ValidationError("pll scores and labels misaligned");
    bool semantic = spec.variant != LossVariant::vanilla;
    if (semantic && valid_negative.size() != scores.size()) {
        throw ValidationError("pll semantic variants need one validity flag per triple");
    }
    if (!valid_negative.empty() && valid_negative.size() != scores.size()) {
        throw ValidationError("pll validity flags misaligned with scores");
    }
    for (double l : labels) {
        if (l != 1.0 && l != -1.0) throw ValidationError("pll labels must be -1 or +1");
    }

    PointwiseLoss out;
    out.weights.assign(scores.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        double label = labels[i];
        if (label == -1.0 && semantic && valid_negative[i]) {
            if (spec.variant == LossVariant::S) {
                double draw = seeded_rng({spec.seed, rng_stream::pll_flip, key.epoch, key.batch,
                                          static_cast<std::uint64_t>(i)})
                                  .next_unit();
                if (draw < spec.epsilon) label = 1.0;
            } else {
                label = spec.epsilon;
            }
        }
        acc += softplus(-label * scores[i]);
        out.weights[i] = -label * sigmoid(-label * scores[i]);
    }
    out.loss = acc;
    return out;
}

}  // namespace semkge
