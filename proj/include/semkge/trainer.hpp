#pragma once
// Training loop: paired-negative batches for the pairwise/pointwise losses,
// 1-N rows in both prediction directions for BCEL, sparse Adam updates,
// best-validation-MRR checkpointing, and grid search.
//
// Everything is deterministic in (config, seed): shuffles, negatives, and
// stochastic relabeling all derive from counter-based streams, and metric
// aggregation uses a fixed order. Two runs with the same config produce
// bit-identical checkpoints and logs.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semkge/kg.hpp"
#include "semkge/losses.hpp"
#include "semkge/models.hpp"
#include "semkge/sampler.hpp"

namespace semkge {

enum class Regularizer { none, L1, L2 };

const char* regularizer_name(Regularizer r);
Regularizer regularizer_from_name(const std::string& name);  // throws ValidationError

struct TrainConfig {
    ModelKind model = ModelKind::TransE;
    LossSpec loss;
    std::uint32_t batch_size = 128;
    std::uint32_t dim = 50;
    double lr = 1e-3;
    Regularizer reg = Regularizer::none;
    double reg_weight = 0.0;
    std::uint32_t max_epochs = 400;
    std::uint64_t seed = 0;
    std::uint32_t eval_every = 10;

    void validate() const;
};

// One line of the training log; validation fields are absent when the epoch
// had no evaluation (or the valid split is empty).
struct EpochLog {
    std::uint64_t epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_mrr;
    std::optional<double> val_hits10;
    std::optional<double> val_sem10;

    std::string to_json() const;
};

// JSON object describing cfg; embedded in checkpoint trailers and written
// as the first line of training logs.
std::string train_config_json(const TrainConfig& cfg);

struct Checkpoint {
    TrainConfig config;
    std::uint64_t epoch = 0;  // epoch the parameters were captured at
    ModelParams params;
    std::vector<EpochLog> history;
};

// Little-endian binary: magic "SEMKGE01", model kind, table shapes, raw
// float64 tables in declared order, then a JSON trailer carrying the config
// echo, capture epoch, and metric history. Round-trips bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);  // throws on corruption

struct TrainOptions {
    // Called for every sampled negative pair (pairwise losses only), in
    // (epoch, train-index) processing order. Used to audit the negative
    // stream contract across models.
    std::function<void(std::uint64_t epoch, std::uint64_t index, const NegativePair&)>
        observe_negatives;
    std::ostream* log = nullptr;  // JSONL sink, one EpochLog line per eval point
    unsigned eval_threads = 1;
};

// Runs up to cfg.max_epochs and returns the checkpoint with the best
// validation MRR (the final epoch when the valid split is empty). Aborts
// with RuntimeFailure naming the epoch and batch if the loss diverges.
Checkpoint train(const TrainConfig& cfg, const KnowledgeGraph& kg, const TrainOptions& opts = {});

struct GridResult {
    TrainConfig config;
    std::size_t grid_index = 0;
    double val_mrr = 0.0;
    double val_sem10 = 0.0;
    std::string error;  // nonempty if this cell failed
};

// Trains every config and ranks by validation MRR descending; ties and
// failed cells keep grid order. Failures are recorded, never rethrown.
std::vector<GridResult> grid_search(std::span<const TrainConfig> grid, const KnowledgeGraph& kg,
                                    const TrainOptions& opts = {});

}  // namespace semkge
