#pragma once
// Run configuration: one INI-style file with [dataset], [train], [eval],
// [output], and optional [grid] sections. Parsing is strict (unknown
// sections or keys are errors) and render() emits the effective config so
// a run can always be reproduced from the copy written next to its outputs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "semkge/eval.hpp"
#include "semkge/ingest.hpp"
#include "semkge/trainer.hpp"

namespace semkge {

struct EvalSettings {
    RankMode mode = RankMode::filtered;
    TieBreak ties = TieBreak::optimistic;
    std::vector<std::size_t> ks = {1, 3, 10};
    std::filesystem::path bucket_spec;  // empty = no bucket report
    unsigned threads = 1;
};

// One value list per swept hyperparameter; empty axes fall back to the
// [train] value. gamma sweeps the PHL margin, epsilon the semantic-variant
// parameter.
struct GridSpec {
    std::vector<std::uint32_t> batch_size;
    std::vector<std::uint32_t> dim;
    std::vector<double> lr;
    std::vector<double> reg_weight;
    std::vector<double> gamma;
    std::vector<double> epsilon;

    bool empty() const;
    // Cartesian product in axis order (batch_size, dim, lr, reg_weight,
    // gamma, epsilon), last axis fastest.
    std::vector<TrainConfig> expand(const TrainConfig& base) const;
};

struct RunConfig {
    DatasetPaths dataset;
    TrainConfig train;
    EvalSettings eval;
    std::filesystem::path output_dir = ".";
    GridSpec grid;

    static RunConfig parse(std::string_view text, const std::string& origin);
    static RunConfig load(const std::filesystem::path& path);

    // Effective config, defaults applied; parse(render()) reproduces the
    // config exactly (doubles print shortest-round-trip).
    std::string render() const;

    void validate() const;  // field ranges + dataset/bucket files exist
};

// Canonical one-line form of the hyperparameters, and a stable hash of it
// for grid-result rows.
std::string train_config_signature(const TrainConfig& cfg);
std::string train_config_hash(const TrainConfig& cfg);

}  // namespace semkge
