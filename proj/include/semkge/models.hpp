#pragma once
// Embedding models: TransE, TransH, DistMult, ComplEx, SimplE.
//
// Every model exposes one orientation: higher score = more plausible.
// Translational models therefore return the negated L2 distance. Gradients
// are analytic (no autodiff); the test suite gates them against central
// finite differences.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semkge/kg.hpp"

namespace semkge {

enum class ModelKind { TransE, TransH, DistMult, ComplEx, SimplE };

const char* model_name(ModelKind kind);
ModelKind model_from_name(const std::string& name);  // throws ValidationError

// Dense row-major table of doubles.
struct Table {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Table() = default;
    Table(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

// Role of each parameter table, in checkpoint declaration order.
//   TransE:   {entity, relation}
//   TransH:   {entity, rel_translation, rel_normal}   (normals unit L2)
//   DistMult: {entity, relation}
//   ComplEx:  {entity_re, entity_im, rel_re, rel_im}
//   SimplE:   {entity_head, entity_tail, rel_forward, rel_inverse}
struct ModelParams {
    ModelKind kind = ModelKind::TransE;
    std::uint32_t num_entities = 0;
    std::uint32_t num_relations = 0;
    std::uint32_t dim = 0;
    std::vector<Table> tables;

    std::size_t table_count() const { return tables.size(); }
    bool all_finite() const;
};

// Number and shapes of tables for a model kind.
std::size_t table_count_for(ModelKind kind);
// true if table `i` is entity-indexed (rows = |E|), false if relation-indexed.
bool table_is_entity_indexed(ModelKind kind, std::size_t i);

// Xavier-uniform init in ±sqrt(6/(2d)), bit-deterministic in (kind, sizes,
// d, seed). TransH normals are renormalized to unit length.
ModelParams init_params(ModelKind kind, std::uint32_t num_entities, std::uint32_t num_relations,
                        std::uint32_t dim, std::uint64_t seed);

double score_one(const ModelParams& params, const Triple& t);
std::vector<double> score(const ModelParams& params, std::span<const Triple> batch);

// Scores (fixed, r, e) for every entity e when side == tail, or (e, r, fixed)
// when side == head. Row e equals score_one on the corresponding triple.
std::vector<double> score_all(const ModelParams& params, RelationId r, EntityId fixed, Side side);

// Gradient accumulator shaped like the parameter tables. Rows never touched
// stay zero; `touched[i]` lists the rows of table i that were written.
class GradTables {
public:
    explicit GradTables(const ModelParams& params);

    Table& table(std::size_t i) { return tables_[i]; }
    const Table& table(std::size_t i) const { return tables_[i]; }
    const std::vector<std::uint32_t>& touched(std::size_t i) const { return touched_[i]; }
    std::size_t table_count() const { return tables_.size(); }

    // Marks a row dirty and returns it for accumulation.
    std::span<double> touch_row(std::size_t table, std::uint32_t row);
    void clear();
    // Sorts touched row lists; call before consuming for a deterministic walk.
    void sort_touched();

private:
    std::vector<Table> tables_;
    std::vector<std::vector<std::uint32_t>> touched_;
    std::vector<std::vector<char>> dirty_;
};

// Adds the gradient of upstream * score(t) to `grads`.
void accumulate_grad(const ModelParams& params, const Triple& t, double upstream,
                     GradTables& grads);

// Gradient of sum_i upstream[i] * score(batch[i]) w.r.t. every table.
void accumulate_grad(const ModelParams& params, std::span<const Triple> batch,
                     std::span<const double> upstream, GradTables& grads);

GradTables grad(const ModelParams& params, std::span<const Triple> batch,
                std::span<const double> upstream);

// Renormalizes the listed TransH normal-vector rows to unit L2 length.
// No-op for other model kinds.
void renormalize_constraints(ModelParams& params, std::span<const std::uint32_t> relation_rows);

}  // namespace semkge
