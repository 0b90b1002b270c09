#include "semkge/models.hpp"

#include <algorithm>
#include <cmath>

#include "semkge/rng.hpp"

namespace semkge {

const char* model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::TransE: return "transe";
        case ModelKind::TransH: return "transh";
        case ModelKind::DistMult: return "distmult";
        case ModelKind::ComplEx: return "complex";
        case ModelKind::SimplE: return "simple";
    }
    return "?";
}

ModelKind model_from_name(const std::string& name) {
    if (name == "transe") return ModelKind::TransE;
    if (name == "transh") return ModelKind::TransH;
    if (name == "distmult") return ModelKind::DistMult;
    if (name == "complex") return ModelKind::ComplEx;
    if (name == "simple") return ModelKind::SimplE;
    throw ValidationError("unknown model '" + name +
                          "' (expected transe|transh|distmult|complex|simple)");
}

std::size_t table_count_for(ModelKind kind) {
    switch (kind) {
        case ModelKind::TransE:
        case ModelKind::DistMult: return 2;
        case ModelKind::TransH: return 3;
        case ModelKind::ComplEx:
        case ModelKind::SimplE: return 4;
    }
    return 0;
}

bool table_is_entity_indexed(ModelKind kind, std::size_t i) {
    switch (kind) {
        case ModelKind::TransE:
        case ModelKind::TransH:
        case ModelKind::DistMult: return i == 0;
        case ModelKind::ComplEx:
        case ModelKind::SimplE: return i < 2;
    }
    return false;
}

bool ModelParams::all_finite() const {
    for (const Table& t : tables) {
        for (double v : t.data) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

namespace {

void check_triple(const ModelParams& p, const Triple& t) {
    if (t.head >= p.num_entities || t.tail >= p.num_entities || t.rel >= p.num_relations) {
        throw ValidationError("triple out of bounds for model tables");
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// ---- TransE: -|| e_h + e_r - e_t ||_2 ----

double transe_score(const ModelParams& p, EntityId h, RelationId r, EntityId t) {
    auto eh = p.tables[0].row(h), er = p.tables[1].row(r), et = p.tables[0].row(t);
    double s = 0.0;
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        double d = eh[k] + er[k] - et[k];
        s += d * d;
    }
    return -std::sqrt(s);
}

void transe_grad(const ModelParams& p, const Triple& tr, double up, GradTables& g) {
    auto eh = p.tables[0].row(tr.head), er = p.tables[1].row(tr.rel), et = p.tables[0].row(tr.tail);
    double nrm = 0.0;
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        double d = eh[k] + er[k] - et[k];
        nrm += d * d;
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return;  // subgradient 0 at the cusp
    auto gh = g.touch_row(0, tr.head);
    auto gr = g.touch_row(1, tr.rel);
    auto gt = g.touch_row(0, tr.tail);
    double scale = -up / nrm;
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        double d = eh[k] + er[k] - et[k];
        gh[k] += scale * d;
        gr[k] += scale * d;
        gt[k] -= scale * d;
    }
}

// ---- TransH: -|| proj(e_h) + d_r - proj(e_t) ||_2,
//      proj(x) = x - (w_r . x) w_r ----

double transh_score(const ModelParams& p, EntityId h, RelationId r, EntityId t) {
    auto eh = p.tables[0].row(h), dr = p.tables[1].row(r), wr = p.tables[2].row(r);
    auto et = p.tables[0].row(t);
    double wh = dot(wr, eh);
    double wt = dot(wr, et);
    double s = 0.0;
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        double d = (eh[k] - wh * wr[k]) + dr[k] - (et[k] - wt * wr[k]);
        s += d * d;
    }
    return -std::sqrt(s);
}

void transh_grad(const ModelParams& p, const Triple& tr, double up, GradTables& g) {
    auto eh = p.tables[0].row(tr.head), dr = p.tables[1].row(tr.rel), wr = p.tables[2].row(tr.rel);
    auto et = p.tables[0].row(tr.tail);
    double wh = dot(wr, eh);
    double wt = dot(wr, et);
    std::vector<double> u(p.dim);
    double nrm = 0.0;
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        u[k] = (eh[k] - wh * wr[k]) + dr[k] - (et[k] - wt * wr[k]);
        nrm += u[k] * u[k];
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return;
    // dscore/du = -u/||u||, scaled by upstream
    for (std::uint32_t k = 0; k < p.dim; ++k) u[k] *= -up / nrm;
    double wu = dot(wr, std::span<const double>(u));
    auto gh = g.touch_row(0, tr.head);
    auto gt = g.touch_row(0, tr.tail);
    auto gd = g.touch_row(1, tr.rel);
    auto gw = g.touch_row(2, tr.rel);
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        gh[k] += u[k] - wu * wr[k];
        gt[k] -= u[k] - wu * wr[k];
        gd[k] += u[k];
        gw[k] += (wt - wh) * u[k] + wu * (et[k] - eh[k]);
    }
}

// ---- DistMult: <e_h, diag(w_r), e_t> ----

double distmult_score(const ModelParams& p, EntityId h, RelationId r, EntityId t) {
    auto eh = p.tables[0].row(h), er = p.tables[1].row(r), et = p.tables[0].row(t);
    double s = 0.0;
    for (std::uint32_t k = 0; k < p.dim; ++k) s += eh[k] * er[k] * et[k];
    return s;
}

void distmult_grad(const ModelParams& p, const Triple& tr, double up, GradTables& g) {
    auto eh = p.tables[0].row(tr.head), er = p.tables[1].row(tr.rel), et = p.tables[0].row(tr.tail);
    auto gh = g.touch_row(0, tr.head);
    auto gr = g.touch_row(1, tr.rel);
    auto gt = g.touch_row(0, tr.tail);
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        gh[k] += up * er[k] * et[k];
        gr[k] += up * eh[k] * et[k];
        gt[k] += up * eh[k] * er[k];
    }
}

// ---- ComplEx: Re(e_h * e_r * conj(e_t)) summed over components ----

double complex_score(const ModelParams& p, EntityId h, RelationId r, EntityId t) {
    auto hr = p.tables[0].row(h), hi = p.tables[1].row(h);
    auto rr = p.tables[2].row(r), ri = p.tables[3].row(r);
    auto tr = p.tables[0].row(t), ti = p.tables[1].row(t);
    double s = 0.0;
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        s += hr[k] * rr[k] * tr[k] + hi[k] * rr[k] * ti[k] + hr[k] * ri[k] * ti[k] -
             hi[k] * ri[k] * tr[k];
    }
    return s;
}

void complex_grad(const ModelParams& p, const Triple& tp, double up, GradTables& g) {
    auto hr = p.tables[0].row(tp.head), hi = p.tables[1].row(tp.head);
    auto rr = p.tables[2].row(tp.rel), ri = p.tables[3].row(tp.rel);
    auto tr = p.tables[0].row(tp.tail), ti = p.tables[1].row(tp.tail);
    auto ghr = g.touch_row(0, tp.head), ghi = g.touch_row(1, tp.head);
    auto grr = g.touch_row(2, tp.rel), gri = g.touch_row(3, tp.rel);
    auto gtr = g.touch_row(0, tp.tail), gti = g.touch_row(1, tp.tail);
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        ghr[k] += up * (rr[k] * tr[k] + ri[k] * ti[k]);
        ghi[k] += up * (rr[k] * ti[k] - ri[k] * tr[k]);
        grr[k] += up * (hr[k] * tr[k] + hi[k] * ti[k]);
        gri[k] += up * (hr[k] * ti[k] - hi[k] * tr[k]);
        gtr[k] += up * (hr[k] * rr[k] - hi[k] * ri[k]);
        gti[k] += up * (hi[k] * rr[k] + hr[k] * ri[k]);
    }
}

// ---- SimplE: ((e_h^head . r_fwd . e_t^tail) + (e_h^tail . r_inv . e_t^head)) / 2 ----

double simple_score(const ModelParams& p, EntityId h, RelationId r, EntityId t) {
    auto hh = p.tables[0].row(h), ht = p.tables[1].row(h);
    auto rf = p.tables[2].row(r), ri = p.tables[3].row(r);
    auto th = p.tables[0].row(t), tt = p.tables[1].row(t);
    double fwd = 0.0, inv = 0.0;
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        fwd += hh[k] * rf[k] * tt[k];
        inv += ht[k] * ri[k] * th[k];
    }
    return 0.5 * (fwd + inv);
}

void simple_grad(const ModelParams& p, const Triple& tp, double up, GradTables& g) {
    auto hh = p.tables[0].row(tp.head), ht = p.tables[1].row(tp.head);
    auto rf = p.tables[2].row(tp.rel), ri = p.tables[3].row(tp.rel);
    auto th = p.tables[0].row(tp.tail), tt = p.tables[1].row(tp.tail);
    auto ghh = g.touch_row(0, tp.head), ght = g.touch_row(1, tp.head);
    auto grf = g.touch_row(2, tp.rel), gri = g.touch_row(3, tp.rel);
    auto gth = g.touch_row(0, tp.tail), gtt = g.touch_row(1, tp.tail);
    double half = 0.5 * up;
    for (std::uint32_t k = 0; k < p.dim; ++k) {
        ghh[k] += half * rf[k] * tt[k];
        gtt[k] += half * rf[k] * hh[k];
        grf[k] += half * hh[k] * tt[k];
        ght[k] += half * ri[k] * th[k];
        gth[k] += half * ri[k] * ht[k];
        gri[k] += half * ht[k] * th[k];
    }
}

}  // namespace

ModelParams init_params(ModelKind kind, std::uint32_t num_entities, std::uint32_t num_relations,
                        std::uint32_t dim, std::uint64_t seed) {
    if (dim == 0) throw ValidationError("embedding dimension must be positive");
    ModelParams p;
    p.kind = kind;
    p.num_entities = num_entities;
    p.num_relations = num_relations;
    p.dim = dim;
    std::size_t n = table_count_for(kind);
    p.tables.reserve(n);
    double bound = std::sqrt(6.0 / (2.0 * dim));
    SplitMix64 rng = seeded_rng({rng_stream::init, seed});
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rows = table_is_entity_indexed(kind, i) ? num_entities : num_relations;
        Table tab(rows, dim);
        for (double& v : tab.data) v = rng.next_in(-bound, bound);
        p.tables.push_back(std::move(tab));
    }
    if (kind == ModelKind::TransH) {
        for (std::uint32_t r = 0; r < num_relations; ++r) {
            auto w = p.tables[2].row(r);
            double nrm = norm2(w);
            if (nrm > 0.0) {
                for (double& v : w) v /= nrm;
            }
        }
    }
    return p;
}

double score_one(const ModelParams& p, const Triple& t) {
    check_triple(p, t);
    switch (p.kind) {
        case ModelKind::TransE: return transe_score(p, t.head, t.rel, t.tail);
        case ModelKind::TransH: return transh_score(p, t.head, t.rel, t.tail);
        case ModelKind::DistMult: return distmult_score(p, t.head, t.rel, t.tail);
        case ModelKind::ComplEx: return complex_score(p, t.head, t.rel, t.tail);
        case ModelKind::SimplE: return simple_score(p, t.head, t.rel, t.tail);
    }
    return 0.0;
}

std::vector<double> score(const ModelParams& p, std::span<const Triple> batch) {
    std::vector<double> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) out[i] = score_one(p, batch[i]);
    return out;
}

std::vector<double> score_all(const ModelParams& p, RelationId r, EntityId fixed, Side side) {
    if (r >= p.num_relations || fixed >= p.num_entities) {
        throw ValidationError("score_all query out of bounds");
    }
    std::vector<double> out(p.num_entities);
    Triple t;
    t.rel = r;
    for (EntityId e = 0; e < p.num_entities; ++e) {
        t.head = side == Side::tail ? fixed : e;
        t.tail = side == Side::tail ? e : fixed;
        out[e] = score_one(p, t);
    }
    return out;
}

GradTables::GradTables(const ModelParams& params) {
    tables_.reserve(params.tables.size());
    for (const Table& t : params.tables) tables_.emplace_back(t.rows, t.cols);
    touched_.resize(tables_.size());
    dirty_.resize(tables_.size());
    for (std::size_t i = 0; i < tables_.size(); ++i) dirty_[i].assign(tables_[i].rows, 0);
}

std::span<double> GradTables::touch_row(std::size_t table, std::uint32_t row) {
    if (!dirty_[table][row]) {
        dirty_[table][row] = 1;
        touched_[table].push_back(row);
    }
    return tables_[table].row(row);
}

void GradTables::clear() {
    for (std::size_t i = 0; i < tables_.size(); ++i) {
        for (std::uint32_t row : touched_[i]) {
            auto r = tables_[i].row(row);
            std::fill(r.begin(), r.end(), 0.0);
            dirty_[i][row] = 0;
        }
        touched_[i].clear();
    }
}

void GradTables::sort_touched() {
    for (auto& rows : touched_) std::sort(rows.begin(), rows.end());
}

void accumulate_grad(const ModelParams& p, const Triple& t, double upstream, GradTables& g) {
    check_triple(p, t);
    if (upstream == 0.0) return;
    switch (p.kind) {
        case ModelKind::TransE: transe_grad(p, t, upstream, g); break;
        case ModelKind::TransH: transh_grad(p, t, upstream, g); break;
        case ModelKind::DistMult: distmult_grad(p, t, upstream, g); break;
        case ModelKind::ComplEx: complex_grad(p, t, upstream, g); break;
        case ModelKind::SimplE: simple_grad(p, t, upstream, g); break;
    }
}

void accumulate_grad(const ModelParams& p, std::span<const Triple> batch,
                     std::span<const double> upstream, GradTables& g) {
    if (batch.size() != upstream.size()) {
        throw ValidationError("gradient batch and upstream weights misaligned");
    }
    for (std::size_t i = 0; i < batch.size(); ++i) accumulate_grad(p, batch[i], upstream[i], g);
}

GradTables grad(const ModelParams& p, std::span<const Triple> batch,
                std::span<const double> upstream) {
    GradTables g(p);
    accumulate_grad(p, batch, upstream, g);
    return g;
}

void renormalize_constraints(ModelParams& p, std::span<const std::uint32_t> relation_rows) {
    if (p.kind != ModelKind::TransH) return;
    for (std::uint32_t r : relation_rows) {
        auto w = p.tables[2].row(r);
        double nrm = norm2(w);
        // The no-op band keeps repeated renormalization from drifting bits on
        // vectors that are already unit length to well below any tolerance we
        // ever check against.
        if (nrm > 0.0 && std::abs(nrm - 1.0) > 1e-12) {
            for (double& v : w) v /= nrm;
        }
    }
}

}  // namespace semkge
