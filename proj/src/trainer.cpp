#include "semkge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "semkge/eval.hpp"
#include "semkge/numeric.hpp"
#include "semkge/rng.hpp"

namespace semkge {

using nlohmann::json;

const char* regularizer_name(Regularizer r) {
    switch (r) {
        case Regularizer::none: return "none";
        case Regularizer::L1: return "l1";
        case Regularizer::L2: return "l2";
    }
    return "?";
}

Regularizer regularizer_from_name(const std::string& name) {
    if (name == "none") return Regularizer::none;
    if (name == "l1" || name == "L1") return Regularizer::L1;
    if (name == "l2" || name == "L2") return Regularizer::L2;
    throw ValidationError("unknown regularizer '" + name + "' (expected none|l1|l2)");
}

void TrainConfig::validate() const {
    loss.validate();
    if (batch_size == 0) throw ValidationError("batch_size must be at least 1");
    if (dim == 0) throw ValidationError("dim must be at least 1");
    if (max_epochs == 0) throw ValidationError("max_epochs must be at least 1");
    if (eval_every == 0) throw ValidationError("eval_every must be at least 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("lr must be finite and >= 0");
    if (!(reg_weight >= 0.0) || !std::isfinite(reg_weight)) {
        throw ValidationError("reg_weight must be finite and >= 0");
    }
}

std::string EpochLog::to_json() const {
    std::string out = "{\"epoch\":" + std::to_string(epoch);
    out += ",\"train_loss\":" + json_number(train_loss);
    out += ",\"val_mrr\":" + (val_mrr ? json_number(*val_mrr) : "null");
    out += ",\"val_hits10\":" + (val_hits10 ? json_number(*val_hits10) : "null");
    out += ",\"val_sem10\":" + (val_sem10 ? json_number(*val_sem10) : "null");
    out += "}";
    return out;
}

namespace {

// ---- Adam with lazy (touched-rows-only) moment updates ----

struct Adam {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    std::vector<Table> m, v;
    std::uint64_t step_count = 0;

    explicit Adam(const ModelParams& p) {
        for (const Table& t : p.tables) {
            m.emplace_back(t.rows, t.cols);
            v.emplace_back(t.rows, t.cols);
        }
    }

    void step(ModelParams& p, const GradTables& g, double lr) {
        ++step_count;
        double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_count));
        double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_count));
        for (std::size_t ti = 0; ti < p.tables.size(); ++ti) {
            const Table& gt = g.table(ti);
            for (std::uint32_t row : g.touched(ti)) {
                auto gr = gt.row(row);
                auto pr = p.tables[ti].row(row);
                auto mr = m[ti].row(row);
                auto vr = v[ti].row(row);
                for (std::size_t c = 0; c < gr.size(); ++c) {
                    double grad = gr[c];
                    mr[c] = kBeta1 * mr[c] + (1.0 - kBeta1) * grad;
                    vr[c] = kBeta2 * vr[c] + (1.0 - kBeta2) * grad * grad;
                    double mhat = mr[c] / bc1;
                    double vhat = vr[c] / bc2;
                    pr[c] -= lr * mhat / (std::sqrt(vhat) + kEps);
                }
            }
        }
    }
};

// Marks every row the batch references so regularization covers parameters
// whose data gradient happens to be zero.
void touch_referenced_rows(const ModelParams& p, std::span<const Triple> triples, GradTables& g) {
    for (const Triple& t : triples) {
        for (std::size_t ti = 0; ti < p.tables.size(); ++ti) {
            if (table_is_entity_indexed(p.kind, ti)) {
                g.touch_row(ti, t.head);
                g.touch_row(ti, t.tail);
            } else {
                g.touch_row(ti, t.rel);
            }
        }
    }
}

void touch_all_entity_rows(const ModelParams& p, GradTables& g) {
    for (std::size_t ti = 0; ti < p.tables.size(); ++ti) {
        if (!table_is_entity_indexed(p.kind, ti)) continue;
        for (std::uint32_t row = 0; row < p.num_entities; ++row) g.touch_row(ti, row);
    }
}

// Adds the penalty gradient for the touched rows and returns the penalty
// value. Expects sort_touched() to have run already.
double apply_regularization(const TrainConfig& cfg, const ModelParams& p, GradTables& g) {
    if (cfg.reg == Regularizer::none || cfg.reg_weight == 0.0) return 0.0;
    double lambda = cfg.reg_weight;
    KahanSum penalty;
    for (std::size_t ti = 0; ti < p.tables.size(); ++ti) {
        for (std::uint32_t row : g.touched(ti)) {
            auto pr = p.tables[ti].row(row);
            auto gr = g.table(ti).row(row);
            for (std::size_t c = 0; c < pr.size(); ++c) {
                double w = pr[c];
                if (cfg.reg == Regularizer::L2) {
                    penalty.add(lambda * w * w);
                    gr[c] += 2.0 * lambda * w;
                } else {
                    penalty.add(lambda * std::abs(w));
                    gr[c] += w > 0.0 ? lambda : (w < 0.0 ? -lambda : 0.0);
                }
            }
        }
    }
    return penalty.value();
}

void renormalize_touched(ModelParams& p, const GradTables& g) {
    if (p.kind != ModelKind::TransH) return;
    renormalize_constraints(p, g.touched(2));
}

std::uint64_t completion_key(EntityId fixed, RelationId r) {
    return (static_cast<std::uint64_t>(fixed) << 32) | r;
}

using CompletionMap = std::unordered_map<std::uint64_t, std::vector<EntityId>>;

struct TrainState {
    const TrainConfig& cfg;
    const KnowledgeGraph& kg;
    ModelParams params;
    GradTables grads;
    Adam adam;
    const SemValidIndex index;
    std::optional<NegativeSampler> sampler;
    CompletionMap train_tails;  // (h, r) -> tails within train
    CompletionMap train_heads;  // (t, r) -> heads within train

    TrainState(const TrainConfig& c, const KnowledgeGraph& k)
        : cfg(c),
          kg(k),
          params(init_params(c.model, k.num_entities, k.num_relations, c.dim, c.seed)),
          grads(params),
          adam(params),
          index(k) {
        if (cfg.loss.family == LossFamily::BCEL) {
            for (const Triple& t : kg.train) {
                train_tails[completion_key(t.head, t.rel)].push_back(t.tail);
                train_heads[completion_key(t.tail, t.rel)].push_back(t.head);
            }
            for (auto* m : {&train_tails, &train_heads}) {
                for (auto& [key, v] : *m) std::sort(v.begin(), v.end());
            }
        } else {
            sampler.emplace(kg, index, cfg.seed);
        }
    }
};

double run_pairwise_batch(TrainState& st, std::span<const std::uint64_t> batch,
                          std::uint64_t epoch, std::uint64_t batch_index,
                          const TrainOptions& opts) {
    std::size_t n = batch.size();
    std::vector<Triple> pos(n);
    std::vector<Triple> negs(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        std::uint64_t idx = batch[j];
        pos[j] = st.kg.train[idx];
        NegativePair pair = st.sampler->pair_for(epoch, idx);
        negs[2 * j] = pair.valid_neg;
        negs[2 * j + 1] = pair.invalid_neg;
        if (opts.observe_negatives) opts.observe_negatives(epoch, idx, pair);
    }
    std::vector<double> pos_scores = score(st.params, pos);
    std::vector<double> neg_scores = score(st.params, negs);
    std::vector<char> neg_flags = classify_negatives(negs, st.kg.schema);

    st.grads.clear();
    double data_loss;
    if (st.cfg.loss.family == LossFamily::PHL) {
        PairwiseLoss pl = phl(st.cfg.loss, pos_scores, neg_scores, neg_flags);
        data_loss = pl.loss;
        accumulate_grad(st.params, pos, pl.pos_weights, st.grads);
        accumulate_grad(st.params, negs, pl.neg_weights, st.grads);
    } else {
        std::vector<Triple> all;
        all.reserve(3 * n);
        all.insert(all.end(), pos.begin(), pos.end());
        all.insert(all.end(), negs.begin(), negs.end());
        std::vector<double> scores_all;
        scores_all.reserve(3 * n);
        scores_all.insert(scores_all.end(), pos_scores.begin(), pos_scores.end());
        scores_all.insert(scores_all.end(), neg_scores.begin(), neg_scores.end());
        std::vector<double> labels(3 * n, -1.0);
        std::fill(labels.begin(), labels.begin() + n, 1.0);
        std::vector<char> flags(3 * n, 0);
        std::copy(neg_flags.begin(), neg_flags.end(), flags.begin() + n);
        PointwiseLoss pw = pll(st.cfg.loss, scores_all, labels, flags,
                               BatchKey{epoch, batch_index});
        data_loss = pw.loss;
        accumulate_grad(st.params, all, pw.weights, st.grads);
    }

    touch_referenced_rows(st.params, pos, st.grads);
    touch_referenced_rows(st.params, negs, st.grads);
    st.grads.sort_touched();
    double loss = data_loss + apply_regularization(st.cfg, st.params, st.grads);
    st.adam.step(st.params, st.grads, st.cfg.lr);
    renormalize_touched(st.params, st.grads);
    return loss;
}

double run_bcel_batch(TrainState& st, std::span<const std::uint64_t> batch, std::uint64_t epoch,
                      std::uint64_t batch_index) {
    st.grads.clear();
    static const std::vector<EntityId> kNone;
    KahanSum data_loss;
    BatchKey key{epoch, batch_index};
    for (std::uint64_t idx : batch) {
        const Triple& t = st.kg.train[idx];
        // Both prediction directions per positive: (h, r, *) and (*, r, t).
        for (Side predicted : {Side::tail, Side::head}) {
            EntityId fixed = predicted == Side::tail ? t.head : t.tail;
            const CompletionMap& comp =
                predicted == Side::tail ? st.train_tails : st.train_heads;
            auto it = comp.find(completion_key(fixed, t.rel));
            const std::vector<EntityId>& positives = it == comp.end() ? kNone : it->second;
            std::vector<double> scores = score_all(st.params, t.rel, fixed, predicted);
            std::vector<double> targets =
                bcel_targets(st.cfg.loss, t.rel, fixed, predicted, st.index, positives, key);
            PointwiseLoss pw = bcel(st.cfg.loss, scores, targets);
            data_loss.add(pw.loss);
            Triple q = t;
            for (EntityId e = 0; e < st.params.num_entities; ++e) {
                if (pw.weights[e] == 0.0) continue;
                (predicted == Side::tail ? q.tail : q.head) = e;
                accumulate_grad(st.params, q, pw.weights[e], st.grads);
            }
        }
    }
    // A 1-N batch scores every entity, so every entity row counts as touched.
    touch_all_entity_rows(st.params, st.grads);
    std::vector<Triple> batch_triples;
    batch_triples.reserve(batch.size());
    for (std::uint64_t idx : batch) batch_triples.push_back(st.kg.train[idx]);
    touch_referenced_rows(st.params, batch_triples, st.grads);
    st.grads.sort_touched();
    double loss = data_loss.value() + apply_regularization(st.cfg, st.params, st.grads);
    st.adam.step(st.params, st.grads, st.cfg.lr);
    renormalize_touched(st.params, st.grads);
    return loss;
}

json config_to_json(const TrainConfig& cfg) {
    return json{{"model", model_name(cfg.model)},
                {"loss",
                 {{"family", loss_family_name(cfg.loss.family)},
                  {"variant", loss_variant_name(cfg.loss.variant)},
                  {"margin", cfg.loss.margin},
                  {"epsilon", cfg.loss.epsilon},
                  {"seed", cfg.loss.seed}}},
                {"batch_size", cfg.batch_size},
                {"dim", cfg.dim},
                {"lr", cfg.lr},
                {"regularizer", regularizer_name(cfg.reg)},
                {"reg_weight", cfg.reg_weight},
                {"max_epochs", cfg.max_epochs},
                {"seed", cfg.seed},
                {"eval_every", cfg.eval_every}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.model = model_from_name(j.at("model").get<std::string>());
    const json& l = j.at("loss");
    cfg.loss.family = loss_family_from_name(l.at("family").get<std::string>());
    cfg.loss.variant = loss_variant_from_name(l.at("variant").get<std::string>());
    cfg.loss.margin = l.at("margin").get<double>();
    cfg.loss.epsilon = l.at("epsilon").get<double>();
    cfg.loss.seed = l.at("seed").get<std::uint64_t>();
    cfg.batch_size = j.at("batch_size").get<std::uint32_t>();
    cfg.dim = j.at("dim").get<std::uint32_t>();
    cfg.lr = j.at("lr").get<double>();
    cfg.reg = regularizer_from_name(j.at("regularizer").get<std::string>());
    cfg.reg_weight = j.at("reg_weight").get<double>();
    cfg.max_epochs = j.at("max_epochs").get<std::uint32_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.eval_every = j.at("eval_every").get<std::uint32_t>();
    return cfg;
}

// ---- checkpoint binary format ----

constexpr char kMagic[8] = {'S', 'E', 'M', 'K', 'G', 'E', '0', '1'};

void put_u32(std::string& out, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

struct Reader {
    std::ifstream in;
    std::string path;

    void read_exact(char* buf, std::size_t n) {
        in.read(buf, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) {
            throw ValidationError("checkpoint " + path + " is truncated or corrupt");
        }
    }

    std::uint32_t u32() {
        unsigned char b[4];
        read_exact(reinterpret_cast<char*>(b), 4);
        std::uint32_t x = 0;
        for (int i = 3; i >= 0; --i) x = (x << 8) | b[i];
        return x;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        read_exact(reinterpret_cast<char*>(b), 8);
        std::uint64_t x = 0;
        for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
        return x;
    }
};

}  // namespace

std::string train_config_json(const TrainConfig& cfg) { return config_to_json(cfg).dump(); }

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(ckpt.params.kind));
    put_u64(out, ckpt.params.num_entities);
    put_u64(out, ckpt.params.num_relations);
    put_u64(out, ckpt.params.dim);
    for (const Table& t : ckpt.params.tables) {
        for (double v : t.data) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            put_u64(out, bits);
        }
    }
    json trailer;
    trailer["config"] = config_to_json(ckpt.config);
    trailer["epoch"] = ckpt.epoch;
    json hist = json::array();
    for (const EpochLog& e : ckpt.history) {
        json row{{"epoch", e.epoch}, {"train_loss", e.train_loss}};
        row["val_mrr"] = e.val_mrr ? json(*e.val_mrr) : json(nullptr);
        row["val_hits10"] = e.val_hits10 ? json(*e.val_hits10) : json(nullptr);
        row["val_sem10"] = e.val_sem10 ? json(*e.val_sem10) : json(nullptr);
        hist.push_back(std::move(row));
    }
    trailer["history"] = std::move(hist);
    std::string tj = trailer.dump();
    put_u64(out, tj.size());
    out += tj;

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw RuntimeFailure("cannot write checkpoint " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw RuntimeFailure("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Reader r{std::ifstream(path, std::ios::binary), path.string()};
    if (!r.in) throw ValidationError("cannot open checkpoint " + path.string());
    char magic[8];
    r.read_exact(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ValidationError("checkpoint " + path.string() + " has an unknown format version");
    }
    Checkpoint ckpt;
    std::uint32_t kind_raw = r.u32();
    if (kind_raw > static_cast<std::uint32_t>(ModelKind::SimplE)) {
        throw ValidationError("checkpoint " + path.string() + " names an unknown model kind");
    }
    ModelKind kind = static_cast<ModelKind>(kind_raw);
    std::uint64_t ne = r.u64(), nr = r.u64(), dim = r.u64();
    if (ne > std::numeric_limits<std::uint32_t>::max() ||
        nr > std::numeric_limits<std::uint32_t>::max() ||
        dim > std::numeric_limits<std::uint32_t>::max() || dim == 0) {
        throw ValidationError("checkpoint " + path.string() + " has implausible table shapes");
    }
    ckpt.params.kind = kind;
    ckpt.params.num_entities = static_cast<std::uint32_t>(ne);
    ckpt.params.num_relations = static_cast<std::uint32_t>(nr);
    ckpt.params.dim = static_cast<std::uint32_t>(dim);
    std::size_t n_tables = table_count_for(kind);
    for (std::size_t ti = 0; ti < n_tables; ++ti) {
        std::size_t rows = table_is_entity_indexed(kind, ti) ? ne : nr;
        Table t(rows, dim);
        for (double& v : t.data) {
            std::uint64_t bits = r.u64();
            std::memcpy(&v, &bits, sizeof(v));
        }
        ckpt.params.tables.push_back(std::move(t));
    }
    std::uint64_t tlen = r.u64();
    std::string tj(tlen, '\0');
    r.read_exact(tj.data(), tlen);
    char extra;
    if (r.in.read(&extra, 1); r.in.gcount() != 0) {
        throw ValidationError("checkpoint " + path.string() + " has trailing bytes");
    }
    json trailer;
    try {
        trailer = json::parse(tj);
        ckpt.config = config_from_json(trailer.at("config"));
        ckpt.epoch = trailer.at("epoch").get<std::uint64_t>();
        for (const json& row : trailer.at("history")) {
            EpochLog e;
            e.epoch = row.at("epoch").get<std::uint64_t>();
            e.train_loss = row.at("train_loss").get<double>();
            if (!row.at("val_mrr").is_null()) e.val_mrr = row.at("val_mrr").get<double>();
            if (!row.at("val_hits10").is_null()) e.val_hits10 = row.at("val_hits10").get<double>();
            if (!row.at("val_sem10").is_null()) e.val_sem10 = row.at("val_sem10").get<double>();
            ckpt.history.push_back(e);
        }
    } catch (const json::exception& ex) {
        throw ValidationError("checkpoint " + path.string() + " trailer is corrupt: " + ex.what());
    }
    if (ckpt.config.dim != ckpt.params.dim || ckpt.config.model != ckpt.params.kind) {
        throw ValidationError("checkpoint " + path.string() + " trailer disagrees with header");
    }
    return ckpt;
}

Checkpoint train(const TrainConfig& cfg, const KnowledgeGraph& kg, const TrainOptions& opts) {
    cfg.validate();
    if (kg.train.empty()) throw ValidationError("cannot train on an empty train split");

    TrainState st(cfg, kg);
    std::vector<std::uint64_t> order(kg.train.size());
    std::iota(order.begin(), order.end(), 0);

    Checkpoint best;
    best.config = cfg;
    bool have_best = false;
    double best_mrr = -std::numeric_limits<double>::infinity();
    std::vector<EpochLog> history;
    bool has_valid = !kg.valid.empty();

    for (std::uint64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        SplitMix64 shuffle_rng = seeded_rng({cfg.seed, rng_stream::shuffle, epoch});
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = shuffle_rng.next_below(i);
            std::swap(order[i - 1], order[j]);
        }

        KahanSum epoch_loss;
        std::uint64_t batch_index = 0;
        for (std::size_t start = 0; start < order.size();
             start += cfg.batch_size, ++batch_index) {
            std::size_t len = std::min<std::size_t>(cfg.batch_size, order.size() - start);
            std::span<const std::uint64_t> batch(order.data() + start, len);
            double loss = cfg.loss.family == LossFamily::BCEL
                              ? run_bcel_batch(st, batch, epoch, batch_index)
                              : run_pairwise_batch(st, batch, epoch, batch_index, opts);
            if (!std::isfinite(loss)) {
                throw RuntimeFailure("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_index));
            }
            epoch_loss.add(loss);
        }

        if (epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs) {
            EpochLog entry;
            entry.epoch = epoch;
            entry.train_loss = epoch_loss.value();
            if (has_valid) {
                EvalOptions eo;
                eo.threads = opts.eval_threads;
                EvalReport rep = evaluate(st.params, kg, SplitKind::valid, eo);
                entry.val_mrr = rep.overall.mrr;
                entry.val_hits10 = rep.overall.hits[2];
                entry.val_sem10 = rep.overall.sem[2];
                if (rep.overall.mrr > best_mrr) {
                    best_mrr = rep.overall.mrr;
                    best.params = st.params;
                    best.epoch = epoch;
                    have_best = true;
                }
            }
            history.push_back(entry);
            if (opts.log) *opts.log << entry.to_json() << "\n";
        }
    }

    if (!have_best) {
        best.params = std::move(st.params);
        best.epoch = cfg.max_epochs;
    }
    best.history = std::move(history);
    return best;
}

std::vector<GridResult> grid_search(std::span<const TrainConfig> grid, const KnowledgeGraph& kg,
                                    const TrainOptions& opts) {
    if (grid.empty()) throw ValidationError("grid search needs at least one configuration");
    if (kg.valid.empty()) {
        throw ValidationError("grid search needs a validation split to rank by");
    }
    std::vector<GridResult> results;
    results.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        GridResult r;
        r.config = grid[i];
        r.grid_index = i;
        try {
            Checkpoint ckpt = train(grid[i], kg, opts);
            for (const EpochLog& e : ckpt.history) {
                if (e.epoch == ckpt.epoch && e.val_mrr) {
                    r.val_mrr = *e.val_mrr;
                    r.val_sem10 = e.val_sem10.value_or(0.0);
                }
            }
        } catch (const std::exception& ex) {
            r.error = ex.what();
        }
        results.push_back(std::move(r));
    }
    std::stable_sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
        double am = a.error.empty() ? a.val_mrr : -std::numeric_limits<double>::infinity();
        double bm = b.error.empty() ? b.val_mrr : -std::numeric_limits<double>::infinity();
        return am > bm;
    });
    return results;
}

}  // namespace semkge
