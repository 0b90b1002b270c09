// semkge command line: filter / train / eval / grid / stats.
//
// Every subcommand reads one config file; flags override file values. All
// outputs land in the configured output directory under fixed names, next
// to an echo of the effective config (config.ini) that reproduces the run.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semkge/config.hpp"
#include "semkge/error.hpp"
#include "semkge/eval.hpp"
#include "semkge/ingest.hpp"
#include "semkge/numeric.hpp"
#include "semkge/trainer.hpp"

namespace {

using namespace semkge;
namespace fs = std::filesystem;

struct CommonFlags {
    std::string config_path;
    std::string output_dir;
    unsigned threads = 0;  // 0 = keep config value
};

void add_common(CLI::App* sub, CommonFlags& f, bool with_threads = true) {
    sub->add_option("-c,--config", f.config_path, "run configuration file")->required();
    sub->add_option("-o,--output", f.output_dir, "output directory (overrides [output] dir)");
    if (with_threads) {
        sub->add_option("--threads", f.threads, "worker threads (1 = bit-exact)");
    }
}

RunConfig load_config(const CommonFlags& f) {
    RunConfig cfg = RunConfig::load(f.config_path);
    if (!f.output_dir.empty()) cfg.output_dir = f.output_dir;
    if (f.threads != 0) cfg.eval.threads = f.threads;
    return cfg;
}

// Training hyperparameter overrides shared by train and grid.
struct TrainFlags {
    CLI::Option* model = nullptr;
    CLI::Option* loss = nullptr;
    CLI::Option* variant = nullptr;
    CLI::Option* gamma = nullptr;
    CLI::Option* epsilon = nullptr;
    CLI::Option* batch_size = nullptr;
    CLI::Option* dim = nullptr;
    CLI::Option* lr = nullptr;
    CLI::Option* regularizer = nullptr;
    CLI::Option* reg_weight = nullptr;
    CLI::Option* max_epochs = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* eval_every = nullptr;

    std::string model_v, loss_v, variant_v, regularizer_v;
    double gamma_v = 0, epsilon_v = 0, lr_v = 0, reg_weight_v = 0;
    std::uint32_t batch_size_v = 0, dim_v = 0, max_epochs_v = 0, eval_every_v = 0;
    std::uint64_t seed_v = 0;
};

void add_train_flags(CLI::App* sub, TrainFlags& f) {
    f.model = sub->add_option("--model", f.model_v, "transe|transh|distmult|complex|simple");
    f.loss = sub->add_option("--loss", f.loss_v, "phl|bcel|pll");
    f.variant = sub->add_option("--variant", f.variant_v, "vanilla|S|S'");
    f.gamma = sub->add_option("--gamma", f.gamma_v, "hinge margin (phl)");
    f.epsilon = sub->add_option("--epsilon", f.epsilon_v, "semantic-variant parameter");
    f.batch_size = sub->add_option("--batch-size", f.batch_size_v);
    f.dim = sub->add_option("--dim", f.dim_v, "embedding dimension");
    f.lr = sub->add_option("--lr", f.lr_v, "learning rate");
    f.regularizer = sub->add_option("--regularizer", f.regularizer_v, "none|l1|l2");
    f.reg_weight = sub->add_option("--reg-weight", f.reg_weight_v);
    f.max_epochs = sub->add_option("--max-epochs", f.max_epochs_v);
    f.seed = sub->add_option("--seed", f.seed_v, "master seed");
    f.eval_every = sub->add_option("--eval-every", f.eval_every_v);
}

void apply_train_flags(const TrainFlags& f, TrainConfig& cfg) {
    if (f.model->count()) cfg.model = model_from_name(f.model_v);
    if (f.loss->count()) cfg.loss.family = loss_family_from_name(f.loss_v);
    if (f.variant->count()) cfg.loss.variant = loss_variant_from_name(f.variant_v);
    if (f.gamma->count()) cfg.loss.margin = f.gamma_v;
    if (f.epsilon->count()) cfg.loss.epsilon = f.epsilon_v;
    if (f.batch_size->count()) cfg.batch_size = f.batch_size_v;
    if (f.dim->count()) cfg.dim = f.dim_v;
    if (f.lr->count()) cfg.lr = f.lr_v;
    if (f.regularizer->count()) cfg.reg = regularizer_from_name(f.regularizer_v);
    if (f.reg_weight->count()) cfg.reg_weight = f.reg_weight_v;
    if (f.max_epochs->count()) cfg.max_epochs = f.max_epochs_v;
    if (f.seed->count()) {
        cfg.seed = f.seed_v;
        cfg.loss.seed = f.seed_v;
    }
    if (f.eval_every->count()) cfg.eval_every = f.eval_every_v;
}

void write_config_echo(const RunConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    std::ofstream out(cfg.output_dir / "config.ini", std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + (cfg.output_dir / "config.ini").string());
    out << cfg.render();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out << text;
    if (!out) throw RuntimeFailure("failed writing " + path.string());
}

void report_warnings(const LoadedDataset& ds) {
    for (const std::string& w : ds.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_filter(const RunConfig& cfg) {
    LoadedDataset ds = load_dataset(cfg.dataset);
    report_warnings(ds);
    KnowledgeGraph filtered = filter_dataset(ds.kg);
    write_config_echo(cfg);
    DatasetPaths out_paths{cfg.output_dir / "train.tsv",        cfg.output_dir / "valid.tsv",
                           cfg.output_dir / "test.tsv",         cfg.output_dir / "entity_types.tsv",
                           cfg.output_dir / "domains.tsv",      cfg.output_dir / "ranges.tsv"};
    write_dataset(filtered, ds.entities, ds.relations, ds.classes, out_paths);
    std::string report = stats_json(stats(filtered)) + "\n";
    write_text(cfg.output_dir / "stats.json", report);
    std::cout << report;
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    LoadedDataset ds = load_dataset(cfg.dataset);
    report_warnings(ds);
    write_config_echo(cfg);
    std::ofstream log(cfg.output_dir / "train_log.jsonl", std::ios::trunc);
    if (!log) throw RuntimeFailure("cannot write " + (cfg.output_dir / "train_log.jsonl").string());
    log << "{\"config\":" << train_config_json(cfg.train) << "}\n";

    TrainOptions opts;
    opts.log = &log;
    opts.eval_threads = cfg.eval.threads;
    Checkpoint ckpt = train(cfg.train, ds.kg, opts);
    save_checkpoint(ckpt, cfg.output_dir / "checkpoint.bin");
    std::cout << "best checkpoint at epoch " << ckpt.epoch << " written to "
              << (cfg.output_dir / "checkpoint.bin").string() << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_flag, const std::string& split,
             bool dump_ranks) {
    LoadedDataset ds = load_dataset(cfg.dataset);
    report_warnings(ds);
    fs::path ckpt_path =
        checkpoint_flag.empty() ? cfg.output_dir / "checkpoint.bin" : fs::path(checkpoint_flag);
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.params.num_entities != ds.kg.num_entities ||
        ckpt.params.num_relations != ds.kg.num_relations) {
        throw ValidationError("checkpoint " + ckpt_path.string() + " was trained on |E|=" +
                              std::to_string(ckpt.params.num_entities) + ", |R|=" +
                              std::to_string(ckpt.params.num_relations) +
                              " but the dataset has |E|=" + std::to_string(ds.kg.num_entities) +
                              ", |R|=" + std::to_string(ds.kg.num_relations));
    }

    EvalOptions opts;
    opts.mode = cfg.eval.mode;
    opts.ties = cfg.eval.ties;
    opts.ks = cfg.eval.ks;
    opts.threads = cfg.eval.threads;
    BucketSpec buckets;
    if (!cfg.eval.bucket_spec.empty()) {
        buckets = BucketSpec::load(cfg.eval.bucket_spec);
        opts.buckets = &buckets;
    }
    write_config_echo(cfg);
    std::ofstream ranks;
    if (dump_ranks) {
        ranks.open(cfg.output_dir / "ranks.jsonl", std::ios::trunc);
        if (!ranks) {
            throw RuntimeFailure("cannot write " + (cfg.output_dir / "ranks.jsonl").string());
        }
        opts.rank_dump = &ranks;
    }

    EvalReport report = evaluate(ckpt.params, ds.kg, split_from_name(split), opts);
    std::string text = report.to_json() + "\n";
    write_text(cfg.output_dir / "eval_report.json", text);
    std::cout << text;
    return 0;
}

int cmd_grid(const RunConfig& cfg) {
    if (cfg.grid.empty()) {
        throw ValidationError("grid search needs a non-empty [grid] section");
    }
    LoadedDataset ds = load_dataset(cfg.dataset);
    report_warnings(ds);
    write_config_echo(cfg);
    std::vector<TrainConfig> grid = cfg.grid.expand(cfg.train);
    TrainOptions opts;
    opts.eval_threads = cfg.eval.threads;
    std::vector<GridResult> results = grid_search(grid, ds.kg, opts);

    std::string csv =
        "config_hash,model,loss,gamma,epsilon,batch_size,dim,lr,regularizer,reg_weight,seed,"
        "val_mrr,val_sem10,error\n";
    for (const GridResult& r : results) {
        const TrainConfig& c = r.config;
        csv += train_config_hash(c);
        csv += "," + std::string(model_name(c.model));
        csv += "," + c.loss.display_name();
        csv += "," + json_number(c.loss.margin);
        csv += "," + json_number(c.loss.epsilon);
        csv += "," + std::to_string(c.batch_size);
        csv += "," + std::to_string(c.dim);
        csv += "," + json_number(c.lr);
        csv += "," + std::string(regularizer_name(c.reg));
        csv += "," + json_number(c.reg_weight);
        csv += "," + std::to_string(c.seed);
        csv += "," + (r.error.empty() ? json_number(r.val_mrr) : std::string());
        csv += "," + (r.error.empty() ? json_number(r.val_sem10) : std::string());
        std::string quoted = r.error;
        for (std::size_t at = quoted.find('"'); at != std::string::npos;
             at = quoted.find('"', at + 2)) {
            quoted.insert(at, 1, '"');
        }
        csv += ",\"" + quoted + "\"\n";
    }
    write_text(cfg.output_dir / "grid_results.csv", csv);
    const GridResult& top = results.front();
    if (top.error.empty()) {
        std::cout << "best cell: " << train_config_signature(top.config)
                  << " val_mrr=" << json_number(top.val_mrr) << "\n";
    } else {
        std::cout << "all " << results.size() << " cells failed; see grid_results.csv\n";
    }
    return 0;
}

int cmd_stats(const RunConfig& cfg) {
    LoadedDataset ds = load_dataset(cfg.dataset);
    report_warnings(ds);
    std::cout << stats_json(stats(ds.kg)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge graph embeddings with semantic-aware losses"};
    app.require_subcommand(1);

    CommonFlags filter_f, train_f, eval_f, grid_f, stats_f;
    TrainFlags train_tf, grid_tf;
    std::string eval_checkpoint;
    std::string eval_split = "test";
    bool dump_ranks = false;

    CLI::App* filter = app.add_subcommand("filter", "apply the schema-based dataset filter");
    add_common(filter, filter_f, false);

    CLI::App* train = app.add_subcommand("train", "train a model and keep the best checkpoint");
    add_common(train, train_f);
    add_train_flags(train, train_tf);

    CLI::App* eval = app.add_subcommand("eval", "rank a split and report MRR/Hits@K/Sem@K");
    add_common(eval, eval_f);
    eval->add_option("--checkpoint", eval_checkpoint, "checkpoint path (default <output>/checkpoint.bin)");
    eval->add_option("--split", eval_split, "train|valid|test");
    eval->add_flag("--dump-ranks", dump_ranks, "write one JSON line per query to ranks.jsonl");

    CLI::App* grid = app.add_subcommand("grid", "sweep the [grid] section, rank by val MRR");
    add_common(grid, grid_f);
    add_train_flags(grid, grid_tf);

    CLI::App* stats = app.add_subcommand("stats", "print dataset statistics");
    add_common(stats, stats_f, false);

    try {
        app.parse(argc, argv);
        if (filter->parsed()) {
            RunConfig cfg = load_config(filter_f);
            cfg.validate();
            return cmd_filter(cfg);
        }
        if (train->parsed()) {
            RunConfig cfg = load_config(train_f);
            apply_train_flags(train_tf, cfg.train);
            cfg.validate();
            return cmd_train(cfg);
        }
        if (eval->parsed()) {
            RunConfig cfg = load_config(eval_f);
            cfg.validate();
            return cmd_eval(cfg, eval_checkpoint, eval_split, dump_ranks);
        }
        if (grid->parsed()) {
            RunConfig cfg = load_config(grid_f);
            apply_train_flags(grid_tf, cfg.train);
            cfg.validate();
            return cmd_grid(cfg);
        }
        RunConfig cfg = load_config(stats_f);
        cfg.validate();
        return cmd_stats(cfg);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const RuntimeFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
