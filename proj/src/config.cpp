#include "semkge/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "semkge/error.hpp"
#include "semkge/numeric.hpp"

namespace semkge {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

[[noreturn]] void bad(const std::string& origin, std::size_t line, const std::string& msg) {
    throw ValidationError(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(std::string_view v, const std::string& origin, std::size_t line,
                    const std::string& key) {
    double out;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        bad(origin, line, key + " expects a number, got '" + std::string(v) + "'");
    }
    return out;
}

template <typename Int>
Int parse_int(std::string_view v, const std::string& origin, std::size_t line,
              const std::string& key) {
    Int out;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        bad(origin, line, key + " expects an integer, got '" + std::string(v) + "'");
    }
    return out;
}

std::vector<std::string_view> split_list(std::string_view v) {
    std::vector<std::string_view> parts;
    while (true) {
        std::size_t comma = v.find(',');
        parts.push_back(trim(v.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    return parts;
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view v, Parse parse) {
    std::vector<T> out;
    for (std::string_view part : split_list(v)) out.push_back(parse(part));
    return out;
}

std::string join_list(const auto& values, auto format) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += format(values[i]);
    }
    return out;
}

}  // namespace

bool GridSpec::empty() const {
    return batch_size.empty() && dim.empty() && lr.empty() && reg_weight.empty() &&
           gamma.empty() && epsilon.empty();
}

std::vector<TrainConfig> GridSpec::expand(const TrainConfig& base) const {
    auto or_base = [](const auto& axis, auto base_value) {
        using T = std::decay_t<decltype(base_value)>;
        return axis.empty() ? std::vector<T>{base_value} : axis;
    };
    std::vector<std::uint32_t> bs = or_base(batch_size, base.batch_size);
    std::vector<std::uint32_t> ds = or_base(dim, base.dim);
    std::vector<double> lrs = or_base(lr, base.lr);
    std::vector<double> lambdas = or_base(reg_weight, base.reg_weight);
    std::vector<double> gammas = or_base(gamma, base.loss.margin);
    std::vector<double> epsilons = or_base(epsilon, base.loss.epsilon);

    std::vector<TrainConfig> out;
    out.reserve(bs.size() * ds.size() * lrs.size() * lambdas.size() * gammas.size() *
                epsilons.size());
    for (std::uint32_t b : bs)
        for (std::uint32_t d : ds)
            for (double l : lrs)
                for (double w : lambdas)
                    for (double g : gammas)
                        for (double e : epsilons) {
                            TrainConfig cfg = base;
                            cfg.batch_size = b;
                            cfg.dim = d;
                            cfg.lr = l;
                            cfg.reg_weight = w;
                            cfg.loss.margin = g;
                            cfg.loss.epsilon = e;
                            out.push_back(cfg);
                        }
    return out;
}

RunConfig RunConfig::parse(std::string_view text, const std::string& origin) {
    RunConfig cfg;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') bad(origin, line_no, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section != "dataset" && section != "train" && section != "eval" &&
                section != "output" && section != "grid") {
                bad(origin, line_no, "unknown section [" + section + "]");
            }
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) bad(origin, line_no, "expected key = value");
        std::string key(trim(line.substr(0, eq)));
        std::string_view value = trim(line.substr(eq + 1));
        if (section.empty()) bad(origin, line_no, "key '" + key + "' outside any section");

        if (section == "dataset") {
            std::string v(value);
            if (key == "train") cfg.dataset.train = v;
            else if (key == "valid") cfg.dataset.valid = v;
            else if (key == "test") cfg.dataset.test = v;
            else if (key == "entity_types") cfg.dataset.entity_types = v;
            else if (key == "domains") cfg.dataset.domains = v;
            else if (key == "ranges") cfg.dataset.ranges = v;
            else bad(origin, line_no, "unknown key '" + key + "' in [dataset]");
        } else if (section == "train") {
            if (key == "model") cfg.train.model = model_from_name(std::string(value));
            else if (key == "loss") cfg.train.loss.family = loss_family_from_name(std::string(value));
            else if (key == "variant") cfg.train.loss.variant = loss_variant_from_name(std::string(value));
            else if (key == "gamma") cfg.train.loss.margin = parse_double(value, origin, line_no, key);
            else if (key == "epsilon") cfg.train.loss.epsilon = parse_double(value, origin, line_no, key);
            else if (key == "batch_size") cfg.train.batch_size = parse_int<std::uint32_t>(value, origin, line_no, key);
            else if (key == "dim") cfg.train.dim = parse_int<std::uint32_t>(value, origin, line_no, key);
            else if (key == "lr") cfg.train.lr = parse_double(value, origin, line_no, key);
            else if (key == "regularizer") cfg.train.reg = regularizer_from_name(std::string(value));
            else if (key == "reg_weight") cfg.train.reg_weight = parse_double(value, origin, line_no, key);
            else if (key == "max_epochs") cfg.train.max_epochs = parse_int<std::uint32_t>(value, origin, line_no, key);
            else if (key == "seed") cfg.train.seed = parse_int<std::uint64_t>(value, origin, line_no, key);
            else if (key == "eval_every") cfg.train.eval_every = parse_int<std::uint32_t>(value, origin, line_no, key);
            else bad(origin, line_no, "unknown key '" + key + "' in [train]");
        } else if (section == "eval") {
            if (key == "mode") cfg.eval.mode = rank_mode_from_name(std::string(value));
            else if (key == "ties") cfg.eval.ties = tie_break_from_name(std::string(value));
            else if (key == "ks") {
                cfg.eval.ks = parse_list<std::size_t>(value, [&](std::string_view v) {
                    return parse_int<std::size_t>(v, origin, line_no, key);
                });
            } else if (key == "bucket_spec") cfg.eval.bucket_spec = std::string(value);
            else if (key == "threads") cfg.eval.threads = parse_int<unsigned>(value, origin, line_no, key);
            else bad(origin, line_no, "unknown key '" + key + "' in [eval]");
        } else if (section == "output") {
            if (key == "dir") cfg.output_dir = std::string(value);
            else bad(origin, line_no, "unknown key '" + key + "' in [output]");
        } else {  // grid
            auto one_double = [&](std::string_view v) {
                return parse_double(v, origin, line_no, key);
            };
            if (key == "batch_size") {
                cfg.grid.batch_size = parse_list<std::uint32_t>(value, [&](std::string_view v) {
                    return parse_int<std::uint32_t>(v, origin, line_no, key);
                });
            } else if (key == "dim") {
                cfg.grid.dim = parse_list<std::uint32_t>(value, [&](std::string_view v) {
                    return parse_int<std::uint32_t>(v, origin, line_no, key);
                });
            } else if (key == "lr") cfg.grid.lr = parse_list<double>(value, one_double);
            else if (key == "reg_weight") cfg.grid.reg_weight = parse_list<double>(value, one_double);
            else if (key == "gamma") cfg.grid.gamma = parse_list<double>(value, one_double);
            else if (key == "epsilon") cfg.grid.epsilon = parse_list<double>(value, one_double);
            else bad(origin, line_no, "unknown key '" + key + "' in [grid]");
        }
    }
    // Stochastic relabeling shares the master seed unless a loss seed was
    // threaded through explicitly (the file format has no separate key).
    cfg.train.loss.seed = cfg.train.seed;
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

std::string RunConfig::render() const {
    std::string out;
    out += "[dataset]\n";
    out += "train = " + dataset.train.string() + "\n";
    out += "valid = " + dataset.valid.string() + "\n";
    out += "test = " + dataset.test.string() + "\n";
    out += "entity_types = " + dataset.entity_types.string() + "\n";
    out += "domains = " + dataset.domains.string() + "\n";
    out += "ranges = " + dataset.ranges.string() + "\n";
    out += "\n[train]\n";
    out += "model = " + std::string(model_name(train.model)) + "\n";
    out += "loss = " + std::string(loss_family_name(train.loss.family)) + "\n";
    out += "variant = " + std::string(loss_variant_name(train.loss.variant)) + "\n";
    out += "gamma = " + json_number(train.loss.margin) + "\n";
    out += "epsilon = " + json_number(train.loss.epsilon) + "\n";
    out += "batch_size = " + std::to_string(train.batch_size) + "\n";
    out += "dim = " + std::to_string(train.dim) + "\n";
    out += "lr = " + json_number(train.lr) + "\n";
    out += "regularizer = " + std::string(regularizer_name(train.reg)) + "\n";
    out += "reg_weight = " + json_number(train.reg_weight) + "\n";
    out += "max_epochs = " + std::to_string(train.max_epochs) + "\n";
    out += "seed = " + std::to_string(train.seed) + "\n";
    out += "eval_every = " + std::to_string(train.eval_every) + "\n";
    out += "\n[eval]\n";
    out += "mode = " + std::string(rank_mode_name(eval.mode)) + "\n";
    out += "ties = " + std::string(tie_break_name(eval.ties)) + "\n";
    out += "ks = " + join_list(eval.ks, [](std::size_t k) { return std::to_string(k); }) + "\n";
    if (!eval.bucket_spec.empty()) out += "bucket_spec = " + eval.bucket_spec.string() + "\n";
    out += "threads = " + std::to_string(eval.threads) + "\n";
    out += "\n[output]\n";
    out += "dir = " + output_dir.string() + "\n";
    if (!grid.empty()) {
        auto num = [](double v) { return json_number(v); };
        out += "\n[grid]\n";
        if (!grid.batch_size.empty()) {
            out += "batch_size = " +
                   join_list(grid.batch_size, [](std::uint32_t v) { return std::to_string(v); }) +
                   "\n";
        }
        if (!grid.dim.empty()) {
            out += "dim = " +
                   join_list(grid.dim, [](std::uint32_t v) { return std::to_string(v); }) + "\n";
        }
        if (!grid.lr.empty()) out += "lr = " + join_list(grid.lr, num) + "\n";
        if (!grid.reg_weight.empty()) {
            out += "reg_weight = " + join_list(grid.reg_weight, num) + "\n";
        }
        if (!grid.gamma.empty()) out += "gamma = " + join_list(grid.gamma, num) + "\n";
        if (!grid.epsilon.empty()) out += "epsilon = " + join_list(grid.epsilon, num) + "\n";
    }
    return out;
}

void RunConfig::validate() const {
    train.validate();
    if (eval.ks.empty()) throw ValidationError("[eval] ks must list at least one cutoff");
    for (std::size_t k : eval.ks) {
        if (k == 0) throw ValidationError("[eval] ks entries must be >= 1");
    }
    if (eval.threads == 0) throw ValidationError("[eval] threads must be >= 1");
    const std::filesystem::path* paths[] = {&dataset.train,        &dataset.valid,
                                            &dataset.test,         &dataset.entity_types,
                                            &dataset.domains,      &dataset.ranges};
    const char* names[] = {"train", "valid", "test", "entity_types", "domains", "ranges"};
    for (std::size_t i = 0; i < std::size(paths); ++i) {
        if (paths[i]->empty()) {
            throw ValidationError(std::string("[dataset] ") + names[i] + " is not set");
        }
        if (!std::filesystem::exists(*paths[i])) {
            throw ValidationError(std::string("[dataset] ") + names[i] + " file " +
                                  paths[i]->string() + " does not exist");
        }
    }
    if (!eval.bucket_spec.empty() && !std::filesystem::exists(eval.bucket_spec)) {
        throw ValidationError("[eval] bucket_spec file " + eval.bucket_spec.string() +
                              " does not exist");
    }
}

std::string train_config_signature(const TrainConfig& cfg) {
    std::string s = model_name(cfg.model);
    s += " " + cfg.loss.display_name();
    s += " gamma=" + json_number(cfg.loss.margin);
    s += " epsilon=" + json_number(cfg.loss.epsilon);
    s += " batch_size=" + std::to_string(cfg.batch_size);
    s += " dim=" + std::to_string(cfg.dim);
    s += " lr=" + json_number(cfg.lr);
    s += " reg=" + std::string(regularizer_name(cfg.reg));
    s += " reg_weight=" + json_number(cfg.reg_weight);
    s += " max_epochs=" + std::to_string(cfg.max_epochs);
    s += " seed=" + std::to_string(cfg.seed);
    return s;
}

std::string train_config_hash(const TrainConfig& cfg) {
    // FNV-1a, printed as 16 hex digits.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : train_config_signature(cfg)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    for (int i = 15; i >= 0; --i) {
        buf[i] = "0123456789abcdef"[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

}  // namespace semkge
