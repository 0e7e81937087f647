#include "commands.hpp"

#include "winnet/accounting.hpp"
#include "winnet/checkpoint.hpp"
#include "winnet/decomposition.hpp"
#include "winnet/error.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace winnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "model",     "data",        "target",     "features",     "split",     "sl",          "pl",
        "window",    "decomp_kernel", "conv_kernel", "dropout",    "head_mode", "decomp_mode", "pad_mode",
        "revin_affine", "ma_kernel", "channels",  "lr",           "beta1",     "beta2",       "batch_size",
        "epochs",    "patience",    "lr_decay",   "decay_after",  "seed",      "seeds",       "output"};
    return keys;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool is_known(const std::string& key) {
    const auto& k = known_keys();
    return std::find(k.begin(), k.end(), key) != k.end();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw ConfigError("empty list '" + s + "'");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

Features parse_features(const std::string& v) {
    if (v == "M" || v == "multivariate") return Features::multivariate;
    if (v == "S" || v == "univariate") return Features::univariate;
    throw ConfigError("features: expected M or S, got '" + v + "'");
}

std::string features_str(Features f) { return f == Features::multivariate ? "M" : "S"; }

json dataset_json(const DatasetSpec& d) {
    return {{"name", d.name},
            {"path", d.path.string()},
            {"split", to_string(d.split)},
            {"features", features_str(d.features)},
            {"target", d.target}};
}

DatasetSpec dataset_from_json(const json& j) {
    DatasetSpec d = dataset_spec_for(j.at("path").get<std::string>());
    d.split = parse_split_rule(j.at("split").get<std::string>());
    d.features = parse_features(j.at("features").get<std::string>());
    d.target = j.at("target").get<std::string>();
    return d;
}

std::mutex log_mutex;

void log(const std::string& msg) {
    std::lock_guard lock(log_mutex);
    std::cerr << msg << '\n';
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw InputError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_num(double v) {
    std::array<char, 64> buf{};
    const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), p);
}

} // namespace

Settings parse_config_text(const std::string& text, const std::string& origin) {
    Settings out;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find_first_of("=:");
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!is_known(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (value.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty value for '" + key + "'");
        out[key] = value;
    }
    return out;
}

Settings load_config_file(const fs::path& path) { return parse_config_text(read_text(path), path.string()); }

Settings merge(Settings base, const Settings& overrides) {
    for (const auto& [k, v] : overrides) base[k] = v;
    return base;
}

std::string Experiment::run_name() const {
    std::string name = dataset.name + "_" + model + "_sl" + std::to_string(sl()) + "_pl" + std::to_string(pl());
    if (model == "winnet") {
        name += "_n" + std::to_string(winnet.window) + "_" + to_string(winnet.head_mode) + "_" +
                to_string(winnet.decomp_mode) + "_" + to_string(winnet.pad_mode);
    }
    return name + "_" + features_str(dataset.features) + "_s" + std::to_string(train.seed);
}

json Experiment::to_json() const {
    return {{"model", model},
            {"model_config", model == "winnet" ? winnet::to_json(winnet) : winnet::to_json(baseline)},
            {"train", winnet::to_json(train)},
            {"dataset", dataset_json(dataset)},
            {"seeds", seeds}};
}

std::vector<Experiment> resolve_experiments(const Settings& s, bool require_data) {
    for (const auto& [k, v] : s) {
        if (!is_known(k)) throw ConfigError("unknown key '" + k + "'");
    }
    auto get = [&](const std::string& key) -> const std::string* {
        const auto it = s.find(key);
        return it == s.end() ? nullptr : &it->second;
    };

    Experiment base;
    if (const auto* v = get("model")) base.model = *v;
    if (base.model != "winnet") base.baseline.kind = parse_baseline_kind(base.model);

    const auto* data = get("data");
    if (data) {
        if (!fs::exists(*data)) throw ConfigError("data file not found: " + *data);
        base.dataset = dataset_spec_for(*data);
    } else if (require_data) {
        throw ConfigError("no data file given (key 'data' or --data)");
    }
    if (const auto* v = get("split")) base.dataset.split = parse_split_rule(*v);
    if (const auto* v = get("features")) base.dataset.features = parse_features(*v);
    if (const auto* v = get("target")) base.dataset.target = *v;
    if (const auto* v = get("channels")) {
        base.dataset.channels = to_size("channels", *v);
        base.winnet.channels = base.baseline.channels = base.dataset.channels;
    }

    ModelConfig& m = base.winnet;
    if (const auto* v = get("decomp_kernel")) m.decomp_kernel = to_size("decomp_kernel", *v);
    if (const auto* v = get("conv_kernel")) m.conv_kernel = to_size("conv_kernel", *v);
    if (const auto* v = get("dropout")) m.dropout = to_double("dropout", *v);
    if (const auto* v = get("head_mode")) m.head_mode = parse_head_mode(*v);
    if (const auto* v = get("decomp_mode")) m.decomp_mode = parse_decomp_mode(*v);
    if (const auto* v = get("pad_mode")) m.pad_mode = parse_pad_mode(*v);
    if (const auto* v = get("revin_affine")) m.revin_affine = to_bool("revin_affine", *v);
    if (const auto* v = get("ma_kernel")) base.baseline.ma_kernel = to_size("ma_kernel", *v);

    TrainConfig& t = base.train;
    if (const auto* v = get("lr")) t.lr = to_double("lr", *v);
    if (const auto* v = get("beta1")) t.beta1 = to_double("beta1", *v);
    if (const auto* v = get("beta2")) t.beta2 = to_double("beta2", *v);
    if (const auto* v = get("batch_size")) t.batch_size = to_size("batch_size", *v);
    if (const auto* v = get("epochs")) t.max_epochs = to_size("epochs", *v);
    if (const auto* v = get("patience")) t.patience = to_size("patience", *v);
    if (const auto* v = get("lr_decay")) t.lr_decay = to_double("lr_decay", *v);
    if (const auto* v = get("decay_after")) t.decay_after = to_size("decay_after", *v);
    if (const auto* v = get("seed")) t.seed = to_size("seed", *v);
    if (const auto* v = get("seeds")) base.seeds = to_size("seeds", *v);
    if (base.seeds == 0) throw ConfigError("seeds must be >= 1");
    t.validate();

    auto sizes = [&](const std::string& key, std::size_t fallback) {
        std::vector<std::size_t> out;
        if (const auto* v = get(key)) {
            for (const auto& item : split_list(*v)) out.push_back(to_size(key, item));
        } else {
            out.push_back(fallback);
        }
        return out;
    };
    const auto sls = sizes("sl", m.sl);
    const auto pls = sizes("pl", m.pl);
    auto windows = sizes("window", m.window);
    if (base.model != "winnet") windows.resize(1);

    std::vector<Experiment> out;
    for (std::size_t sl : sls) {
        for (std::size_t pl : pls) {
            for (std::size_t n : windows) {
                Experiment e = base;
                e.winnet.sl = e.baseline.sl = sl;
                e.winnet.pl = e.baseline.pl = pl;
                e.winnet.window = n;
                // Channel count comes from the data when not pinned; validate with a stand-in.
                ModelConfig probe = e.winnet;
                BaselineConfig bprobe = e.baseline;
                probe.channels = bprobe.channels = std::max<std::size_t>(1, probe.channels);
                if (e.model == "winnet") probe.validate();
                else bprobe.validate();
                out.push_back(std::move(e));
            }
        }
    }
    return out;
}

fs::path output_root(const std::string& explicit_root) {
    if (!explicit_root.empty()) return explicit_root;
    if (const char* env = std::getenv("WINNET_OUTPUT_ROOT"); env && *env) return env;
    return "runs";
}

std::unique_ptr<Forecaster> build_model(const Experiment& e) {
    if (e.model == "winnet") return std::make_unique<WinNet>(e.winnet, e.train.seed);
    return make_baseline(e.baseline, e.train.seed);
}

RunOutcome run_experiment(const Experiment& spec, const fs::path& dir) {
    Experiment e = spec;
    PreparedData data = prepare_data(e.dataset, e.sl(), e.pl());
    const std::size_t c = data.frame->cols();
    if (e.winnet.channels > 1 && e.winnet.channels != c) {
        throw ConfigError("channels=" + std::to_string(e.winnet.channels) + " but the data has " + std::to_string(c));
    }
    e.winnet.channels = e.baseline.channels = c;
    if (!data.train.sufficient() || !data.val.sufficient() || !data.test.sufficient()) {
        throw ConfigError(e.run_name() + ": a split is shorter than sl + pl");
    }

    fs::create_directories(dir);
    auto model = build_model(e);
    RunOutcome out;
    out.experiment = e;
    out.dir = dir;
    out.trace = structural_trace(*model);
    json config = e.to_json();
    config["structural_trace"] = out.trace;
    config["param_count"] = model->params().numel();
    config["data_channels"] = data.frame->names;
    write_json(dir / "config.json", config);

    log("[" + e.run_name() + "] training on " + std::to_string(data.train.size()) + " windows");
    out.training = train(*model, e.train, data.train, data.val);
    save_checkpoint(dir / "checkpoint", *model,
                    {{"train", to_json(e.train)}, {"dataset", dataset_json(e.dataset)}});

    json history = to_json(out.training);
    history["seed"] = e.train.seed;
    history["config"] = config;
    history["wall_clock_s"] = out.training.wall_clock_s;
    write_json(dir / "history.json", history);

    const auto t0 = std::chrono::steady_clock::now();
    out.test.split = "test";
    out.test.errors = evaluate_model(*model, data.test);
    out.test.samples = data.test.size();
    out.test.horizon = e.pl();
    out.test.config = config;
    out.test.wall_clock_s =
        out.training.wall_clock_s + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json(dir / "metrics.json", to_json(out.test));
    log("[" + e.run_name() + "] test mse " + format_num(out.test.errors.mse) + " mae " +
        format_num(out.test.errors.mae));
    return out;
}

namespace {

// ---------------------------------------------------------------- train

json summary_row(const RunOutcome& r) {
    const Experiment& e = r.experiment;
    return {{"run", e.run_name()},
            {"model", e.model},
            {"dataset", e.dataset.name},
            {"features", features_str(e.dataset.features)},
            {"sl", e.sl()},
            {"pl", e.pl()},
            {"window", e.model == "winnet" ? json(e.winnet.window) : json(nullptr)},
            {"head_mode", e.model == "winnet" ? json(to_string(e.winnet.head_mode)) : json(nullptr)},
            {"decomp_mode", e.model == "winnet" ? json(to_string(e.winnet.decomp_mode)) : json(nullptr)},
            {"pad_mode", e.model == "winnet" ? json(to_string(e.winnet.pad_mode)) : json(nullptr)},
            {"seed", e.train.seed},
            {"mse", r.test.errors.mse},
            {"mae", r.test.errors.mae},
            {"best_epoch", r.training.best_epoch},
            {"epochs_run", r.training.history.size()},
            {"dir", r.dir.string()}};
}

const std::vector<std::string> kSummaryColumns = {"run",         "model",    "dataset", "features", "sl",
                                                  "pl",          "window",   "head_mode", "decomp_mode",
                                                  "pad_mode",    "seed",     "mse",     "mae",      "best_epoch",
                                                  "epochs_run"};

std::string csv_cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return format_num(v.get<double>());
    return v.dump();
}

void write_summary(const fs::path& root, const json& rows) {
    write_json(root / "summary.json", rows);
    std::ofstream csv(root / "summary.csv");
    if (!csv) throw InputError("cannot write " + (root / "summary.csv").string());
    for (std::size_t i = 0; i < kSummaryColumns.size(); ++i) csv << (i ? "," : "") << kSummaryColumns[i];
    csv << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < kSummaryColumns.size(); ++i) {
            csv << (i ? "," : "") << csv_cell(row.value(kSummaryColumns[i], json(nullptr)));
        }
        csv << '\n';
    }
}

int cmd_train(const Settings& settings, std::size_t jobs) {
    const auto experiments = resolve_experiments(settings);
    const fs::path root = output_root(settings.count("output") ? settings.at("output") : "");

    std::vector<Experiment> runs;
    for (const auto& e : experiments) {
        for (std::size_t i = 0; i < e.seeds; ++i) {
            Experiment r = e;
            r.train.seed = e.train.seed + i;
            runs.push_back(std::move(r));
        }
    }
    std::vector<std::optional<RunOutcome>> outcomes(runs.size());
    std::vector<std::exception_ptr> errors(runs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            try {
                outcomes[i] = run_experiment(runs[i], root / runs[i].run_name());
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    jobs = std::clamp<std::size_t>(jobs, 1, runs.size());
    std::vector<std::future<void>> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }

    json rows = json::array();
    for (std::size_t i = 0, r = 0; i < experiments.size(); ++i) {
        double mse = 0.0, mae = 0.0;
        const std::size_t first = r;
        for (std::size_t s = 0; s < experiments[i].seeds; ++s, ++r) {
            rows.push_back(summary_row(*outcomes[r]));
            mse += outcomes[r]->test.errors.mse;
            mae += outcomes[r]->test.errors.mae;
        }
        if (experiments[i].seeds > 1) {
            json mean = summary_row(*outcomes[first]);
            const double k = static_cast<double>(experiments[i].seeds);
            std::string name = mean["run"].get<std::string>();
            name = name.substr(0, name.rfind("_s")) + "_mean";
            mean["run"] = name;
            mean["seed"] = nullptr;
            mean["mse"] = mse / k;
            mean["mae"] = mae / k;
            mean["best_epoch"] = nullptr;
            mean["epochs_run"] = nullptr;
            mean["dir"] = nullptr;
            rows.push_back(mean);
        }
    }
    fs::create_directories(root);
    write_summary(root, rows);
    for (const auto& row : rows) std::cout << row.dump() << '\n';
    return 0;
}

// ----------------------------------------------------------------- eval

int cmd_eval(std::string checkpoint, const std::string& data, const std::string& split, const std::string& out) {
    fs::path stem = checkpoint;
    if (stem.extension() == ".json" || stem.extension() == ".bin") stem.replace_extension();
    if (!fs::exists(fs::path(stem).concat(".json"))) throw ConfigError("checkpoint not found: " + stem.string());
    Checkpoint ck = load_checkpoint(stem);
    DatasetSpec spec;
    if (ck.extra.contains("dataset")) spec = dataset_from_json(ck.extra["dataset"]);
    if (!data.empty()) {
        const DatasetSpec stored = spec;
        spec = dataset_spec_for(data);
        if (!stored.path.empty()) {
            spec.features = stored.features;
            spec.target = stored.target;
        }
    }
    if (spec.path.empty()) throw ConfigError("no data file given (--data)");
    if (!fs::exists(spec.path)) throw ConfigError("data file not found: " + spec.path.string());
    MetricsReport report = evaluate(ck, spec, split);
    report.config["dataset"] = dataset_json(spec);
    const json j = to_json(report);
    if (!out.empty()) {
        if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
        write_json(out, j);
    }
    std::cout << j.dump() << '\n';
    return 0;
}

// ------------------------------------------------------------- analyses

struct AnalysisArgs {
    std::string data;
    std::string channel;
    std::string method;
    std::size_t kernel = 0;
    std::size_t window = 24;
    std::string pad = "trend";
    std::string out;
};

struct SeriesSplit {
    SeriesFrame frame;
    std::string channel;
    std::vector<double> values, trend, seasonal;
};

SeriesSplit analyse(const AnalysisArgs& a) {
    if (!fs::exists(a.data)) throw ConfigError("data file not found: " + a.data);
    SeriesSplit s;
    s.frame = load_csv(a.data);
    std::size_t col = s.frame.cols() - 1;
    if (!a.channel.empty()) {
        const auto found = s.frame.find(a.channel);
        if (!found) throw ConfigError("channel '" + a.channel + "' not in " + a.data);
        col = *found;
    }
    s.channel = s.frame.names[col];
    s.values = s.frame.column(col);
    if (a.method == "ma1d") {
        moving_avg_1d(s.values, a.kernel, s.trend, s.seasonal);
    } else if (a.method == "tdd") {
        tdd_series(s.values, a.window, a.kernel, parse_pad_mode(a.pad), s.trend, s.seasonal);
    } else {
        throw ConfigError("method must be ma1d or tdd, got '" + a.method + "'");
    }
    return s;
}

fs::path analysis_out(const AnalysisArgs& a, const std::string& kind, const std::string& channel) {
    fs::path p = a.out.empty() ? output_root("") / (kind + "_" + fs::path(a.data).stem().string() + "_" + channel + ".csv")
                               : fs::path(a.out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
}

json analysis_json(const AnalysisArgs& a, const SeriesSplit& s) {
    json j = {{"data", a.data}, {"channel", s.channel}, {"method", a.method}, {"kernel", a.kernel}};
    if (a.method == "tdd") {
        j["window"] = a.window;
        j["pad_mode"] = a.pad;
    }
    return j;
}

int cmd_decompose(const AnalysisArgs& a) {
    const SeriesSplit s = analyse(a);
    SeriesFrame out;
    out.timestamp_header = s.frame.timestamp_header;
    out.timestamps = s.frame.timestamps;
    out.names = {"value", "trend", "seasonal"};
    out.rows = s.values.size();
    out.values.reserve(out.rows * 3);
    for (std::size_t i = 0; i < out.rows; ++i) {
        out.values.insert(out.values.end(), {s.values[i], s.trend[i], s.seasonal[i]});
    }
    const fs::path path = analysis_out(a, "decompose", s.channel);
    write_csv(out, path);
    json j = analysis_json(a, s);
    j["rows"] = out.rows;
    j["output"] = path.string();
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_lagcorr(const AnalysisArgs& a, std::size_t max_lag) {
    const SeriesSplit s = analyse(a);
    const auto points = lagged_correlation(s.trend, s.seasonal, max_lag);
    SeriesFrame out;
    out.timestamp_header = "lag";
    out.names = {"r", "abs_r", "degenerate"};
    out.rows = points.size();
    std::size_t peak = 0;
    json maxima = json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        out.timestamps.push_back(std::to_string(p.lag));
        out.values.insert(out.values.end(), {p.r, std::abs(p.r), p.degenerate ? 1.0 : 0.0});
        if (p.lag == 0) continue;
        if (peak == 0 || std::abs(p.r) > std::abs(points[peak].r)) peak = i;
        if (i + 1 < points.size() && i > 1 && std::abs(p.r) > std::abs(points[i - 1].r) &&
            std::abs(p.r) >= std::abs(points[i + 1].r)) {
            maxima.push_back(p.lag);
        }
    }
    const fs::path path = analysis_out(a, "lagcorr", s.channel);
    write_csv(out, path);
    json j = analysis_json(a, s);
    j["max_lag"] = max_lag;
    j["peak_lag"] = points[peak].lag;
    j["peak_r"] = points[peak].r;
    j["local_maxima"] = maxima;
    j["output"] = path.string();
    std::cout << j.dump() << '\n';
    return 0;
}

// ---------------------------------------------------------------- bench

json bench_one(const Experiment& e) {
    json j = {{"model", e.model}};
    if (e.model == "winnet") {
        const Accounting p = count_params(e.winnet);
        const Accounting m = estimate_macs(e.winnet);
        WinNet model(e.winnet);
        j["config"] = to_json(e.winnet);
        j["params"] = p.total;
        j["macs"] = m.total;
        j["breakdown"] = {{"params", to_json(p)}, {"macs", to_json(m)}};
        j["runtime_params"] = model.params().numel();
        j["structural_trace"] = structural_trace(model);
    } else {
        const Accounting p = count_params(e.baseline);
        LinearBaseline model(e.baseline);
        j["config"] = to_json(e.baseline);
        j["params"] = p.total;
        j["macs"] = nullptr;
        j["breakdown"] = {{"params", to_json(p)}};
        j["runtime_params"] = model.params().numel();
        j["structural_trace"] = structural_trace(model);
    }
    return j;
}

int cmd_bench(Settings settings) {
    if (!settings.count("channels")) settings["channels"] = "1";
    const auto experiments = resolve_experiments(settings, false);
    json out = json::array();
    for (const auto& e : experiments) out.push_back(bench_one(e));
    const json result = out.size() == 1 ? out[0] : out;
    if (settings.count("output")) {
        const fs::path root = settings.at("output");
        fs::create_directories(root);
        write_json(root / "bench.json", result);
    }
    std::cout << result.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------- synth

int cmd_synth(const SynthSpec& spec, const std::string& out) {
    if (spec.length == 0 || spec.channels == 0) throw ConfigError("synth: length and channels must be >= 1");
    if (!(spec.period > 0.0)) throw ConfigError("synth: period must be > 0");
    if (spec.noise_sd < 0.0) throw ConfigError("synth: noise sd must be >= 0");
    const fs::path path = out.empty() ? output_root("") / "synth.csv" : fs::path(out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const SeriesFrame frame = synth_generate(spec);
    write_csv(frame, path);
    std::cout << json{{"output", path.string()}, {"rows", frame.rows}, {"channels", frame.cols()},
                      {"period", spec.period}, {"seed", spec.seed}}
                     .dump()
              << '\n';
    return 0;
}

/// Experiment flags shared by train and bench, each bound to a config key.
struct FlagSet {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::string config;

    void attach(CLI::App* app) {
        static const std::vector<std::pair<std::string, std::string>> flags = {
            {"--model", "model"},
            {"--data", "data"},
            {"--target", "target"},
            {"--features", "features"},
            {"--split", "split"},
            {"--sl,--input-length", "sl"},
            {"--pl,--horizon", "pl"},
            {"--window-size,--window", "window"},
            {"--decomp-kernel", "decomp_kernel"},
            {"--conv-kernel", "conv_kernel"},
            {"--dropout", "dropout"},
            {"--head-mode", "head_mode"},
            {"--decomp-mode", "decomp_mode"},
            {"--pad-mode", "pad_mode"},
            {"--revin-affine", "revin_affine"},
            {"--ma-kernel", "ma_kernel"},
            {"--channels", "channels"},
            {"--lr", "lr"},
            {"--beta1", "beta1"},
            {"--beta2", "beta2"},
            {"--batch-size", "batch_size"},
            {"--epochs", "epochs"},
            {"--patience", "patience"},
            {"--lr-decay", "lr_decay"},
            {"--decay-after", "decay_after"},
            {"--seed", "seed"},
            {"--seeds", "seeds"},
            {"--out,--output", "output"},
        };
        app->add_option("--config", config, "flat key = value config file");
        for (const auto& [flag, key] : flags) options[key] = app->add_option(flag, values[key], "config key '" + key + "'");
    }

    Settings resolve() const {
        Settings s = config.empty() ? Settings{} : load_config_file(config);
        Settings overrides;
        for (const auto& [key, opt] : options) {
            if (opt->count() > 0) overrides[key] = values.at(key);
        }
        return merge(std::move(s), overrides);
    }
};

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"WinNet forecasting toolkit"};
    app.require_subcommand(1);

    FlagSet train_flags, bench_flags;
    std::size_t jobs = 1;
    auto* train_cmd = app.add_subcommand("train", "train and test one or more configurations");
    train_flags.attach(train_cmd);
    train_cmd->add_option("--jobs", jobs, "configurations run concurrently")->check(CLI::PositiveNumber);

    std::string ck, eval_data, eval_split = "test", eval_out;
    auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a split");
    eval_cmd->add_option("--checkpoint", ck, "checkpoint stem or .json path")->required();
    eval_cmd->add_option("--data", eval_data, "data file (defaults to the one stored in the checkpoint)");
    eval_cmd->add_option("--split", eval_split, "train, val or test");
    eval_cmd->add_option("--out", eval_out, "metrics JSON path");

    AnalysisArgs dec{.method = "ma1d"}, lag{.method = "tdd"};
    std::size_t max_lag = 72;
    auto analysis_flags = [](CLI::App* cmd, AnalysisArgs& a) {
        cmd->add_option("--data", a.data, "CSV file")->required();
        cmd->add_option("--channel", a.channel, "column name (default: last)");
        cmd->add_option("--method", a.method, "ma1d or tdd")->capture_default_str();
        cmd->add_option("--kernel", a.kernel, "pooling window (default 25 for ma1d, 3 for tdd)");
        cmd->add_option("--window-size,--window", a.window, "tdd sub-window size")->capture_default_str();
        cmd->add_option("--pad-mode", a.pad, "tdd padding: trend or zero")->capture_default_str();
        cmd->add_option("--out", a.out, "CSV path");
    };
    auto* dec_cmd = app.add_subcommand("decompose", "trend/seasonal split of one channel");
    analysis_flags(dec_cmd, dec);
    auto* lag_cmd = app.add_subcommand("lagcorr", "lagged trend/seasonal correlation of one channel");
    analysis_flags(lag_cmd, lag);
    lag_cmd->add_option("--max-lag", max_lag, "largest lag")->capture_default_str();

    auto* bench_cmd = app.add_subcommand("bench", "parameter and MAC accounting");
    bench_flags.attach(bench_cmd);

    SynthSpec synth;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic periodic series");
    synth_cmd->add_option("--length", synth.length)->capture_default_str();
    synth_cmd->add_option("--channels", synth.channels)->capture_default_str();
    synth_cmd->add_option("--period", synth.period)->capture_default_str();
    synth_cmd->add_option("--trend-slope", synth.trend_slope)->capture_default_str();
    synth_cmd->add_option("--noise-sd", synth.noise_sd)->capture_default_str();
    synth_cmd->add_option("--harmonic", synth.harmonic)->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto default_kernel = [](AnalysisArgs& a) {
        if (a.kernel == 0) a.kernel = a.method == "tdd" ? 3 : 25;
    };
    try {
        if (*train_cmd) return cmd_train(train_flags.resolve(), jobs);
        if (*eval_cmd) return cmd_eval(ck, eval_data, eval_split, eval_out);
        if (*dec_cmd) {
            default_kernel(dec);
            return cmd_decompose(dec);
        }
        if (*lag_cmd) {
            default_kernel(lag);
            return cmd_lagcorr(lag, max_lag);
        }
        if (*bench_cmd) return cmd_bench(bench_flags.resolve());
        if (*synth_cmd) return cmd_synth(synth, synth_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace winnet::cli
