#pragma once

#include "winnet/baselines.hpp"
#include "winnet/data.hpp"
#include "winnet/model.hpp"
#include "winnet/train.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace winnet::cli {

/// Flat key/value settings; values keep their textual form until resolved.
using Settings = std::map<std::string, std::string>;

/// Every key accepted by config files and overrides.
const std::vector<std::string>& known_keys();

/**
 * Parses "key = value" lines. '#' starts a comment, blank lines are
 * skipped, unknown keys and malformed lines are errors.
 */
Settings parse_config_text(const std::string& text, const std::string& origin = "<config>");
Settings load_config_file(const std::filesystem::path& path);

/// Later entries win.
Settings merge(Settings base, const Settings& overrides);

/// One fully resolved training run.
struct Experiment {
    std::string model = "winnet";
    ModelConfig winnet;
    BaselineConfig baseline;
    TrainConfig train;
    DatasetSpec dataset;
    std::size_t seeds = 1;

    std::size_t sl() const { return winnet.sl; }
    std::size_t pl() const { return winnet.pl; }
    std::string run_name() const;
    nlohmann::json to_json() const;
};

/**
 * Expands the comma lists in sl / pl / window into one experiment per
 * combination, in that nesting order. Validates value domains and, when
 * `require_data` is set, that the data file exists.
 */
std::vector<Experiment> resolve_experiments(const Settings& settings, bool require_data = true);

struct RunOutcome {
    Experiment experiment;
    std::filesystem::path dir;
    MetricsReport test;
    TrainResult training;
    std::vector<std::string> trace;
};

/// Trains, checkpoints and scores one experiment into `dir`.
RunOutcome run_experiment(const Experiment& e, const std::filesystem::path& dir);

/// Output root: explicit value, else $WINNET_OUTPUT_ROOT, else "runs".
std::filesystem::path output_root(const std::string& explicit_root);

std::unique_ptr<Forecaster> build_model(const Experiment& e);

/// Program entry; returns the process exit code.
int run_cli(int argc, char** argv);

} // namespace winnet::cli
