#include "helpers.hpp"

#include "commands.hpp"
#include "winnet/error.hpp"

#include <doctest.h>

#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>

using namespace winnet;
using namespace winnet::cli;
using testutil::TempDir;

namespace {

struct Invocation {
    int code;
    std::string out;
};

Invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "winnet");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream captured, errors;
    auto* old_out = std::cout.rdbuf(captured.rdbuf());
    auto* old_err = std::cerr.rdbuf(errors.rdbuf());
    const int code = run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return {code, captured.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    return lines;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing") {
    Settings s = parse_config_text("# comment\nmodel = winnet\nsl: 96\n\nwindow = 8, 12 # trailing\n");
    CHECK(s.at("model") == "winnet");
    CHECK(s.at("sl") == "96");
    CHECK(s.at("window") == "8, 12");
    try {
        parse_config_text("sl = 96\nbogus = 1\n", "a.cfg");
        FAIL("expected rejection");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("a.cfg:2") != std::string::npos);
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("no separator here\n"), ConfigError);
    CHECK_THROWS_AS(load_config_file("/nonexistent/x.cfg"), ConfigError);

    Settings merged = merge(s, {{"sl", "336"}, {"lr", "0.01"}});
    CHECK(merged.at("sl") == "336");
    CHECK(merged.at("lr") == "0.01");
    CHECK(merged.at("model") == "winnet");
}

TEST_CASE("experiment resolution") {
    Settings s = {{"sl", "96"}, {"pl", "24,48"}, {"window", "8,12,16"}};
    auto ex = resolve_experiments(s, false);
    REQUIRE(ex.size() == 6);
    CHECK(ex[0].pl() == 24);
    CHECK(ex[0].winnet.window == 8);
    CHECK(ex[2].winnet.window == 16);
    CHECK(ex[3].pl() == 48);
    std::set<std::string> names;
    for (const auto& e : ex) names.insert(e.run_name());
    CHECK(names.size() == 6);

    auto base = resolve_experiments({{"model", "dlinear"}, {"window", "8,12"}}, false);
    CHECK(base.size() == 1);
    CHECK(base[0].baseline.kind == BaselineKind::dlinear);

    CHECK_THROWS_AS(resolve_experiments({{"head_mode", "sideways"}}, false), ConfigError);
    CHECK_THROWS_AS(resolve_experiments({{"sl", "abc"}}, false), ConfigError);
    CHECK_THROWS_AS(resolve_experiments({{"model", "transformer"}}, false), ConfigError);
    CHECK_THROWS_AS(resolve_experiments({{"data", "/nonexistent.csv"}}), ConfigError);
}

TEST_CASE("ablation flags give distinct runs") {
    const std::vector<Settings> variants = {
        {},
        {{"head_mode", "within_only"}},
        {{"head_mode", "cross_only"}},
        {{"decomp_mode", "moving_avg_1d"}},
        {{"pad_mode", "zero"}},
    };
    std::set<std::string> configs, names;
    std::set<std::vector<std::string>> traces;
    for (const auto& v : variants) {
        Settings s = merge({{"sl", "96"}, {"pl", "24"}, {"window", "8"}, {"channels", "1"}}, v);
        auto e = resolve_experiments(s, false).at(0);
        configs.insert(e.to_json().dump());
        names.insert(e.run_name());
        traces.insert(structural_trace(*build_model(e)));
    }
    CHECK(configs.size() == variants.size());
    CHECK(names.size() == variants.size());
    CHECK(traces.size() == variants.size());
}

TEST_CASE("synth") {
    TempDir dir;
    const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
    CHECK(invoke({"synth", "--length", "5000", "--channels", "2", "--period", "24", "--seed", "4", "--out", a}).code == 0);
    CHECK(invoke({"synth", "--length", "5000", "--channels", "2", "--period", "24", "--seed", "4", "--out", b}).code == 0);
    CHECK(slurp(a) == slurp(b));
    SeriesFrame f = load_csv(a);
    CHECK(f.rows == 5000);
    CHECK(f.names.size() == 2);
    CHECK(invoke({"synth", "--length", "5000", "--seed", "5", "--out", b}).code == 0);
    CHECK(slurp(a) != slurp(b));
}

TEST_CASE("train, eval and summary") {
    TempDir dir;
    const auto data = (dir / "toy.csv").string();
    REQUIRE(invoke({"synth", "--length", "900", "--channels", "2", "--out", data}).code == 0);
    const auto out = (dir / "runs").string();
    auto r = invoke({"train", "--data", data, "--split", "ratio", "--sl", "48", "--pl", "12", "--window", "6,8",
                     "--epochs", "2", "--out", out, "--jobs", "2"});
    REQUIRE(r.code == 0);
    CHECK(lines_of(r.out).size() == 2);
    auto rows = lines_of(slurp(dir / "runs" / "summary.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].rfind("run,model,dataset", 0) == 0);
    nlohmann::json summary = nlohmann::json::parse(slurp(dir / "runs" / "summary.json"));
    REQUIRE(summary.size() == 2);
    const std::string run = summary[0]["run"];
    CHECK(rows[1].rfind(run + ",", 0) == 0);
    const auto run_dir = dir / "runs" / run;
    for (const char* f : {"config.json", "checkpoint.json", "checkpoint.bin", "history.json", "metrics.json"})
        CHECK(std::filesystem::exists(run_dir / f));
    auto metrics = nlohmann::json::parse(slurp(run_dir / "metrics.json"));
    CHECK(metrics["mse"].get<double>() >= 0.0);
    CHECK(metrics.contains("mae"));
    auto history = nlohmann::json::parse(slurp(run_dir / "history.json"));
    CHECK(history["history"].size() == 2);
    CHECK(history.contains("seed"));

    const auto scored = (dir / "eval.json").string();
    CHECK(invoke({"eval", "--checkpoint", (run_dir / "checkpoint").string(), "--split", "test", "--out", scored}).code == 0);
    auto again = nlohmann::json::parse(slurp(scored));
    CHECK(again["mse"].get<double>() == doctest::Approx(metrics["mse"].get<double>()).epsilon(1e-9));

    CHECK(invoke({"eval", "--checkpoint", (dir / "missing").string()}).code == 2);
}

TEST_CASE("seed averaging") {
    TempDir dir;
    const auto data = (dir / "toy.csv").string();
    REQUIRE(invoke({"synth", "--length", "700", "--out", data}).code == 0);
    auto r = invoke({"train", "--data", data, "--split", "ratio", "--model", "linear", "--sl", "48", "--pl", "12",
                     "--epochs", "1", "--seeds", "2", "--out", (dir / "runs").string()});
    REQUIRE(r.code == 0);
    auto summary = nlohmann::json::parse(slurp(dir / "runs" / "summary.json"));
    REQUIRE(summary.size() == 3);
    const double mean = (summary[0]["mse"].get<double>() + summary[1]["mse"].get<double>()) / 2.0;
    CHECK(summary[2]["mse"].get<double>() == doctest::Approx(mean));
    CHECK(summary[2]["run"].get<std::string>().find("_mean") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
    TempDir dir;
    dir.write("bad.cfg", "sl = 96\nwat = 3\n");
    CHECK(invoke({"train", "--config", (dir / "bad.cfg").string()}).code == 2);
    CHECK(invoke({"train", "--data", "/nonexistent.csv"}).code == 2);
    CHECK(invoke({"nonsense"}).code == 2);
    CHECK(invoke({"bench", "--sl", "96", "--window", "1"}).code == 2);
}

TEST_CASE("decompose") {
    TempDir dir;
    std::string csv = "date,value\n";
    for (int i = 0; i < 200; ++i) csv += std::to_string(i) + ",4.5\n";
    dir.write("flat.csv", csv);
    const auto out = (dir / "dec.csv").string();
    REQUIRE(invoke({"decompose", "--data", (dir / "flat.csv").string(), "--out", out}).code == 0);
    SeriesFrame f = load_csv(out);
    REQUIRE(f.rows == 200);
    CHECK(f.names == std::vector<std::string>{"value", "trend", "seasonal"});
    for (std::size_t i = 0; i < f.rows; ++i) {
        CHECK(f.at(i, 1) == doctest::Approx(4.5));
        CHECK(std::abs(f.at(i, 2)) < 1e-12);
    }
    REQUIRE(invoke({"decompose", "--data", (dir / "flat.csv").string(), "--method", "tdd", "--window", "8",
                    "--out", out}).code == 0);
    f = load_csv(out);
    for (std::size_t i = 0; i < f.rows; ++i) CHECK(std::abs(f.at(i, 2)) < 1e-12);
}

TEST_CASE("lagcorr") {
    TempDir dir;
    const auto data = (dir / "s.csv").string();
    REQUIRE(invoke({"synth", "--length", "3000", "--period", "24", "--trend-slope", "0.001", "--noise-sd", "0.1",
                    "--out", data}).code == 0);
    const auto out = (dir / "lag.csv").string();
    auto r = invoke({"lagcorr", "--data", data, "--max-lag", "48", "--out", out});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    const int peak = j["peak_lag"];
    CHECK(std::abs(peak - 24) <= 1);
    SeriesFrame f = load_csv(out);
    CHECK(f.rows == 49);
    CHECK(f.names == std::vector<std::string>{"r", "abs_r", "degenerate"});
}

TEST_CASE("bench") {
    auto r = invoke({"bench", "--sl", "720", "--pl", "720", "--window", "24"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["params"] == 830776);
    CHECK(j["runtime_params"] == 830776);
    CHECK(j["macs"] == 860544);
    auto d = nlohmann::json::parse(invoke({"bench", "--model", "dlinear", "--sl", "720", "--pl", "720"}).out);
    CHECK(d["params"] == 1038240);
    CHECK(d["macs"].is_null());
}

}
