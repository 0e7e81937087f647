#include "helpers.hpp"

#include "winnet/data.hpp"
#include "winnet/error.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace winnet;
using testutil::TempDir;

namespace {

std::shared_ptr<const SeriesFrame> ramp_frame(std::size_t rows, std::size_t cols) {
    auto f = std::make_shared<SeriesFrame>();
    f->rows = rows;
    for (std::size_t c = 0; c < cols; ++c) f->names.push_back("c" + std::to_string(c));
    for (std::size_t r = 0; r < rows; ++r) {
        f->timestamps.push_back(std::to_string(r));
        for (std::size_t c = 0; c < cols; ++c) f->values.push_back(double(r) * 10.0 + double(c));
    }
    return f;
}

} // namespace

TEST_SUITE("data") {

TEST_CASE("csv parsing") {
    TempDir dir;
    auto p = dir.write("toy.csv", "date,a,b\n2020-01-01 00:00:00,1,2\n2020-01-01 01:00:00,3.5,-4e-1\n"
                                  "2020-01-01 02:00:00,+5,6\n");
    SeriesFrame f = load_csv(p);
    CHECK(f.rows == 3);
    CHECK(f.cols() == 2);
    CHECK(f.names == std::vector<std::string>{"a", "b"});
    CHECK(f.at(1, 0) == 3.5);
    CHECK(f.at(1, 1) == -0.4);
    CHECK(f.at(2, 0) == 5.0);
    CHECK(f.frequency == "1h");
    CHECK(f.column(1) == std::vector<double>{2, -0.4, 6});
    CHECK(*f.find("b") == 1);
    CHECK_FALSE(f.find("OT"));
}

TEST_CASE("csv errors name the row") {
    TempDir dir;
    std::ostringstream text;
    text << "date,x,y\n";
    for (int r = 1; r <= 6; ++r) text << r << "," << (r == 5 ? "abc" : "1") << ",2\n";
    try {
        load_csv(dir.write("bad.csv", text.str()));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 5);
        CHECK(e.col() == 2);
        CHECK(std::string(e.what()).find("row 5") != std::string::npos);
    }
    CHECK_THROWS_AS(load_csv(dir.write("ragged.csv", "date,x,y\n1,2,3\n2,3\n")), ParseError);
    CHECK_THROWS_AS(load_csv(dir.write("missing.csv", "date,x\n1,\n")), ParseError);
    CHECK_THROWS_AS(load_csv(dir.write("nan.csv", "date,x\n1,nan\n")), ParseError);
    CHECK_THROWS_AS(load_csv(dir / "absent.csv"), InputError);
}

TEST_CASE("csv round trip") {
    TempDir dir;
    SynthSpec s;
    s.length = 300;
    s.channels = 3;
    s.noise_sd = 0.3;
    s.trend_slope = 0.01;
    SeriesFrame f = synth_generate(s);
    write_csv(f, dir / "s.csv");
    SeriesFrame g = load_csv(dir / "s.csv");
    CHECK(g.names == f.names);
    CHECK(g.timestamps == f.timestamps);
    CHECK(g.values == f.values);
}

TEST_CASE("split rules") {
    auto h = make_splits(17420, SplitRule::ett_hourly);
    CHECK(h.train == Range{0, 8640});
    CHECK(h.val == Range{8640, 11520});
    CHECK(h.test == Range{11520, 14400});
    auto m = make_splits(69680, SplitRule::ett_minute);
    CHECK(m.train.size() == 34560);
    CHECK(m.val.size() == 11520);
    CHECK(m.test.size() == 11520);
    auto r = make_splits(100, SplitRule::ratio_70_10_20);
    CHECK(r.train == Range{0, 70});
    CHECK(r.val == Range{70, 80});
    CHECK(r.test == Range{80, 100});
    CHECK_THROWS_AS(make_splits(14399, SplitRule::ett_hourly), ConfigError);
    CHECK_THROWS_AS(make_splits(100, SplitRule::ratio_70_10_20, 11), ConfigError);
    CHECK(parse_split_rule("ratio") == SplitRule::ratio_70_10_20);
    CHECK_THROWS_AS(parse_split_rule("kfold"), ConfigError);
}

TEST_CASE("property: ratio splits are disjoint and ordered") {
    for (std::size_t len = 10; len < 3000; len += 37) {
        auto s = make_splits(len, SplitRule::ratio_70_10_20);
        CHECK(s.train.begin == 0);
        CHECK(s.train.end == s.val.begin);
        CHECK(s.val.end == s.test.begin);
        CHECK(s.test.end == len);
        CHECK(s.train.size() == len * 7 / 10);
        CHECK(s.test.size() == len * 2 / 10);
    }
}

TEST_CASE("known datasets") {
    auto etth1 = known_dataset("ETTh1");
    REQUIRE(etth1);
    CHECK(etth1->channels == 7);
    CHECK(etth1->length == 17420);
    CHECK(etth1->split == SplitRule::ett_hourly);
    auto weather = known_dataset("weather");
    REQUIRE(weather);
    CHECK(weather->channels == 21);
    CHECK(weather->length == 52696);
    CHECK(known_dataset("ETTm2")->split == SplitRule::ett_minute);
    CHECK_FALSE(known_dataset("toy"));
    CHECK(dataset_spec_for("/data/ETTh2.csv").split == SplitRule::ett_hourly);

    SeriesFrame f = synth_generate(SynthSpec{});
    DatasetSpec spec = *etth1;
    CHECK_THROWS_AS(validate_frame(f, spec), ConfigError);
    DatasetSpec loose;
    loose.target = "missing";
    CHECK_THROWS_AS(validate_frame(f, loose), ConfigError);
}

TEST_CASE("standardization") {
    auto f = ramp_frame(50, 2);
    Range train{0, 30};
    auto z = standardize(*f, train);
    for (std::size_t c = 0; c < 2; ++c) {
        double m = 0.0, v = 0.0;
        for (std::size_t r = 0; r < 30; ++r) m += z.frame.at(r, c);
        m /= 30.0;
        for (std::size_t r = 0; r < 30; ++r) v += std::pow(z.frame.at(r, c) - m, 2);
        CHECK(std::abs(m) < 1e-12);
        CHECK(v / 30.0 == doctest::Approx(1.0));
    }
    SeriesFrame back = unstandardize(z.frame, z.stats);
    CHECK(testutil::max_abs_diff(back.values, f->values) < 1e-10);

    auto again = standardize(z.frame, train);
    CHECK(testutil::max_abs_diff(again.frame.values, z.frame.values) < 1e-10);

    // Perturbing rows outside the train range leaves the statistics alone.
    SeriesFrame perturbed = *f;
    for (std::size_t r = 30; r < 50; ++r) perturbed.at(r, 0) += 1e6;
    auto zp = standardize(perturbed, train);
    CHECK(zp.stats.mean == z.stats.mean);
    CHECK(zp.stats.std == z.stats.std);

    SeriesFrame flat = *f;
    for (std::size_t r = 0; r < 50; ++r) flat.at(r, 1) = 7.0;
    auto zf = standardize(flat, train);
    CHECK(zf.stats.floored == std::vector<std::size_t>{1});
    for (std::size_t r = 0; r < 50; ++r) CHECK(zf.frame.at(r, 1) == 0.0);
}

TEST_CASE("window dataset") {
    auto f = ramp_frame(40, 2);
    WindowDataset w(f, Range{5, 15}, 4, 2);
    CHECK(w.size() == 5);
    CHECK(w.sufficient());
    CHECK(w.channels() == 2);
    auto s = w.at(0);
    CHECK(s.origin == 5);
    CHECK(s.x.shape() == Shape{4, 2});
    CHECK(s.y.shape() == Shape{2, 2});
    CHECK(s.y[0] == f->at(5 + 4, 0));
    CHECK(s.x[3 * 2 + 1] == f->at(8, 1));

    WindowDataset tiny(f, Range{0, 5}, 4, 2);
    CHECK_FALSE(tiny.sufficient());
    CHECK(tiny.size() == 0);

    WindowDataset strided(f, Range{0, 40}, 4, 2, 3);
    CHECK(strided.size() == (40 - 4 - 2) / 3 + 1);
    CHECK(strided.origin(2) == 6);

    std::vector<std::size_t> idx = {4, 0};
    Tensor x, y;
    w.fill(idx, x, y);
    CHECK(x.shape() == Shape{2, 4, 2});
    CHECK(x[0] == f->at(9, 0));
    CHECK(y[8 * 0 + 4] == f->at(5 + 4, 0));
    CHECK_THROWS_AS(w.fill(std::vector<std::size_t>{5}, x, y), DimensionError);
}

TEST_CASE("property: window count and reconstruction") {
    auto f = ramp_frame(120, 1);
    for (std::size_t len = 2; len <= 60; len += 3)
        for (std::size_t sl = 1; sl <= 12; sl += 2)
            for (std::size_t pl = 1; pl <= 6; ++pl) {
                const std::size_t begin = 7;
                WindowDataset w(f, Range{begin, begin + len}, sl, pl);
                const std::size_t want = len >= sl + pl ? len - sl - pl + 1 : 0;
                CHECK(w.size() == want);
                if (want == 0) continue;
                // Reading x[i][0] for every window then the last window's tail reproduces the range.
                std::vector<double> seq;
                for (std::size_t i = 0; i < w.size(); ++i) seq.push_back(w.at(i).x[0]);
                auto last = w.at(w.size() - 1);
                for (std::size_t t = 1; t < sl; ++t) seq.push_back(last.x[t]);
                for (std::size_t t = 0; t < pl; ++t) seq.push_back(last.y[t]);
                REQUIRE(seq.size() == len);
                for (std::size_t t = 0; t < len; ++t) CHECK(seq[t] == f->at(begin + t, 0));
            }
}

TEST_CASE("property: no leakage across splits") {
    for (std::size_t len : {1300u, 2345u, 4000u}) {
        DatasetSpec spec;
        spec.name = "synthetic";
        spec.split = SplitRule::ratio_70_10_20;
        SynthSpec s;
        s.length = len;
        s.channels = 2;
        for (std::size_t sl : {24u, 96u}) {
            PreparedData d = prepare_data(synth_generate(s), spec, sl, 24);
            const WindowDataset* sets[] = {&d.train, &d.val, &d.test};
            const Range ranges[] = {d.splits.train, d.splits.val, d.splits.test};
            for (int k = 0; k < 3; ++k) {
                const auto& w = *sets[k];
                REQUIRE(w.size() > 0);
                CHECK(w.origin(0) >= ranges[k].begin);
                CHECK(w.origin(w.size() - 1) + sl + 24 <= ranges[k].end);
            }
            CHECK(d.train.origin(d.train.size() - 1) + sl + 24 <= d.splits.val.begin);
            CHECK(d.val.origin(d.val.size() - 1) + sl + 24 <= d.splits.test.begin);
        }
    }
}

TEST_CASE("prepare data for ett-style files") {
    SynthSpec s;
    s.length = 17420;
    s.channels = 7;
    s.noise_sd = 0.1;
    DatasetSpec spec = *known_dataset("ETTh1");
    PreparedData d = prepare_data(synth_generate(s), spec, 96, 96);
    CHECK(d.splits.train == Range{0, 8640});
    CHECK(d.train.size() == 8640 - 96 - 96 + 1);
    CHECK(d.frame->cols() == 7);

    spec.features = Features::univariate;
    PreparedData u = prepare_data(synth_generate(s), spec, 96, 96);
    CHECK(u.frame->cols() == 1);
    CHECK(u.frame->names[0] == "OT");
}

TEST_CASE("synthetic series") {
    SynthSpec s;
    s.length = 480;
    s.period = 24;
    SeriesFrame f = synth_generate(s);
    double peak = 0.0;
    for (double v : f.values) peak = std::max(peak, std::abs(v));
    CHECK(peak == doctest::Approx(1.0));
    CHECK(f.at(6, 0) == doctest::Approx(1.0));
    CHECK(f.names.back() == "OT");

    s.noise_sd = 0.5;
    s.channels = 2;
    CHECK(synth_generate(s).values == synth_generate(s).values);
    SynthSpec other = s;
    other.seed = 7;
    CHECK(synth_generate(other).values != synth_generate(s).values);

    SynthSpec big;
    big.length = 100000;
    big.period = 24;
    big.noise_sd = 0.3;
    SeriesFrame noisy = synth_generate(big);
    big.noise_sd = 0.0;
    SeriesFrame clean = synth_generate(big);
    double var = 0.0;
    for (std::size_t i = 0; i < noisy.values.size(); ++i) var += std::pow(noisy.values[i] - clean.values[i], 2);
    var /= double(noisy.values.size());
    CHECK(std::abs(var - 0.09) < 0.05 * 0.09);

    s.period = 1.5;
    CHECK_THROWS_AS(synth_generate(s), ConfigError);
}

TEST_CASE("tensor samples") {
    Tensor x = testutil::random_tensor({5, 4, 2}, 1), y = testutil::random_tensor({5, 3, 2}, 2);
    TensorSamples t(x, y);
    CHECK(t.size() == 5);
    CHECK(t.input_length() == 4);
    CHECK(t.output_length() == 3);
    Tensor bx, by;
    t.fill(std::vector<std::size_t>{3}, bx, by);
    CHECK(bx[0] == x[3 * 8]);
    CHECK(by[5] == y[3 * 6 + 5]);
    CHECK_THROWS_AS(TensorSamples(Tensor(Shape{5, 4, 2}), Tensor(Shape{4, 3, 2})), DimensionError);
}

}
