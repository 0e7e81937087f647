#include "winnet/data.hpp"

#include "winnet/error.hpp"
#include "winnet/ops.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace winnet {

std::vector<double> SeriesFrame::column(std::size_t c) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
    return out;
}

std::optional<std::size_t> SeriesFrame::find(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

SeriesFrame SeriesFrame::select(const std::vector<std::size_t>& channels) const {
    SeriesFrame out;
    out.timestamp_header = timestamp_header;
    out.timestamps = timestamps;
    out.rows = rows;
    out.frequency = frequency;
    for (auto c : channels) {
        if (c >= cols()) throw DimensionError("channel index " + std::to_string(c) + " out of range");
        out.names.push_back(names[c]);
    }
    out.values.resize(rows * channels.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < channels.size(); ++k) out.values[r * channels.size() + k] = at(r, channels[k]);
    }
    return out;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return cells;
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y = static_cast<int>(static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2));
}

std::optional<std::int64_t> parse_timestamp_minutes(const std::string& ts) {
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0;
    const int got = std::sscanf(ts.c_str(), "%d-%u-%u %u:%u", &y, &mo, &d, &h, &mi);
    if (got < 3) return std::nullopt;
    if (got < 5) h = mi = 0;
    return days_from_civil(y, mo, d) * 1440 + h * 60 + mi;
}

std::string format_hourly_timestamp(std::int64_t hours_since_epoch) {
    const std::int64_t days = hours_since_epoch / 24;
    const auto hour = static_cast<int>(hours_since_epoch % 24);
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:00:00", y, m, d, hour);
    return buf;
}

} // namespace

SeriesFrame load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open CSV file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV file: " + path.string());
    SeriesFrame frame;
    auto header = split_commas(line);
    if (header.size() < 2) throw ParseError("CSV header needs a timestamp column and at least one channel", 0, 0);
    frame.timestamp_header = std::string(header[0]);
    for (std::size_t i = 1; i < header.size(); ++i) frame.names.emplace_back(header[i]);

    const std::size_t width = header.size();
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        auto cells = split_commas(line);
        if (cells.size() != width) {
            throw ParseError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                 " cells, header has " + std::to_string(width),
                             row, 0);
        }
        frame.timestamps.emplace_back(cells[0]);
        for (std::size_t c = 1; c < width; ++c) {
            double v = 0.0;
            if (!parse_double(cells[c], v)) {
                throw ParseError("non-numeric value '" + std::string(cells[c]) + "' at row " + std::to_string(row) +
                                     ", column '" + frame.names[c - 1] + "'",
                                 row, c + 1);
            }
            frame.values.push_back(v);
        }
    }
    frame.rows = row;
    frame.frequency = infer_frequency(frame.timestamps);
    return frame;
}

void write_csv(const SeriesFrame& frame, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw InputError("cannot write CSV file: " + path.string());
    out << frame.timestamp_header;
    for (const auto& n : frame.names) out << ',' << n;
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < frame.rows; ++r) {
        out << (r < frame.timestamps.size() ? frame.timestamps[r] : std::to_string(r));
        for (std::size_t c = 0; c < frame.cols(); ++c) {
            const auto res = std::to_chars(buf, buf + sizeof buf, frame.at(r, c));
            out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
    }
    if (!out) throw InputError("failed while writing CSV file: " + path.string());
}

std::string infer_frequency(const std::vector<std::string>& timestamps) {
    if (timestamps.size() < 2) return "unknown";
    const auto a = parse_timestamp_minutes(timestamps[0]);
    const auto b = parse_timestamp_minutes(timestamps[1]);
    if (!a || !b || *b <= *a) return "unknown";
    const std::int64_t step = *b - *a;
    if (step % 1440 == 0) return std::to_string(step / 1440) + "d";
    if (step % 60 == 0) return std::to_string(step / 60) + "h";
    return std::to_string(step) + "min";
}

// --------------------------------------------------------------- splits

std::string to_string(SplitRule r) {
    switch (r) {
    case SplitRule::ett_hourly: return "ett_hourly";
    case SplitRule::ett_minute: return "ett_minute";
    case SplitRule::ratio_70_10_20: return "ratio_70_10_20";
    }
    return "?";
}

SplitRule parse_split_rule(const std::string& s) {
    if (s == "ett_hourly") return SplitRule::ett_hourly;
    if (s == "ett_minute") return SplitRule::ett_minute;
    if (s == "ratio_70_10_20" || s == "ratio") return SplitRule::ratio_70_10_20;
    throw ConfigError("unknown split rule '" + s + "' (ett_hourly, ett_minute, ratio_70_10_20)");
}

std::optional<DatasetSpec> known_dataset(const std::string& name) {
    struct Row {
        const char* name;
        std::size_t channels;
        std::size_t length;
        const char* freq;
        SplitRule split;
    };
    static const Row table[] = {
        {"ETTh1", 7, 17420, "1h", SplitRule::ett_hourly},
        {"ETTh2", 7, 17420, "1h", SplitRule::ett_hourly},
        {"ETTm1", 7, 69680, "15min", SplitRule::ett_minute},
        {"ETTm2", 7, 69680, "15min", SplitRule::ett_minute},
        {"weather", 21, 52696, "10min", SplitRule::ratio_70_10_20},
        {"electricity", 321, 26304, "1h", SplitRule::ratio_70_10_20},
        {"traffic", 862, 17544, "1h", SplitRule::ratio_70_10_20},
        {"exchange_rate", 8, 7588, "1d", SplitRule::ratio_70_10_20},
    };
    for (const auto& row : table) {
        if (name == row.name) {
            DatasetSpec spec;
            spec.name = row.name;
            spec.channels = row.channels;
            spec.length = row.length;
            spec.frequency = row.freq;
            spec.split = row.split;
            spec.target = "OT";
            return spec;
        }
    }
    return std::nullopt;
}

DatasetSpec dataset_spec_for(const std::filesystem::path& path) {
    const std::string stem = path.stem().string();
    DatasetSpec spec = known_dataset(stem).value_or(DatasetSpec{});
    if (spec.name.empty()) spec.name = stem;
    spec.path = path;
    return spec;
}

void validate_frame(const SeriesFrame& frame, const DatasetSpec& spec) {
    if (spec.channels != 0 && frame.cols() != spec.channels) {
        throw ConfigError(spec.name + ": expected " + std::to_string(spec.channels) + " channels, file has " +
                          std::to_string(frame.cols()));
    }
    if (spec.length != 0 && frame.rows != spec.length) {
        throw ConfigError(spec.name + ": expected " + std::to_string(spec.length) + " rows, file has " +
                          std::to_string(frame.rows));
    }
    if (!spec.target.empty() && !frame.find(spec.target)) {
        throw ConfigError(spec.name + ": target channel '" + spec.target + "' not in header");
    }
}

Splits make_splits(std::size_t rows, SplitRule rule, std::size_t min_split_len) {
    Splits s;
    switch (rule) {
    case SplitRule::ett_hourly:
    case SplitRule::ett_minute: {
        const std::size_t tr = rule == SplitRule::ett_hourly ? kEttHourlyTrain : kEttMinuteTrain;
        const std::size_t ev = rule == SplitRule::ett_hourly ? kEttHourlyEval : kEttMinuteEval;
        if (rows < tr + 2 * ev) {
            throw ConfigError("series of " + std::to_string(rows) + " rows too short for " + to_string(rule) +
                              " split (" + std::to_string(tr + 2 * ev) + " needed)");
        }
        s = {{0, tr}, {tr, tr + ev}, {tr + ev, tr + 2 * ev}};
        break;
    }
    case SplitRule::ratio_70_10_20: {
        const std::size_t tr = rows * 7 / 10;
        const std::size_t te = rows * 2 / 10;
        s = {{0, tr}, {tr, rows - te}, {rows - te, rows}};
        break;
    }
    }
    for (const Range* r : {&s.train, &s.val, &s.test}) {
        if (r->size() == 0 || r->size() < min_split_len) {
            throw ConfigError("split [" + std::to_string(r->begin) + ", " + std::to_string(r->end) +
                              ") shorter than sl+pl = " + std::to_string(min_split_len));
        }
    }
    return s;
}

// --------------------------------------------------------- standardization

StandardizedFrame standardize(const SeriesFrame& frame, Range train) {
    if (train.size() == 0 || train.end > frame.rows) throw ConfigError("standardize: empty or invalid train range");
    const std::size_t C = frame.cols();
    Standardization st;
    st.mean.assign(C, 0.0);
    st.std.assign(C, 0.0);
    const double n = static_cast<double>(train.size());
    for (std::size_t c = 0; c < C; ++c) {
        double m = 0.0;
        for (std::size_t r = train.begin; r < train.end; ++r) m += frame.at(r, c);
        m /= n;
        double v = 0.0;
        for (std::size_t r = train.begin; r < train.end; ++r) v += (frame.at(r, c) - m) * (frame.at(r, c) - m);
        double s = std::sqrt(v / n);
        if (!(s > kStdFloor)) {
            s = kStdFloor;
            st.floored.push_back(c);
            std::cerr << "warning: channel '" << frame.names[c] << "' has zero variance on the train split\n";
        }
        st.mean[c] = m;
        st.std[c] = s;
    }
    StandardizedFrame out{frame, st};
    for (std::size_t r = 0; r < frame.rows; ++r) {
        for (std::size_t c = 0; c < C; ++c) out.frame.at(r, c) = (frame.at(r, c) - st.mean[c]) / st.std[c];
    }
    return out;
}

SeriesFrame unstandardize(const SeriesFrame& frame, const Standardization& stats) {
    if (stats.mean.size() != frame.cols()) throw DimensionError("unstandardize: stats do not match channels");
    SeriesFrame out = frame;
    for (std::size_t r = 0; r < frame.rows; ++r) {
        for (std::size_t c = 0; c < frame.cols(); ++c) out.at(r, c) = frame.at(r, c) * stats.std[c] + stats.mean[c];
    }
    return out;
}

// ------------------------------------------------------------------ windows

WindowDataset::WindowDataset(std::shared_ptr<const SeriesFrame> frame, Range range, std::size_t sl, std::size_t pl,
                             std::size_t stride)
    : frame_(std::move(frame)), range_(range), sl_(sl), pl_(pl), stride_(stride) {
    if (stride_ == 0) throw ConfigError("window stride must be >= 1");
    if (range_.end > frame_->rows) throw DimensionError("window range exceeds frame length");
    if (range_.size() >= sl_ + pl_) count_ = (range_.size() - sl_ - pl_) / stride_ + 1;
}

void WindowDataset::fill(std::span<const std::size_t> indices, Tensor& x, Tensor& y) const {
    const std::size_t C = channels();
    const Shape xs{indices.size(), sl_, C}, ys{indices.size(), pl_, C};
    if (x.shape() != xs) x = Tensor(xs);
    if (y.shape() != ys) y = Tensor(ys);
    const double* src = frame_->values.data();
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= count_) throw DimensionError("window index out of range");
        const std::size_t o = origin(indices[k]);
        std::copy_n(src + o * C, sl_ * C, x.data().data() + k * sl_ * C);
        std::copy_n(src + (o + sl_) * C, pl_ * C, y.data().data() + k * pl_ * C);
    }
}

WindowSample WindowDataset::at(std::size_t i) const {
    const std::size_t one[] = {i};
    WindowSample s;
    fill(one, s.x, s.y);
    s.x = reshape(nullptr, s.x, Shape{sl_, channels()});
    s.y = reshape(nullptr, s.y, Shape{pl_, channels()});
    s.origin = origin(i);
    return s;
}

TensorSamples::TensorSamples(Tensor x, Tensor y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.rank() != 3 || y_.rank() != 3 || x_.dim(0) != y_.dim(0) || x_.dim(2) != y_.dim(2)) {
        throw DimensionError("samples must be x [N, sl, C] and y [N, pl, C]");
    }
}

void TensorSamples::fill(std::span<const std::size_t> indices, Tensor& x, Tensor& y) const {
    const std::size_t xi = x_.dim(1) * x_.dim(2), yi = y_.dim(1) * y_.dim(2);
    const Shape xs{indices.size(), x_.dim(1), x_.dim(2)}, ys{indices.size(), y_.dim(1), y_.dim(2)};
    if (x.shape() != xs) x = Tensor(xs);
    if (y.shape() != ys) y = Tensor(ys);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        std::copy_n(x_.data().data() + indices[k] * xi, xi, x.data().data() + k * xi);
        std::copy_n(y_.data().data() + indices[k] * yi, yi, y.data().data() + k * yi);
    }
}

// ---------------------------------------------------------------- synthetic

SeriesFrame synth_generate(const SynthSpec& spec) {
    if (spec.period < 2.0) throw ConfigError("synthetic period must be >= 2");
    if (spec.channels == 0 || spec.length == 0) throw ConfigError("synthetic series needs length and channels");
    SeriesFrame f;
    f.rows = spec.length;
    f.frequency = "1h";
    for (std::size_t c = 0; c < spec.channels; ++c) {
        f.names.push_back(c + 1 == spec.channels ? "OT" : "ch" + std::to_string(c));
    }
    const std::int64_t start = days_from_civil(2016, 7, 1) * 24;
    f.timestamps.reserve(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) f.timestamps.push_back(format_hourly_timestamp(start + t));

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    f.values.resize(spec.length * spec.channels);
    const double w = 2.0 * std::numbers::pi / spec.period;
    for (std::size_t t = 0; t < spec.length; ++t) {
        const double td = static_cast<double>(t);
        for (std::size_t c = 0; c < spec.channels; ++c) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(spec.channels);
            double v = std::sin(w * td + phase) + spec.trend_slope * td;
            if (spec.harmonic != 0.0) v += spec.harmonic * std::sin(2.0 * w * td + 2.0 * phase);
            if (spec.noise_sd > 0.0) v += spec.noise_sd * noise(rng);
            f.at(t, c) = v;
        }
    }
    return f;
}

// ----------------------------------------------------------------- assembly

PreparedData prepare_data(const SeriesFrame& raw, const DatasetSpec& spec, std::size_t sl, std::size_t pl) {
    validate_frame(raw, spec);
    SeriesFrame selected = raw;
    if (spec.features == Features::univariate) {
        const std::size_t target = spec.target.empty() ? raw.cols() - 1 : *raw.find(spec.target);
        selected = raw.select({target});
    }
    Splits splits = make_splits(selected.rows, spec.split, sl + pl);
    StandardizedFrame z = standardize(selected, splits.train);
    auto frame = std::make_shared<const SeriesFrame>(std::move(z.frame));
    return PreparedData{frame,
                        std::move(z.stats),
                        splits,
                        WindowDataset(frame, splits.train, sl, pl),
                        WindowDataset(frame, splits.val, sl, pl),
                        WindowDataset(frame, splits.test, sl, pl)};
}

PreparedData prepare_data(const DatasetSpec& spec, std::size_t sl, std::size_t pl) {
    return prepare_data(load_csv(spec.path), spec, sl, pl);
}

} // namespace winnet
