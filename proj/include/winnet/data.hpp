#pragma once

#include "winnet/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace winnet {

/// Multichannel series, time-major: values[row * cols() + col].
struct SeriesFrame {
    std::string timestamp_header = "date";
    std::vector<std::string> timestamps;
    std::vector<std::string> names;
    std::vector<double> values;
    std::size_t rows = 0;
    std::string frequency = "unknown";

    std::size_t cols() const { return names.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * names.size() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * names.size() + c]; }
    std::vector<double> column(std::size_t c) const;
    std::optional<std::size_t> find(const std::string& name) const;
    /// Frame restricted to the named channels, in the given order.
    SeriesFrame select(const std::vector<std::size_t>& channels) const;
};

/**
 * Reads the benchmark CSV dialect: header row, first column a timestamp,
 * every other column numeric. Errors name the 1-based data row.
 */
SeriesFrame load_csv(const std::filesystem::path& path);
void write_csv(const SeriesFrame& frame, const std::filesystem::path& path);

/// Guesses "15min", "1h", "1d" ... from the first two timestamps.
std::string infer_frequency(const std::vector<std::string>& timestamps);

// --------------------------------------------------------------- splits

enum class SplitRule { ett_hourly, ett_minute, ratio_70_10_20 };
std::string to_string(SplitRule r);
SplitRule parse_split_rule(const std::string& s);

struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool operator==(const Range&) const = default;
};

struct Splits {
    Range train, val, test;
};

inline constexpr std::size_t kEttHourlyTrain = 12 * 30 * 24;
inline constexpr std::size_t kEttHourlyEval = 4 * 30 * 24;
inline constexpr std::size_t kEttMinuteTrain = 12 * 30 * 24 * 4;
inline constexpr std::size_t kEttMinuteEval = 4 * 30 * 24 * 4;

enum class Features { multivariate, univariate };

struct DatasetSpec {
    std::string name;
    std::filesystem::path path;
    std::string frequency;
    std::size_t channels = 0;  ///< 0 = unchecked
    std::string target;        ///< empty = last column
    SplitRule split = SplitRule::ratio_70_10_20;
    std::size_t length = 0;    ///< 0 = unchecked
    Features features = Features::multivariate;
};

/// Descriptors of the standard benchmark files, keyed by file stem.
std::optional<DatasetSpec> known_dataset(const std::string& name);

/// Fills name/split/size expectations from the file name when it is a known benchmark.
DatasetSpec dataset_spec_for(const std::filesystem::path& path);

/// Checks channel count, length and target against the descriptor.
void validate_frame(const SeriesFrame& frame, const DatasetSpec& spec);

/// Disjoint ordered ranges. Throws when any split is shorter than `min_split_len`.
Splits make_splits(std::size_t rows, SplitRule rule, std::size_t min_split_len = 0);

// --------------------------------------------------------- standardization

struct Standardization {
    std::vector<double> mean;
    std::vector<double> std;
    std::vector<std::size_t> floored;  ///< channels whose std hit the floor
};

inline constexpr double kStdFloor = 1e-8;

struct StandardizedFrame {
    SeriesFrame frame;
    Standardization stats;
};

/// z-scores every row with statistics of the train rows only.
StandardizedFrame standardize(const SeriesFrame& frame, Range train);
SeriesFrame unstandardize(const SeriesFrame& frame, const Standardization& stats);

// ------------------------------------------------------------------ windows

struct WindowSample {
    Tensor x;  ///< [sl, C]
    Tensor y;  ///< [pl, C]
    std::size_t origin = 0;
};

/// Indexable set of (input, target) pairs.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::size_t size() const = 0;
    virtual std::size_t input_length() const = 0;
    virtual std::size_t output_length() const = 0;
    virtual std::size_t channels() const = 0;
    /// x: [k, sl, C], y: [k, pl, C] for k = indices.size().
    virtual void fill(std::span<const std::size_t> indices, Tensor& x, Tensor& y) const = 0;
};

/**
 * Sliding windows fully inside one range: origins begin .. end-sl-pl.
 * An undersized range yields an empty dataset with sufficient() == false.
 */
class WindowDataset final : public SampleSource {
public:
    WindowDataset(std::shared_ptr<const SeriesFrame> frame, Range range, std::size_t sl, std::size_t pl,
                  std::size_t stride = 1);

    std::size_t size() const override { return count_; }
    std::size_t input_length() const override { return sl_; }
    std::size_t output_length() const override { return pl_; }
    std::size_t channels() const override { return frame_->cols(); }
    void fill(std::span<const std::size_t> indices, Tensor& x, Tensor& y) const override;

    bool sufficient() const { return count_ > 0; }
    std::size_t origin(std::size_t i) const { return range_.begin + i * stride_; }
    WindowSample at(std::size_t i) const;
    const Range& range() const { return range_; }

private:
    std::shared_ptr<const SeriesFrame> frame_;
    Range range_;
    std::size_t sl_, pl_, stride_;
    std::size_t count_ = 0;
};

/// In-memory sample set; x [N, sl, C], y [N, pl, C].
class TensorSamples final : public SampleSource {
public:
    TensorSamples(Tensor x, Tensor y);
    std::size_t size() const override { return x_.dim(0); }
    std::size_t input_length() const override { return x_.dim(1); }
    std::size_t output_length() const override { return y_.dim(1); }
    std::size_t channels() const override { return x_.dim(2); }
    void fill(std::span<const std::size_t> indices, Tensor& x, Tensor& y) const override;

private:
    Tensor x_, y_;
};

// ---------------------------------------------------------------- synthetic

/**
 * x_c(t) = sin(2 pi t / period + phi_c) + harmonic * sin(4 pi t / period + 2 phi_c)
 *          + trend_slope * t + N(0, noise_sd^2),  phi_c = 2 pi c / channels.
 */
struct SynthSpec {
    std::size_t length = 5000;
    std::size_t channels = 1;
    double period = 24.0;
    double trend_slope = 0.0;
    double noise_sd = 0.0;
    double harmonic = 0.0;
    std::uint64_t seed = 2021;
};

SeriesFrame synth_generate(const SynthSpec& spec);

// ----------------------------------------------------------------- assembly

struct PreparedData {
    std::shared_ptr<const SeriesFrame> frame;  ///< standardized
    Standardization stats;
    Splits splits;
    WindowDataset train, val, test;
};

/// Selects features, splits, standardizes with train stats, and windows each split.
PreparedData prepare_data(const SeriesFrame& raw, const DatasetSpec& spec, std::size_t sl, std::size_t pl);
PreparedData prepare_data(const DatasetSpec& spec, std::size_t sl, std::size_t pl);

} // namespace winnet
