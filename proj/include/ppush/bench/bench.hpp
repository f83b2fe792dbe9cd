#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppush/algos/data.hpp"
#include "ppush/algos/predict.hpp"
#include "ppush/core/mlp.hpp"

namespace ppush::bench {

enum class Algorithm { Svgd, Ensemble, Swag };

std::string_view algorithm_name(Algorithm a) noexcept;
/// Accepts "svgd", "ensemble" or "swag"; ConfigError otherwise.
Algorithm parse_algorithm(std::string_view name);

/// `batches` batches of `batch_size` rows: x ~ N(0, 1) of width D and
/// y = sin(x_1) + 0.1 * N(0, 1).
Dataset gen_synthetic(std::size_t D, std::size_t batches, std::size_t batch_size,
                      std::uint64_t seed);

/// `n_layers` D x D tanh layers followed by a D x 1 readout.
MlpArch bench_arch(std::size_t D, std::size_t n_layers);

struct BenchConfig {
  std::vector<std::size_t> widths{64, 128, 256};
  std::size_t n_layers = 10;
  std::vector<std::size_t> particles{1, 2, 4, 8, 16};
  std::size_t devices = 1;
  /// Active-set size per device; when unset every particle stays resident.
  std::optional<std::size_t> active_capacity;
  std::size_t epochs = 20;
  std::size_t batches = 10;
  std::size_t batch_size = 128;
  Algorithm algorithm = Algorithm::Svgd;
  std::uint64_t seed = 0;
  /// Each cell is run this many times and the median mean-epoch time kept.
  std::size_t repeats = 1;
  double lr = 1e-3;

  void validate() const;
};

struct TimingRow {
  std::string algorithm;
  std::size_t particles = 0;
  std::size_t devices = 0;
  std::size_t active_capacity = 0;
  std::size_t D = 0;
  double mean_epoch_seconds = 0.0;
  std::size_t epochs_measured = 0;
};

/// One measured epoch of one repeat of one cell.
struct EpochRecord {
  std::size_t particles = 0;
  std::size_t D = 0;
  std::size_t repeat = 0;
  std::size_t epoch = 0;
  double seconds = 0.0;
  double mean_loss = 0.0;
};

struct SlowdownRow {
  std::size_t particles = 0;
  std::size_t D_from = 0;
  std::size_t D_to = 0;
  double ratio = 0.0;
};

struct ScalingResult {
  std::vector<TimingRow> rows;
  std::vector<EpochRecord> epochs;
  std::vector<SlowdownRow> slowdown() const;
};

/// Times `cfg.algorithm` for every (width, particle count) cell. SWAG always
/// runs one parameter particle plus two moment particles, so it yields one
/// row per width with particles = 3. Handle construction, pinit and data
/// generation are excluded from the timings.
ScalingResult run_scaling(const BenchConfig& cfg, std::ostream* progress = nullptr);

void write_timing_csv(std::ostream& os, const std::vector<TimingRow>& rows);
void write_slowdown_csv(std::ostream& os, const std::vector<SlowdownRow>& rows);
void write_epochs_csv(std::ostream& os, const std::vector<EpochRecord>& records);

/// Least-squares slope of log(seconds) against log(particles).
double loglog_slope(const std::vector<TimingRow>& rows);

struct RegressionConfig {
  Algorithm algorithm = Algorithm::Svgd;
  std::size_t n_particles = 8;
  std::uint64_t seed = 0;
  std::size_t devices = 1;
  std::size_t epochs = 1500;
  /// Step size; when unset, 0.3 for SVGD and 0.04 for the SGD-based
  /// algorithms. SVGD averages its update over n particles, so it needs the
  /// larger value to move comparably fast.
  std::optional<double> lr;
  std::size_t train_points = 128;
  std::size_t batch_size = 32;
  std::size_t grid_points = 201;
  /// Number of posterior draws materialized for the SWAG predictive.
  std::size_t swag_samples = 32;

  void validate() const;
  double step_size() const;
};

struct RegressionResult {
  std::vector<double> grid;
  PredictiveSummary summary;

  /// Mean predictive std over grid points inside / outside the gap.
  double mean_std_in_gap() const;
  double mean_std_on_support() const;
};

/// Training inputs are uniform on [-1, 1] minus this open interval.
inline constexpr double kGapLo = -0.2;
inline constexpr double kGapHi = 0.2;

/// Fits y = sin(2 pi x) on [-1, 1] with a gap at (kGapLo, kGapHi) and
/// evaluates the particle pushforward on an even grid over [-1, 1].
RegressionResult run_regression_demo(const RegressionConfig& cfg);

/// Header x,mean,std,p0,p1,... then one row per grid point.
void write_regression_csv(std::ostream& os, const RegressionResult& result);

}  // namespace ppush::bench
