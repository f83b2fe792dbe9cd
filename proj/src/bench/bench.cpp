#include "ppush/bench/bench.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <random>

#include "ppush/algos/ensemble.hpp"
#include "ppush/algos/svgd.hpp"
#include "ppush/algos/swag.hpp"
#include "ppush/core/errors.hpp"

namespace ppush::bench {

std::string_view algorithm_name(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::Svgd: return "svgd";
    case Algorithm::Ensemble: return "ensemble";
    case Algorithm::Swag: return "swag";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "svgd") return Algorithm::Svgd;
  if (name == "ensemble") return Algorithm::Ensemble;
  if (name == "swag") return Algorithm::Swag;
  throw ConfigError(fmt::format("unknown algorithm '{}' (expected svgd, ensemble or swag)", name));
}

Dataset gen_synthetic(std::size_t D, std::size_t batches, std::size_t batch_size,
                      std::uint64_t seed) {
  if (D == 0 || batches == 0 || batch_size == 0) {
    throw ConfigError("synthetic data sizes must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Dataset data;
  data.reserve(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    Tensor x({batch_size, D});
    Tensor y({batch_size, 1});
    for (std::size_t r = 0; r < batch_size; ++r) {
      for (std::size_t c = 0; c < D; ++c) x.at(r, c) = normal(rng);
      y.at(r, 0) = std::sin(x.at(r, 0)) + 0.1 * normal(rng);
    }
    data.push_back({std::move(x), std::move(y)});
  }
  return data;
}

MlpArch bench_arch(std::size_t D, std::size_t n_layers) {
  MlpArch arch{std::vector<std::size_t>(n_layers + 1, D), Activation::Tanh};
  arch.layer_dims.push_back(1);
  arch.validate();
  return arch;
}

void BenchConfig::validate() const {
  auto positive = [](const auto& list, const char* what) {
    if (list.empty()) throw ConfigError(fmt::format("{} list is empty", what));
    for (auto v : list) {
      if (v == 0) throw ConfigError(fmt::format("{} must be positive", what));
    }
  };
  positive(widths, "layer width");
  positive(particles, "particle count");
  if (n_layers == 0) throw ConfigError("layer count must be positive");
  if (devices == 0) throw ConfigError("device count must be positive");
  if (epochs == 0) throw ConfigError("epoch count must be positive");
  if (batches == 0 || batch_size == 0) throw ConfigError("batch sizes must be positive");
  if (repeats == 0) throw ConfigError("repeat count must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (active_capacity) {
    if (*active_capacity == 0) throw ConfigError("active capacity must be positive");
    const std::size_t most = algorithm == Algorithm::Swag
                                 ? 3 : *std::max_element(particles.begin(), particles.end());
    if (*active_capacity > most) {
      throw ConfigError(fmt::format("active capacity {} exceeds the {} particles in the run",
                                    *active_capacity, most));
    }
  }
}

namespace {

using Clock = std::chrono::steady_clock;

/// An algorithm instance whose epochs can be timed one at a time.
class EpochRunner {
 public:
  EpochRunner(ParticleNN& pnn, Algorithm algo, std::size_t particles, std::uint64_t seed,
              double lr)
      : algo_(algo) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < particles; ++i) seeds.push_back(seed * 7919 + i);
    switch (algo) {
      case Algorithm::Svgd:
        svgd_.emplace(pnn, seeds, SvgdConfig{.bandwidth = 1.0, .lr = lr});
        break;
      case Algorithm::Ensemble:
        ensemble_.emplace(pnn, seeds, lr);
        break;
      case Algorithm::Swag:
        swag_.emplace(pnn, SwagConfig{.lr = lr, .seed = seed});
        swag_->begin_swag_phase();
        break;
    }
  }

  double run_epoch(const Dataset& data) {
    switch (algo_) {
      case Algorithm::Svgd: return svgd_->run_epoch(data);
      case Algorithm::Ensemble: return ensemble_->run_epoch(data);
      case Algorithm::Swag: return swag_->swag_epoch(data);
    }
    return 0.0;
  }

 private:
  Algorithm algo_;
  std::optional<SvgdTrainer> svgd_;
  std::optional<CentralizedEnsemble> ensemble_;
  std::optional<SwagTrainer> swag_;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

ScalingResult run_scaling(const BenchConfig& cfg, std::ostream* progress) {
  cfg.validate();
  ScalingResult result;
  std::vector<std::size_t> counts = cfg.particles;
  if (cfg.algorithm == Algorithm::Swag) counts = {3};

  for (std::size_t D : cfg.widths) {
    const MlpArch arch = bench_arch(D, cfg.n_layers);
    const Dataset data = gen_synthetic(D, cfg.batches, cfg.batch_size, cfg.seed);
    for (std::size_t n : counts) {
      const std::size_t capacity = cfg.active_capacity.value_or(n);
      std::vector<double> repeat_means;
      for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
        ParticleNN pnn(arch, cfg.devices, capacity);
        EpochRunner runner(pnn, cfg.algorithm, cfg.algorithm == Algorithm::Swag ? 1 : n, cfg.seed,
                           cfg.lr);
        double total = 0.0;
        for (std::size_t e = 0; e < cfg.epochs; ++e) {
          const auto t0 = Clock::now();
          const double loss = runner.run_epoch(data);
          const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
          total += secs;
          result.epochs.push_back({n, D, rep, e, secs, loss});
        }
        repeat_means.push_back(total / static_cast<double>(cfg.epochs));
      }
      TimingRow row{std::string(algorithm_name(cfg.algorithm)), n, cfg.devices, capacity, D,
                    median(repeat_means), cfg.epochs};
      if (progress) {
        fmt::print(*progress, "{} D={} particles={} devices={} A={}: {:.4f} s/epoch\n",
                   row.algorithm, D, n, cfg.devices, capacity, row.mean_epoch_seconds);
      }
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

std::vector<SlowdownRow> ScalingResult::slowdown() const {
  // particles -> D -> seconds, both ascending.
  std::map<std::size_t, std::map<std::size_t, double>> table;
  for (const auto& r : rows) table[r.particles][r.D] = r.mean_epoch_seconds;
  std::vector<SlowdownRow> out;
  for (const auto& [n, by_d] : table) {
    for (auto it = by_d.begin(); std::next(it) != by_d.end(); ++it) {
      auto next = std::next(it);
      out.push_back({n, it->first, next->first, next->second / it->second});
    }
  }
  return out;
}

void write_timing_csv(std::ostream& os, const std::vector<TimingRow>& rows) {
  fmt::print(os, "algorithm,particles,devices,active_capacity,D,mean_epoch_seconds,epochs_measured\n");
  for (const auto& r : rows) {
    fmt::print(os, "{},{},{},{},{},{:.9g},{}\n", r.algorithm, r.particles, r.devices,
               r.active_capacity, r.D, r.mean_epoch_seconds, r.epochs_measured);
  }
}

void write_slowdown_csv(std::ostream& os, const std::vector<SlowdownRow>& rows) {
  fmt::print(os, "particles,D_from,D_to,slowdown\n");
  for (const auto& r : rows) {
    fmt::print(os, "{},{},{},{:.6g}\n", r.particles, r.D_from, r.D_to, r.ratio);
  }
}

void write_epochs_csv(std::ostream& os, const std::vector<EpochRecord>& records) {
  fmt::print(os, "particles,D,repeat,epoch,seconds,mean_loss\n");
  for (const auto& r : records) {
    fmt::print(os, "{},{},{},{},{:.9g},{:.17g}\n", r.particles, r.D, r.repeat, r.epoch, r.seconds,
               r.mean_loss);
  }
}

double loglog_slope(const std::vector<TimingRow>& rows) {
  if (rows.size() < 2) throw ConfigError("a log-log fit needs at least two rows");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    const double x = std::log(static_cast<double>(r.particles));
    const double y = std::log(r.mean_epoch_seconds);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(rows.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw ConfigError("a log-log fit needs distinct particle counts");
  return (n * sxy - sx * sy) / denom;
}

void RegressionConfig::validate() const {
  if (n_particles == 0) throw ConfigError("regression demo needs at least one particle");
  if (lr && !(*lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (devices == 0) throw ConfigError("device count must be positive");
  if (train_points == 0 || batch_size == 0 || grid_points < 2) {
    throw ConfigError("regression data sizes must be positive");
  }
  if (algorithm == Algorithm::Swag && swag_samples == 0) {
    throw ConfigError("SWAG predictive needs at least one sample");
  }
}

double RegressionConfig::step_size() const {
  return lr.value_or(algorithm == Algorithm::Svgd ? 0.3 : 0.04);
}

namespace {

Dataset regression_data(const RegressionConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> xs;
  while (xs.size() < cfg.train_points) {
    const double x = unif(rng);
    if (x <= kGapLo || x >= kGapHi) xs.push_back(x);
  }
  Dataset data;
  for (std::size_t start = 0; start < xs.size(); start += cfg.batch_size) {
    const std::size_t rows = std::min(cfg.batch_size, xs.size() - start);
    Tensor x({rows, 1});
    Tensor y({rows, 1});
    for (std::size_t r = 0; r < rows; ++r) {
      x[r] = xs[start + r];
      y[r] = std::sin(2.0 * std::numbers::pi * x[r]);
    }
    data.push_back({std::move(x), std::move(y)});
  }
  return data;
}

const MlpArch kRegressionArch{{1, 32, 32, 1}, Activation::Tanh};

}  // namespace

RegressionResult run_regression_demo(const RegressionConfig& cfg) {
  cfg.validate();
  const Dataset data = regression_data(cfg);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < cfg.n_particles; ++i) seeds.push_back(cfg.seed * 7919 + i);

  ParticleNN pnn(kRegressionArch, cfg.devices, cfg.n_particles);
  std::vector<ParticleId> pids;
  switch (cfg.algorithm) {
    case Algorithm::Svgd:
      pids = train_svgd(pnn, data, cfg.epochs, {.bandwidth = 1.0, .lr = cfg.step_size()}, seeds);
      break;
    case Algorithm::Ensemble:
      pids = train_ensemble_centralized(pnn, data, cfg.epochs, cfg.step_size(), seeds);
      break;
    case Algorithm::Swag: {
      const SwagPosterior post = train_swag(
          pnn, data,
          {.pretrain_epochs = cfg.epochs, .swag_epochs = std::max<std::size_t>(cfg.epochs / 4, 1),
           .lr = cfg.step_size(), .seed = cfg.seed});
      for (std::size_t s = 0; s < cfg.swag_samples; ++s) {
        pids.push_back(pnn.pinit({.params = swag_sample(post, cfg.seed * 7919 + s)}));
      }
      break;
    }
  }

  RegressionResult result;
  Tensor grid({cfg.grid_points, 1});
  for (std::size_t i = 0; i < cfg.grid_points; ++i) {
    grid[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(cfg.grid_points - 1);
    result.grid.push_back(grid[i]);
  }
  result.summary = ppush_predict(pnn, pids, grid);
  return result;
}

namespace {

double mean_std_where(const RegressionResult& r, bool in_gap) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const bool gap = r.grid[i] > kGapLo && r.grid[i] < kGapHi;
    if (gap == in_gap) {
      total += r.summary.std[i];
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace

double RegressionResult::mean_std_in_gap() const { return mean_std_where(*this, true); }
double RegressionResult::mean_std_on_support() const { return mean_std_where(*this, false); }

void write_regression_csv(std::ostream& os, const RegressionResult& result) {
  fmt::print(os, "x,mean,std");
  for (std::size_t p = 0; p < result.summary.outputs.size(); ++p) fmt::print(os, ",p{}", p);
  fmt::print(os, "\n");
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    fmt::print(os, "{:.17g},{:.17g},{:.17g}", result.grid[i], result.summary.mean[i],
               result.summary.std[i]);
    for (const auto& [pid, out] : result.summary.outputs) fmt::print(os, ",{:.17g}", out[i]);
    fmt::print(os, "\n");
  }
}

}  // namespace ppush::bench
