#include "ppush/algos/swag.hpp"

#include <cmath>
#include <random>

#include "ppush/core/errors.hpp"

namespace ppush {

namespace {

constexpr const char* kFirstMoment = "SWAG_1st_MOMENT";
constexpr const char* kSecondMoment = "SWAG_2nd_MOMENT";

/// Streaming update moment <- (moment * n + f(theta)) / (n + 1).
void fold_moment(ParticleContext& ctx, HookState& state, bool squared) {
  const auto source = std::any_cast<ParticleId>(state.at("source"));
  auto got = ctx.join({ctx.get(source)});
  const ParamSet& theta = got.at(source);
  auto& n = std::any_cast<std::int64_t&>(state.at("n"));
  const double nd = static_cast<double>(n);
  ParamSet& moment = ctx.module_params();
  for (std::size_t t = 0; t < moment.size(); ++t) {
    auto m = moment[t].tensor.data();
    auto p = theta[t].tensor.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double x = squared ? p[i] * p[i] : p[i];
      m[i] = (m[i] * nd + x) / (nd + 1.0);
    }
  }
  n += 1;
}

}  // namespace

ParamSet SwagPosterior::variance() const {
  ParamSet out = mean.zeros_like();
  for (std::size_t t = 0; t < mean.size(); ++t) {
    auto mu = mean[t].tensor.data();
    auto m2 = mom2[t].tensor.data();
    auto v = out[t].tensor.data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(m2[i] - mu[i] * mu[i], 0.0);
  }
  return out;
}

SwagTrainer::SwagTrainer(ParticleNN& pnn, const SwagConfig& cfg)
    : pnn_(pnn), cfg_(cfg),
      param_pid_(pnn.pinit({.seed = cfg.seed, .optimizer = Optimizer::sgd(cfg.lr)})) {}

double SwagTrainer::pretrain_epoch(const Dataset& data) {
  if (mom1_pid_) throw StateError("pretraining after the swag phase started");
  double total = 0.0;
  for (const auto& batch : data) total += pnn_.pstep_sync(param_pid_, batch.x, batch.y);
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

void SwagTrainer::begin_swag_phase() {
  if (mom1_pid_) return;
  ParamSet first = pnn_.pget_sync(param_pid_);
  first.drop_grads();
  ParamSet second = first;
  for (auto& e : second) {
    for (double& v : e.tensor.data()) v = v * v;
  }
  mom1_pid_ = pnn_.pinit({.optimizer = Optimizer::none(), .params = std::move(first)});
  pnn_.phook_register(*mom1_pid_, kFirstMoment,
                      [](ParticleContext& ctx, HookState& st) { fold_moment(ctx, st, false); },
                      {{"n", std::int64_t{1}}, {"source", param_pid_}});
  mom2_pid_ = pnn_.pinit({.optimizer = Optimizer::none(), .params = std::move(second)});
  pnn_.phook_register(*mom2_pid_, kSecondMoment,
                      [](ParticleContext& ctx, HookState& st) { fold_moment(ctx, st, true); },
                      {{"n", std::int64_t{1}}, {"source", param_pid_}});
}

double SwagTrainer::swag_epoch(const Dataset& data) {
  begin_swag_phase();
  double total = 0.0;
  for (const auto& batch : data) {
    total += pnn_.pstep_sync(param_pid_, batch.x, batch.y);
    pnn_.pjoin({pnn_.psend(*mom1_pid_, kFirstMoment), pnn_.psend(*mom2_pid_, kSecondMoment)});
    ++n_;
  }
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

SwagPosterior SwagTrainer::posterior() {
  begin_swag_phase();
  SwagPosterior post{pnn_.pget_sync(*mom1_pid_), pnn_.pget_sync(*mom2_pid_), n_};
  post.mean.drop_grads();
  post.mom2.drop_grads();
  return post;
}

SwagPosterior train_swag(ParticleNN& pnn, const Dataset& data, const SwagConfig& cfg) {
  SwagTrainer trainer(pnn, cfg);
  for (std::size_t e = 0; e < cfg.pretrain_epochs; ++e) trainer.pretrain_epoch(data);
  for (std::size_t e = 0; e < cfg.swag_epochs; ++e) trainer.swag_epoch(data);
  return trainer.posterior();
}

ParamSet swag_sample(const SwagPosterior& posterior, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ParamSet variance = posterior.variance();
  ParamSet out = posterior.mean;
  for (std::size_t t = 0; t < out.size(); ++t) {
    auto v = out[t].tensor.data();
    auto var = variance[t].tensor.data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += std::sqrt(var[i]) * normal(rng);
  }
  return out;
}

}  // namespace ppush
