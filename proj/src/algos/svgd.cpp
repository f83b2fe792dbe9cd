#include "ppush/algos/svgd.hpp"

#include <cmath>

#include "ppush/core/errors.hpp"
#include "ppush/core/kernel.hpp"

namespace ppush {

void SvgdConfig::validate() const {
  if (!(bandwidth > 0.0)) throw ConfigError("SVGD kernel bandwidth must be positive");
  if (!(lr > 0.0)) throw ConfigError("SVGD step size must be positive");
  prior.validate();
}

std::vector<double> svgd_direction(std::span<const ParamSet* const> particles, std::size_t self,
                                   const SvgdConfig& cfg) {
  cfg.validate();
  if (self >= particles.size()) throw LookupError("svgd_direction: self index out of range");
  const std::vector<double> theta_i = particles[self]->flatten();
  const std::size_t dim = theta_i.size();
  const double n = static_cast<double>(particles.size());
  const double l2 = cfg.bandwidth * cfg.bandwidth;
  const double inv_var = cfg.prior.kind == PriorSpec::Kind::Gaussian
                             ? 1.0 / (cfg.prior.sigma * cfg.prior.sigma) : 0.0;

  // Two streaming passes per j straight over the parameter tensors: the
  // pair cost is memory-bound, so no parameter-sized temporaries.
  std::vector<double> acc(dim, 0.0);
  for (const ParamSet* pj : particles) {
    if (pj->numel() != dim) throw DimensionError("SVGD particles differ in size");
    double d2 = 0.0;
    std::size_t off = 0;
    for (const auto& e : *pj) {
      const auto v = e.tensor.data();
      d2 += squared_distance(v, std::span(theta_i).subspan(off, v.size()));
      off += v.size();
    }
    const double k = sq_exp_from_squared_distance(d2, cfg.bandwidth);
    const double scale = -k / l2;  // grad_{theta_j} k = scale * (theta_j - theta_i)

    off = 0;
    for (const auto& e : *pj) {
      const auto v = e.tensor.data();
      const auto g = e.tensor.grad();
      const double* ti = theta_i.data() + off;
      double* a = acc.data() + off;
      if (cfg.legacy_coefficients) {
        for (std::size_t c = 0; c < v.size(); ++c) {
          const double prior = -v[c] * inv_var;
          a[c] += k * -g[c] + prior + scale * (v[c] - ti[c]) / n;
        }
      } else {
        for (std::size_t c = 0; c < v.size(); ++c) {
          const double prior = -v[c] * inv_var;
          a[c] += k * (-g[c] + prior) + scale * (v[c] - ti[c]);
        }
      }
      off += v.size();
    }
  }
  if (!cfg.legacy_coefficients) {
    for (double& v : acc) v /= n;
  }
  return acc;
}

void svgd_update(ParticleContext& ctx, HookState& state, const SvgdConfig& cfg) {
  const std::vector<ParticleId> all = ctx.particles();
  std::vector<EventHandle> events;
  events.reserve(all.size());
  for (ParticleId p : all) {
    if (p != ctx.pid()) events.push_back(ctx.get(p));
  }
  std::map<ParticleId, ParamSet> gathered = ctx.join(events);
  // Own entry read after the join: servicing gets may have swapped it out.
  gathered.emplace(ctx.pid(), ctx.module_params());

  std::vector<const ParamSet*> ordered;
  std::size_t self = 0;
  for (const auto& [pid, params] : gathered) {
    if (pid == ctx.pid()) self = ordered.size();
    ordered.push_back(&params);
  }
  const std::vector<double> phi = svgd_direction(ordered, self, cfg);

  std::vector<double> next = gathered.at(ctx.pid()).flatten();
  for (std::size_t c = 0; c < next.size(); ++c) next[c] += cfg.lr * phi[c];
  std::any_cast<SvgdPending&>(state.at("pending"))->emplace(std::move(next));
}

void svgd_commit(ParticleContext& ctx, HookState& state) {
  auto& pending = *std::any_cast<SvgdPending&>(state.at("pending"));
  if (!pending) throw StateError("SVGD commit without a pending update");
  ctx.module_params().unflatten(*pending);
  pending.reset();
}

void register_svgd_hooks(ParticleNN& pnn, ParticleId pid, const SvgdConfig& cfg) {
  cfg.validate();
  auto pending = std::make_shared<std::optional<std::vector<double>>>();
  pnn.phook_register(
      pid, kSvgdUpdateHook,
      [cfg](ParticleContext& ctx, HookState& st) { svgd_update(ctx, st, cfg); },
      {{"pending", pending}});
  pnn.phook_register(pid, kSvgdCommitHook, svgd_commit, {{"pending", pending}});
}

SvgdTrainer::SvgdTrainer(ParticleNN& pnn, std::span<const std::uint64_t> seeds,
                         const SvgdConfig& cfg)
    : pnn_(pnn) {
  cfg.validate();
  if (seeds.empty()) throw ConfigError("SVGD needs at least one particle");
  for (auto seed : seeds) pids_.push_back(pnn_.pinit({.seed = seed, .optimizer = Optimizer::none()}));
  for (auto pid : pids_) register_svgd_hooks(pnn_, pid, cfg);
}

void SvgdTrainer::update() {
  std::vector<EventHandle> events;
  events.reserve(pids_.size());
  for (auto pid : pids_) events.push_back(pnn_.psend(pid, kSvgdUpdateHook));
  pnn_.pjoin(events);
  events.clear();
  for (auto pid : pids_) events.push_back(pnn_.psend(pid, kSvgdCommitHook));
  pnn_.pjoin(events);
}

double SvgdTrainer::run_epoch(const Dataset& data) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& batch : data) {
    std::vector<EventHandle> events;
    events.reserve(pids_.size());
    for (auto pid : pids_) events.push_back(pnn_.pstep(pid, batch.x, batch.y));
    for (auto& loss : pnn_.pjoin(events)) {
      total += std::get<double>(loss);
      ++count;
    }
    update();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

std::vector<ParticleId> train_svgd(ParticleNN& pnn, const Dataset& data, std::size_t epochs,
                                   const SvgdConfig& cfg, std::span<const std::uint64_t> seeds) {
  SvgdTrainer trainer(pnn, seeds, cfg);
  for (std::size_t e = 0; e < epochs; ++e) trainer.run_epoch(data);
  return trainer.particles();
}

}  // namespace ppush
