#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <variant>
#include <vector>

#include "ppush/core/mlp.hpp"
#include "ppush/core/tensor.hpp"

namespace ppush {

/// Particle index within one particle neural network; assigned 0, 1, 2, ...
/// in creation order.
struct ParticleId {
  std::uint32_t value = 0;

  friend auto operator<=>(const ParticleId&, const ParticleId&) = default;
};

using DeviceId = std::size_t;

enum class LossKind { Mse };

/// Introspection of one device event loop.
struct LoopStats {
  DeviceId device = 0;
  std::size_t capacity = 0;
  std::vector<ParticleId> evictions;  // in eviction order
  std::vector<ParticleId> loads;      // in load order
  std::vector<ParticleId> active;     // most recently used first
  std::map<ParticleId, DeviceId> registry;
  std::size_t messages_processed = 0;
};

/// Result carried by a completed event.
using Payload = std::variant<std::monostate, double, Tensor, ParamSet, LoopStats>;

}  // namespace ppush

template <>
struct std::hash<ppush::ParticleId> {
  std::size_t operator()(const ppush::ParticleId& p) const noexcept {
    return std::hash<std::uint32_t>{}(p.value);
  }
};
