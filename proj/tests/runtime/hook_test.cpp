#include <gtest/gtest.h>

#include <mutex>

#include "../support/runtime_helpers.hpp"
#include "ppush/core/errors.hpp"
#include "ppush/runtime/particle_nn.hpp"

using namespace ppush;
using namespace ppush::testing;

namespace {

ParticleId P(std::uint32_t v) { return ParticleId{v}; }

void count_calls(ParticleContext&, HookState& state) {
  std::any_cast<int&>(state.at("calls")) += 1;
}

/// Hook that gathers every other particle and stores how many arrived.
void gather_all(ParticleContext& ctx, HookState& state) {
  std::vector<EventHandle> events;
  for (ParticleId p : ctx.particles()) {
    if (p != ctx.pid()) events.push_back(ctx.get(p));
  }
  auto got = ctx.join(events);
  state["received"] = got.size();
}

}  // namespace

TEST(Hooks, RegisterThenSendRunsOnce) {
  ParticleNN pnn(small_arch(), 1, 1);
  auto pid = pnn.pinit();
  auto calls = std::make_shared<int>(0);
  pnn.phook_register(pid, "COUNT", [calls](ParticleContext&, HookState&) { ++*calls; });
  pnn.psend_sync(pid, "COUNT");
  EXPECT_EQ(*calls, 1);
}

TEST(Hooks, DuplicateRegistrationFails) {
  ParticleNN pnn(small_arch(), 1, 1);
  auto pid = pnn.pinit();
  pnn.phook_register(pid, "H", count_calls, {{"calls", 0}});
  EXPECT_THROW(pnn.phook_register(pid, "H", count_calls, {{"calls", 0}}), ConfigError);
  // Same name on a different particle is fine.
  auto other = pnn.pinit();
  EXPECT_NO_THROW(pnn.phook_register(other, "H", count_calls, {{"calls", 0}}));
}

TEST(Hooks, StatePersistsAcrossInvocations) {
  ParticleNN pnn(small_arch(), 2, 1);
  pnn.pinit();
  auto pid = pnn.pinit();
  auto seen = std::make_shared<int>(0);
  pnn.phook_register(pid, "COUNT", [seen](ParticleContext& ctx, HookState& state) {
    count_calls(ctx, state);
    *seen = std::any_cast<int>(state.at("calls"));
  }, {{"calls", 0}});
  const int n = 25;
  std::vector<EventHandle> events;
  for (int i = 0; i < n; ++i) events.push_back(pnn.psend(pid, "COUNT"));
  pnn.pjoin(events);
  EXPECT_EQ(*seen, n);
}

TEST(Hooks, UnknownHookNameCarriesError) {
  ParticleNN pnn(small_arch(), 1, 1);
  auto pid = pnn.pinit();
  auto e = pnn.psend(pid, "MISSING");
  EXPECT_THROW(pnn.pjoin({e}), LookupError);
}

TEST(Hooks, NoOpHookCompletes) {
  ParticleNN pnn(small_arch(), 1, 1);
  auto pid = pnn.pinit();
  pnn.phook_register(pid, "NOP", [](ParticleContext&, HookState&) {});
  auto e = pnn.psend(pid, "NOP");
  EXPECT_TRUE(std::holds_alternative<std::monostate>(pnn.pjoin({e})[0]));
}

TEST(Hooks, HookExceptionsBecomeErrorPayloads) {
  ParticleNN pnn(small_arch(), 1, 1);
  auto pid = pnn.pinit();
  pnn.phook_register(pid, "BOOM", [](ParticleContext&, HookState&) { throw std::runtime_error("boom"); });
  EXPECT_THROW(pnn.psend_sync(pid, "BOOM"), std::runtime_error);
  EXPECT_NO_THROW(pnn.pforward_sync(pid, Tensor({1, 3})));
}

TEST(Hooks, CrossLoopGetDoesNotDeadlock) {
  with_watchdog(std::chrono::seconds(30), [] {
    ParticleNN pnn(small_arch(), 2, 1);
    auto a = pnn.pinit({.seed = 1});
    auto b = pnn.pinit({.seed = 2});
    ASSERT_NE(pnn.device_of(a), pnn.device_of(b));
    for (auto p : {a, b}) pnn.phook_register(p, "GATHER", gather_all);
    // Both loops block in join at the same time and must serve each other.
    for (int round = 0; round < 20; ++round) pnn.pjoin({pnn.psend(a, "GATHER"), pnn.psend(b, "GATHER")});
  });
}

TEST(Hooks, SendsToSameParticleRunInOrder) {
  ParticleNN pnn(small_arch(), 2, 1);
  auto pid = pnn.pinit();
  auto log = std::make_shared<std::vector<int>>();
  for (int tag : {1, 2}) {
    pnn.phook_register(pid, "REC" + std::to_string(tag),
                       [log, tag](ParticleContext&, HookState&) { log->push_back(tag); });
  }
  std::vector<EventHandle> events;
  for (int i = 0; i < 10; ++i) {
    events.push_back(pnn.psend(pid, "REC1"));
    events.push_back(pnn.psend(pid, "REC2"));
  }
  pnn.pjoin(events);
  ASSERT_EQ(log->size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ((*log)[i], i % 2 == 0 ? 1 : 2);
}

TEST(Hooks, StepsAndHooksOnOneParticleNeverInterleave) {
  ParticleNN pnn(small_arch(), 2, 1);
  auto pid = pnn.pinit({.optimizer = Optimizer::sgd(0.01)});
  auto active = std::make_shared<std::atomic<int>>(0);
  auto overlaps = std::make_shared<std::atomic<int>>(0);
  pnn.phook_register(pid, "SLOW", [active, overlaps](ParticleContext& ctx, HookState&) {
    if (active->fetch_add(1) != 0) ++*overlaps;
    ctx.step(LossKind::Mse, Tensor({2, 3}, 1.0), Tensor({2, 2}));
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
    active->fetch_sub(1);
  });
  std::vector<EventHandle> events;
  for (int i = 0; i < 10; ++i) {
    events.push_back(pnn.psend(pid, "SLOW"));
    events.push_back(pnn.pstep(pid, Tensor({2, 3}), Tensor({2, 2})));
  }
  pnn.pjoin(events);
  EXPECT_EQ(overlaps->load(), 0);
}

TEST(ParticleContext, GetSelfEqualsOwnParams) {
  ParticleNN pnn(small_arch(), 1, 1);
  auto pid = pnn.pinit({.seed = 6});
  auto ok = std::make_shared<bool>(false);
  pnn.phook_register(pid, "SELF", [ok](ParticleContext& ctx, HookState&) {
    auto got = ctx.join({ctx.get(ctx.pid())});
    *ok = bit_equal(got.at(ctx.pid()), ctx.module_params());
  });
  pnn.psend_sync(pid, "SELF");
  EXPECT_TRUE(*ok);
}

TEST(ParticleContext, CrossLoopGetEqualsLocalGet) {
  ParticleNN pnn(small_arch(), 2, 1);
  auto reader = pnn.pinit({.seed = 1, .device = 0});
  auto local = pnn.pinit({.seed = 42, .device = 0});
  auto remote = pnn.pinit({.seed = 42, .device = 1});
  Tensor x = random_tensor({3, 3}, 5), y = random_tensor({3, 2}, 6);
  pnn.pjoin({pnn.pstep(local, x, y), pnn.pstep(remote, x, y)});
  auto ok = std::make_shared<bool>(false);
  pnn.phook_register(reader, "CMP", [=](ParticleContext& ctx, HookState&) {
    auto got = ctx.join({ctx.get(local), ctx.get(remote)});
    *ok = bit_equal_with_grads(got.at(local), got.at(remote));
  });
  pnn.psend_sync(reader, "CMP");
  EXPECT_TRUE(*ok);
}

TEST(ParticleContext, AllToAllEightParticlesTwoLoops) {
  with_watchdog(std::chrono::seconds(30), [] {
    ParticleNN pnn(small_arch(), 2, 2);
    for (int i = 0; i < 8; ++i) pnn.pinit({.seed = static_cast<std::uint64_t>(i)});
    auto counts = std::make_shared<std::vector<std::size_t>>(8, 0);
    auto mu = std::make_shared<std::mutex>();
    for (auto p : pnn.particles()) {
      pnn.phook_register(p, "GATHER", [=](ParticleContext& ctx, HookState& state) {
        gather_all(ctx, state);
        std::lock_guard lock(*mu);
        (*counts)[ctx.pid().value] = std::any_cast<std::size_t>(state.at("received"));
      });
    }
    std::vector<EventHandle> events;
    for (auto p : pnn.particles()) events.push_back(pnn.psend(p, "GATHER"));
    pnn.pjoin(events);
    for (auto c : *counts) EXPECT_EQ(c, 7u);
  });
}

TEST(ParticleContext, ParticlesListsAllAscending) {
  ParticleNN pnn(small_arch(), 2, 1);
  for (int i = 0; i < 3; ++i) pnn.pinit();
  auto seen = std::make_shared<std::vector<ParticleId>>();
  pnn.phook_register(P(1), "LIST", [seen](ParticleContext& ctx, HookState&) { *seen = ctx.particles(); });
  pnn.psend_sync(P(1), "LIST");
  EXPECT_EQ(*seen, (std::vector<ParticleId>{P(0), P(1), P(2)}));
}

TEST(ParticleContext, HookStepEqualsPstep) {
  ParticleNN pnn(small_arch(), 2, 1);
  auto a = pnn.pinit({.seed = 3, .optimizer = Optimizer::sgd(0.2)});
  auto b = pnn.pinit({.seed = 3, .optimizer = Optimizer::sgd(0.2)});
  Tensor x = random_tensor({4, 3}, 1), y = random_tensor({4, 2}, 2);
  auto hook_loss = std::make_shared<double>(0);
  pnn.phook_register(b, "STEP", [=](ParticleContext& ctx, HookState&) {
    *hook_loss = ctx.step(LossKind::Mse, x, y);
  });
  for (int i = 0; i < 3; ++i) {
    const double direct = pnn.pstep_sync(a, x, y);
    pnn.psend_sync(b, "STEP");
    EXPECT_EQ(direct, *hook_loss);
  }
  EXPECT_TRUE(bit_equal_with_grads(pnn.pget_sync(a), pnn.pget_sync(b)));
}

TEST(ParticleContext, InHookMutationVisibleToForward) {
  ParticleNN pnn(small_arch(), 1, 1);
  auto pid = pnn.pinit({.seed = 3});
  pnn.phook_register(pid, "ZERO", [](ParticleContext& ctx, HookState&) {
    for (auto& e : ctx.module_params()) {
      for (double& v : e.tensor.data()) v = 0.0;
    }
  });
  pnn.psend_sync(pid, "ZERO");
  Tensor out = pnn.pforward_sync(pid, random_tensor({2, 3}, 1));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(ParticleContext, GetOfUnknownParticleFails) {
  ParticleNN pnn(small_arch(), 1, 1);
  auto pid = pnn.pinit();
  pnn.phook_register(pid, "BAD", [](ParticleContext& ctx, HookState&) { ctx.get(ParticleId{99}); });
  EXPECT_THROW(pnn.psend_sync(pid, "BAD"), LookupError);
}
