#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhgn/behaviours/behaviours.hpp"
#include "rhgn/behaviours/controller.hpp"
#include "rhgn/fusion/belief.hpp"
#include "rhgn/sim/world.hpp"

namespace rhgn::sim {

using behaviours::ControllerConfig;
using behaviours::ControllerKind;

struct SelectionEvent {
  std::uint64_t step = 0;
  std::size_t agent = 0;
  Vec2 position;
  classifier::ProbabilityTuple fused;
  std::size_t env_index = 0;
  BehaviourId behaviour = BehaviourId::MB1;
};

struct RunOptions {
  std::ostream* trace = nullptr;
  // Called after sensing with every agent's observation.
  std::function<void(std::size_t agent, const Observation&)> observer;
  // Keep each RHGN agent's per-step argmax prediction.
  bool record_predictions = false;
};

struct RunResult {
  std::string env;
  ControllerKind controller = ControllerKind::MB1;
  std::uint64_t seed = 0;
  double fitness = 0.0;
  std::uint64_t t_s = 0;
  std::uint64_t p_s = 0;
  std::uint64_t p = 0;
  std::uint64_t t = 0;
  std::uint64_t digest = 0;
  std::optional<BehaviourId> rand_choice;
  std::vector<SelectionEvent> selections;
  std::vector<std::vector<std::uint8_t>> predictions;  // [agent][step] env index
};

class Simulation {
 public:
  Simulation(const env::EnvironmentSpec& spec, const SimParams& params, ControllerConfig controller, std::uint64_t seed,
             RunOptions options = {})
      : world_(spec, params, seed), controller_(std::move(controller)), options_(std::move(options)) {
    const auto n = world_.agents().size();
    BehaviourId start = BehaviourId::MB1;
    if (auto fixed = behaviours::fixed_behaviour(controller_.kind)) start = *fixed;
    if (controller_.kind == ControllerKind::RAND) {
      rand_choice_ = behaviours::rand_draw(World::stream(seed, 4));
      start = *rand_choice_;
    }
    if (controller_.kind == ControllerKind::RHGN) {
      if (!controller_.classifier || !controller_.classifier->classify || controller_.classifier->dim() == 0)
        throw Error(Errc::Untrained, "RHGN controller needs a classifier");
      beliefs_.assign(n, fusion::BeliefCollection(controller_.classifier->dim()));
      if (options_.record_predictions) predictions_.assign(n, {});
    }
    for (auto& a : world_.agents()) a.behaviour = start;
    moves_.resize(n);
  }

  World& world() noexcept { return world_; }
  const World& world() const noexcept { return world_; }
  const std::vector<SelectionEvent>& selections() const noexcept { return selections_; }
  const std::vector<fusion::BeliefCollection>& beliefs() const noexcept { return beliefs_; }

  void step() {
    if (world_.terminated()) return;
    const std::uint64_t t = world_.step();
    const auto& schedule = world_.params().fusion;
    const std::size_t n = world_.agents().size();
    const bool rhgn = controller_.kind == ControllerKind::RHGN;

    world_.move_nodes();  // 1
    world_.refresh_links();
    world_.record_history();  // 2
    if (rhgn || options_.observer) {
      for (std::size_t a = 0; a < n; ++a) {
        const Observation obs = world_.sense(a);
        if (options_.observer) options_.observer(a, obs);
        if (rhgn) beliefs_[a].record_local(controller_.classifier->classify(obs), t);  // 3
      }
    }
    if (rhgn) {
      if (schedule.broadcasts_at(t)) broadcast(t);  // 4
      if (options_.record_predictions)
        for (std::size_t a = 0; a < n; ++a)
          predictions_[a].push_back(static_cast<std::uint8_t>(classifier::argmax(beliefs_[a].fused())));
      if (schedule.selects_at(t)) select(t);  // 5
    }
    for (std::size_t a = 0; a < n; ++a) {  // 6
      auto& agent = world_.agents()[a];
      moves_[a] = behaviours::behaviour_force(agent.behaviour, world_, a, agent.memory);
    }
    for (std::size_t a = 0; a < n; ++a) world_.apply_move(a, moves_[a]);
    world_.refresh_links();
    world_.transfer_packets(options_.trace);  // 7
    world_.finish_step(options_.trace);       // 8, 9
  }

  RunResult run() {
    while (!world_.terminated()) step();
    return result();
  }

  RunResult result() const {
    RunResult r;
    r.env = world_.spec().label;
    r.controller = controller_.kind;
    r.seed = world_.seed();
    r.p_s = world_.delivered();
    r.p = world_.total_packets();
    r.t = world_.max_steps();
    r.t_s = world_.steps_taken();
    r.fitness = world_.fitness_value();
    r.digest = world_.run_digest();
    r.rand_choice = rand_choice_;
    r.selections = selections_;
    r.predictions = predictions_;
    return r;
  }

 private:
  void broadcast(std::uint64_t t) {
    const std::size_t n = world_.agents().size();
    const auto period = world_.params().fusion.broadcast_period;
    const std::uint64_t since = t + 1 >= period ? t + 1 - period : 0;
    std::vector<classifier::ProbabilityTuple> outgoing(n);
    for (std::size_t a = 0; a < n; ++a) outgoing[a] = beliefs_[a].make_broadcast(since);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (world_.viable(world_.agent_device(a), world_.agent_device(b)))
          beliefs_[b].record_remote(outgoing[a], static_cast<std::int32_t>(a), t);
  }

  void select(std::uint64_t t) {
    const auto& map = controller_.classifier->behaviour_map;
    for (std::size_t a = 0; a < world_.agents().size(); ++a) {
      auto sel = fusion::fuse_and_select(beliefs_[a], map);
      auto& agent = world_.agents()[a];
      agent.behaviour = sel.behaviour;
      if (options_.trace) {
        nlohmann::json j{{"event", "selection"}, {"step", t}, {"agent", a}, {"x", agent.position.x},
                         {"y", agent.position.y}, {"fused", sel.fused}, {"env", controller_.classifier->labels.at(sel.env_index)},
                         {"behaviour", static_cast<int>(sel.behaviour)}};
        *options_.trace << j.dump() << '\n';
      }
      selections_.push_back({t, a, agent.position, std::move(sel.fused), sel.env_index, sel.behaviour});
      beliefs_[a].clear();
    }
  }

  World world_;
  ControllerConfig controller_;
  RunOptions options_;
  std::optional<BehaviourId> rand_choice_;
  std::vector<fusion::BeliefCollection> beliefs_;
  std::vector<std::vector<std::uint8_t>> predictions_;
  std::vector<SelectionEvent> selections_;
  std::vector<Vec2> moves_;
};

inline RunResult run_once(const env::EnvironmentSpec& spec, const SimParams& params, ControllerConfig controller,
                          std::uint64_t seed, RunOptions options = {}) {
  Simulation sim(spec, params, std::move(controller), seed, std::move(options));
  return sim.run();
}

}  // namespace rhgn::sim
