#pragma once

#include <stdexcept>
#include <string>

#include "owgp/executive.h"

namespace owgp {

struct SchemaError : std::runtime_error {
  std::string field;
  SchemaError(const std::string& field_path, const std::string& msg)
      : std::runtime_error(field_path + ": " + msg), field(field_path) {}
};

// Everything needed to run one scenario: vocabulary, ground truth, initial
// belief, goal, sensing model, planner constants, and budgets.
struct Scenario {
  std::shared_ptr<const DomainConfig> domain;
  WorldState world;
  BeliefState belief;
  GoalFormula goal;
  std::string goal_text;
  ObservationNoiseModel noise;
  PlannerParams planner;
  ExecutiveLimits budgets;
  SimParams sim;
};

Scenario load_scenario(const std::string& path);
Scenario load_scenario_text(const std::string& text);

// Canonical serialization; load(serialize(s)) is a fixed point.
std::string scenario_to_text(const Scenario& s);

// Overlay reliabilities / planner thresholds from a rules file (same format
// as the scenario's "reliabilities" / "planner" sections).
void apply_rules_file(Scenario& s, const std::string& path);

}  // namespace owgp
