#pragma once

#include <ostream>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "artjoint/scenario.hpp"

namespace artjoint {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitInternal = 3 };

/// Entry point behind the `artjoint` executable; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Scripted effector for press-to-close environments: approach the press
/// marker, then push along the button axis.
Eigen::Vector3d scripted_press_action(const Environment& env);

/// Runs a shipped fixture's canonical scenario and summarizes the phenomenon
/// it exists to show. Names: drawer, microwave, oven, trashcan.
nlohmann::ordered_json demo_summary(const std::string& fixture);

}  // namespace artjoint
