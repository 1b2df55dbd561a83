#pragma once

#include <nlohmann/json.hpp>

#include "artjoint/scenario.hpp"
#include "json_util.hpp"

namespace artjoint::detail {

ForceProfile read_force_profile(const JsonReader& r);
nlohmann::ordered_json write_force_profile(const ForceProfile& profile);

}  // namespace artjoint::detail
