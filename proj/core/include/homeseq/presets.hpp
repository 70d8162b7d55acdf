// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "homeseq/events.hpp"
#include "homeseq/simulator.hpp"
#include "homeseq/transfer.hpp"

namespace homeseq {

/// Built-in simulated apartment: same floor plan, different sensor ids,
/// slightly different sensor sets and habits.
struct Preset {
  std::string name;
  HomeConfig home;
  RoutineModel routine;
  HarmonizationMap harmonization;
};

/// "apt1" .. "apt5".
std::vector<std::string> preset_names();
Preset make_preset(std::string_view name);

}  // namespace homeseq
