// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "homeseq/events.hpp"

namespace fixtures {

// kitchen - livingroom - bedroom, livingroom - hall - bathroom, plus a
// sensorless corridor between bedroom and study.
inline const char* kSmallHome = R"(
[sensors]
4  = kitchen_motion, motion, kitchen
5  = living_motion, motion, livingroom
6  = bed_motion, motion, bedroom
7  = hall_motion, motion, hall
8  = bath_motion, motion, bathroom
9  = study_motion, motion, study
10 = fridge_door, magnetic, kitchen
11 = kettle, power, kitchen

[rooms]
kitchen: livingroom
livingroom: bedroom, hall
hall: bathroom
bedroom: corridor
corridor: study
)";

inline homeseq::HomeConfig small_home() { return homeseq::parse_home_config(kSmallHome); }

inline homeseq::SensorEvent on(std::int64_t t, int id) {
  return {homeseq::Timestamp{t}, id, homeseq::SensorState::on, false};
}
inline homeseq::SensorEvent off(std::int64_t t, int id) {
  return {homeseq::Timestamp{t}, id, homeseq::SensorState::off, false};
}

}  // namespace fixtures
