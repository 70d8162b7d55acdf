// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "homeseq/events.hpp"

namespace homeseq {

struct EmissionStep {
  std::string sensor;  // sensor name in the registry
  SensorState state = SensorState::on;
  std::int64_t gap_min = 1;  // seconds since the previous event, uniform in [min, max]
  std::int64_t gap_max = 1;
};

struct Alternative {
  double weight = 1.0;
  std::vector<EmissionStep> steps;
};

/// One alternative is drawn and emitted; afterwards the block is entered
/// again with probability `repeat`.
struct ActivityBlock {
  std::vector<Alternative> alternatives;
  double repeat = 0.0;
};

struct Activity {
  std::string name;
  std::string room;
  std::vector<ActivityBlock> blocks;
  // Silence after the last step, added to whatever comes next.
  std::int64_t idle_min = 0;
  std::int64_t idle_max = 0;
};

/// Transition table for hours [from_hour, to_hour).
struct HourBlock {
  int from_hour = 0;
  int to_hour = 24;
  std::map<std::string, std::vector<std::pair<std::string, double>>> next;
};

/// Hidden-activity generator. Moving between rooms walks the shortest path,
/// switching the next room's motion sensor on before the previous one off.
struct RoutineModel {
  std::string start_activity;
  Timestamp start = Timestamp::from_civil(2017, 9, 1, 0, 0, 0);
  std::int64_t move_gap_min = 3;
  std::int64_t move_gap_max = 15;
  std::vector<Activity> activities;
  std::vector<HourBlock> transitions;

  /// Throws ValidationError for references the home cannot satisfy and
  /// ConfigError for malformed tables.
  void validate(const HomeConfig& home) const;

  std::string to_text() const;
  static RoutineModel from_text(std::string_view text);
};

/// Events until `days` after the routine start; deterministic given `seed`.
std::vector<SensorEvent> simulate(const RoutineModel& routine, const HomeConfig& home,
                                  double days, std::uint64_t seed);

struct CeilingEstimate {
  double ceiling = 0.0;
  double standard_error = 0.0;  // batch means
  std::size_t steps = 0;
  /// Over the SPEED vocabulary of the home registry.
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> observed;
  std::vector<double> expected;  // sum of the generator's next-token conditionals
  double chi_square = 0.0;       // over tokens with expected count >= 5
  std::size_t degrees_of_freedom = 0;
};

/// Mean probability of the most likely next token under the generator's own
/// conditionals, over `horizon` generated steps.
CeilingEstimate bayes_ceiling(const RoutineModel& routine, const HomeConfig& home,
                              std::size_t horizon, std::uint64_t seed);

}  // namespace homeseq
