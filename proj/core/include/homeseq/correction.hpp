// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "homeseq/events.hpp"

namespace homeseq {

struct InsertedActivation {
  SensorEvent event;
  std::vector<std::string> path;  // full room path from previous to next activation
};

struct CorrectionReport {
  std::vector<InsertedActivation> inserted;
  std::map<SensorId, std::size_t> counts;
  std::vector<std::string> notes;

  std::string to_csv() const;
};

struct CorrectionResult {
  std::vector<SensorEvent> events;
  CorrectionReport report;
};

/// True when a motion activation in `to` may directly follow one in `from`:
/// same room, or some shortest path between them crosses only rooms that have
/// no motion sensor.
bool activation_pair_valid(const ApartmentGraph& graph, const SensorRegistry& registry,
                           const std::string& from, const std::string& to);

/// Inserts the motion activations implied by the room topology between every
/// pair of consecutive motion activations that are not directly reachable.
/// Off events and non-motion events are ignored for detection and passed
/// through unchanged.
CorrectionResult correct_missing_motion(std::span<const SensorEvent> events,
                                        const ApartmentGraph& graph,
                                        const SensorRegistry& registry);

/// Number of consecutive motion-activation pairs that violate the topology.
std::size_t count_graph_violations(std::span<const SensorEvent> events,
                                   const ApartmentGraph& graph, const SensorRegistry& registry);

}  // namespace homeseq
