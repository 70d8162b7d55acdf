// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "homeseq/error.hpp"

namespace homeseq {

/// Wall-clock time at 1 s resolution, stored as seconds since 1970-01-01
/// 00:00:00 of the same (zone-less) calendar.
struct Timestamp {
  std::int64_t seconds = 0;

  auto operator<=>(const Timestamp&) const = default;

  /// Parses "DD.MM.YYYY HH:MM:SS"; returns nullopt on any malformed field.
  static std::optional<Timestamp> parse(std::string_view text);
  static Timestamp from_civil(int year, unsigned month, unsigned day,
                              unsigned hour, unsigned minute, unsigned second);

  std::string format() const;
  /// Fractional hour of day in [0, 24).
  double hour_of_day() const;
  std::int64_t day_index() const;
};

using SensorId = int;

enum class SensorState : std::uint8_t { off = 0, on = 1 };

struct SensorEvent {
  Timestamp timestamp;
  SensorId sensor_id = 0;
  SensorState state = SensorState::off;
  bool inserted = false;

  bool is_on() const { return state == SensorState::on; }
  bool operator==(const SensorEvent&) const = default;
};

enum class SensorKind : std::uint8_t { motion, magnetic, power };

std::string_view to_string(SensorKind kind);
std::optional<SensorKind> sensor_kind_from_string(std::string_view text);

struct SensorInfo {
  SensorId id = 0;
  std::string name;
  SensorKind kind = SensorKind::motion;
  std::string room;
  char letter = 'a';  // lower-case; upper-case marks "on"
};

/// Sensors of one apartment keyed by id. Letters are unique per sensor.
class SensorRegistry {
 public:
  SensorRegistry() = default;
  /// Sensors without a letter ('\0') are assigned the next free letter in
  /// ascending id order.
  explicit SensorRegistry(std::vector<SensorInfo> sensors);

  bool empty() const { return sensors_.empty(); }
  std::size_t size() const { return sensors_.size(); }
  bool contains(SensorId id) const;
  const SensorInfo& at(SensorId id) const;
  const SensorInfo* find_by_letter(char letter) const;
  /// Sensors in ascending id order.
  const std::vector<SensorInfo>& sensors() const { return sensors_; }
  std::vector<SensorId> motion_sensors_in(std::string_view room) const;

 private:
  std::vector<SensorInfo> sensors_;
};

/// Undirected room adjacency used by the motion-correction rules.
class ApartmentGraph {
 public:
  ApartmentGraph() = default;

  void add_room(const std::string& room);
  void add_edge(const std::string& a, const std::string& b);

  const std::set<std::string>& rooms() const { return rooms_; }
  bool has_room(std::string_view room) const;
  bool adjacent(std::string_view a, std::string_view b) const;
  const std::set<std::string>& neighbours(std::string_view room) const;
  bool connected() const;

  /// Shortest room path a..b inclusive. Equal-length paths are broken by the
  /// lexicographically smallest room-name sequence. nullopt if unreachable.
  std::optional<std::vector<std::string>> shortest_path(std::string_view a,
                                                        std::string_view b) const;

  /// Throws ValidationError unless the graph is connected and every motion
  /// sensor sits in a known room.
  void validate(const SensorRegistry& registry) const;

 private:
  std::set<std::string> rooms_;
  std::map<std::string, std::set<std::string>, std::less<>> adjacency_;
};

struct HomeConfig {
  SensorRegistry registry;
  ApartmentGraph graph;
};

/// Reads the [sensors] / [rooms] key-value document.
HomeConfig parse_home_config(std::string_view text);
std::string serialize_home_config(const HomeConfig& config);

struct ParseOptions {
  /// When set, unknown sensor ids are rejected.
  const SensorRegistry* registry = nullptr;
};

std::vector<SensorEvent> parse_event_log(std::string_view text,
                                         const ParseOptions& options = {});
std::string format_event(const SensorEvent& event);
std::string serialize_event_log(std::span<const SensorEvent> events);

struct DuplicateWarning {
  SensorId sensor_id;
  SensorState state;
  Timestamp first;
  Timestamp second;
};

struct ValidationReport {
  std::set<SensorId> unknown_ids;
  std::vector<DuplicateWarning> duplicates;
  std::map<SensorId, std::size_t> counts;

  std::size_t issue_count() const { return unknown_ids.size() + duplicates.size(); }
  std::string to_text() const;
};

ValidationReport validate_against_registry(std::span<const SensorEvent> events,
                                           const SensorRegistry& registry);

}  // namespace homeseq
