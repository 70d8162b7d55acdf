// SPDX-License-Identifier: Apache-2.0
//
// Home config document:
//
//   [sensors]
//   # id = name, kind, room[, letter]
//   4  = hall_motion, motion, hall, a
//   10 = fridge_door, magnetic, kitchen
//
//   [rooms]
//   livingroom: kitchen, bedroom, hall
//
#include <sstream>

#include "homeseq/events.hpp"
#include "text_util.hpp"

namespace homeseq {

HomeConfig parse_home_config(std::string_view text) {
  enum class Section { none, sensors, rooms };
  Section section = Section::none;
  std::vector<SensorInfo> sensors;
  HomeConfig config;
  std::size_t line_no = 0;

  for (std::string_view raw : detail::split_lines(text)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line == "[sensors]")
        section = Section::sensors;
      else if (line == "[rooms]")
        section = Section::rooms;
      else
        throw ParseError(line_no, "unknown section " + std::string(line));
      continue;
    }

    if (section == Section::sensors) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'id = name, kind, room[, letter]'");
      const auto id = detail::parse_int(detail::trim(line.substr(0, eq)));
      if (!id) throw ParseError(line_no, "malformed sensor id");
      auto fields = detail::split(line.substr(eq + 1), ',');
      for (auto& f : fields) f = detail::trim(f);
      if (fields.size() < 3 || fields.size() > 4)
        throw ParseError(line_no, "expected 'id = name, kind, room[, letter]'");
      const auto kind = sensor_kind_from_string(fields[1]);
      if (!kind) throw ParseError(line_no, "sensor kind must be motion, magnetic or power");
      char letter = '\0';
      if (fields.size() == 4) {
        if (fields[3].size() != 1) throw ParseError(line_no, "letter must be a single character");
        letter = fields[3][0];
      }
      sensors.push_back(SensorInfo{*id, std::string(fields[0]), *kind, std::string(fields[2]), letter});
    } else if (section == Section::rooms) {
      const auto colon = line.find(':');
      const std::string room(detail::trim(line.substr(0, colon)));
      if (room.empty()) throw ParseError(line_no, "missing room name");
      config.graph.add_room(room);
      if (colon == std::string_view::npos) continue;
      for (auto n : detail::split(line.substr(colon + 1), ',')) {
        n = detail::trim(n);
        if (!n.empty()) config.graph.add_edge(room, std::string(n));
      }
    } else {
      throw ParseError(line_no, "content outside of a section");
    }
  }
  config.registry = SensorRegistry(std::move(sensors));
  return config;
}

std::string serialize_home_config(const HomeConfig& config) {
  std::ostringstream os;
  os << "[sensors]\n";
  for (const auto& s : config.registry.sensors())
    os << s.id << " = " << s.name << ", " << to_string(s.kind) << ", " << s.room << ", "
       << s.letter << "\n";
  os << "\n[rooms]\n";
  for (const auto& room : config.graph.rooms()) {
    os << room << ":";
    bool first = true;
    for (const auto& n : config.graph.neighbours(room)) {
      os << (first ? " " : ", ") << n;
      first = false;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace homeseq
