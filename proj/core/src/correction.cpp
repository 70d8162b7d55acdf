// SPDX-License-Identifier: Apache-2.0
#include "homeseq/correction.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

namespace homeseq {

namespace {

const SensorInfo* motion_activation(const SensorEvent& e, const SensorRegistry& registry) {
  if (!e.is_on()) return nullptr;
  const SensorInfo& info = registry.at(e.sensor_id);
  return info.kind == SensorKind::motion ? &info : nullptr;
}

std::map<std::string, int, std::less<>> distances_to(const ApartmentGraph& graph,
                                                     const std::string& target) {
  std::map<std::string, int, std::less<>> dist{{target, 0}};
  std::deque<std::string> queue{target};
  while (!queue.empty()) {
    const std::string room = queue.front();
    queue.pop_front();
    for (const auto& n : graph.neighbours(room))
      if (dist.emplace(n, dist[room] + 1).second) queue.push_back(n);
  }
  return dist;
}

std::size_t count_shortest_paths(const ApartmentGraph& graph, const std::string& from,
                                 const std::map<std::string, int, std::less<>>& dist) {
  std::function<std::size_t(const std::string&)> count = [&](const std::string& room) {
    const int d = dist.at(room);
    if (d == 0) return std::size_t{1};
    std::size_t total = 0;
    for (const auto& n : graph.neighbours(room)) {
      auto it = dist.find(n);
      if (it != dist.end() && it->second == d - 1) total += count(n);
    }
    return total;
  };
  return count(from);
}

std::int64_t spaced_time(std::int64_t t0, std::int64_t t1, std::size_t j, std::size_t m) {
  // t0 + j*(t1-t0)/(m+1), rounded half up
  const std::int64_t num = 2 * static_cast<std::int64_t>(j) * (t1 - t0) + static_cast<std::int64_t>(m + 1);
  const std::int64_t den = 2 * static_cast<std::int64_t>(m + 1);
  std::int64_t q = num / den;
  if (num % den != 0 && num < 0) --q;
  return t0 + q;
}

}  // namespace

bool activation_pair_valid(const ApartmentGraph& graph, const SensorRegistry& registry,
                           const std::string& from, const std::string& to) {
  if (from == to || graph.adjacent(from, to)) return true;
  const auto dist = distances_to(graph, to);
  if (!dist.count(from)) return false;
  std::function<bool(const std::string&)> sensorless_route = [&](const std::string& room) {
    const int d = dist.at(room);
    for (const auto& n : graph.neighbours(room)) {
      auto it = dist.find(n);
      if (it == dist.end() || it->second != d - 1) continue;
      if (n == to) return true;
      if (registry.motion_sensors_in(n).empty() && sensorless_route(n)) return true;
    }
    return false;
  };
  return sensorless_route(from);
}

CorrectionResult correct_missing_motion(std::span<const SensorEvent> events,
                                        const ApartmentGraph& graph,
                                        const SensorRegistry& registry) {
  CorrectionResult result;
  result.events.reserve(events.size());
  // Events after the previous activation are staged so insertions can be
  // merged in by timestamp.
  std::vector<SensorEvent> staged;
  const SensorEvent* previous = nullptr;
  const SensorInfo* previous_info = nullptr;

  auto flush = [&] {
    result.events.insert(result.events.end(), staged.begin(), staged.end());
    staged.clear();
  };

  for (const SensorEvent& e : events) {
    const SensorInfo* info = motion_activation(e, registry);
    if (!info) {
      staged.push_back(e);
      continue;
    }
    if (!graph.has_room(info->room))
      throw ValidationError("motion sensor " + std::to_string(info->id) + " in unknown room '" +
                            info->room + "'");

    if (previous_info &&
        !activation_pair_valid(graph, registry, previous_info->room, info->room)) {
      auto path = graph.shortest_path(previous_info->room, info->room);
      if (!path)
        throw ValidationError("room '" + info->room + "' unreachable from '" +
                              previous_info->room + "'");
      const auto dist = distances_to(graph, info->room);
      if (count_shortest_paths(graph, previous_info->room, dist) > 1) {
        std::string note = "ambiguous shortest path " + previous_info->room + " -> " +
                           info->room + " at " + e.timestamp.format() + "; chose";
        for (const auto& r : *path) note += " " + r;
        result.report.notes.push_back(std::move(note));
      }

      std::vector<SensorId> fill;
      for (std::size_t k = 1; k + 1 < path->size(); ++k) {
        const auto sensors = registry.motion_sensors_in((*path)[k]);
        if (!sensors.empty()) fill.push_back(sensors.front());
      }
      for (std::size_t j = 0; j < fill.size(); ++j) {
        SensorEvent ins{Timestamp{spaced_time(previous->timestamp.seconds, e.timestamp.seconds,
                                              j + 1, fill.size())},
                        fill[j], SensorState::on, true};
        auto pos = std::upper_bound(staged.begin(), staged.end(), ins.timestamp,
                                    [](Timestamp t, const SensorEvent& x) { return t < x.timestamp; });
        staged.insert(pos, ins);
        result.report.inserted.push_back({ins, *path});
        ++result.report.counts[ins.sensor_id];
      }
    }
    flush();
    result.events.push_back(e);
    previous = &e;
    previous_info = info;
  }
  flush();
  return result;
}

std::size_t count_graph_violations(std::span<const SensorEvent> events,
                                   const ApartmentGraph& graph, const SensorRegistry& registry) {
  std::size_t violations = 0;
  const SensorInfo* previous = nullptr;
  for (const auto& e : events) {
    const SensorInfo* info = motion_activation(e, registry);
    if (!info) continue;
    if (previous && !activation_pair_valid(graph, registry, previous->room, info->room))
      ++violations;
    previous = info;
  }
  return violations;
}

std::string CorrectionReport::to_csv() const {
  std::ostringstream os;
  os << "timestamp,sensor_id,path\n";
  for (const auto& ins : inserted) {
    os << ins.event.timestamp.format() << "," << ins.event.sensor_id << ",";
    for (std::size_t i = 0; i < ins.path.size(); ++i) os << (i ? ">" : "") << ins.path[i];
    os << "\n";
  }
  os << "\nsensor_id,inserted_count\n";
  for (const auto& [id, n] : counts) os << id << "," << n << "\n";
  for (const auto& note : notes) os << "# " << note << "\n";
  return os.str();
}

}  // namespace homeseq
