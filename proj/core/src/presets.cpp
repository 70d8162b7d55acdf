// SPDX-License-Identifier: Apache-2.0
#include "homeseq/presets.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "homeseq/error.hpp"

namespace homeseq {
namespace {

struct SensorSlot {
  const char* name;
  SensorKind kind;
  const char* room;
};

// Full sensor set; presets pick ids for the ones they have.
constexpr SensorSlot kSlots[] = {
    {"motion_bedroom", SensorKind::motion, "bedroom"},
    {"motion_livingroom", SensorKind::motion, "livingroom"},
    {"motion_kitchen", SensorKind::motion, "kitchen"},
    {"motion_bathroom", SensorKind::motion, "bathroom"},
    {"motion_hall", SensorKind::motion, "hall"},
    {"door_entrance", SensorKind::magnetic, "hall"},
    {"door_fridge", SensorKind::magnetic, "kitchen"},
    {"door_bathroom", SensorKind::magnetic, "bathroom"},
    {"door_cabinet", SensorKind::magnetic, "kitchen"},
    {"power_tv", SensorKind::power, "livingroom"},
    {"power_kettle", SensorKind::power, "kitchen"},
    {"power_coffee_machine", SensorKind::power, "kitchen"},
    {"power_stove", SensorKind::power, "kitchen"},
    {"power_microwave", SensorKind::power, "kitchen"},
    {"lamp_bedroom", SensorKind::power, "bedroom"},
    {"lamp_livingroom", SensorKind::power, "livingroom"},
};

struct Variant {
  const char* name;
  std::map<std::string, SensorId> ids;
  std::string hotdrink;  // kettle or coffee machine
  double tv_bias;        // weight moved towards tv in daytime choices
};

Variant variant(std::string_view name) {
  auto ids = [](std::initializer_list<std::pair<const char*, SensorId>> list) {
    std::map<std::string, SensorId> m;
    for (const auto& [n, id] : list) m[n] = id;
    return m;
  };
  if (name == "apt1")
    return {"apt1",
            ids({{"motion_bedroom", 1}, {"motion_livingroom", 2}, {"motion_kitchen", 3},
                 {"motion_bathroom", 4}, {"motion_hall", 5}, {"door_entrance", 6},
                 {"door_fridge", 7}, {"door_bathroom", 8}, {"door_cabinet", 9}, {"power_tv", 10},
                 {"power_kettle", 11}, {"power_stove", 12}, {"power_microwave", 13},
                 {"lamp_bedroom", 14}, {"lamp_livingroom", 15}}),
            "power_kettle", 0.0};
  if (name == "apt2")  // no fridge sensor
    return {"apt2",
            ids({{"motion_hall", 21}, {"motion_kitchen", 22}, {"motion_livingroom", 23},
                 {"motion_bedroom", 24}, {"motion_bathroom", 25}, {"power_tv", 26},
                 {"door_entrance", 27}, {"door_bathroom", 28}, {"door_cabinet", 29},
                 {"power_kettle", 30}, {"power_stove", 31}, {"power_microwave", 32},
                 {"lamp_livingroom", 33}, {"lamp_bedroom", 34}}),
            "power_kettle", 0.1};
  if (name == "apt3")  // coffee machine instead of kettle
    return {"apt3",
            ids({{"door_entrance", 40}, {"motion_hall", 41}, {"motion_livingroom", 42},
                 {"power_tv", 43}, {"lamp_livingroom", 44}, {"motion_kitchen", 45},
                 {"door_fridge", 46}, {"door_cabinet", 47}, {"power_coffee_machine", 48},
                 {"power_stove", 49}, {"power_microwave", 50}, {"motion_bedroom", 51},
                 {"lamp_bedroom", 52}, {"motion_bathroom", 53}, {"door_bathroom", 54}}),
            "power_coffee_machine", -0.05};
  if (name == "apt4")  // no microwave
    return {"apt4",
            ids({{"motion_bedroom", 61}, {"lamp_bedroom", 62}, {"motion_bathroom", 63},
                 {"door_bathroom", 64}, {"motion_hall", 65}, {"door_entrance", 66},
                 {"motion_livingroom", 67}, {"power_tv", 68}, {"lamp_livingroom", 69},
                 {"motion_kitchen", 70}, {"door_fridge", 71}, {"door_cabinet", 72},
                 {"power_kettle", 73}, {"power_stove", 74}}),
            "power_kettle", 0.05};
  if (name == "apt5")  // coffee machine, no cabinet sensor
    return {"apt5",
            ids({{"motion_kitchen", 81}, {"door_fridge", 82}, {"power_coffee_machine", 83},
                 {"power_stove", 84}, {"power_microwave", 85}, {"door_bathroom", 86},
                 {"motion_livingroom", 87}, {"power_tv", 88}, {"lamp_livingroom", 89},
                 {"motion_hall", 90}, {"door_entrance", 91}, {"motion_bathroom", 92},
                 {"motion_bedroom", 93}, {"lamp_bedroom", 94}}),
            "power_coffee_machine", -0.1};
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected apt1 .. apt5)");
}

EmissionStep on(const std::string& s, std::int64_t lo, std::int64_t hi) {
  return {s, SensorState::on, lo, hi};
}
EmissionStep off(const std::string& s, std::int64_t lo, std::int64_t hi) {
  return {s, SensorState::off, lo, hi};
}

using Steps = std::vector<EmissionStep>;

class RoutineBuilder {
 public:
  RoutineBuilder(std::set<std::string> present, const Variant& v) : present_(std::move(present)), v_(v) {}

  /// Block with alternatives; steps on absent sensors are skipped and
  /// alternatives left empty are dropped.
  ActivityBlock block(std::vector<std::pair<double, Steps>> alts, double repeat = 0.0) const {
    ActivityBlock b;
    b.repeat = repeat;
    for (auto& [w, steps] : alts) {
      Alternative a;
      a.weight = w;
      for (auto& s : steps)
        if (present_.contains(s.sensor)) a.steps.push_back(std::move(s));
      if (!a.steps.empty()) b.alternatives.push_back(std::move(a));
    }
    return b;
  }

  ActivityBlock seq(Steps steps, double repeat = 0.0) const { return block({{1.0, std::move(steps)}}, repeat); }

  void activity(const std::string& name, const std::string& room, std::vector<ActivityBlock> blocks,
                std::int64_t idle_min = 0, std::int64_t idle_max = 0) {
    Activity a{name, room, {}, idle_min, idle_max};
    for (auto& b : blocks)
      if (!b.alternatives.empty()) a.blocks.push_back(std::move(b));
    routine.activities.push_back(std::move(a));
  }

  void hours(int from, int to, std::map<std::string, std::vector<std::pair<std::string, double>>> rows,
             const std::vector<std::pair<std::string, double>>& fallback) {
    HourBlock hb{from, to, {}};
    for (const auto& a : routine.activities) {
      const auto it = rows.find(a.name);
      hb.next[a.name] = it != rows.end() ? it->second : fallback;
    }
    routine.transitions.push_back(std::move(hb));
  }

  double tv(double w) const { return std::max(0.05, w + v_.tv_bias); }

  RoutineModel routine;

 private:
  std::set<std::string> present_;
  const Variant& v_;
};

RoutineModel build_routine(const Variant& v) {
  std::set<std::string> present;
  for (const auto& [n, id] : v.ids) present.insert(n);
  RoutineBuilder b(present, v);
  const std::string hot = v.hotdrink;

  // Motion sensors report presence: on when a room is entered, off when it is
  // left. Inside an activity no sensor fires twice.
  b.activity("sleep", "bedroom", {b.seq({on("lamp_bedroom", 20, 90), off("lamp_bedroom", 300, 1200)})},
             7200, 12600);
  b.activity("toilet", "bathroom", {b.seq({on("door_bathroom", 2, 6), off("door_bathroom", 2, 6)})}, 60,
             300);
  b.activity("breakfast", "kitchen",
             {b.seq({on("door_cabinet", 5, 30), off("door_cabinet", 3, 15)}),
              b.block({{0.7, {on(hot, 5, 30), off(hot, 120, 240)}},
                       {0.3, {on("power_microwave", 5, 30), off("power_microwave", 60, 180)}}}),
              b.seq({on("door_fridge", 10, 60), off("door_fridge", 5, 30)})},
             120, 600);
  b.activity("cook", "kitchen",
             {b.seq({on("door_fridge", 10, 60), off("door_fridge", 10, 40), on("door_cabinet", 10, 60),
                     off("door_cabinet", 5, 20), on("power_stove", 20, 120), off("power_stove", 600, 1500)})},
             30, 120);
  b.activity("snack", "kitchen",
             {b.seq({on("door_fridge", 10, 60), off("door_fridge", 5, 30)}),
              b.block({{0.6, {on("power_microwave", 10, 30), off("power_microwave", 60, 150)}},
                       {0.4, {on("door_cabinet", 10, 40), off("door_cabinet", 3, 15)}}})},
             30, 180);
  b.activity("hotdrink", "kitchen",
             {b.seq({on(hot, 10, 40), off(hot, 120, 240), on("door_cabinet", 10, 40),
                     off("door_cabinet", 3, 10)})},
             30, 120);
  b.activity("tv", "livingroom",
             {b.block({{0.7, {on("power_tv", 10, 60), off("power_tv", 300, 1500)}},
                       {0.3, {on("lamp_livingroom", 5, 30), on("power_tv", 5, 30), off("power_tv", 600, 2400),
                              off("lamp_livingroom", 5, 30)}}})});
  b.activity("out", "hall",
             {b.seq({on("door_entrance", 10, 60), off("door_entrance", 3, 10), off("motion_hall", 5, 30),
                     on("door_entrance", 1800, 7200), off("door_entrance", 2, 8), on("motion_hall", 1, 5)})});

  // Choices that depend on the hour are kept where the recent events already
  // tell the time of day apart (waking up, going to bed).
  using Row = std::vector<std::pair<std::string, double>>;
  auto day = [&](Row sleep, Row tv) {
    return std::map<std::string, Row>{
        {"sleep", std::move(sleep)},
        {"toilet", Row{{"hotdrink", 0.5}, {"snack", 0.3}, {"tv", b.tv(0.2)}}},
        {"breakfast", Row{{"tv", b.tv(0.7)}, {"toilet", 0.3}}},
        {"hotdrink", Row{{"tv", b.tv(0.8)}, {"toilet", 0.2}}},
        {"snack", Row{{"tv", b.tv(0.8)}, {"toilet", 0.2}}},
        {"cook", Row{{"tv", b.tv(0.8)}, {"toilet", 0.2}}},
        {"out", Row{{"toilet", 0.7}, {"hotdrink", 0.3}}},
        {"tv", std::move(tv)}};
  };
  b.hours(0, 6, {{"sleep", Row{{"toilet", 1.0}}}}, Row{{"sleep", 1.0}});
  b.hours(6, 10, day(Row{{"breakfast", 1.0}}, Row{{"toilet", 0.7}, {"out", 0.3}}), Row{{"toilet", 1.0}});
  b.hours(10, 21, day(Row{{"breakfast", 1.0}}, Row{{"toilet", 0.6}, {"cook", 0.3}, {"out", 0.1}}),
          Row{{"toilet", 1.0}});
  b.hours(21, 24, day(Row{{"toilet", 1.0}}, Row{{"toilet", 0.55}, {"sleep", 0.45}}), Row{{"toilet", 1.0}});

  b.routine.start_activity = "sleep";
  return std::move(b.routine);
}

}  // namespace

std::vector<std::string> preset_names() { return {"apt1", "apt2", "apt3", "apt4", "apt5"}; }

Preset make_preset(std::string_view name) {
  const Variant v = variant(name);
  Preset p;
  p.name = v.name;

  std::vector<SensorInfo> infos;
  for (const auto& slot : kSlots) {
    const auto it = v.ids.find(slot.name);
    if (it == v.ids.end()) continue;
    infos.push_back({it->second, slot.name, slot.kind, slot.room, '\0'});
  }
  p.home.registry = SensorRegistry(std::move(infos));
  for (const char* room : {"bedroom", "livingroom", "kitchen", "bathroom", "hall"}) p.home.graph.add_room(room);
  p.home.graph.add_edge("hall", "livingroom");
  p.home.graph.add_edge("hall", "bathroom");
  p.home.graph.add_edge("hall", "bedroom");
  p.home.graph.add_edge("livingroom", "kitchen");

  p.routine = build_routine(v);

  for (const auto& s : p.home.registry.sensors()) {
    if (s.name.starts_with("lamp_"))
      p.harmonization.drop.insert(s.id);
    else if (s.name == "power_kettle" || s.name == "power_coffee_machine")
      p.harmonization.labels[s.id] = "hotdrink";
    else
      p.harmonization.labels[s.id] = s.name;
  }
  p.routine.validate(p.home);
  return p;
}

}  // namespace homeseq
