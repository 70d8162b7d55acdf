// SPDX-License-Identifier: Apache-2.0
#include "homeseq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "homeseq/error.hpp"
#include "homeseq/symbolization.hpp"

namespace homeseq {

// ---------------------------------------------------------------------------
// Validation and text form

void RoutineModel::validate(const HomeConfig& home) const {
  if (activities.empty()) throw ConfigError("routine has no activities");
  if (move_gap_min < 1 || move_gap_max < move_gap_min) throw ConfigError("invalid movement gap range");
  std::map<std::string, const Activity*, std::less<>> by_name;
  std::map<std::string, int, std::less<>> sensor_names;
  for (const auto& s : home.registry.sensors()) ++sensor_names[s.name];

  for (const auto& a : activities) {
    if (a.name.empty()) throw ConfigError("activity without a name");
    if (!by_name.emplace(a.name, &a).second) throw ConfigError("duplicate activity '" + a.name + "'");
    if (!home.graph.has_room(a.room))
      throw ValidationError("activity '" + a.name + "' is in unknown room '" + a.room + "'");
    if (home.registry.motion_sensors_in(a.room).empty())
      throw ValidationError("room '" + a.room + "' has no motion sensor");
    if (a.blocks.empty()) throw ConfigError("activity '" + a.name + "' has no blocks");
    if (a.idle_min < 0 || a.idle_max < a.idle_min)
      throw ConfigError("invalid idle range for activity '" + a.name + "'");
    for (const auto& b : a.blocks) {
      if (!(b.repeat >= 0.0 && b.repeat < 1.0))
        throw ConfigError("repeat probability of '" + a.name + "' must be in [0, 1)");
      if (b.alternatives.empty()) throw ConfigError("activity '" + a.name + "' has an empty block");
      for (const auto& alt : b.alternatives) {
        if (!(alt.weight > 0.0) || !std::isfinite(alt.weight))
          throw ConfigError("alternative weights must be positive");
        if (alt.steps.empty()) throw ConfigError("activity '" + a.name + "' has an empty alternative");
        for (const auto& s : alt.steps) {
          const auto it = sensor_names.find(s.sensor);
          if (it == sensor_names.end())
            throw ValidationError("routine references unknown sensor '" + s.sensor + "'");
          if (it->second > 1) throw ValidationError("sensor name '" + s.sensor + "' is ambiguous");
          if (s.gap_min < 1 || s.gap_max < s.gap_min)
            throw ConfigError("invalid gap range for sensor '" + s.sensor + "'");
        }
      }
    }
  }
  if (!by_name.contains(start_activity))
    throw ConfigError("unknown start activity '" + start_activity + "'");

  if (transitions.empty()) throw ConfigError("routine has no transition table");
  int hour = 0;
  for (const auto& hb : transitions) {
    if (hb.from_hour != hour || hb.to_hour <= hb.from_hour || hb.to_hour > 24)
      throw ConfigError("transition hour blocks must tile [0, 24) in order");
    hour = hb.to_hour;
    for (const auto& a : activities) {
      const auto row = hb.next.find(a.name);
      if (row == hb.next.end() || row->second.empty())
        throw ConfigError("no transitions from '" + a.name + "' in hours " +
                          std::to_string(hb.from_hour) + "-" + std::to_string(hb.to_hour));
      for (const auto& [target, w] : row->second) {
        if (!by_name.contains(target)) throw ConfigError("transition to unknown activity '" + target + "'");
        if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("transition weights must be positive");
      }
    }
    for (const auto& [from, row] : hb.next)
      if (!by_name.contains(from)) throw ConfigError("transitions from unknown activity '" + from + "'");
  }
  if (hour != 24) throw ConfigError("transition hour blocks must tile [0, 24) in order");

  for (const auto& a : activities)
    for (const auto& b : activities) {
      const auto path = home.graph.shortest_path(a.room, b.room);
      if (!path) throw ValidationError("rooms '" + a.room + "' and '" + b.room + "' are not connected");
      for (const auto& r : *path)
        if (home.registry.motion_sensors_in(r).empty())
          throw ValidationError("room '" + r + "' on a walking path has no motion sensor");
    }
}

std::string RoutineModel::to_text() const {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["format"] = "homeseq-routine/1";
  doc["start"] = start.format();
  doc["start_activity"] = start_activity;
  doc["move_gap"] = {move_gap_min, move_gap_max};
  doc["activities"] = ordered_json::array();
  for (const auto& a : activities) {
    ordered_json ja;
    ja["name"] = a.name;
    ja["room"] = a.room;
    if (a.idle_max > 0) ja["idle"] = {a.idle_min, a.idle_max};
    ja["blocks"] = ordered_json::array();
    for (const auto& b : a.blocks) {
      ordered_json jb;
      jb["repeat"] = b.repeat;
      jb["alternatives"] = ordered_json::array();
      for (const auto& alt : b.alternatives) {
        ordered_json jalt;
        jalt["weight"] = alt.weight;
        jalt["steps"] = ordered_json::array();
        for (const auto& s : alt.steps)
          jalt["steps"].push_back({{"sensor", s.sensor},
                                   {"state", s.state == SensorState::on ? 1 : 0},
                                   {"gap", {s.gap_min, s.gap_max}}});
        jb["alternatives"].push_back(std::move(jalt));
      }
      ja["blocks"].push_back(std::move(jb));
    }
    doc["activities"].push_back(std::move(ja));
  }
  doc["transitions"] = ordered_json::array();
  for (const auto& hb : transitions) {
    ordered_json jh;
    jh["hours"] = {hb.from_hour, hb.to_hour};
    jh["next"] = ordered_json::object();
    // Rows follow activity order so the document is stable.
    for (const auto& a : activities) {
      const auto row = hb.next.find(a.name);
      if (row == hb.next.end()) continue;
      ordered_json jr = ordered_json::object();
      for (const auto& [target, w] : row->second) jr[target] = w;
      jh["next"][a.name] = std::move(jr);
    }
    doc["transitions"].push_back(std::move(jh));
  }
  return doc.dump(1) + "\n";
}

RoutineModel RoutineModel::from_text(std::string_view text) {
  RoutineModel r;
  try {
    const auto doc = nlohmann::ordered_json::parse(text);
    if (doc.at("format") != "homeseq-routine/1") throw ConfigError("unsupported routine format");
    if (doc.contains("start")) {
      const auto ts = Timestamp::parse(doc.at("start").get<std::string>());
      if (!ts) throw ConfigError("routine start is not a valid timestamp");
      r.start = *ts;
    }
    r.start_activity = doc.at("start_activity").get<std::string>();
    if (doc.contains("move_gap")) {
      r.move_gap_min = doc.at("move_gap").at(0).get<std::int64_t>();
      r.move_gap_max = doc.at("move_gap").at(1).get<std::int64_t>();
    }
    for (const auto& ja : doc.at("activities")) {
      Activity a;
      a.name = ja.at("name").get<std::string>();
      a.room = ja.at("room").get<std::string>();
      if (ja.contains("idle")) {
        a.idle_min = ja.at("idle").at(0).get<std::int64_t>();
        a.idle_max = ja.at("idle").at(1).get<std::int64_t>();
      }
      for (const auto& jb : ja.at("blocks")) {
        ActivityBlock b;
        b.repeat = jb.value("repeat", 0.0);
        for (const auto& jalt : jb.at("alternatives")) {
          Alternative alt;
          alt.weight = jalt.value("weight", 1.0);
          for (const auto& js : jalt.at("steps")) {
            EmissionStep s;
            s.sensor = js.at("sensor").get<std::string>();
            const int st = js.at("state").get<int>();
            if (st != 0 && st != 1) throw ConfigError("step state must be 0 or 1");
            s.state = st ? SensorState::on : SensorState::off;
            s.gap_min = js.at("gap").at(0).get<std::int64_t>();
            s.gap_max = js.at("gap").at(1).get<std::int64_t>();
            alt.steps.push_back(std::move(s));
          }
          b.alternatives.push_back(std::move(alt));
        }
        a.blocks.push_back(std::move(b));
      }
      r.activities.push_back(std::move(a));
    }
    for (const auto& jh : doc.at("transitions")) {
      HourBlock hb;
      hb.from_hour = jh.at("hours").at(0).get<int>();
      hb.to_hour = jh.at("hours").at(1).get<int>();
      for (const auto& [from, row] : jh.at("next").items())
        for (const auto& [target, w] : row.items()) hb.next[from].emplace_back(target, w.get<double>());
      r.transitions.push_back(std::move(hb));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("routine: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

struct CStep {
  SensorId id;
  SensorState state;
  std::int64_t lo, hi;
};

struct CBlock {
  std::vector<std::pair<double, std::vector<CStep>>> alternatives;  // normalized weights
  double repeat;
};

struct CActivity {
  std::size_t room;
  std::int64_t idle_lo, idle_hi;
  std::vector<CBlock> blocks;
};

struct State {
  enum class Kind : std::uint8_t { begin, in_activity, moving_on, moving_off };
  Kind kind = Kind::begin;
  std::size_t activity = 0;  // current, or the one walked to
  std::size_t block = 0, alt = 0, step = 0;
  std::size_t from_room = 0;  // moving: path from_room -> rooms[activity]
  std::size_t index = 0;      // moving: position on the path
};

struct Option {
  double p;
  SensorId id;
  SensorState state;
  std::int64_t lo, hi;
  State next;
};

class Generator {
 public:
  Generator(const RoutineModel& routine, const HomeConfig& home) : routine_(routine) {
    routine.validate(home);
    std::map<std::string, SensorId, std::less<>> ids;
    for (const auto& s : home.registry.sensors()) ids[s.name] = s.id;

    std::map<std::string, std::size_t, std::less<>> room_index;
    for (const auto& a : routine.activities)
      if (room_index.emplace(a.room, rooms_.size()).second) rooms_.push_back(a.room);

    std::map<std::string, std::size_t, std::less<>> act_index;
    for (const auto& a : routine.activities) {
      act_index[a.name] = activities_.size();
      CActivity ca;
      ca.room = room_index.at(a.room);
      ca.idle_lo = a.idle_min;
      ca.idle_hi = a.idle_max;
      for (const auto& b : a.blocks) {
        CBlock cb;
        cb.repeat = b.repeat;
        double total = 0.0;
        for (const auto& alt : b.alternatives) total += alt.weight;
        for (const auto& alt : b.alternatives) {
          std::vector<CStep> steps;
          for (const auto& s : alt.steps) steps.push_back({ids.at(s.sensor), s.state, s.gap_min, s.gap_max});
          cb.alternatives.emplace_back(alt.weight / total, std::move(steps));
        }
        ca.blocks.push_back(std::move(cb));
      }
      activities_.push_back(std::move(ca));
    }
    start_ = act_index.at(routine.start_activity);

    hour_block_.fill(0);
    for (std::size_t h = 0; h < routine.transitions.size(); ++h) {
      const auto& hb = routine.transitions[h];
      for (int hour = hb.from_hour; hour < hb.to_hour; ++hour) hour_block_[static_cast<std::size_t>(hour)] = h;
      std::vector<std::vector<std::pair<std::size_t, double>>> table(activities_.size());
      for (const auto& a : routine.activities) {
        auto& row = table[act_index.at(a.name)];
        double total = 0.0;
        for (const auto& [target, w] : hb.next.at(a.name)) total += w;
        for (const auto& [target, w] : hb.next.at(a.name)) row.emplace_back(act_index.at(target), w / total);
      }
      tables_.push_back(std::move(table));
    }

    paths_.assign(rooms_.size(), std::vector<std::vector<SensorId>>(rooms_.size()));
    for (std::size_t a = 0; a < rooms_.size(); ++a)
      for (std::size_t b = 0; b < rooms_.size(); ++b) {
        const auto path = home.graph.shortest_path(rooms_[a], rooms_[b]);
        for (const auto& r : *path) paths_[a][b].push_back(home.registry.motion_sensors_in(r).front());
      }
  }

  void options(const State& s, double hour, std::vector<Option>& out) const {
    out.clear();
    switch (s.kind) {
      case State::Kind::begin:
        enter_block(start_, 0, 1.0, out);
        break;
      case State::Kind::in_activity: {
        const auto& block = activities_[s.activity].blocks[s.block];
        const auto& steps = block.alternatives[s.alt].second;
        if (s.step + 1 < steps.size()) {
          State n = s;
          ++n.step;
          push(1.0, steps[n.step], n, out);
        } else {
          if (block.repeat > 0.0) enter_block(s.activity, s.block, block.repeat, out);
          if (s.block + 1 < activities_[s.activity].blocks.size())
            enter_block(s.activity, s.block + 1, 1.0 - block.repeat, out);
          else
            activity_end(s.activity, 1.0 - block.repeat, hour, out);
        }
        break;
      }
      case State::Kind::moving_on: {
        const auto& path = paths_[s.from_room][activities_[s.activity].room];
        State n = s;
        n.kind = State::Kind::moving_off;
        out.push_back({1.0, path[s.index - 1], SensorState::off, routine_.move_gap_min,
                       routine_.move_gap_max, n});
        break;
      }
      case State::Kind::moving_off: {
        const auto& path = paths_[s.from_room][activities_[s.activity].room];
        if (s.index + 1 == path.size()) {
          enter_block(s.activity, 0, 1.0, out);
        } else {
          State n = s;
          n.kind = State::Kind::moving_on;
          ++n.index;
          out.push_back({1.0, path[n.index], SensorState::on, routine_.move_gap_min,
                         routine_.move_gap_max, n});
        }
        break;
      }
    }
  }

 private:
  static void push(double p, const CStep& step, const State& next, std::vector<Option>& out) {
    out.push_back({p, step.id, step.state, step.lo, step.hi, next});
  }

  void enter_block(std::size_t a, std::size_t b, double p, std::vector<Option>& out) const {
    const auto& alts = activities_[a].blocks[b].alternatives;
    for (std::size_t k = 0; k < alts.size(); ++k) {
      State n;
      n.kind = State::Kind::in_activity;
      n.activity = a;
      n.block = b;
      n.alt = k;
      n.step = 0;
      push(p * alts[k].first, alts[k].second.front(), n, out);
    }
  }

  void activity_end(std::size_t a, double p, double hour, std::vector<Option>& out) const {
    const std::size_t first = out.size();
    const auto h = std::min<std::size_t>(23, static_cast<std::size_t>(hour));
    for (const auto& [next, q] : tables_[hour_block_[h]][a]) {
      const std::size_t from = activities_[a].room, to = activities_[next].room;
      if (from == to) {
        enter_block(next, 0, p * q, out);
        continue;
      }
      State n;
      n.kind = State::Kind::moving_on;
      n.activity = next;
      n.from_room = from;
      n.index = 1;
      out.push_back({p * q, paths_[from][to][1], SensorState::on, routine_.move_gap_min,
                     routine_.move_gap_max, n});
    }
    for (std::size_t i = first; i < out.size(); ++i) {
      out[i].lo += activities_[a].idle_lo;
      out[i].hi += activities_[a].idle_hi;
    }
  }

  const RoutineModel& routine_;
  std::vector<std::string> rooms_;
  std::vector<CActivity> activities_;
  std::size_t start_ = 0;
  std::array<std::size_t, 24> hour_block_{};
  std::vector<std::vector<std::vector<std::pair<std::size_t, double>>>> tables_;
  std::vector<std::vector<std::vector<SensorId>>> paths_;  // motion ids along room paths
};

std::size_t sample(const std::vector<Option>& opts, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < opts.size(); ++i) {
    acc += opts[i].p;
    if (u < acc) return i;
  }
  return opts.size() - 1;
}

}  // namespace

std::vector<SensorEvent> simulate(const RoutineModel& routine, const HomeConfig& home, double days,
                                  std::uint64_t seed) {
  if (!(days >= 0.0)) throw ConfigError("duration must be non-negative");
  const Generator gen(routine, home);
  std::vector<SensorEvent> events;
  if (days == 0.0) return events;
  const std::int64_t end = routine.start.seconds + static_cast<std::int64_t>(std::llround(days * 86400.0));
  std::mt19937_64 rng(seed);
  std::vector<Option> opts;
  State state;
  Timestamp now = routine.start;
  while (true) {
    gen.options(state, now.hour_of_day(), opts);
    const Option& o = opts[sample(opts, rng)];
    now.seconds += std::uniform_int_distribution<std::int64_t>(o.lo, o.hi)(rng);
    if (now.seconds >= end) break;
    events.push_back({now, o.id, o.state, false});
    state = o.next;
  }
  return events;
}

CeilingEstimate bayes_ceiling(const RoutineModel& routine, const HomeConfig& home,
                              std::size_t horizon, std::uint64_t seed) {
  if (horizon == 0) throw ConfigError("horizon must be positive");
  const Generator gen(routine, home);
  const Vocabulary vocab = speed_vocabulary(home.registry);
  std::map<std::pair<SensorId, SensorState>, std::size_t> token_of;
  for (const auto& s : home.registry.sensors()) {
    token_of[{s.id, SensorState::on}] = *vocab.index_of(std::string(1, static_cast<char>(std::toupper(s.letter))));
    token_of[{s.id, SensorState::off}] = *vocab.index_of(std::string(1, s.letter));
  }

  CeilingEstimate est;
  est.steps = horizon;
  est.tokens = vocab.tokens();
  est.observed.assign(vocab.size(), 0);
  est.expected.assign(vocab.size(), 0.0);

  constexpr std::size_t kBatches = 100;
  std::vector<double> batch_sum(kBatches, 0.0);
  std::vector<std::size_t> batch_n(kBatches, 0);
  std::vector<double> dist(vocab.size());

  std::mt19937_64 rng(seed);
  std::vector<Option> opts;
  State state;
  Timestamp now = routine.start;
  double total = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    gen.options(state, now.hour_of_day(), opts);
    std::fill(dist.begin(), dist.end(), 0.0);
    for (const auto& o : opts) dist[token_of.at({o.id, o.state})] += o.p;
    const double best = *std::max_element(dist.begin(), dist.end());
    total += best;
    const std::size_t b = t * kBatches / horizon;
    batch_sum[b] += best;
    ++batch_n[b];
    for (std::size_t i = 0; i < dist.size(); ++i) est.expected[i] += dist[i];

    const Option& o = opts[sample(opts, rng)];
    now.seconds += std::uniform_int_distribution<std::int64_t>(o.lo, o.hi)(rng);
    ++est.observed[token_of.at({o.id, o.state})];
    state = o.next;
  }
  est.ceiling = total / static_cast<double>(horizon);

  std::vector<double> means;
  for (std::size_t b = 0; b < kBatches; ++b)
    if (batch_n[b]) means.push_back(batch_sum[b] / static_cast<double>(batch_n[b]));
  if (means.size() > 1) {
    double m = 0.0, v = 0.0;
    for (double x : means) m += x;
    m /= static_cast<double>(means.size());
    for (double x : means) v += (x - m) * (x - m);
    v /= static_cast<double>(means.size() - 1);
    est.standard_error = std::sqrt(v / static_cast<double>(means.size()));
  }

  std::size_t cells = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (est.expected[i] < 5.0) continue;
    const double d = static_cast<double>(est.observed[i]) - est.expected[i];
    est.chi_square += d * d / est.expected[i];
    ++cells;
  }
  est.degrees_of_freedom = cells > 0 ? cells - 1 : 0;
  return est;
}

}  // namespace homeseq
