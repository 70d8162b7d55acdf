// SPDX-License-Identifier: Apache-2.0
#include "homeseq/events.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <deque>
#include <sstream>

#include "text_util.hpp"

namespace homeseq {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

bool parse_fixed(std::string_view text, std::size_t pos, std::size_t width,
                 unsigned& out) {
  if (pos + width > text.size()) return false;
  unsigned value = 0;
  for (std::size_t i = pos; i < pos + width; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + static_cast<unsigned>(c - '0');
  }
  out = value;
  return true;
}

}  // namespace

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
  // DD.MM.YYYY HH:MM:SS
  if (text.size() != 19 || text[2] != '.' || text[5] != '.' || text[10] != ' ' ||
      text[13] != ':' || text[16] != ':')
    return std::nullopt;
  unsigned d, mo, y, h, mi, s;
  if (!parse_fixed(text, 0, 2, d) || !parse_fixed(text, 3, 2, mo) ||
      !parse_fixed(text, 6, 4, y) || !parse_fixed(text, 11, 2, h) ||
      !parse_fixed(text, 14, 2, mi) || !parse_fixed(text, 17, 2, s))
    return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)},
                                        std::chrono::month{mo}, std::chrono::day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
  return from_civil(static_cast<int>(y), mo, d, h, mi, s);
}

Timestamp Timestamp::from_civil(int year, unsigned month, unsigned day,
                                unsigned hour, unsigned minute, unsigned second) {
  const std::chrono::sys_days days{std::chrono::year_month_day{
      std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}}};
  return Timestamp{days.time_since_epoch().count() * kSecondsPerDay +
                   hour * 3600 + minute * 60 + second};
}

std::int64_t Timestamp::day_index() const {
  auto q = seconds / kSecondsPerDay;
  if (seconds % kSecondsPerDay < 0) --q;
  return q;
}

double Timestamp::hour_of_day() const {
  const std::int64_t sod = seconds - day_index() * kSecondsPerDay;
  return static_cast<double>(sod) / 3600.0;
}

std::string Timestamp::format() const {
  const std::int64_t day = day_index();
  const std::int64_t sod = seconds - day * kSecondsPerDay;
  const std::chrono::year_month_day ymd{
      std::chrono::sys_days{std::chrono::days{day}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02u.%02u.%04d %02d:%02d:%02d",
                static_cast<unsigned>(ymd.day()), static_cast<unsigned>(ymd.month()),
                static_cast<int>(ymd.year()), static_cast<int>(sod / 3600),
                static_cast<int>(sod / 60 % 60), static_cast<int>(sod % 60));
  return buf;
}

std::string_view to_string(SensorKind kind) {
  switch (kind) {
    case SensorKind::motion: return "motion";
    case SensorKind::magnetic: return "magnetic";
    case SensorKind::power: return "power";
  }
  return "?";
}

std::optional<SensorKind> sensor_kind_from_string(std::string_view text) {
  if (text == "motion") return SensorKind::motion;
  if (text == "magnetic") return SensorKind::magnetic;
  if (text == "power") return SensorKind::power;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// SensorRegistry

SensorRegistry::SensorRegistry(std::vector<SensorInfo> sensors) : sensors_(std::move(sensors)) {
  std::sort(sensors_.begin(), sensors_.end(),
            [](const SensorInfo& a, const SensorInfo& b) { return a.id < b.id; });
  std::set<char> used;
  for (std::size_t i = 0; i < sensors_.size(); ++i) {
    if (i > 0 && sensors_[i].id == sensors_[i - 1].id)
      throw ValidationError("duplicate sensor id " + std::to_string(sensors_[i].id));
    char& letter = sensors_[i].letter;
    if (letter == '\0') continue;
    if (letter >= 'A' && letter <= 'Z') letter = static_cast<char>(letter - 'A' + 'a');
    if (letter < 'a' || letter > 'z')
      throw ValidationError("sensor " + std::to_string(sensors_[i].id) +
                            ": letter must be a-z");
    if (!used.insert(letter).second)
      throw ValidationError(std::string("letter '") + letter + "' assigned twice");
  }
  char next = 'a';
  for (auto& s : sensors_) {
    if (s.letter != '\0') continue;
    while (next <= 'z' && used.count(next)) ++next;
    if (next > 'z') throw ValidationError("more than 26 sensors; out of letters");
    s.letter = next;
    used.insert(next);
  }
}

bool SensorRegistry::contains(SensorId id) const {
  auto it = std::lower_bound(sensors_.begin(), sensors_.end(), id,
                             [](const SensorInfo& s, SensorId v) { return s.id < v; });
  return it != sensors_.end() && it->id == id;
}

const SensorInfo& SensorRegistry::at(SensorId id) const {
  auto it = std::lower_bound(sensors_.begin(), sensors_.end(), id,
                             [](const SensorInfo& s, SensorId v) { return s.id < v; });
  if (it == sensors_.end() || it->id != id)
    throw ValidationError("unknown sensor id " + std::to_string(id));
  return *it;
}

const SensorInfo* SensorRegistry::find_by_letter(char letter) const {
  if (letter >= 'A' && letter <= 'Z') letter = static_cast<char>(letter - 'A' + 'a');
  for (const auto& s : sensors_)
    if (s.letter == letter) return &s;
  return nullptr;
}

std::vector<SensorId> SensorRegistry::motion_sensors_in(std::string_view room) const {
  std::vector<SensorId> out;
  for (const auto& s : sensors_)
    if (s.kind == SensorKind::motion && s.room == room) out.push_back(s.id);
  return out;
}

// ---------------------------------------------------------------------------
// ApartmentGraph

void ApartmentGraph::add_room(const std::string& room) {
  rooms_.insert(room);
  adjacency_[room];
}

void ApartmentGraph::add_edge(const std::string& a, const std::string& b) {
  if (a == b) return;
  add_room(a);
  add_room(b);
  adjacency_[a].insert(b);
  adjacency_[b].insert(a);
}

bool ApartmentGraph::has_room(std::string_view room) const {
  return adjacency_.find(room) != adjacency_.end();
}

bool ApartmentGraph::adjacent(std::string_view a, std::string_view b) const {
  auto it = adjacency_.find(a);
  return it != adjacency_.end() && it->second.count(std::string(b)) > 0;
}

const std::set<std::string>& ApartmentGraph::neighbours(std::string_view room) const {
  static const std::set<std::string> kEmpty;
  auto it = adjacency_.find(room);
  return it == adjacency_.end() ? kEmpty : it->second;
}

bool ApartmentGraph::connected() const {
  if (rooms_.empty()) return true;
  std::set<std::string> seen{*rooms_.begin()};
  std::deque<std::string> queue{*rooms_.begin()};
  while (!queue.empty()) {
    const std::string room = queue.front();
    queue.pop_front();
    for (const auto& n : neighbours(room))
      if (seen.insert(n).second) queue.push_back(n);
  }
  return seen.size() == rooms_.size();
}

std::optional<std::vector<std::string>> ApartmentGraph::shortest_path(
    std::string_view a, std::string_view b) const {
  if (!has_room(a) || !has_room(b)) return std::nullopt;
  // BFS from the target gives distances; walking forward from the source and
  // always taking the smallest-named neighbour one step closer yields the
  // lexicographically smallest among the shortest paths.
  std::map<std::string, int, std::less<>> dist{{std::string(b), 0}};
  std::deque<std::string> queue{std::string(b)};
  while (!queue.empty()) {
    const std::string room = queue.front();
    queue.pop_front();
    for (const auto& n : neighbours(room))
      if (dist.emplace(n, dist[room] + 1).second) queue.push_back(n);
  }
  auto it = dist.find(a);
  if (it == dist.end()) return std::nullopt;
  std::vector<std::string> path{std::string(a)};
  int d = it->second;
  while (d > 0) {
    for (const auto& n : neighbours(path.back())) {  // std::set: ascending names
      auto nd = dist.find(n);
      if (nd != dist.end() && nd->second == d - 1) {
        path.push_back(n);
        break;
      }
    }
    --d;
  }
  return path;
}

void ApartmentGraph::validate(const SensorRegistry& registry) const {
  if (!connected()) throw ValidationError("apartment graph is not connected");
  for (const auto& s : registry.sensors()) {
    if (s.kind != SensorKind::motion) continue;
    if (!has_room(s.room))
      throw ValidationError("motion sensor " + std::to_string(s.id) + " in unknown room '" +
                            s.room + "'");
  }
}

// ---------------------------------------------------------------------------
// Event log

std::vector<SensorEvent> parse_event_log(std::string_view text, const ParseOptions& options) {
  std::vector<SensorEvent> events;
  std::optional<bool> comma_separated;
  std::size_t line_no = 0;
  for (std::string_view raw : detail::split_lines(text)) {
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (line.empty()) continue;
    if (!comma_separated) comma_separated = line.find(',') != std::string_view::npos;

    std::vector<std::string_view> fields;
    if (*comma_separated) {
      fields = detail::split(line, ',');
      if (fields.size() != 3)
        throw ParseError(line_no, "expected 3 comma-separated fields");
    } else {
      if (line.find(',') != std::string_view::npos)
        throw ParseError(line_no, "mixed separators (file is whitespace-separated)");
      auto parts = detail::split_ws(line);
      if (parts.size() != 4) throw ParseError(line_no, "expected 3 whitespace-separated fields");
      // Re-join date and time into a single timestamp field.
      const std::size_t ts_len = static_cast<std::size_t>(parts[1].end() - parts[0].begin());
      fields = {std::string_view(parts[0].data(), ts_len), parts[2], parts[3]};
      if (fields[0].size() != 19 || fields[0][10] != ' ')
        throw ParseError(line_no, "malformed timestamp '" + std::string(fields[0]) + "'");
    }
    for (auto& f : fields) f = detail::trim(f);

    const auto ts = Timestamp::parse(fields[0]);
    if (!ts) throw ParseError(line_no, "malformed timestamp '" + std::string(fields[0]) + "'");
    const auto id = detail::parse_int(fields[1]);
    if (!id) throw ParseError(line_no, "malformed sensor id '" + std::string(fields[1]) + "'");
    if (fields[2] != "0" && fields[2] != "1")
      throw ParseError(line_no, "sensor message must be 0 or 1, got '" +
                                    std::string(fields[2]) + "'");

    if (!events.empty() && *ts < events.back().timestamp)
      throw ValidationError("non-monotonic timestamp at line " + std::to_string(line_no));
    if (options.registry && !options.registry->contains(*id))
      throw ValidationError("unknown sensor id " + std::to_string(*id) + " at line " +
                            std::to_string(line_no));
    events.push_back(SensorEvent{*ts, *id, fields[2] == "1" ? SensorState::on : SensorState::off,
                                 false});
  }
  return events;
}

std::string format_event(const SensorEvent& event) {
  return event.timestamp.format() + ", " + std::to_string(event.sensor_id) + ", " +
         (event.is_on() ? "1" : "0");
}

std::string serialize_event_log(std::span<const SensorEvent> events) {
  std::string out;
  out.reserve(events.size() * 28);
  for (const auto& e : events) {
    out += format_event(e);
    out += '\n';
  }
  return out;
}

ValidationReport validate_against_registry(std::span<const SensorEvent> events,
                                           const SensorRegistry& registry) {
  if (registry.empty()) throw ConfigError("validate_against_registry: empty registry");
  ValidationReport report;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    ++report.counts[e.sensor_id];
    if (!registry.contains(e.sensor_id)) report.unknown_ids.insert(e.sensor_id);
    if (i > 0 && events[i - 1].sensor_id == e.sensor_id && events[i - 1].state == e.state)
      report.duplicates.push_back({e.sensor_id, e.state, events[i - 1].timestamp, e.timestamp});
  }
  return report;
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  os << "issues: " << issue_count() << "\n";
  for (SensorId id : unknown_ids) os << "unknown sensor id " << id << "\n";
  for (const auto& d : duplicates)
    os << "duplicate consecutive event: sensor " << d.sensor_id << " state "
       << (d.state == SensorState::on ? 1 : 0) << " at " << d.first.format() << " and "
       << d.second.format() << "\n";
  os << "counts:\n";
  for (const auto& [id, n] : counts) os << "  " << id << ": " << n << "\n";
  return os.str();
}

}  // namespace homeseq
