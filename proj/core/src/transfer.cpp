// SPDX-License-Identifier: Apache-2.0
#include "homeseq/transfer.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "homeseq/error.hpp"
#include "text_util.hpp"

namespace homeseq {

std::string HarmonizationMap::to_text() const {
  std::ostringstream os;
  os << "[labels]\n";
  for (const auto& [id, label] : labels) os << id << " = " << label << "\n";
  os << "[drop]\n";
  bool first = true;
  for (SensorId id : drop) {
    os << (first ? "" : ", ") << id;
    first = false;
  }
  if (!drop.empty()) os << "\n";
  return os.str();
}

HarmonizationMap HarmonizationMap::from_text(std::string_view text) {
  enum class Section { none, labels, drop };
  Section section = Section::none;
  HarmonizationMap map;
  std::size_t line_no = 0;
  for (std::string_view raw : detail::split_lines(text)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line == "[labels]") {
      section = Section::labels;
    } else if (line == "[drop]") {
      section = Section::drop;
    } else if (section == Section::labels) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'id = label'");
      const auto id = detail::parse_int(detail::trim(line.substr(0, eq)));
      const auto label = detail::trim(line.substr(eq + 1));
      if (!id || label.empty()) throw ParseError(line_no, "expected 'id = label'");
      if (!map.labels.emplace(*id, std::string(label)).second)
        throw ParseError(line_no, "sensor " + std::to_string(*id) + " labelled twice");
    } else if (section == Section::drop) {
      for (auto field : detail::split(line, ',')) {
        const auto id = detail::parse_int(detail::trim(field));
        if (!id) throw ParseError(line_no, "malformed sensor id in drop list");
        map.drop.insert(*id);
      }
    } else {
      throw ParseError(line_no, "expected a [labels] or [drop] section");
    }
  }
  for (SensorId id : map.drop)
    if (map.labels.contains(id))
      throw ConfigError("sensor " + std::to_string(id) + " is both labelled and dropped");
  return map;
}

LabelSpace::LabelSpace(std::span<const HarmonizationMap> maps) {
  std::set<std::string> all;
  for (const auto& m : maps)
    for (const auto& [id, label] : m.labels) all.insert(label);
  labels_.assign(all.begin(), all.end());
  std::vector<SensorInfo> infos;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    infos.push_back({static_cast<SensorId>(i + 1), labels_[i], SensorKind::power, "", '\0'});
  registry_ = SensorRegistry(std::move(infos));
}

std::optional<SensorId> LabelSpace::id_of(std::string_view label) const {
  const auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return std::nullopt;
  return static_cast<SensorId>(it - labels_.begin() + 1);
}

HarmonizationMap LabelSpace::identity() const {
  HarmonizationMap m;
  for (std::size_t i = 0; i < labels_.size(); ++i) m.labels[static_cast<SensorId>(i + 1)] = labels_[i];
  return m;
}

std::vector<SensorEvent> harmonize(std::span<const SensorEvent> events, const HarmonizationMap& map,
                                   const LabelSpace& space) {
  std::vector<SensorEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    if (map.drop.contains(e.sensor_id)) continue;
    const auto it = map.labels.find(e.sensor_id);
    if (it == map.labels.end())
      throw ValidationError("sensor " + std::to_string(e.sensor_id) + " has no shared label");
    const auto id = space.id_of(it->second);
    if (!id) throw ValidationError("label '" + it->second + "' is not in the label space");
    SensorEvent h = e;
    h.sensor_id = *id;
    out.push_back(h);
  }
  return out;
}

void TransferConfig::validate() const {
  lstm.validate();
  if (test_events == 0) throw ConfigError("test set must not be empty");
  if (repetitions == 0) throw ConfigError("at least one repetition is needed");
  if (joint && time_mode == TimeMode::none) throw ConfigError("joint prediction needs a time mode");
}

namespace {

constexpr TokenId kNoSkip = std::numeric_limits<TokenId>::max();

struct Encoded {
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  TokenId start = 0;
  TokenId skip = kNoSkip;
};

Encoded encode(const PretrainedModel& m, const SymbolSequence& seq) {
  if (seq.vocabulary.tokens() != m.checkpoint.input_vocabulary.base_tokens())
    throw ConfigError("sequence vocabulary differs from the model's label space");
  Encoded e;
  if (m.time_mode == TimeMode::none) {
    e.inputs = seq.tokens;
  } else {
    e.inputs = annotate(seq, m.time_mode, &m.time_model).tokens;
  }
  e.start = m.checkpoint.input_vocabulary.start_index();
  e.targets = m.joint ? e.inputs : seq.base_tokens;
  if (m.joint) e.skip = e.start;
  return e;
}

WindowDataset windows(const Encoded& e, Range r, std::size_t window) {
  return windows_over(e.inputs, e.targets, std::span(&r, 1), window, e.start, e.skip);
}

std::uint64_t rep_seed(std::uint64_t seed, std::size_t rep) { return seed * 7919ULL + rep; }

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

PretrainedModel pretrain(std::span<const SymbolSequence> sources, const TransferConfig& config,
                         std::uint64_t seed) {
  config.validate();
  if (sources.empty()) throw ConfigError("no source apartments");
  const Vocabulary& vocab = sources.front().vocabulary;
  for (const auto& s : sources) {
    if (s.vocabulary.is_composite() || !(s.vocabulary == vocab))
      throw ConfigError("source sequences must share one plain vocabulary");
    if (s.size() < 5) throw ValidationError("source apartment has fewer than 5 events");
  }

  PretrainedModel m;
  m.time_mode = config.time_mode;
  m.joint = config.joint;
  m.checkpoint.config = config.lstm;
  m.checkpoint.config.seed = seed;

  if (config.time_mode == TimeMode::kcluster) {
    // One model over all sources, fitted on their training parts.
    SymbolSequence all;
    all.vocabulary = vocab;
    std::vector<Range> train_ranges;
    for (const auto& s : sources) {
      const std::size_t off = all.size();
      all.tokens.insert(all.tokens.end(), s.tokens.begin(), s.tokens.end());
      all.base_tokens.insert(all.base_tokens.end(), s.base_tokens.begin(), s.base_tokens.end());
      all.meta.insert(all.meta.end(), s.meta.begin(), s.meta.end());
      all.meta.back().to_next.reset();
      train_ranges.emplace_back(off, off + s.size() - s.size() / 5);
    }
    m.time_model = TimeClusterModel::fit(all, seed, train_ranges);
  }

  if (config.time_mode == TimeMode::none) {
    m.checkpoint.input_vocabulary = vocab;
  } else {
    m.checkpoint.input_vocabulary = annotate(sources.front(), config.time_mode, &m.time_model).vocabulary;
  }
  m.checkpoint.output_vocabulary =
      config.joint ? m.checkpoint.input_vocabulary : Vocabulary(vocab.base_tokens());

  const std::size_t L = config.lstm.memory_length;
  WindowDataset train_set, val_set;
  train_set.window = val_set.window = L;
  for (const auto& s : sources) {
    const Encoded e = encode(m, s);
    const std::size_t cut = s.size() - s.size() / 5;
    train_set.append(windows(e, {0, cut}, L));
    val_set.append(windows(e, {cut, s.size()}, L));
  }
  RecurrentModel init(m.checkpoint.input_vocabulary.input_width(),
                      m.checkpoint.output_vocabulary.size(), config.lstm.hidden, seed);
  LstmConfig lc = config.lstm;
  lc.seed = seed;
  TrainResult r = train(std::move(init), train_set, val_set, lc);
  m.checkpoint.model = std::move(r.model);
  m.history = std::move(r.history);
  return m;
}

PretrainedModel untrained_like(const PretrainedModel& like, std::uint64_t seed) {
  PretrainedModel m = like;
  m.history.clear();
  m.checkpoint.config.seed = seed;
  m.checkpoint.model = RecurrentModel(like.checkpoint.model.input_width(),
                                      like.checkpoint.model.output_width(),
                                      like.checkpoint.model.hidden(), seed);
  return m;
}

FinetuneOutcome finetune(const PretrainedModel& start, const SymbolSequence& target, std::size_t n,
                         const TransferConfig& config, std::uint64_t seed) {
  config.validate();
  if (target.size() < n + config.test_events)
    throw ValidationError("target has " + std::to_string(target.size()) + " events; need " +
                          std::to_string(n + config.test_events));
  if (n > 0 && n < 5) throw ValidationError("fine-tuning budget must be 0 or at least 5 events");
  const std::size_t L = config.lstm.memory_length;
  const Encoded e = encode(start, target);
  const WindowDataset test_set = windows(e, {n, n + config.test_events}, L);

  FinetuneOutcome out;
  if (n == 0) {
    out.best_accuracy = accuracy(start.checkpoint.model, test_set);
    return out;
  }
  const std::size_t cut = n - n / 5;
  const WindowDataset train_set = windows(e, {0, cut}, L);
  const WindowDataset val_set = windows(e, {cut, n}, L);
  LstmConfig lc = config.lstm;
  lc.seed = seed;
  // train() works on its own copy; `start` is never modified.
  const TrainResult r = train(start.checkpoint.model, train_set, val_set, lc,
                              [&](const RecurrentModel& model, std::size_t) {
                                return std::optional<double>(accuracy(model, test_set));
                              });
  out.epochs = r.history.size();
  for (const auto& rec : r.history) {
    if (rec.monitor && (out.best_epoch == 0 || *rec.monitor > out.best_accuracy)) {
      out.best_accuracy = *rec.monitor;
      out.best_epoch = rec.epoch;
    }
  }
  return out;
}

TransferReport pretrain_finetune(std::span<const SymbolSequence> sources, const SymbolSequence& target,
                                 std::span<const std::size_t> budgets, const TransferConfig& config) {
  config.validate();
  if (budgets.empty()) throw ConfigError("no fine-tuning budgets");
  const std::size_t largest = *std::max_element(budgets.begin(), budgets.end());
  if (target.size() < largest + config.test_events)
    throw ValidationError("target has " + std::to_string(target.size()) + " events; need " +
                          std::to_string(largest + config.test_events));

  std::vector<std::vector<TransferRow>> per_rep(config.repetitions);
  TransferConfig inner = config;
  inner.jobs = 1;
  parallel_for(config.repetitions, config.jobs, [&](std::size_t rep) {
    const std::uint64_t seed = rep_seed(config.seed, rep);
    const PretrainedModel pre = pretrain(sources, inner, seed);
    const PretrainedModel scratch = untrained_like(pre, seed);
    for (std::size_t n : budgets) {
      TransferRow row;
      row.budget = n;
      row.repetition = rep;
      row.seed = seed;
      row.pretrained = finetune(pre, target, n, inner, seed);
      row.scratch = finetune(scratch, target, n, inner, seed);
      per_rep[rep].push_back(row);
    }
  });
  TransferReport report;
  for (std::size_t i = 0; i < budgets.size(); ++i)
    for (const auto& rows : per_rep) report.rows.push_back(rows[i]);
  return report;
}

namespace {

template <typename F>
double mean_of(const std::vector<TransferRow>& rows, std::size_t budget, F pick) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows)
    if (r.budget == budget) {
      sum += pick(r);
      ++n;
    }
  if (n == 0) throw ConfigError("no runs for budget " + std::to_string(budget));
  return sum / static_cast<double>(n);
}

}  // namespace

double TransferReport::mean_pretrained(std::size_t budget) const {
  return mean_of(rows, budget, [](const TransferRow& r) { return r.pretrained.best_accuracy; });
}

double TransferReport::mean_scratch(std::size_t budget) const {
  return mean_of(rows, budget, [](const TransferRow& r) { return r.scratch.best_accuracy; });
}

std::string TransferReport::to_csv() const {
  std::ostringstream os;
  os << "budget,repetition,seed,pretrained_accuracy,pretrained_best_epoch,scratch_accuracy,scratch_best_epoch\n";
  for (const auto& r : rows)
    os << r.budget << ',' << r.repetition << ',' << r.seed << ',' << fixed(r.pretrained.best_accuracy) << ','
       << r.pretrained.best_epoch << ',' << fixed(r.scratch.best_accuracy) << ',' << r.scratch.best_epoch << "\n";
  return os.str();
}

std::string TransferReport::to_text() const {
  std::ostringstream os;
  std::vector<std::size_t> budgets;
  for (const auto& r : rows)
    if (std::find(budgets.begin(), budgets.end(), r.budget) == budgets.end()) budgets.push_back(r.budget);
  for (std::size_t n : budgets)
    os << "budget " << n << ": pretrained " << fixed(mean_pretrained(n)) << ", from scratch "
       << fixed(mean_scratch(n)) << "\n";
  return os.str();
}

}  // namespace homeseq
