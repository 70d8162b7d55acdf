// SPDX-License-Identifier: Apache-2.0
// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every failing criterion is listed in
// --known-unattainable; a criterion listed there that passes is reported but
// does not fail the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli.hpp"
#include "homeseq/correction.hpp"
#include "homeseq/evaluation.hpp"
#include "homeseq/lstm.hpp"
#include "homeseq/ppm.hpp"
#include "homeseq/presets.hpp"
#include "homeseq/simulator.hpp"
#include "homeseq/symbolization.hpp"
#include "homeseq/timefeatures.hpp"
#include "homeseq/transfer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace homeseq;
using Seq = std::vector<TokenId>;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string pct(double x) { return fmt("%.3f", x); }

Seq random_seq(std::mt19937_64& rng, std::size_t n, std::size_t alphabet) {
  Seq s(n);
  for (auto& x : s) x = static_cast<TokenId>(rng() % alphabet);
  return s;
}

std::vector<SensorEvent> simulate_preset(const Preset& p, double days, std::uint64_t seed) {
  return simulate(p.routine, p.home, days, seed);
}

// --- 1 ------------------------------------------------------------------------

Outcome ppm_oracle() {
  std::mt19937_64 rng(101);
  Stopwatch clock;
  std::size_t mismatches = 0, queries = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t alphabet = 1 + rng() % 6;
    const auto s = random_seq(rng, 1 + rng() % 200, alphabet);
    const std::size_t cap = 1 + rng() % 4;
    for (bool alz : {false, true}) {
      const auto trie = alz ? build_trie_alz(s, alphabet, cap) : build_trie_speed(s, alphabet, cap);
      const auto counts = alz ? oracle::substring_counts({s}, trie.max_depth())
                              : oracle::substring_counts(oracle::repeat_free_pieces(s), trie.max_depth());
      for (int q = 0; q < 5; ++q) {
        const auto ctx = random_seq(rng, rng() % 6, alphabet);
        const auto want = oracle::blended(counts, alphabet, trie.max_depth(), ctx);
        const auto got = ppm_distribution(trie, ctx);
        ++queries;
        bool ok = got.size() == want.size();
        for (std::size_t i = 0; ok && i < want.size(); ++i) {
          worst = std::max(worst, std::abs(got[i] - want[i]));
          ok = std::abs(got[i] - want[i]) <= 1e-9;
        }
        mismatches += !ok;
      }
    }
  }
  const double t = clock.seconds();
  return {mismatches == 0 && t < 5.0,
          std::to_string(queries) + " queries, " + std::to_string(mismatches) + " mismatches, max diff " +
              fmt("%.2e", worst) + ", " + fmt("%.2f", t) + " s"};
}

// --- 2 ------------------------------------------------------------------------

Outcome trie_counts() {
  std::mt19937_64 rng(202);
  std::size_t bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t alphabet = 1 + rng() % 6;
    const auto s = random_seq(rng, 1 + rng() % 200, alphabet);
    const std::vector<oracle::Seq> segs{s};

    const auto alz = build_trie_alz(s, alphabet);
    const std::size_t d = oracle::lz78_longest(segs);
    const auto alz_want = oracle::substring_counts(segs, d);
    bool ok = alz.max_depth() == d && alz.node_count() == alz_want.size() + 1;
    for (const auto& [path, n] : alz_want) ok = ok && alz.count(path) == n;

    const auto eps = oracle::repeat_free_pieces(s);
    std::size_t longest = 0;
    for (const auto& e : eps) longest = std::max(longest, e.size());
    const auto speed = build_trie_speed(s, alphabet);
    const auto speed_want = oracle::substring_counts(eps, longest);
    ok = ok && speed.max_depth() == longest && speed.node_count() == speed_want.size() + 1;
    for (const auto& [path, n] : speed_want) ok = ok && speed.count(path) == n;
    bad += !ok;
  }
  return {bad == 0, "100 sequences, " + std::to_string(bad) + " disagreeing"};
}

// --- 3 ------------------------------------------------------------------------

Outcome gradient_check() {
  constexpr std::size_t kVocab = 8, kHidden = 16, kWindow = 5;
  constexpr double kEps = 1e-5;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Stopwatch clock;
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    RecurrentModel m(kVocab + 1, kVocab, kHidden, 1000 + draw);
    // Push the gates away from their near-linear initial range.
    m.params.for_each_tensor([&](std::span<double> t) {
      for (auto& x : t) x = 2.0 * x + u(rng);
    });
    WindowDataset d;
    d.window = kWindow;
    for (int i = 0; i < 4; ++i) {
      for (std::size_t t = 0; t < kWindow; ++t) d.inputs.push_back(static_cast<TokenId>(rng() % (kVocab + 1)));
      d.targets.push_back(static_cast<TokenId>(rng() % kVocab));
    }
    auto g = backward(m, d).grad;
    std::vector<double> analytic, numeric;
    g.for_each_tensor([&](std::span<double> t) { analytic.insert(analytic.end(), t.begin(), t.end()); });
    m.params.for_each_tensor([&](std::span<double> t) {
      for (auto& x : t) {
        const double keep = x;
        x = keep + kEps;
        const double up = loss(m, d);
        x = keep - kEps;
        const double down = loss(m, d);
        x = keep;
        numeric.push_back((up - down) / (2 * kEps));
      }
    });
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      norm += analytic[i] * analytic[i] + numeric[i] * numeric[i];
    }
    worst = std::max(worst, norm > 0 ? std::sqrt(diff / norm) : 0.0);
  }
  const double t = clock.seconds();
  return {worst < 1e-4 && t < 60.0,
          "worst relative error " + fmt("%.2e", worst) + " over 100 draws, " + fmt("%.2f", t) + " s"};
}

// --- 4 ------------------------------------------------------------------------

WindowDataset slice(const WindowDataset& all, std::size_t a, std::size_t b) {
  WindowDataset d;
  d.window = all.window;
  for (std::size_t i = a; i < b; ++i) {
    const auto s = all.sample(i);
    d.inputs.insert(d.inputs.end(), s.begin(), s.end());
    d.targets.push_back(all.targets[i]);
  }
  return d;
}

Outcome learnability() {
  LstmConfig cfg;
  cfg.hidden = 16;
  cfg.memory_length = 5;
  cfg.batch_size = 64;
  cfg.max_epochs = 200;
  cfg.seed = 3;

  Seq cycle(600);
  for (std::size_t i = 0; i < cycle.size(); ++i) cycle[i] = static_cast<TokenId>(i % 3);
  const auto cw = make_windows(cycle, cycle, cfg.memory_length, 3, 99);
  const auto fit = train(RecurrentModel(4, 3, cfg.hidden, 1), slice(cw, 0, 400), slice(cw, 400, 500), cfg);
  const double cycle_acc = accuracy(fit.model, slice(cw, 500, 600));

  std::mt19937_64 rng(404);
  const auto noise = random_seq(rng, 4000, 4);
  const auto nw = make_windows(noise, noise, cfg.memory_length, 4, 99);
  auto ncfg = cfg;
  ncfg.max_epochs = 30;
  const auto nfit = train(RecurrentModel(5, 4, cfg.hidden, 2), slice(nw, 0, 2400), slice(nw, 2400, 3200), ncfg);
  const double noise_acc = accuracy(nfit.model, slice(nw, 3200, 4000));

  const bool ok = cycle_acc == 1.0 && fit.history.size() <= 200 && std::abs(noise_acc - 0.25) <= 0.05;
  return {ok, "repeating " + pct(cycle_acc) + " after " + std::to_string(fit.history.size()) +
                  " epochs, uniform " + pct(noise_acc)};
}

// --- 5 ------------------------------------------------------------------------

Outcome correction_validity() {
  std::size_t violations = 0, not_idempotent = 0, singles = 0, off_mean = 0, deleted = 0;
  std::uint64_t seed = 505;
  for (const auto& name : preset_names()) {
    const auto p = make_preset(name);
    const auto& reg = p.home.registry;
    const auto full = simulate_preset(p, 14, seed++);
    std::mt19937_64 rng(seed++);
    std::bernoulli_distribution drop(0.1);
    std::vector<SensorEvent> damaged;
    for (const auto& e : full) {
      if (reg.at(e.sensor_id).kind == SensorKind::motion && drop(rng)) {
        ++deleted;
        continue;
      }
      damaged.push_back(e);
    }
    const auto fixed = correct_missing_motion(damaged, p.home.graph, reg);
    violations += oracle::violations(fixed.events, p.home.graph, reg);
    not_idempotent += correct_missing_motion(fixed.events, p.home.graph, reg).events != fixed.events;

    // Motion activations of the corrected log, in order.
    std::vector<std::size_t> acts;
    for (std::size_t i = 0; i < fixed.events.size(); ++i) {
      const auto& e = fixed.events[i];
      if (e.is_on() && reg.at(e.sensor_id).kind == SensorKind::motion) acts.push_back(i);
    }
    for (std::size_t k = 1; k + 1 < acts.size(); ++k) {
      const auto& prev = fixed.events[acts[k - 1]];
      const auto& mid = fixed.events[acts[k]];
      const auto& next = fixed.events[acts[k + 1]];
      if (!mid.inserted || prev.inserted || next.inserted) continue;
      ++singles;
      const std::int64_t t0 = prev.timestamp.seconds, t1 = next.timestamp.seconds;
      const std::int64_t want = (t0 + t1 + 1) / 2;  // half-seconds round up
      off_mean += mid.timestamp.seconds != want;
    }
  }
  const bool ok = violations == 0 && not_idempotent == 0 && singles > 0 && off_mean == 0;
  return {ok, std::to_string(deleted) + " deletions, " + std::to_string(violations) + " violations, " +
                  std::to_string(not_idempotent) + " non-idempotent, " + std::to_string(singles) +
                  " single insertions with " + std::to_string(off_mean) + " off the mean"};
}

// --- 6 ------------------------------------------------------------------------

Outcome kmeans_elbow() {
  const auto p = make_preset("apt1");
  const auto seq = speed_encode(simulate_preset(p, 56, 7), p.home.registry);
  const auto model = TimeClusterModel::fit(seq, 7);
  std::size_t increasing = 0;
  for (const auto& s : model.sensors())
    for (std::size_t k = 1; k < s.ssd_curve.size(); ++k) increasing += s.ssd_curve[k] > s.ssd_curve[k - 1];

  std::mt19937_64 rng(606);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<FeaturePoint> pts;
    for (const auto& q : oracle::planted_blobs(50, 3, rng)) pts.push_back({q[0], q[1]});
    std::vector<double> curve;
    for (const auto& r : kmeans_path(pts, kMaxClusters, static_cast<std::uint64_t>(trial))) curve.push_back(r.ssd);
    hits += elbow_select(curve) == 3;
  }
  return {increasing == 0 && hits >= 95,
          std::to_string(model.sensors().size()) + " sensors, " + std::to_string(increasing) +
              " SSD increases, planted K recovered " + std::to_string(hits) + "/100"};
}

// --- 7 ------------------------------------------------------------------------

struct Scale {
  std::size_t lstm_folds = 5;
  std::size_t transfer_days = 14;
  std::size_t transfer_target_days = 28;
};

Outcome ordering(const Scale& scale) {
  const auto p = make_preset("apt1");
  const auto events = simulate_preset(p, 56, 7);
  const auto ceiling = bayes_ceiling(p.routine, p.home, 100000, 7);

  EvalConfig speed;
  speed.method = Method::speed_ppm;
  const auto speed_full = evaluate(events, p.home.registry, speed);

  EvalConfig lstm;
  lstm.method = Method::lstm_speed;
  lstm.folds = scale.lstm_folds;
  lstm.lstm.single_precision = true;
  const auto lstm_full = evaluate(events, p.home.registry, lstm);

  EvalConfig alz;
  alz.method = Method::alz_ppm;
  const auto alz_full = evaluate(events, p.home.registry, alz);

  const std::int64_t cut = p.routine.start.seconds + 2 * 86400;
  std::vector<SensorEvent> prefix;
  for (const auto& e : events)
    if (e.timestamp.seconds < cut) prefix.push_back(e);
  const auto speed_short = evaluate(prefix, p.home.registry, speed);
  const auto alz_short = evaluate(prefix, p.home.registry, alz);

  const double c = ceiling.ceiling;
  const double base = speed_full.mean_baseline;
  const bool near_ceiling = speed_full.mean_accuracy >= c - 0.05 && lstm_full.mean_accuracy >= c - 0.05;
  const bool above_base =
      speed_full.mean_accuracy >= base + 0.15 && lstm_full.mean_accuracy >= base + 0.15;
  const bool plateau = speed_short.mean_accuracy >= speed_full.mean_accuracy - 0.02 &&
                       alz_short.mean_accuracy >= alz_full.mean_accuracy - 0.02;
  return {near_ceiling && above_base && plateau,
          "ceiling " + pct(c) + ", speed-ppm " + pct(speed_full.mean_accuracy) + ", lstm-speed " +
              pct(lstm_full.mean_accuracy) + ", baseline " + pct(base) + ", 2-day speed-ppm " +
              pct(speed_short.mean_accuracy) + ", alz-ppm " + pct(alz_short.mean_accuracy) + " vs " +
              pct(alz_full.mean_accuracy)};
}

// --- 8 ------------------------------------------------------------------------

Outcome joint_vs_single(const Scale& scale) {
  const auto p = make_preset("apt1");
  std::size_t worse = 0;
  std::string details;
  for (std::uint64_t seed : {81u, 82u, 83u}) {
    const auto events = simulate_preset(p, 14, seed);
    EvalConfig c;
    c.method = Method::lstm_speed;
    c.folds = scale.lstm_folds;
    c.seed = seed;
    c.lstm.single_precision = true;
    const double single = evaluate(events, p.home.registry, c).mean_accuracy;
    c.time_mode = TimeMode::kcluster;
    c.joint = true;
    const double joint = evaluate(events, p.home.registry, c).mean_accuracy;
    worse += joint <= single;
    details += (details.empty() ? "" : ", ") + pct(joint) + " <= " + pct(single);
  }
  return {worse == 3, "joint vs sensor-only: " + details};
}

// --- 9 ------------------------------------------------------------------------

Outcome transfer(const Scale& scale) {
  std::vector<HarmonizationMap> maps;
  for (const auto& name : preset_names()) maps.push_back(make_preset(name).harmonization);
  const LabelSpace space(maps);
  auto encode = [&](const std::string& name, double days, std::uint64_t seed) {
    const auto p = make_preset(name);
    return speed_encode(harmonize(simulate_preset(p, days, seed), p.harmonization, space), space.registry());
  };
  std::vector<SymbolSequence> sources;
  std::uint64_t seed = 900;
  for (const char* name : {"apt2", "apt3", "apt4", "apt5"})
    sources.push_back(encode(name, static_cast<double>(scale.transfer_days), seed++));
  const auto target = encode("apt1", static_cast<double>(scale.transfer_target_days), seed++);

  TransferConfig cfg;
  cfg.lstm.single_precision = true;
  cfg.repetitions = 3;
  cfg.seed = 9;
  const std::size_t full = target.size() - cfg.test_events;
  const std::vector<std::size_t> budgets{500, full};
  const auto report = pretrain_finetune(sources, target, budgets, cfg);

  std::size_t wins = 0;
  double worst_gap = 0.0;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const auto& small = report.rows[rep];
    const auto& big = report.rows[cfg.repetitions + rep];
    wins += small.pretrained.best_accuracy >= small.scratch.best_accuracy;
    worst_gap = std::max(worst_gap, std::abs(big.pretrained.best_accuracy - big.scratch.best_accuracy));
  }
  return {wins >= 2 && worst_gap < 0.03,
          "500 events: pretrained " + pct(report.mean_pretrained(500)) + " vs scratch " +
              pct(report.mean_scratch(500)) + " (" + std::to_string(wins) + "/3 runs), " +
              std::to_string(full) + " events: " + pct(report.mean_pretrained(full)) + " vs " +
              pct(report.mean_scratch(full)) + ", largest paired gap " + pct(worst_gap)};
}

// --- 10 -----------------------------------------------------------------------

Outcome replay_everything() {
  const fs::path here = fs::current_path();
  const fs::path dir = fs::temp_directory_path() / "homeseq_acceptance_replay";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::current_path(dir);

  auto quiet = [](const std::vector<std::string>& args) {
    std::cout.flush();
    std::ostringstream sink;
    auto* out = std::cout.rdbuf(sink.rdbuf());
    auto* err = std::cerr.rdbuf(sink.rdbuf());
    const int rc = homeseq::cli::run(args);
    std::cout.rdbuf(out);
    std::cerr.rdbuf(err);
    return rc;
  };

  const std::vector<std::vector<std::string>> runs{
      {"simulate", "--days", "14", "--seed", "4", "-o", "log.txt", "--home-out", "home.cfg",
       "--ceiling", "ceiling.txt", "--ceiling-steps", "20000"},
      {"ingest", "log.txt"},
      {"correct", "--home", "home.cfg", "log.txt"},
      {"encode", "--time", "bucket4", "--meta", "meta.csv", "log.txt"},
      {"cluster", "--ssd", "ssd.csv", "log.txt"},
      {"encode", "--time", "kcluster", "--clusters", "clusters.json", "-o", "encoded_k.txt", "log.txt"},
      {"train-ppm", "--frontend", "alz", "log.txt"},
      {"train-lstm", "--epochs", "3", "--hidden", "16", "--precision", "float", "--history", "h.csv",
       "log.txt"},
      {"evaluate", "--method", "speed-ppm", "log.txt"},
      {"--jobs", "2", "evaluate", "--method", "lstm-speed", "--folds", "2", "--epochs", "3", "--hidden",
       "16", "--time", "kcluster", "--joint", "-o", "joint.txt", "log.txt"},
      {"sweep", "--method", "alz-ppm", "--grid", "500,1500,3000", "log.txt"},
      {"transfer", "--days", "3", "--budgets", "0,200", "--test-events", "300", "--repetitions", "1",
       "--epochs", "2", "--hidden", "16", "--precision", "float"},
  };
  std::size_t failed_runs = 0;
  for (const auto& r : runs) {
    if (quiet(r) == 0) continue;
    ++failed_runs;
    std::cerr << "  run '" << r.front() << ' ' << r[1] << "' failed\n";
  }

  std::vector<fs::path> manifests;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().string().ends_with(".manifest.json")) manifests.push_back(entry.path().filename());
  std::sort(manifests.begin(), manifests.end());
  std::size_t failed_replays = 0;
  for (const auto& m : manifests) {
    const int rc = quiet({"replay", m.string()});
    if (rc != 0) {
      ++failed_replays;
      std::cerr << "  replay of " << m << " exited " << rc << "\n";
    }
  }
  fs::current_path(here);
  fs::remove_all(dir);
  return {failed_runs == 0 && failed_replays == 0 && manifests.size() >= runs.size(),
          std::to_string(runs.size()) + " runs (" + std::to_string(failed_runs) + " failed), " +
              std::to_string(manifests.size()) + " manifests replayed, " + std::to_string(failed_replays) +
              " differing"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only, known;
  Scale scale;
  app.add_option("--only", only, "Run just these criteria");
  app.add_option("--known-unattainable", known, "Criteria allowed to fail")->delimiter(',');
  app.add_option("--lstm-folds", scale.lstm_folds, "Folds for the recurrent evaluations")
      ->check(CLI::Range(1, 5))
      ->capture_default_str();
  app.add_option("--transfer-days", scale.transfer_days, "Simulated days per source apartment")
      ->capture_default_str();
  app.add_option("--transfer-target-days", scale.transfer_target_days, "Simulated days of the target")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"ppm matches brute-force recursion", ppm_oracle},
      {"trie counts match substring oracle", trie_counts},
      {"lstm gradient check", gradient_check},
      {"lstm learnability", learnability},
      {"correction validity", correction_validity},
      {"k-means monotone SSD and elbow", kmeans_elbow},
      {"simulator ordering", [&] { return ordering(scale); }},
      {"joint never beats sensor-only", [&] { return joint_vs_single(scale); }},
      {"transfer analogue", [&] { return transfer(scale); }},
      {"manifest replay", replay_everything},
  };

  const std::set<int> allowed(known.begin(), known.end());
  std::set<int> unexpected;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), n) == only.end()) continue;
    Stopwatch clock;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS " : "FAIL ") << criteria[i].first << " ("
              << o.details << "; " << fmt("%.1f", clock.seconds()) << " s)";
    if (!o.pass && allowed.count(n)) std::cout << " [known unattainable]";
    std::cout << std::endl;
    if (!o.pass && !allowed.count(n)) unexpected.insert(n);
  }
  return unexpected.empty() ? 0 : 1;
}
