// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "homeseq/correction.hpp"
#include "homeseq/evaluation.hpp"
#include "homeseq/lstm.hpp"
#include "homeseq/ppm.hpp"
#include "homeseq/presets.hpp"
#include "homeseq/simulator.hpp"
#include "homeseq/symbolization.hpp"
#include "homeseq/timefeatures.hpp"
#include "homeseq/transfer.hpp"
#include "run_context.hpp"

namespace homeseq::cli {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kMethods = {"alz-ppm", "speed-ppm", "lstm-alz", "lstm-speed"};
const std::vector<std::string> kTimeModes = {"none", "bucket4", "bucket8", "kcluster"};

std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

/// `dir/stem<suffix>` of an output path: report.txt -> report.folds.csv.
std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

struct HomeOptions {
  std::string home_file;
  std::string preset = "apt1";

  void add(CLI::App* app) {
    app->add_option("--home", home_file, "Sensor registry and room graph document");
    app->add_option("--preset", preset, "Built-in apartment used when --home is absent")
        ->check(CLI::IsMember(preset_names()))
        ->capture_default_str();
  }

  HomeConfig load(RunContext& ctx) const {
    if (!home_file.empty()) {
      HomeConfig home = parse_home_config(ctx.read_input(home_file));
      home.graph.validate(home.registry);
      return home;
    }
    return make_preset(preset).home;
  }
};

struct LstmOptions {
  LstmConfig config;
  std::string precision = "double";

  void add(CLI::App* app) {
    app->add_option("--memory", config.memory_length, "Input window length")->capture_default_str();
    app->add_option("--hidden", config.hidden, "Hidden units")->capture_default_str();
    app->add_option("--lr", config.learning_rate, "Adam learning rate")->capture_default_str();
    app->add_option("--batch", config.batch_size, "Mini-batch size")->capture_default_str();
    app->add_option("--epochs", config.max_epochs, "Maximum epochs")->capture_default_str();
    app->add_option("--patience", config.patience, "Early-stopping patience")->capture_default_str();
    app->add_option("--precision", precision, "Training arithmetic")
        ->check(CLI::IsMember({"float", "double"}))
        ->capture_default_str();
  }

  LstmConfig get(std::uint64_t seed) const {
    LstmConfig c = config;
    c.seed = seed;
    c.single_precision = precision == "float";
    return c;
  }
};

struct EvalOptions {
  std::string method = "speed-ppm";
  std::size_t folds = 5;
  std::string time = "none";
  std::string reference = "since-previous";
  bool joint = false;
  std::size_t max_order = 0;
  bool alz_off = false;
  std::uint64_t seed = 1;
  LstmOptions lstm;

  void add(CLI::App* app) {
    app->add_option("--method", method, "Predictor")->check(CLI::IsMember(kMethods))->capture_default_str();
    app->add_option("--folds", folds, "Chronological folds (1-5)")->check(CLI::Range(1, 5))->capture_default_str();
    app->add_option("--time", time, "Time augmentation of recurrent inputs")
        ->check(CLI::IsMember(kTimeModes))
        ->capture_default_str();
    app->add_option("--time-reference", reference, "Gap described by a token's time part")
        ->check(CLI::IsMember({"since-previous", "to-next"}))
        ->capture_default_str();
    app->add_flag("--joint", joint, "Predict (sensor, time) pairs");
    app->add_option("--max-order", max_order, "PPM depth cap (0 = derived)")->capture_default_str();
    app->add_flag("--alz-include-off", alz_off, "Keep off events in ALZ text");
    app->add_option("--seed", seed, "Seed for clustering and weights")->capture_default_str();
    lstm.add(app);
  }

  EvalConfig get(std::size_t jobs) const {
    EvalConfig c;
    c.method = method_from_string(method);
    c.folds = folds;
    c.time_mode = time_mode_from_string(time);
    c.time_reference = reference == "to-next" ? TimeReference::to_next : TimeReference::since_previous;
    c.joint = joint;
    c.ppm_max_order = max_order;
    c.alz.include_off = alz_off;
    c.seed = seed;
    c.lstm = lstm.get(seed);
    c.jobs = jobs;
    c.validate();
    return c;
  }
};

std::vector<SensorEvent> load_log(RunContext& ctx, const std::string& path) {
  return parse_event_log(ctx.read_input(path));
}

SymbolSequence encode_text(const std::string& text, std::span<const SensorEvent> events,
                           const SensorRegistry& registry, bool alz_off) {
  if (text == "alz") return alz_encode(events, registry, AlzOptions{alz_off});
  return speed_encode(events, registry);
}

std::string join(std::span<const std::string> parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Next sensor-event prediction for smart-home logs", "homeseq"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file with option values (command line wins)");
  std::size_t jobs = default_jobs();
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  // --- ingest ---------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Parse and check a log; write its canonical form");
  std::string in_log, out_path;
  HomeOptions home_opts;
  bool strict = false;
  ingest->add_option("log", in_log, "Event log")->required();
  ingest->add_option("-o,--output", out_path, "Canonical log")->capture_default_str();
  ingest->add_flag("--strict", strict, "Fail when the check reports issues");
  home_opts.add(ingest);

  // --- correct ---------------------------------------------------------------
  auto* correct = app.add_subcommand("correct", "Insert motion activations implied by the floor plan");
  correct->add_option("log", in_log, "Event log")->required();
  correct->add_option("-o,--output", out_path, "Corrected log");
  home_opts.add(correct);

  // --- encode ----------------------------------------------------------------
  auto* encode = app.add_subcommand("encode", "Write the symbol text of a log");
  std::string text_kind = "speed", time_mode = "none", clusters_file, meta_path;
  std::uint64_t seed = 1;
  bool alz_off = false;
  encode->add_option("log", in_log, "Event log")->required();
  encode->add_option("-o,--output", out_path, "Symbol text");
  encode->add_option("--text", text_kind, "Frontend")->check(CLI::IsMember({"speed", "alz"}))->capture_default_str();
  encode->add_option("--time", time_mode, "Time annotation")->check(CLI::IsMember(kTimeModes))->capture_default_str();
  encode->add_option("--clusters", clusters_file, "Time-cluster model (kcluster; fitted here when absent)");
  encode->add_option("--meta", meta_path, "Per-token metadata CSV");
  encode->add_option("--seed", seed, "Seed when fitting clusters")->capture_default_str();
  encode->add_flag("--alz-include-off", alz_off, "Keep off events in ALZ text");
  home_opts.add(encode);

  // --- cluster ---------------------------------------------------------------
  auto* cluster = app.add_subcommand("cluster", "Fit per-sensor time clusters");
  std::string ssd_path;
  std::size_t force_k = 0;
  cluster->add_option("log", in_log, "Event log")->required();
  cluster->add_option("-o,--output", out_path, "Cluster model");
  cluster->add_option("--ssd", ssd_path, "SSD-vs-K curves as CSV");
  cluster->add_option("--k", force_k, "Use this K for every sensor instead of the elbow")
      ->check(CLI::Range(std::size_t{1}, kMaxClusters));
  cluster->add_option("--seed", seed, "Seed")->capture_default_str();
  home_opts.add(cluster);

  // --- train-ppm -------------------------------------------------------------
  auto* train_ppm = app.add_subcommand("train-ppm", "Build a pattern trie and dump it");
  std::string frontend = "speed";
  std::size_t max_order = 0;
  train_ppm->add_option("log", in_log, "Event log")->required();
  train_ppm->add_option("-o,--output", out_path, "Trie dump");
  train_ppm->add_option("--frontend", frontend, "Pattern frontend")->check(CLI::IsMember({"speed", "alz"}))->capture_default_str();
  train_ppm->add_option("--max-order", max_order, "Depth cap (0 = derived)")->capture_default_str();
  train_ppm->add_flag("--alz-include-off", alz_off, "Keep off events in ALZ text");
  home_opts.add(train_ppm);

  // --- train-lstm ------------------------------------------------------------
  auto* train_lstm = app.add_subcommand("train-lstm", "Train the recurrent predictor (last 20% validates)");
  LstmOptions lstm_opts;
  bool joint = false;
  std::string history_path;
  train_lstm->add_option("log", in_log, "Event log")->required();
  train_lstm->add_option("-o,--output", out_path, "Checkpoint");
  train_lstm->add_option("--text", text_kind, "Frontend")->check(CLI::IsMember({"speed", "alz"}))->capture_default_str();
  train_lstm->add_option("--time", time_mode, "Time augmentation")->check(CLI::IsMember(kTimeModes))->capture_default_str();
  train_lstm->add_flag("--joint", joint, "Predict (sensor, time) pairs");
  train_lstm->add_option("--history", history_path, "Per-epoch losses as CSV");
  train_lstm->add_option("--seed", seed, "Seed")->capture_default_str();
  train_lstm->add_flag("--alz-include-off", alz_off, "Keep off events in ALZ text");
  lstm_opts.add(train_lstm);
  home_opts.add(train_lstm);

  // --- evaluate --------------------------------------------------------------
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Chronological cross-validation of one method");
  EvalOptions eval_opts;
  evaluate_cmd->add_option("log", in_log, "Event log")->required();
  evaluate_cmd->add_option("-o,--output", out_path, "Report");
  eval_opts.add(evaluate_cmd);
  home_opts.add(evaluate_cmd);

  // --- sweep -----------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "Accuracy against training-prefix size");
  std::vector<std::size_t> grid;
  sweep->add_option("log", in_log, "Event log")->required();
  sweep->add_option("-o,--output", out_path, "Curve CSV");
  sweep->add_option("--grid", grid, "Ascending prefix sizes in tokens")->delimiter(',')->required();
  eval_opts.add(sweep);
  home_opts.add(sweep);

  // --- transfer --------------------------------------------------------------
  auto* transfer = app.add_subcommand("transfer", "Pretrain on simulated apartments, fine-tune on another");
  std::string target = "apt1";
  std::vector<std::string> sources;
  double days = 56.0;
  std::vector<std::size_t> budgets = {0, 500, 1000, 2000, 5000};
  TransferConfig tcfg;
  std::string t_time = "kcluster";
  bool no_joint = false;
  transfer->add_option("--target", target, "Target apartment")->check(CLI::IsMember(preset_names()))->capture_default_str();
  transfer->add_option("--sources", sources, "Source apartments (default: the other presets)")
      ->delimiter(',')
      ->check(CLI::IsMember(preset_names()));
  transfer->add_option("--days", days, "Simulated days per apartment")->check(CLI::PositiveNumber)->capture_default_str();
  transfer->add_option("--budgets", budgets, "Target training sizes in events")->delimiter(',')->capture_default_str();
  transfer->add_option("--test-events", tcfg.test_events, "Target test events")->capture_default_str();
  transfer->add_option("--repetitions", tcfg.repetitions, "Paired repetitions")->capture_default_str();
  transfer->add_option("--time", t_time, "Time augmentation")->check(CLI::IsMember(kTimeModes))->capture_default_str();
  transfer->add_flag("--no-joint", no_joint, "Predict sensor tokens only");
  transfer->add_option("--seed", seed, "Seed")->capture_default_str();
  transfer->add_option("-o,--output", out_path, "Result CSV");
  lstm_opts.add(transfer);

  // --- simulate --------------------------------------------------------------
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic log");
  std::string routine_file, home_out, routine_out, ceiling_path;
  std::size_t ceiling_steps = 100000;
  simulate_cmd->add_option("--days", days, "Simulated days")->check(CLI::NonNegativeNumber)->capture_default_str();
  simulate_cmd->add_option("--seed", seed, "Seed")->capture_default_str();
  simulate_cmd->add_option("--routine", routine_file, "Routine document replacing the preset's");
  simulate_cmd->add_option("-o,--output", out_path, "Event log");
  simulate_cmd->add_option("--home-out", home_out, "Also write the home document");
  simulate_cmd->add_option("--routine-out", routine_out, "Also write the routine document");
  simulate_cmd->add_option("--ceiling", ceiling_path, "Also write the prediction ceiling estimate");
  simulate_cmd->add_option("--ceiling-steps", ceiling_steps, "Steps for the ceiling estimate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate_cmd->add_option("--preset", home_opts.preset, "Built-in apartment")
      ->check(CLI::IsMember(preset_names()))
      ->capture_default_str();

  // --- replay ----------------------------------------------------------------
  auto* replay = app.add_subcommand("replay", "Re-execute a run from its manifest and verify outputs");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path, "Manifest written next to a run's output")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return kOk;
    }
    std::cerr << "homeseq: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::optional<std::string> config_text;
  if (const auto* opt = app.get_option("--config"); opt->count() > 0) {
    std::ifstream in(opt->as<std::string>());
    std::ostringstream ss;
    ss << in.rdbuf();
    config_text = ss.str();
  }
  RunContext ctx(sub->get_name(), args);
  ctx.set_config(config_text, sub->config_to_str(true, false));
  auto finish = [&](const std::string& primary) {
    const auto m = ctx.finish(primary);
    std::cerr << "wrote " << primary << " (manifest " << m << ")\n";
    return kOk;
  };

  try {
    if (sub == ingest) {
      const HomeConfig home = home_opts.load(ctx);
      const auto events = load_log(ctx, in_log);
      const auto report = validate_against_registry(events, home.registry);
      if (out_path.empty()) out_path = "ingested.log";
      ctx.write_output(out_path, serialize_event_log(events));
      ctx.write_output(sibling(out_path, ".check.txt"), report.to_text());
      std::cout << events.size() << " events, " << report.issue_count() << " issues\n";
      finish(out_path);
      if (strict && report.issue_count() > 0) {
        std::cerr << "homeseq: log has " << report.issue_count() << " issues\n";
        return kData;
      }
      return kOk;
    }

    if (sub == correct) {
      const HomeConfig home = home_opts.load(ctx);
      const auto events = parse_event_log(ctx.read_input(in_log), ParseOptions{&home.registry});
      const auto result = correct_missing_motion(events, home.graph, home.registry);
      if (out_path.empty()) out_path = "corrected.log";
      ctx.write_output(out_path, serialize_event_log(result.events));
      ctx.write_output(sibling(out_path, ".insertions.csv"), result.report.to_csv());
      std::cout << result.report.inserted.size() << " activations inserted\n";
      return finish(out_path);
    }

    if (sub == encode) {
      const HomeConfig home = home_opts.load(ctx);
      const auto events = parse_event_log(ctx.read_input(in_log), ParseOptions{&home.registry});
      SymbolSequence seq = encode_text(text_kind, events, home.registry, alz_off);
      const TimeMode mode = time_mode_from_string(time_mode);
      if (mode != TimeMode::none) {
        TimeClusterModel tm;
        if (mode == TimeMode::kcluster) {
          if (!clusters_file.empty()) {
            tm = TimeClusterModel::from_text(ctx.read_input(clusters_file));
          } else {
            ctx.seed("clusters", seed);
            tm = TimeClusterModel::fit(seq, seed);
          }
        }
        seq = annotate(seq, mode, &tm);
      }
      if (out_path.empty()) out_path = "encoded.txt";
      ctx.write_output(out_path, seq.to_text() + "\n");
      if (!meta_path.empty()) ctx.write_output(meta_path, seq.metadata_csv());
      std::cout << seq.size() << " tokens over " << seq.vocabulary.size() << " symbols\n";
      return finish(out_path);
    }

    if (sub == cluster) {
      const HomeConfig home = home_opts.load(ctx);
      const auto events = parse_event_log(ctx.read_input(in_log), ParseOptions{&home.registry});
      const auto seq = speed_encode(events, home.registry);
      ctx.seed("clusters", seed);
      TimeClusterModel tm = TimeClusterModel::fit(seq, seed);
      if (force_k > 0) tm.force_k(seq, force_k, seed);
      if (out_path.empty()) out_path = "clusters.json";
      ctx.write_output(out_path, tm.to_text());
      if (!ssd_path.empty()) ctx.write_output(ssd_path, tm.ssd_csv());
      std::cout << tm.sensors().size() << " sensors, largest K " << tm.max_k() << "\n";
      return finish(out_path);
    }

    if (sub == train_ppm) {
      const HomeConfig home = home_opts.load(ctx);
      const auto events = parse_event_log(ctx.read_input(in_log), ParseOptions{&home.registry});
      const auto seq = encode_text(frontend, events, home.registry, alz_off);
      PpmModel model({frontend == "alz" ? PpmFrontend::alz : PpmFrontend::speed, max_order},
                     seq.vocabulary.size());
      const std::vector<std::vector<TokenId>> segments{seq.tokens};
      model.fit(segments);
      if (out_path.empty()) out_path = "trie.txt";
      ctx.write_output(out_path, model.trie().dump(&seq.vocabulary));
      std::cout << model.trie().node_count() << " nodes, depth " << model.trie().max_depth() << "\n";
      return finish(out_path);
    }

    if (sub == train_lstm) {
      const HomeConfig home = home_opts.load(ctx);
      const auto events = parse_event_log(ctx.read_input(in_log), ParseOptions{&home.registry});
      const auto seq = encode_text(text_kind, events, home.registry, alz_off);
      const TimeMode mode = time_mode_from_string(time_mode);
      if (joint && mode == TimeMode::none) throw ConfigError("--joint needs a --time mode");
      if (seq.size() < 5) throw ValidationError("log too short to train on");
      const std::size_t cut = seq.size() * 4 / 5;
      const std::vector<Range> train_range{{0, cut}}, val_range{{cut, seq.size()}};

      SymbolSequence annotated = seq;
      if (mode != TimeMode::none) {
        TimeClusterModel tm;
        if (mode == TimeMode::kcluster) tm = TimeClusterModel::fit(seq, seed, train_range);
        annotated = annotate(seq, mode, &tm);
      }
      const Vocabulary& in_vocab = annotated.vocabulary;
      const auto& targets = joint ? annotated.tokens : seq.base_tokens;
      const Vocabulary out_vocab = joint ? in_vocab : Vocabulary(seq.vocabulary.base_tokens());
      const TokenId skip = joint ? in_vocab.start_index() : std::numeric_limits<TokenId>::max();
      LstmConfig lc = lstm_opts.get(seed);
      ctx.seed("weights", seed);
      const auto train_set = windows_over(annotated.tokens, targets, train_range, lc.memory_length,
                                          in_vocab.start_index(), skip);
      const auto val_set = windows_over(annotated.tokens, targets, val_range, lc.memory_length,
                                        in_vocab.start_index(), skip);
      RecurrentModel model(in_vocab.input_width(), out_vocab.size(), lc.hidden, seed);
      const auto trained = train(std::move(model), train_set, val_set, lc);

      if (out_path.empty()) out_path = "model.json";
      ctx.write_output(out_path, save_checkpoint({lc, in_vocab, out_vocab, trained.model}));
      if (!history_path.empty()) {
        std::ostringstream csv;
        csv << "epoch,train_loss,validation_loss,validation_accuracy\n";
        csv.precision(9);
        for (const auto& e : trained.history)
          csv << e.epoch << ',' << e.train_loss << ',' << e.validation_loss << ',' << e.validation_accuracy << '\n';
        ctx.write_output(history_path, csv.str());
      }
      std::cout << "best epoch " << trained.best_epoch << " of " << trained.history.size() << "\n";
      return finish(out_path);
    }

    if (sub == evaluate_cmd) {
      const HomeConfig home = home_opts.load(ctx);
      const auto events = parse_event_log(ctx.read_input(in_log), ParseOptions{&home.registry});
      const EvalConfig cfg = eval_opts.get(jobs);
      ctx.seed("evaluation", cfg.seed);
      const auto seq = encode_for(cfg.method, events, home.registry, cfg.alz);
      const auto report = homeseq::evaluate(seq, cfg);
      if (out_path.empty()) out_path = "report.txt";
      ctx.write_output(out_path, report.to_text());
      ctx.write_output(sibling(out_path, ".folds.csv"), report.folds_csv());
      ctx.write_output(sibling(out_path, ".confusion.csv"), report.confusion_csv());
      ctx.write_volatile(sibling(out_path, ".timing.csv"), report.timing_csv());
      std::cout << eval_opts.method << " accuracy " << report.mean_accuracy << "\n";
      return finish(out_path);
    }

    if (sub == sweep) {
      const HomeConfig home = home_opts.load(ctx);
      const auto events = parse_event_log(ctx.read_input(in_log), ParseOptions{&home.registry});
      const EvalConfig cfg = eval_opts.get(jobs);
      ctx.seed("evaluation", cfg.seed);
      const auto seq = encode_for(cfg.method, events, home.registry, cfg.alz);
      const auto curve = size_sweep(seq, grid, cfg);
      if (out_path.empty()) out_path = "sweep.csv";
      ctx.write_output(out_path, sweep_csv(curve, cfg.method));
      ctx.write_volatile(sibling(out_path, ".timing.csv"), sweep_timing_csv(curve, cfg.method));
      std::cout << curve.size() << " points\n";
      return finish(out_path);
    }

    if (sub == transfer) {
      if (sources.empty())
        for (const auto& n : preset_names())
          if (n != target) sources.push_back(n);
      if (std::find(sources.begin(), sources.end(), target) != sources.end())
        throw ConfigError("the target apartment cannot also be a source");
      tcfg.lstm = lstm_opts.get(seed);
      tcfg.time_mode = time_mode_from_string(t_time);
      tcfg.joint = !no_joint;
      tcfg.seed = seed;
      tcfg.jobs = jobs;
      tcfg.validate();

      std::vector<Preset> presets;
      std::vector<HarmonizationMap> maps;
      for (const auto& n : sources) presets.push_back(make_preset(n));
      presets.push_back(make_preset(target));
      for (const auto& p : presets) maps.push_back(p.harmonization);
      const LabelSpace space(maps);
      std::vector<SymbolSequence> seqs;
      for (std::size_t i = 0; i < presets.size(); ++i) {
        // Each apartment gets its own stream seed.
        const std::uint64_t s = seed * 131 + i;
        ctx.seed("simulate." + presets[i].name, s);
        const auto events = simulate(presets[i].routine, presets[i].home, days, s);
        seqs.push_back(speed_encode(harmonize(events, presets[i].harmonization, space), space.registry()));
      }
      const SymbolSequence target_seq = std::move(seqs.back());
      seqs.pop_back();
      ctx.seed("transfer", seed);
      const auto report = pretrain_finetune(seqs, target_seq, budgets, tcfg);
      if (out_path.empty()) out_path = "transfer.csv";
      ctx.write_output(out_path, report.to_csv());
      ctx.write_output(sibling(out_path, ".txt"),
                       "sources: " + join(sources, ",") + "\ntarget: " + target + "\n" + report.to_text());
      std::cout << report.to_text();
      return finish(out_path);
    }

    if (sub == simulate_cmd) {
      Preset preset = make_preset(home_opts.preset);
      if (!routine_file.empty()) {
        preset.routine = RoutineModel::from_text(ctx.read_input(routine_file));
        preset.routine.validate(preset.home);
      }
      ctx.seed("simulate", seed);
      const auto events = homeseq::simulate(preset.routine, preset.home, days, seed);
      if (out_path.empty()) out_path = "simulated.log";
      ctx.write_output(out_path, serialize_event_log(events));
      if (!home_out.empty()) ctx.write_output(home_out, serialize_home_config(preset.home));
      if (!routine_out.empty()) ctx.write_output(routine_out, preset.routine.to_text());
      if (!ceiling_path.empty()) {
        ctx.seed("ceiling", seed);
        const auto c = bayes_ceiling(preset.routine, preset.home, ceiling_steps, seed);
        std::ostringstream os;
        os.precision(6);
        os << std::fixed << "ceiling " << c.ceiling << "\nstandard_error " << c.standard_error << "\nsteps "
           << c.steps << "\nchi_square " << c.chi_square << "\ndegrees_of_freedom " << c.degrees_of_freedom
           << "\n\ntoken,observed,expected\n";
        for (std::size_t i = 0; i < c.tokens.size(); ++i)
          os << c.tokens[i] << ',' << c.observed[i] << ',' << c.expected[i] << '\n';
        ctx.write_output(ceiling_path, os.str());
      }
      std::cout << events.size() << " events\n";
      return finish(out_path);
    }

    if (sub == replay) {
      std::ifstream in(manifest_path);
      if (!in) throw IoError("cannot read '" + manifest_path + "'");
      std::ostringstream ss;
      ss << in.rdbuf();
      const Manifest m = Manifest::from_json(ss.str());
      if (m.subcommand == "replay") throw ConfigError("a replay manifest cannot be replayed");

      const fs::path here = fs::current_path();
      fs::current_path(m.cwd);
      struct Restore {
        fs::path dir;
        ~Restore() { fs::current_path(dir); }
      } restore{here};

      for (const auto& f : m.inputs) {
        std::ifstream fin(f.path, std::ios::binary);
        if (!fin) throw IoError("input '" + f.path + "' is gone");
        std::ostringstream fs_;
        fs_ << fin.rdbuf();
        if (hex64(fnv1a64(fs_.str())) != f.fnv1a) throw ValidationError("input '" + f.path + "' changed since the run");
      }

      std::vector<std::string> argv = m.argv;
      fs::path config_copy;
      if (m.config_text) {
        config_copy = fs::temp_directory_path() / ("homeseq-replay-" + m.config_hash + ".ini");
        std::ofstream(config_copy) << *m.config_text;
        for (std::size_t i = 0; i < argv.size(); ++i) {
          if (argv[i] == "--config" && i + 1 < argv.size()) argv[i + 1] = config_copy.string();
          else if (argv[i].rfind("--config=", 0) == 0) argv[i] = "--config=" + config_copy.string();
        }
      }
      if (m.data_dir) setenv("HOMESEQ_DATA_DIR", m.data_dir->c_str(), 1);
      else unsetenv("HOMESEQ_DATA_DIR");

      const int code = run(argv);
      if (!config_copy.empty()) fs::remove(config_copy);
      if (code != kOk) return code;

      std::size_t differing = 0;
      for (const auto& f : m.outputs) {
        std::ifstream fin(f.path, std::ios::binary);
        std::ostringstream fs_;
        fs_ << fin.rdbuf();
        if (!fin || hex64(fnv1a64(fs_.str())) != f.fnv1a) {
          std::cerr << "homeseq: output '" << f.path << "' differs from the recorded run\n";
          ++differing;
        }
      }
      if (differing > 0) return kData;
      std::cout << "reproduced " << m.outputs.size() << " outputs\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "homeseq: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "homeseq: " << e.what() << "\n";
    return kData;
  } catch (const ValidationError& e) {
    std::cerr << "homeseq: " << e.what() << "\n";
    return kData;
  } catch (const IoError& e) {
    std::cerr << "homeseq: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "homeseq: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace homeseq::cli
