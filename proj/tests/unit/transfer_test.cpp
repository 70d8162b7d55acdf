// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "homeseq/error.hpp"
#include "homeseq/presets.hpp"
#include "homeseq/simulator.hpp"
#include "homeseq/transfer.hpp"

using namespace homeseq;
using fixtures::off;
using fixtures::on;

namespace {

HarmonizationMap kitchen_map() {
  return HarmonizationMap::from_text(
      "[labels]\n4 = kitchen_motion\n10 = fridge\n11 = hotdrink\n[drop]\n12\n");
}

SymbolSequence harmonized_preset(const std::string& name, const LabelSpace& space, double days,
                                 std::uint64_t seed) {
  const auto p = make_preset(name);
  const auto ev = simulate(p.routine, p.home, days, seed);
  return speed_encode(harmonize(ev, p.harmonization, space), space.registry());
}

TransferConfig small_config() {
  TransferConfig c;
  c.lstm.hidden = 16;
  c.lstm.memory_length = 5;
  c.lstm.batch_size = 128;
  c.lstm.max_epochs = 4;
  c.lstm.single_precision = true;
  c.test_events = 300;
  c.repetitions = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Harmonize, RelabelsAndDrops) {
  const auto map = kitchen_map();
  const std::vector<HarmonizationMap> maps{map};
  LabelSpace space(maps);
  EXPECT_EQ(space.labels(), (std::vector<std::string>{"fridge", "hotdrink", "kitchen_motion"}));
  const std::vector<SensorEvent> ev{on(0, 11), off(5, 11), on(6, 12), on(7, 4)};
  const auto h = harmonize(ev, map, space);
  ASSERT_EQ(h.size(), 3u);
  EXPECT_EQ(h[0].sensor_id, *space.id_of("hotdrink"));
  EXPECT_FALSE(h[1].is_on());
  EXPECT_EQ(h[2].sensor_id, *space.id_of("kitchen_motion"));
  EXPECT_EQ(h[2].timestamp.seconds, 7);
  EXPECT_FALSE(space.id_of("lamp"));
}

TEST(Harmonize, IdentityIsIdempotentAndClosed) {
  const std::vector<HarmonizationMap> maps{kitchen_map()};
  LabelSpace space(maps);
  const auto once = harmonize(std::vector<SensorEvent>{on(0, 11), on(1, 4), off(2, 10)}, maps[0], space);
  const auto twice = harmonize(once, space.identity(), space);
  EXPECT_EQ(twice, once);
  for (const auto& e : twice) EXPECT_TRUE(space.registry().contains(e.sensor_id));
}

TEST(Harmonize, UnmappedSensorIsAnError) {
  const std::vector<HarmonizationMap> maps{kitchen_map()};
  LabelSpace space(maps);
  EXPECT_THROW(harmonize(std::vector<SensorEvent>{on(0, 99)}, maps[0], space), ValidationError);
}

TEST(Harmonize, MapTextRoundTripAndErrors) {
  const auto m = kitchen_map();
  const auto back = HarmonizationMap::from_text(m.to_text());
  EXPECT_EQ(back.labels, m.labels);
  EXPECT_EQ(back.drop, m.drop);
  EXPECT_THROW(HarmonizationMap::from_text("[labels]\n1 = a\n[drop]\n1\n"), ConfigError);
  EXPECT_THROW(HarmonizationMap::from_text("1 = a\n"), ParseError);
}

TEST(Harmonize, PresetsShareOneLabelSpace) {
  std::vector<HarmonizationMap> maps;
  for (const auto& name : preset_names()) maps.push_back(make_preset(name).harmonization);
  LabelSpace space(maps);
  for (const auto& l : space.labels()) EXPECT_EQ(l.find("lamp"), std::string::npos);
  EXPECT_TRUE(space.id_of("hotdrink"));
  for (const auto& name : preset_names())
    EXPECT_GT(harmonized_preset(name, space, 1, 3).size(), 100u);
}

TEST(Transfer, FinetuneLeavesPretrainedModelUntouched) {
  std::vector<HarmonizationMap> maps;
  for (const auto& name : preset_names()) maps.push_back(make_preset(name).harmonization);
  LabelSpace space(maps);
  std::vector<SymbolSequence> sources;
  for (const char* name : {"apt2", "apt3"}) sources.push_back(harmonized_preset(name, space, 3, 1));
  const auto target = harmonized_preset("apt1", space, 3, 2);
  const auto cfg = small_config();
  const auto pre = pretrain(sources, cfg, 9);
  const auto before = save_checkpoint(pre.checkpoint);
  const auto out = finetune(pre, target, 500, cfg, 4);
  EXPECT_EQ(save_checkpoint(pre.checkpoint), before);
  EXPECT_GE(out.best_accuracy, 0.0);
  EXPECT_LE(out.best_accuracy, 1.0);
  EXPECT_LE(out.epochs, cfg.lstm.max_epochs);

  const auto zero = finetune(pre, target, 0, cfg, 4);
  EXPECT_EQ(zero.best_epoch, 0u);
  EXPECT_EQ(zero.epochs, 0u);

  const auto scratch = untrained_like(pre, 3);
  EXPECT_EQ(scratch.time_mode, pre.time_mode);
  EXPECT_EQ(scratch.joint, pre.joint);
  EXPECT_EQ(scratch.checkpoint.output_vocabulary, pre.checkpoint.output_vocabulary);

  EXPECT_THROW(finetune(pre, target, target.size(), cfg, 4), ValidationError);
}

TEST(Transfer, ProtocolRowsAreDeterministic) {
  std::vector<HarmonizationMap> maps;
  for (const auto& name : preset_names()) maps.push_back(make_preset(name).harmonization);
  LabelSpace space(maps);
  std::vector<SymbolSequence> sources{harmonized_preset("apt4", space, 2, 1)};
  const auto target = harmonized_preset("apt5", space, 2, 2);
  auto cfg = small_config();
  cfg.lstm.max_epochs = 2;
  const std::vector<std::size_t> budgets{0, 200};
  const auto a = pretrain_finetune(sources, target, budgets, cfg);
  ASSERT_EQ(a.rows.size(), 4u);
  const auto b = pretrain_finetune(sources, target, budgets, cfg);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  const double m = a.mean_pretrained(200);
  EXPECT_NEAR(m, (a.rows[2].pretrained.best_accuracy + a.rows[3].pretrained.best_accuracy) / 2, 1e-12);
  EXPECT_THROW(a.mean_scratch(7), ConfigError);
  cfg.repetitions = 0;
  EXPECT_THROW(pretrain_finetune(sources, target, budgets, cfg), ConfigError);
}
