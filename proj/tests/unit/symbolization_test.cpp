// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cctype>
#include <random>

#include "fixtures.hpp"
#include "homeseq/error.hpp"
#include "homeseq/symbolization.hpp"

using namespace homeseq;
using fixtures::off;
using fixtures::on;

namespace {

SensorRegistry two_sensor_registry() {
  return SensorRegistry({{4, "hall_motion", SensorKind::motion, "hall", '\0'},
                         {10, "fridge", SensorKind::magnetic, "kitchen", '\0'}});
}

// Table 1 style rows: 4 on; 10 on (22 s later); 10 off (243 s later).
std::vector<SensorEvent> table_rows() {
  const auto t0 = Timestamp::from_civil(2017, 9, 1, 7, 58, 40).seconds;
  return {on(t0, 4), on(t0 + 22, 10), off(t0 + 265, 10)};
}

}  // namespace

TEST(Speed, TableRowsGiveABb) {
  const auto reg = two_sensor_registry();
  const auto seq = speed_encode(table_rows(), reg);
  EXPECT_EQ(seq.to_text(), "ABb");
  EXPECT_EQ(seq.vocabulary.size(), 4u);
  EXPECT_EQ(seq.meta[1].since_previous, 22);
  EXPECT_EQ(seq.meta[1].to_next, 243);
  EXPECT_FALSE(seq.meta[0].since_previous);
  EXPECT_FALSE(seq.meta[2].to_next);
}

TEST(Speed, SingleEvents) {
  const auto reg = two_sensor_registry();
  EXPECT_EQ(speed_encode(std::vector{on(0, 4)}, reg).to_text(), "A");
  EXPECT_EQ(speed_encode(std::vector{on(0, 4), off(1, 4)}, reg).to_text(), "Aa");
}

TEST(Speed, VocabularyIsTwicePerSensor) {
  const auto home = fixtures::small_home();
  EXPECT_EQ(speed_vocabulary(home.registry).size(), 2 * home.registry.size());
}

TEST(Speed, UnassignedSensorIsAnError) {
  EXPECT_THROW(speed_encode(std::vector{on(0, 77)}, two_sensor_registry()), ValidationError);
}

TEST(Alz, ActivationOnly) {
  const auto reg = two_sensor_registry();
  EXPECT_EQ(alz_encode(table_rows(), reg).to_text(), "AB");
  EXPECT_TRUE(alz_encode(std::vector{off(0, 4), off(5, 10)}, reg).tokens.empty());
  EXPECT_EQ(alz_encode(std::vector{on(0, 4), on(1, 10), off(2, 10), on(3, 4)}, reg).to_text(),
            "ABA");
}

TEST(Alz, IncludeOffMatchesSpeed) {
  const auto reg = two_sensor_registry();
  AlzOptions opts;
  opts.include_off = true;
  EXPECT_EQ(alz_encode(table_rows(), reg, opts).to_text(), "ABb");
}

TEST(Alz, GapsMeasuredBetweenKeptEvents) {
  const auto reg = two_sensor_registry();
  const auto seq = alz_encode(std::vector{on(0, 4), off(5, 4), on(30, 10)}, reg);
  EXPECT_EQ(seq.meta[1].since_previous, 30);
}

TEST(SymbolProperty, LengthsCaseAndDecodability) {
  const auto home = fixtures::small_home();
  std::mt19937_64 rng(5);
  const auto& sensors = home.registry.sensors();
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SensorEvent> ev;
    std::size_t ons = 0;
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(rng() % 80); ++t) {
      const bool is_on = rng() % 2;
      ons += is_on;
      ev.push_back({Timestamp{t * 7}, sensors[rng() % sensors.size()].id,
                    is_on ? SensorState::on : SensorState::off, false});
    }
    const auto speed = speed_encode(ev, home.registry);
    ASSERT_EQ(speed.size(), ev.size());
    EXPECT_EQ(alz_encode(ev, home.registry).size(), ons);
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const char c = speed.vocabulary.token(speed.tokens[i])[0];
      EXPECT_EQ(std::isupper(static_cast<unsigned char>(c)) != 0, ev[i].is_on());
    }
    const auto decoded = speed_decode(speed, home.registry);
    for (std::size_t i = 0; i < ev.size(); ++i) {
      EXPECT_EQ(decoded[i].first, ev[i].sensor_id);
      EXPECT_EQ(decoded[i].second, ev[i].state);
    }
  }
}

TEST(Vocabulary, CompositeIndexing) {
  Vocabulary base({"A", "a", "B", "b"});
  auto v = Vocabulary::composite(base, {"t0", "t1", "t2"});
  EXPECT_EQ(v.size(), 12u);
  EXPECT_EQ(v.start_index(), 12u);
  EXPECT_EQ(v.input_width(), 13u);
  for (TokenId b = 0; b < 4; ++b)
    for (std::size_t t = 0; t < 3; ++t) {
      const auto id = v.compose(b, t);
      EXPECT_EQ(v.decompose(id), std::make_pair(b, t));
      EXPECT_EQ(v.token(id), base.token(b) + "@" + v.time_names()[t]);
    }
  EXPECT_THROW(base.decompose(0), ConfigError);
  EXPECT_THROW(Vocabulary({"A", "A"}), ConfigError);
  EXPECT_THROW(Vocabulary({"^"}), ConfigError);
}

TEST(Vocabulary, FifteenSensorsFourBucketsGive120) {
  std::vector<SensorInfo> s;
  for (int i = 0; i < 15; ++i) s.push_back({i + 1, "s", SensorKind::motion, "r", '\0'});
  const auto v = speed_vocabulary(SensorRegistry(s));
  EXPECT_EQ(v.size(), 30u);
  EXPECT_EQ(Vocabulary::composite(v, {"a", "b", "c", "d"}).size(), 120u);
}
