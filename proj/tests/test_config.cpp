#include <gtest/gtest.h>

#include <fstream>

#include "pilotstack/config.hpp"
#include "pilotstack/error.hpp"
#include "temp_dir.hpp"

#ifndef PILOTSTACK_SOURCE_DIR
#error "PILOTSTACK_SOURCE_DIR must point at the repository root"
#endif

using namespace pilot;

namespace {

void expect_rejected(std::string_view text, std::string_view needle) {
  try {
    parse_config(text, "t.toml");
    FAIL() << "accepted: " << text;
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Config, ShippedFileMatchesDefaultsAndPassesFira) {
  const AppConfig c = load_config(std::filesystem::path(PILOTSTACK_SOURCE_DIR) / "configs/default.toml");
  EXPECT_NO_THROW(c.validate());
  EXPECT_TRUE(check_fira_constraints(c.vehicle).pass);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.train.epochs, 60u);
  EXPECT_NEAR(c.vehicle.max_wheel_angle_rad, VehicleParams{}.max_wheel_angle_rad, 1e-15);
  EXPECT_EQ(c.camera.image_width_px, 160u);
  EXPECT_EQ(c.track_path, "default");
}

TEST(Config, EmptyTextKeepsDefaults) {
  const AppConfig c = parse_config("# nothing\n\n");
  EXPECT_EQ(c.train.batch_size, 64u);
  EXPECT_EQ(c.pilot.loop_rate_hz, 20.0);
}

TEST(Config, ValuesAndComments) {
  const AppConfig c = parse_config(
      "[train]\nepochs = 3   # short\nlearning_rate = 2.5e-4\n[pilot]\nsteering_trim = -0.1\n"
      "[track]\npath = \"tracks/figure8.json\"\n");
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_EQ(c.train.learning_rate, 2.5e-4);
  EXPECT_EQ(c.pilot.steering_trim, -0.1);
  EXPECT_EQ(c.track_path, "tracks/figure8.json");
}

TEST(Config, ErrorsNameTheLine) {
  expect_rejected("[vehicle]\nwheelbase_m = 0.2\nbogus = 1\n", "t.toml:3");
  expect_rejected("[nope]\n", "t.toml:1");
  expect_rejected("[train]\nepochs = many\n", "t.toml:2");
  expect_rejected("[train]\nepochs\n", "t.toml:2");
  expect_rejected("epochs = 3\n", "t.toml:1");
}

TEST(Config, RoundTripThroughText) {
  AppConfig c;
  c.train.seed = 7;
  c.train.learning_rate = 3e-4;
  c.synth.noise_level = 0.05;
  c.pilot.throttle_scale = 0.75;
  c.vehicle.length_mm = 290.0;
  const AppConfig back = parse_config(to_config_text(c));
  EXPECT_EQ(back.train.seed, 7u);
  EXPECT_EQ(back.train.learning_rate, 3e-4);
  EXPECT_EQ(back.synth.noise_level, 0.05);
  EXPECT_EQ(back.pilot.throttle_scale, 0.75);
  EXPECT_EQ(back.vehicle.length_mm, 290.0);
  EXPECT_NEAR(back.camera.pitch_down_rad, c.camera.pitch_down_rad, 1e-15);
}

TEST(Config, ValidationCatchesOutOfRange) {
  AppConfig c = parse_config("[vehicle]\nlength_mm = 301\n");
  EXPECT_FALSE(check_fira_constraints(c.vehicle).pass);
  EXPECT_THROW(parse_config("[pilot]\nthrottle_scale = 1.5\n").validate(), ValidationError);
  EXPECT_THROW(parse_config("[train]\nval_fraction = 0\n").validate(), ValidationError);
}

TEST(Config, TrackSelection) {
  AppConfig c;
  EXPECT_EQ(load_track_for(c).waypoints.size(), default_track().waypoints.size());
  TempDir tmp("cfg");
  TrackSpec sq;
  sq.waypoints = {{0, 0}, {3, 0}, {3, 3}, {0, 3}};
  save_track_spec(sq, tmp / "sq.json");
  c.track_path = (tmp / "sq.json").string();
  EXPECT_EQ(load_track_for(c).waypoints.size(), 4u);
  c.track_path = (tmp / "missing.json").string();
  EXPECT_ANY_THROW(load_track_for(c));
}
