#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include <lagrangify/lagrangify.hpp>

using namespace lagrangify;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Presets, JsonRoundTrip) {
  for (const auto& p : builtin_presets()) EXPECT_EQ(to_json(preset_from_json(to_json(p))), to_json(p)) << p.name;
}

TEST(Presets, ShippedFilesMatchBuiltins) {
  for (auto name : kPresetNames) {
    const std::string n(name);
    ASSERT_TRUE(std::filesystem::exists(std::string(LAGRANGIFY_PRESET_DIR) + "/" + n + ".json")) << n;
    EXPECT_EQ(to_json(load_preset(n, LAGRANGIFY_PRESET_DIR)), to_json(builtin_preset(name))) << n;
  }
}

TEST(Presets, SimulationParameters) {
  const auto free = builtin_preset("HarmonicFree");
  EXPECT_EQ(free.param("m"), 10.0);
  EXPECT_EQ(free.param("k"), 5000.0);
  EXPECT_EQ(free.steps().samples(), 1001u);
  const auto forced = builtin_preset("HarmonicForced");
  EXPECT_EQ(forced.dt, 5e-4);
  EXPECT_EQ(forced.T, 2.0);
  const auto pend = builtin_preset("Pendulum");
  EXPECT_EQ(pend.steps().samples(), 10001u);
  EXPECT_EQ(pend.initial.x, std::vector<double>{0.5});
  const auto tri = builtin_preset("Triatomic");
  EXPECT_EQ(tri.param("k"), 1870.0);
  EXPECT_EQ(tri.param("M") / tri.param("m"), 2.0);
  const auto wave = builtin_preset("TransversalWave");
  EXPECT_EQ(wave.param("c"), 25.0);
  EXPECT_EQ(wave.param("delta"), 0.01);
  EXPECT_EQ(wave.dt, 1e-4);
  EXPECT_EQ(wave.grid, 50u);
  const auto blade = builtin_preset("BladeFlexion");
  EXPECT_EQ(blade.param("delta"), 0.01);
  EXPECT_EQ(blade.dt, 1e-3);
  EXPECT_EQ(blade.T, 2.0);
}

TEST(Presets, FileOverridesBuiltin) {
  const auto dir = std::filesystem::temp_directory_path() / "lagrangify_preset_test";
  std::filesystem::create_directories(dir);
  auto p = builtin_preset("HarmonicFree");
  p.params["k"] = 8000.0;
  std::ofstream(dir / "HarmonicFree.json") << to_json(p).dump();
  EXPECT_EQ(load_preset("HarmonicFree", dir.string()).param("k"), 8000.0);
  EXPECT_EQ(load_preset("Pendulum", dir.string()).param("g"), 9.81);
  std::ofstream(dir / "Broken.json") << "{not json";
  EXPECT_EQ(code_of([&] { (void)load_preset("Broken", dir.string()); }), ErrorCode::ParseError);
  std::filesystem::remove_all(dir);
}

TEST(Presets, UnknownName) {
  EXPECT_EQ(code_of([] { (void)load_preset("Spring"); }), ErrorCode::UnknownPreset);
  EXPECT_EQ(code_of([] { (void)builtin_preset("Spring"); }), ErrorCode::UnknownPreset);
}

TEST(Presets, MissingParameter) {
  auto p = builtin_preset("HarmonicFree");
  p.params.erase("k");
  EXPECT_EQ(code_of([&] { (void)simulate(p); }), ErrorCode::SpecInvalid);
}
