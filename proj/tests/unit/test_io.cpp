#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "thermo/io/config.hpp"
#include "thermo/io/csv.hpp"
#include "thermo/io/measure_io.hpp"

using namespace thermo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "thermo_io_test";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_text(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

int error_line(const std::string& text) {
  try {
    io::parse_config(text, "cfg.json");
  } catch (const io::ConfigError& e) {
    return e.line();
  }
  return -1;
}

const char* kValid = R"({
  "map": { "kind": "full_linear", "branches": 2 },
  "potential": { "kind": "branch_pw_constant", "values": [0.0, -1.0] },
  "command_params": { "x0": 0.3, "n_max": 12 },
  "output_dir": "out/x",
  "seed": 9
})";

}  // namespace

TEST(Csv, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(io::parse_double(io::fmt(v), "t"), v);
  }
  EXPECT_EQ(io::fmt(true), "true");
  EXPECT_THROW(io::parse_double("1.5x", "here"), DomainError);
  EXPECT_THROW(io::parse_double("", "here"), DomainError);
}

TEST(MeasureIo, RoundTripIsExact) {
  const AtomicMeasure m({{0.1, 1.0 / 3.0}, {0.2, 1.0 / 6.0}, {0.7, 0.5}});
  const auto p = scratch("m.csv");
  io::write_measure(p.string(), m);
  const auto back = io::read_measure(p.string());
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.atoms()[i].point, m.atoms()[i].point);
    EXPECT_EQ(back.atoms()[i].mass, m.atoms()[i].mass);
  }
}

TEST(MeasureIo, Rejections) {
  auto bad = [](const std::string& name, const std::string& text) {
    EXPECT_THROW(io::read_measure(write_text(name, text).string()), DomainError) << name;
  };
  bad("header.csv", "x,m\n0.1,1\n");
  bad("order.csv", "point,mass\n0.5,0.5\n0.5,0.5\n");
  bad("negative.csv", "point,mass\n0.1,1.5\n0.2,-0.5\n");
  bad("sum.csv", "point,mass\n0.1,0.5\n0.2,0.4\n");
  bad("columns.csv", "point,mass\n0.1,0.5,3\n");
  bad("nan.csv", "point,mass\n0.1,nan\n");
  try {
    io::read_measure(write_text("line.csv", "point,mass\n0.1,0.5\n0.05,0.5\n").string());
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("line.csv:3"), std::string::npos) << e.what();
  }
}

TEST(Config, ParsesValid) {
  const auto c = io::parse_config(kValid, "cfg.json");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.output_dir, "out/x");
  EXPECT_EQ(c.integer("n_max", 0), 12);
  EXPECT_EQ(c.num("x0", 0.0), 0.3);
  EXPECT_EQ(c.integer("absent", 4), 4);
  const auto map = c.map->build();
  const auto phi = c.potential->build(map);
  EXPECT_EQ(phi(0.75), -1.0);
}

TEST(Config, PotentialKinds) {
  const std::string text = R"({
  "map": { "kind": "logistic4" },
  "potential": { "kind": "pw_linear", "segments": [[0, 0], [0.5, 1], [1, 0]], "alpha": 0.5 },
  "command_params": { "chi": { "kind": "cosine_series", "coefficients": [0, 0.1] } },
  "output_dir": "o"
})";
  const auto c = io::parse_config(text, "cfg.json");
  const auto map = c.map->build();
  const auto phi = c.potential->build(map);
  EXPECT_NEAR(phi(0.25), 0.5, 1e-15);
  EXPECT_EQ(phi.holder_exponent(), 0.5);
  const auto chi = c.potential_param("chi")->build(map);
  EXPECT_NEAR(chi(0.0), 0.1, 1e-15);
}

TEST(Config, RejectsWithLineNumbers) {
  // Missing potential: reported against line 1.
  EXPECT_EQ(error_line(R"({ "map": { "kind": "logistic4" }, "output_dir": "o" })"), 1);
  // Unknown parameter on line 4.
  EXPECT_EQ(error_line("{\n \"map\": {\"kind\": \"logistic4\"},\n \"potential\": {\"kind\": \"constant\", \"values\": [0]},\n"
                       " \"command_params\": {\"n_maks\": 3},\n \"output_dir\": \"o\"\n}"),
            4);
  // Wrong number of branch values on line 3.
  EXPECT_EQ(error_line("{\n \"map\": {\"kind\": \"full_linear\", \"branches\": 3},\n"
                       " \"potential\": {\"kind\": \"branch_pw_constant\", \"values\": [0, 1]},\n"
                       " \"output_dir\": \"o\"\n}"),
            3);
  // Malformed JSON on line 2.
  EXPECT_EQ(error_line("{\n \"map\": ,\n}"), 2);
}

TEST(Config, RejectsBadValues) {
  auto rejects = [](const std::string& text) {
    EXPECT_THROW(io::parse_config(text, "cfg.json"), io::ConfigError) << text;
  };
  const std::string model = R"("map": {"kind": "logistic4"}, "potential": {"kind": "constant", "values": [0]})";
  rejects("{" + model + "}");                                           // no output_dir
  rejects("{" + model + R"(, "output_dir": "o", "seed": -1})");
  rejects("{" + model + R"(, "output_dir": "o", "extra": 1})");
  rejects(R"({"map": {"kind": "bogus"}, "potential": {"kind": "constant", "values": [0]}, "output_dir": "o"})");
  rejects(R"({"map": {"kind": "full_linear", "branches": 1}, "potential": {"kind": "constant", "values": [0]}, "output_dir": "o"})");
  // Discontinuous map fails validation.
  rejects(R"({"map": {"kind": "pw_linear", "breakpoints": [0, 0.5, 1], "slopes": [2, -2], "intercepts": [0, 1.8]},
              "potential": {"kind": "constant", "values": [0]}, "output_dir": "o"})");
  rejects("{" + model + R"(, "output_dir": "o", "command_params": {"chi": {"kind": "constant"}}})");
  const auto c = io::parse_config("{" + model + R"(, "output_dir": "o", "command_params": {"n_max": 2.5}})", "cfg.json");
  EXPECT_THROW(c.integer("n_max", 3), io::ConfigError);
}

TEST(Config, ModelOptionalWhenNotNeeded) {
  const auto c = io::parse_config(R"({"output_dir": "o", "command_params": {"h": 1.0}})", "cfg.json", false);
  EXPECT_FALSE(c.map.has_value());
  EXPECT_EQ(c.num("h", 0.0), 1.0);
}
