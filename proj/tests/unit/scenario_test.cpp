#include "coloc/scenario.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

using namespace coloc;

namespace {

const std::filesystem::path kFixtures = COLOC_FIXTURE_DIR;

bool inside(const Position& p, double lx, double ly, double lz) {
  constexpr double eps = 1e-9;
  return p.x() >= -eps && p.x() <= lx + eps && p.y() >= -eps && p.y() <= ly + eps && p.z() >= -eps &&
         p.z() <= lz + eps;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("coloc_scenario_test_" + name);
}

}  // namespace

TEST(Cabin, InsideCuboidWithSixAnchors) {
  const DeviceNetwork net = builtin_scenario("cabin").network;
  EXPECT_EQ(net.num_anchors(), 6);
  EXPECT_EQ(net.num_blindfolded(), 75);
  for (int i = 0; i < net.num_devices(); ++i)
    EXPECT_TRUE(inside(net.position(i), kCabinLength, kCabinWidth, kCabinHeight)) << "index " << i;
  EXPECT_NO_THROW(net.validate());
}

TEST(Cabin, RowsSpreadUniformly) {
  const DeviceNetwork net = generate_cabin();
  std::map<std::pair<long, long>, std::vector<double>> lines;
  for (const auto& p : net.install_points)
    lines[{std::lround(p.y() * 100), std::lround(p.z() * 100)}].push_back(p.x());
  // Three seat sub-rows plus two rack lines.
  EXPECT_EQ(lines.size(), 5u);
  for (auto& [key, xs] : lines) {
    std::sort(xs.begin(), xs.end());
    EXPECT_EQ(xs.size(), 15u);
    for (std::size_t k = 1; k < xs.size(); ++k) EXPECT_NEAR(xs[k] - xs[k - 1], kCabinLength / 15, 1e-9);
  }
  // No rack device sits directly above a seat device.
  for (const auto& p : net.install_points)
    for (const auto& q : net.install_points)
      if (p.z() > q.z()) EXPECT_GT(std::abs(p.x() - q.x()), 1.0);
}

TEST(Cabin, RejectsBadLayouts) {
  CabinLayout layout;
  layout.seat_rows = 0;
  EXPECT_THROW(generate_cabin(layout), std::invalid_argument);
  layout = {};
  layout.rack_offset = 0.75;
  EXPECT_THROW(generate_cabin(layout), std::invalid_argument);
}

TEST(Building, CountsBoundsAndStrata) {
  const DeviceNetwork net = generate_building();
  EXPECT_EQ(net.num_blindfolded(), 42);
  EXPECT_EQ(net.num_anchors(), 4);
  double zmin = 1e9;
  double zmax = -1e9;
  for (int i = 0; i < net.num_devices(); ++i) {
    EXPECT_TRUE(inside(net.position(i), 19.5, 19.0, 2.6));
    if (i < net.num_blindfolded()) {
      zmin = std::min(zmin, net.position(i).z());
      zmax = std::max(zmax, net.position(i).z());
    }
  }
  EXPECT_LT(zmin, 0.5);
  EXPECT_GT(zmax, 2.0);
  EXPECT_NO_THROW(net.validate());
}

TEST(Lab, TableCoordinates) {
  const DeviceNetwork net = lab_network(1.47);
  EXPECT_EQ(net.num_anchors(), 4);
  EXPECT_EQ(net.num_blindfolded(), 14);
  // Table rows 1-4 are anchors, rows 5 onwards install points.
  EXPECT_EQ(net.anchors[1], Position(3, 1, 1.1));
  EXPECT_EQ(net.install_points[10 - 5], Position(1.5, 3, 0.48));
  EXPECT_EQ(net.install_points[16 - 5], Position(0.75, 2, 1.47));
  EXPECT_EQ(lab_network(1.97).install_points[18 - 5], Position(0.75, 4, 1.97));
}

TEST(Lab, RejectsOtherHeights) { EXPECT_THROW(lab_network(1.5), DomainError); }

TEST(Builtins, UnknownNameRejected) {
  EXPECT_THROW(builtin_scenario("submarine"), std::invalid_argument);
  EXPECT_FALSE(is_builtin_scenario("submarine"));
  EXPECT_TRUE(is_builtin_scenario("lab-1.97"));
}

TEST(Builtins, Deterministic) {
  EXPECT_EQ(generate_cabin().install_points, generate_cabin().install_points);
  EXPECT_EQ(generate_building().anchors, generate_building().anchors);
}

TEST(ScenarioFile, RoundTripIsBitExact) {
  for (const char* name : {"cabin", "building", "lab-1.47"}) {
    ScenarioConfig cfg = builtin_scenario(name);
    cfg.path_loss.sigma = 2.75;
    cfg.seed = 1234567890123ull;
    const auto path = temp_file(std::string(name) + ".json");
    save_scenario(cfg, path);
    const ScenarioConfig back = load_scenario(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.name, cfg.name);
    EXPECT_EQ(back.seed, cfg.seed);
    EXPECT_EQ(back.network.anchors, cfg.network.anchors);
    EXPECT_EQ(back.network.install_points, cfg.network.install_points);
    EXPECT_EQ(back.path_loss.p0, cfg.path_loss.p0);
    EXPECT_EQ(back.path_loss.gamma, cfg.path_loss.gamma);
    EXPECT_EQ(back.path_loss.sigma, cfg.path_loss.sigma);
  }
}

TEST(ScenarioFile, DuplicatePositionsRejected) {
  const std::string text = R"({"name":"dup","path_loss":{"p0":-40,"gamma":2},
    "anchors":[[0,0,0],[5,0,0]],"install_points":[[1,1,1],[2,2,2],[1,1,1]]})";
  EXPECT_THROW(parse_scenario(text), DomainError);
}

TEST(ScenarioFile, MissingFieldsRejected) {
  EXPECT_THROW(parse_scenario(R"({"name":"x","anchors":[],"install_points":[[0,0,0]]})"), ParseError);
  EXPECT_THROW(parse_scenario(R"({"name":"x","path_loss":{"p0":-40},"anchors":[],"install_points":[[0,0,0]]})"),
               ParseError);
  EXPECT_THROW(parse_scenario("not json"), ParseError);
  EXPECT_THROW(parse_scenario(R"({"name":"x","path_loss":{"p0":-40,"gamma":2},"anchors":[[0,0]],
    "install_points":[[0,0,0]]})"),
               ParseError);
}

TEST(ScenarioFile, FixturesMatchGenerators) {
  for (const char* name : {"cabin", "building", "lab-1.47", "lab-1.97"}) {
    const ScenarioConfig fixture = load_scenario(kFixtures / (std::string(name) + ".json"));
    const ScenarioConfig generated = builtin_scenario(name);
    EXPECT_EQ(fixture.network.anchors, generated.network.anchors) << name;
    EXPECT_EQ(fixture.network.install_points, generated.network.install_points) << name;
    EXPECT_EQ(fixture.path_loss.p0, generated.path_loss.p0) << name;
    EXPECT_EQ(fixture.path_loss.gamma, generated.path_loss.gamma) << name;
  }
}

TEST(ScenarioFile, ResolveAcceptsNamesAndPaths) {
  EXPECT_EQ(resolve_scenario("building").network.install_points.size(), 42u);
  EXPECT_EQ(resolve_scenario((kFixtures / "lab-1.97.json").string()).network.num_blindfolded(), 14);
  EXPECT_THROW(resolve_scenario("no-such-scenario"), std::invalid_argument);
}

TEST(Measurements, AnchorsFirstFileOrderingIsRemapped) {
  DeviceNetwork net;
  net.install_points = {{0, 0, 0}, {1, 0, 0}};
  net.anchors = {{5, 5, 0}};
  // File index 0 is the anchor, 1 and 2 are blindfolded devices 0 and 1.
  const RssMatrix rss = parse_measurements("# header\n0,1,-50\n1,2,-42.5\n\n2,0,-51\n", net);
  EXPECT_DOUBLE_EQ(rss.at(2, 0), -50.0);
  EXPECT_DOUBLE_EQ(rss.at(0, 2), -50.0);
  EXPECT_DOUBLE_EQ(rss.at(0, 1), -42.5);
  EXPECT_DOUBLE_EQ(rss.at(1, 2), -51.0);
}

TEST(Measurements, FormatParseRoundTrip) {
  const ScenarioConfig cfg = builtin_scenario("lab-1.47");
  PathLossParams p = cfg.path_loss;
  p.sigma = 2.0;
  const RssMatrix rss = simulate_measurements(cfg.network, Assignment::identity(14), p, 77);
  const RssMatrix back = parse_measurements(format_measurements(rss, cfg.network), cfg.network);
  for (int i = 0; i < rss.size(); ++i)
    for (int j = 0; j < rss.size(); ++j)
      if (i != j) EXPECT_EQ(back.at(i, j), rss.at(i, j));
}

TEST(Measurements, MalformedLinesRejected) {
  DeviceNetwork net;
  net.install_points = {{0, 0, 0}};
  net.anchors = {{5, 5, 0}};
  EXPECT_THROW(parse_measurements("0,1\n", net), ParseError);
  EXPECT_THROW(parse_measurements("0,7,-40\n", net), ParseError);
  EXPECT_THROW(parse_measurements("1,1,-40\n", net), ParseError);
  EXPECT_THROW(parse_measurements("0,1,abc\n", net), ParseError);
}

TEST(PathLossSamples, ParseAndReject) {
  const auto s = parse_path_loss_samples("1.0,-40\n# c\n2.5,-47.9\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[1].first, 2.5);
  EXPECT_THROW(parse_path_loss_samples("0,-40\n"), ParseError);
  EXPECT_THROW(parse_path_loss_samples("1,-40,3\n"), ParseError);
}
