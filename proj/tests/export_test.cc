#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "qrepath/homotopy.h"
#include "qrepath/profile_io.h"
#include "testing.h"

namespace qrepath {
namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        fields.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

class PathExport : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(42);
    anchor_plan = RandomInteriorPlan(space, rng);
    anchored = TraceWithRestarts(space, anchor_plan, {}, rng);
    ASSERT_EQ(anchored.trace.status, TraceStatus::kConverged);
  }
  Homotopy MakeHomotopy() const { return Homotopy(space, anchor_plan, anchored.params); }

  GameTree game = testing::SeltenGame();
  SequenceSpace space = SequenceSpace::Compile(game);
  RealizationProfile anchor_plan;
  AnchoredRun anchored;
};

TEST_F(PathExport, CsvColumnsAndRows) {
  const Homotopy h = MakeHomotopy();
  std::ostringstream out;
  WritePathCsv(h, anchored.trace.path, out);
  std::istringstream in(out.str());
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  const std::vector<std::string> header = SplitCsvLine(line);
  ASSERT_EQ(header.size(), 20u);
  EXPECT_EQ(header[0], "t");
  EXPECT_EQ(header[1], "lambda_r");
  EXPECT_EQ(header[2], "1.()");
  EXPECT_EQ(header[6], "1.(L,r)");
  EXPECT_EQ(header[7], "2.()");
  EXPECT_EQ(header[10], "3.()");
  EXPECT_EQ(header[13], "1.{L,l}");
  EXPECT_EQ(header[19], "3.{R3}");
  EXPECT_EQ(header, PathColumns(space));

  std::size_t rows = 0;
  double previous_t = 2.0;
  while (std::getline(in, line)) {
    const std::vector<std::string> fields = SplitCsvLine(line);
    ASSERT_EQ(fields.size(), header.size());
    const double t = std::stod(fields[0]);
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 1.0);
    EXPECT_EQ(t, anchored.trace.path[rows].t);  // %.17g round-trips.
    EXPECT_NEAR(std::stod(fields[1]), (1 - t) / t, 1e-12 * std::max(1.0, (1 - t) / t));
    EXPECT_EQ(std::stod(fields[2]), 1.0);
    previous_t = t;
    ++rows;
  }
  EXPECT_EQ(rows, anchored.trace.path.size());
  EXPECT_LE(previous_t, 1e-6);
}

TEST_F(PathExport, CsvIsDeterministic) {
  const Homotopy h = MakeHomotopy();
  std::ostringstream a, b;
  WritePathCsv(h, anchored.trace.path, a);
  WritePathCsv(h, anchored.trace.path, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST_F(PathExport, EmptyPathThrows) {
  const Homotopy h = MakeHomotopy();
  std::ostringstream out;
  EXPECT_THROW(WritePathCsv(h, {}, out), std::invalid_argument);
  PathDocument doc;
  EXPECT_THROW(WritePathJson(doc, out), std::invalid_argument);
}

TEST_F(PathExport, JsonRoundTripIsExact) {
  const Homotopy h = MakeHomotopy();
  const PathDocument doc = MakePathDocument(h, anchored.trace, 42);
  std::stringstream buffer;
  WritePathJson(doc, buffer);
  const PathDocument back = ReadPathJson(buffer);
  EXPECT_EQ(back.players, doc.players);
  EXPECT_EQ(back.kappa0, doc.kappa0);
  EXPECT_EQ(back.tau0, doc.tau0);
  EXPECT_EQ(back.alpha_scale, doc.alpha_scale);
  EXPECT_EQ(back.alpha, doc.alpha);
  EXPECT_EQ(back.seed, doc.seed);
  EXPECT_EQ(back.status, "converged");
  EXPECT_EQ(back.nash_gap, doc.nash_gap);
  ASSERT_EQ(back.points.size(), doc.points.size());
  for (std::size_t k = 0; k < doc.points.size(); ++k) {
    EXPECT_EQ(back.points[k].t, doc.points[k].t);
    EXPECT_EQ(back.points[k].x, doc.points[k].x);
    EXPECT_EQ(back.points[k].nu, doc.points[k].nu);
  }
  // The restored configuration rebuilds the same path.
  TransformParams params;
  params.kappa0 = back.kappa0;
  params.alpha_scale = back.alpha_scale;
  params.alpha = Eigen::Map<const Eigen::VectorXd>(back.alpha.data(),
                                                   static_cast<Eigen::Index>(back.alpha.size()));
  const Homotopy rebuilt(space, anchor_plan, params);
  for (const PathPoint& p : back.points) {
    EXPECT_LE(rebuilt.BalancedResidual(p).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(PathJson, RejectsOtherFormats) {
  std::istringstream in(R"({"format": "something else"})");
  EXPECT_THROW(ReadPathJson(in), std::runtime_error);
}

TEST(ProfileIo, FormsAgree) {
  const SequenceSpace space = SequenceSpace::Compile(testing::SeltenGame());
  const ProfileFile p = ParseProfile(space, R"({
    "players": {
      "1": {"mixed": [0, 0, 1]},
      "2": {"behavior": {"I1": [0.25, 0.75]}},
      "3": {"realization": [1, 0.4, 0.6]}
    },
    "t": 0.5
  })");
  EXPECT_EQ(p.gamma[0], (std::vector<double>{1, 0, 1, 0, 0}));
  EXPECT_EQ(p.gamma[1], (std::vector<double>{1, 0.25, 0.75}));
  EXPECT_EQ(p.gamma[2], (std::vector<double>{1, 0.4, 0.6}));
  EXPECT_EQ(p.t, 0.5);
  EXPECT_FALSE(p.nu.has_value());
  EXPECT_FALSE(p.anchor.has_value());
}

TEST(ProfileIo, RoundTrip) {
  const SequenceSpace space = SequenceSpace::Compile(testing::SeltenGame());
  std::mt19937_64 rng(3);
  ProfileFile p;
  p.gamma = testing::RandomPlan(space, rng);
  p.t = 0.25;
  p.nu = Eigen::VectorXd::LinSpaced(space.num_infoset_slots(), -1.0, 1.0);
  p.anchor = testing::RandomPlan(space, rng);
  const ProfileFile back = ParseProfile(space, SerializeProfile(space, p));
  EXPECT_EQ(back.gamma.plan, p.gamma.plan);
  EXPECT_EQ(back.t, p.t);
  EXPECT_EQ(*back.nu, *p.nu);
  EXPECT_EQ(back.anchor->plan, p.anchor->plan);
}

TEST(ProfileIo, Errors) {
  const SequenceSpace space = SequenceSpace::Compile(testing::SeltenGame());
  const std::string ok2 = R"("2": {"realization": [1, 0.5, 0.5]})";
  const std::string ok3 = R"("3": {"realization": [1, 0.5, 0.5]})";
  auto with_player1 = [&](const std::string& p1) {
    return R"({"players": {"1": )" + p1 + ", " + ok2 + ", " + ok3 + "}}";
  };
  EXPECT_NO_THROW(ParseProfile(space, with_player1(R"({"mixed": [0.5, 0.5, 0]})")));
  EXPECT_THROW(ParseProfile(space, "{"), ProfileError);
  EXPECT_THROW(ParseProfile(space, "[]"), ProfileError);
  EXPECT_THROW(ParseProfile(space, R"({"players": {}})"), ProfileError);
  EXPECT_THROW(ParseProfile(space, with_player1(R"({"mixed": [0.5, 0.5]})")), ProfileError);
  EXPECT_THROW(ParseProfile(space, with_player1(R"({"mixed": [1.5, -0.5, 0]})")), ProfileError);
  EXPECT_THROW(ParseProfile(space, with_player1(R"({"realization": [1, 0.5, 0.4, 0, 0]})")),
               ProfileError);
  EXPECT_THROW(ParseProfile(space, with_player1(R"({"behavior": {"I1": [1, 0]}})")),
               ProfileError);
  EXPECT_THROW(ParseProfile(space, with_player1(R"({"pure": [1]})")), ProfileError);
  EXPECT_THROW(ParseProfile(space, R"({"format": "v0", "players": {}})"), ProfileError);
  EXPECT_THROW(LoadProfile(space, "/nonexistent/profile.json"), ProfileError);
}

}  // namespace
}  // namespace qrepath
