#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "hho/errors.hpp"
#include "hho/harness.hpp"
#include "test_support.hpp"

using namespace hho;

namespace {

  ConvergenceRecord record(const std::string& family, int k, double h, double error, int iters = 3) {
    return {family, k, h, error, std::nullopt, iters};
  }

  std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("hho_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    return dir;
  }

  void expect_kind(ErrorKind kind, const auto& fn) {
    try {
      fn();
      ADD_FAILURE() << "no exception";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), kind) << e.what();
    }
  }

} // namespace

TEST(ConvergenceRate, WorkedExamples) {
  const auto r = convergence_rate({record("cartesian", 1, 0.1, 0.1), record("cartesian", 1, 0.05, 0.025)});
  EXPECT_FALSE(r[0].rate.has_value());
  EXPECT_NEAR(*r[1].rate, 2.0, 1e-12);

  // last two Cartesian k=3 rows of the reference table; four printed digits leave ~1e-3 slack
  const auto t = convergence_rate({record("cartesian", 3, 0.015625, 0.2857e-6), record("cartesian", 3, 0.0078125, 0.1669e-7)});
  EXPECT_NEAR(*t[1].rate, 4.098, 2e-3);
}

TEST(ConvergenceRate, RunsAreIndependent) {
  const auto r = convergence_rate({record("cartesian", 1, 0.1, 0.1), record("cartesian", 1, 0.05, 0.025),
                                   record("cartesian", 2, 0.1, 0.01), record("cartesian", 2, 0.05, 0.00125)});
  EXPECT_FALSE(r[2].rate.has_value());
  EXPECT_NEAR(*r[3].rate, 3.0, 1e-12);
}

TEST(ConvergenceRate, InvalidSequences) {
  expect_kind(ErrorKind::InvalidSequence,
              [] { convergence_rate({record("cartesian", 1, 0.1, 0.1), record("cartesian", 1, 0.1, 0.05)}); });
  expect_kind(ErrorKind::InvalidSequence, [] { convergence_rate({record("cartesian", 1, 0.1, 0.1)}); });
  expect_kind(ErrorKind::InvalidSequence, [] {
    convergence_rate({record("cartesian", 1, 0.1, 0.1), record("cartesian", 1, 0.05, 0.02), record("cartesian", 2, 0.1, 0.1)});
  });
}

TEST(GradientError, AffineInterpolantIsExact) {
  const VectorField grad = [](const Vector2&) { return Vector2(2., -3.); };
  const ScalarField u = [](const Vector2& x) { return 1. + 2. * x.x() - 3. * x.y(); };
  for (const auto& family : test::families()) {
    const auto mesh = test::family_mesh(family, 1);
    for (int k = 1; k <= 3; ++k) {
      const HhoSpace space(mesh, k);
      EXPECT_LE(gradient_error(space, interpolate(space, u), grad), 1e-12) << family << " k=" << k;
    }
  }
}

TEST(GradientError, MatchesExplicitValue) {
  // uh = 0: the relative error is exactly 1
  const auto mesh = generate_cartesian(4);
  const HhoSpace space(mesh, 1);
  const VectorField grad = [](const Vector2& x) { return Vector2(std::cos(x.x()), x.y()); };
  EXPECT_NEAR(gradient_error(space, space.zero(), grad), 1., 1e-14);
}

TEST(GradientError, DegenerateExactSolution) {
  const auto mesh = generate_cartesian(4);
  const HhoSpace space(mesh, 1);
  expect_kind(ErrorKind::DegenerateExactSolution,
              [&] { gradient_error(space, space.zero(), [](const Vector2&) { return Vector2(0., 0.); }); });
}

TEST(StudyConfig, Validation) {
  StudyConfig c;
  c.levels = {{4, {}}, {8, {}}};
  EXPECT_NO_THROW(validate(c));

  auto single = c;
  single.levels = {{4, {}}};
  expect_kind(ErrorKind::ConfigError, [&] { validate(single); });
  auto bad_k = c;
  bad_k.degrees = {1, 4};
  expect_kind(ErrorKind::ConfigError, [&] { validate(bad_k); });
  bad_k.degrees = {-1};
  expect_kind(ErrorKind::ConfigError, [&] { validate(bad_k); });
  auto bad_family = c;
  bad_family.family = "voronoi";
  expect_kind(ErrorKind::ConfigError, [&] { validate(bad_family); });
  auto bad_problem = c;
  bad_problem.problem = "p-laplace";
  expect_kind(ErrorKind::ConfigError, [&] { validate(bad_problem); });
  auto bad_tol = c;
  bad_tol.tolerance = 0.;
  expect_kind(ErrorKind::ConfigError, [&] { validate(bad_tol); });
}

TEST(StudyConfig, JsonParsing) {
  const auto c = parse_study_config(
    R"({"problem": "poisson", "family": "kershaw", "levels": [1, 2, "custom.json"], "k": [0, 2],
        "tolerance": 1e-10, "max_iterations": 7, "threads": 2, "out": "results"})");
  EXPECT_EQ(c.problem, "poisson");
  EXPECT_EQ(c.family, "kershaw");
  ASSERT_EQ(c.levels.size(), 3u);
  EXPECT_EQ(c.levels[1].n, 2u);
  EXPECT_EQ(c.levels[2].path, "custom.json");
  EXPECT_EQ(c.degrees, (std::vector<int>{0, 2}));
  EXPECT_EQ(c.tolerance, 1e-10);
  EXPECT_EQ(c.max_iterations, 7);
  EXPECT_EQ(c.threads, 2u);
  EXPECT_EQ(c.out_dir, "results");

  expect_kind(ErrorKind::ConfigError, [] { parse_study_config(R"({"levels": [4]})"); });
  expect_kind(ErrorKind::ConfigError, [] { parse_study_config(R"({"levels": [4, 8], "colour": 1})"); });
  expect_kind(ErrorKind::ConfigError, [] { parse_study_config(R"({"levels": [4, -8]})"); });
  expect_kind(ErrorKind::ConfigError, [] { parse_study_config("{"); });
  expect_kind(ErrorKind::ConfigError, [] { load_study_config("/nonexistent/study.json"); });
}

TEST(Csv, SchemaAndRoundTrip) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unit(0.1, 1.);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ConvergenceRecord> records;
    for (int k = 0; k <= 3; ++k) {
      double h = unit(rng);
      for (int l = 0; l < 3; ++l, h /= 2.) records.push_back(record("triangular", k, h, std::pow(h, k + 1) * unit(rng), 1 + l));
    }
    records = convergence_rate(records);
    const std::string csv = to_csv(records);
    const auto parsed = parse_csv(csv);
    ASSERT_EQ(parsed.size(), records.size());
    EXPECT_EQ(to_csv(parsed), csv);
    for (std::size_t i = 0; i < records.size(); ++i) {
      EXPECT_EQ(parsed[i].family, records[i].family);
      EXPECT_EQ(parsed[i].k, records[i].k);
      EXPECT_EQ(parsed[i].newton_iterations, records[i].newton_iterations);
      EXPECT_NEAR(parsed[i].h, records[i].h, 1e-4 * records[i].h);
      EXPECT_NEAR(parsed[i].error, records[i].error, 1e-4 * records[i].error);
      ASSERT_EQ(parsed[i].rate.has_value(), records[i].rate.has_value());
      if (records[i].rate) EXPECT_NEAR(*parsed[i].rate, *records[i].rate, 1e-4 * std::abs(*records[i].rate));
    }
  }
}

TEST(Csv, ExactLayout) {
  const auto records = convergence_rate({record("cartesian", 1, 0.0625, 0.0615), record("cartesian", 1, 0.03125, 0.01529)});
  EXPECT_EQ(to_csv(records), "family,k,h,error,rate,newton_iters\n"
                             "cartesian,1,6.2500e-02,6.1500e-02,,3\n"
                             "cartesian,1,3.1250e-02,1.5290e-02,2.0080e+00,3\n");
}

TEST(Csv, MalformedInput) {
  expect_kind(ErrorKind::FormatError, [] { parse_csv("family,k,h\n"); });
  expect_kind(ErrorKind::FormatError, [] { parse_csv("family,k,h,error,rate,newton_iters\ncartesian,1,0.1\n"); });
  try {
    parse_csv("family,k,h,error,rate,newton_iters\ncartesian,1,0.1,0.2,,3\ncartesian,1,x,0.2,,3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(PlotOutput, BlocksAndScript) {
  const auto records = convergence_rate({record("hexagonal", 1, 0.1, 0.01), record("hexagonal", 1, 0.05, 0.0025),
                                         record("hexagonal", 2, 0.1, 0.001), record("hexagonal", 2, 0.05, 0.000125)});
  const std::string data = to_plot_data(records);
  EXPECT_NE(data.find("1.0000e-01 1.0000e-02\n5.0000e-02 2.5000e-03\n\n\n# hexagonal k=2"), std::string::npos) << data;
  const std::string script = to_gnuplot_script(records, "hexagonal.dat", "hexagonal.png");
  EXPECT_NE(script.find("set logscale xy"), std::string::npos);
  EXPECT_NE(script.find("index 0"), std::string::npos);
  EXPECT_NE(script.find("index 1"), std::string::npos);
  EXPECT_NE(script.find("title 'k=2'"), std::string::npos);
  EXPECT_EQ(script.find("index 2"), std::string::npos);
}

TEST(Study, SmallCartesianStudyWritesDeterministicFiles) {
  StudyConfig c;
  c.levels = {{4, {}}, {8, {}}, {16, {}}};
  c.degrees = {1, 2};
  c.out_dir = scratch_dir("study").string();
  const auto first = run_study(c);
  EXPECT_TRUE(first.diagnostics.empty());
  ASSERT_EQ(first.records.size(), 6u);
  for (const auto& r : first.records) {
    EXPECT_LE(r.newton_iterations, 4);
    if (r.rate) {
      EXPECT_GE(*r.rate, r.k + 0.7);
      EXPECT_LE(*r.rate, r.k + 1.4);
    }
  }
  EXPECT_EQ(first.records[0].h, 0.25);
  const auto dir = std::filesystem::path(c.out_dir);
  const std::string csv = read_text(dir / "cartesian.csv");
  EXPECT_EQ(csv, to_csv(first.records));
  EXPECT_EQ(read_text(dir / "cartesian.dat"), to_plot_data(first.records));
  EXPECT_NE(read_text(dir / "cartesian.gp").find("cartesian.dat"), std::string::npos);

  auto threaded = c;
  threaded.threads = 3;
  threaded.out_dir = (dir / "again").string();
  run_study(threaded);
  EXPECT_EQ(read_text(dir / "again" / "cartesian.csv"), csv);
  std::filesystem::remove_all(dir);
}

TEST(Study, RateBandOnTriangularFromSecondRefinement) {
  StudyConfig c;
  c.family = "triangular";
  c.levels = {{4, {}}, {8, {}}, {16, {}}};
  const auto result = run_study(c);
  ASSERT_EQ(result.records.size(), 9u);
  for (const auto& r : result.records) {
    if (r.rate && r.h < 0.1) {
      EXPECT_GE(*r.rate, r.k + 0.7) << "k=" << r.k;
      EXPECT_LE(*r.rate, r.k + 1.4) << "k=" << r.k;
    }
  }
}

TEST(Study, FailingColumnIsReportedAndOthersKept) {
  StudyConfig c;
  c.levels = {{4, {}}, {8, {}}};
  c.degrees = {1, 2};
  c.max_iterations = 1;   // Newton needs three
  const auto result = run_study(c);
  EXPECT_TRUE(result.records.empty());
  ASSERT_EQ(result.diagnostics.size(), 2u);
  EXPECT_NE(result.diagnostics[0].find("cartesian k=1"), std::string::npos) << result.diagnostics[0];

  c.max_iterations = 25;
  c.problem = "poisson";
  const auto linear = run_study(c);
  EXPECT_TRUE(linear.diagnostics.empty());
  EXPECT_EQ(linear.records.size(), 4u);
}

TEST(Study, FileFamilyHonoursDataDirOverride) {
  const auto dir = scratch_dir("data");
  std::filesystem::create_directories(dir);
  for (int level : {1, 2}) {
    std::filesystem::copy_file(test::data_path("kershaw" + std::to_string(level) + ".json"),
                               dir / ("kershaw" + std::to_string(level) + ".json"));
  }
  ::setenv("HHO_DATA_DIR", dir.c_str(), 1);
  EXPECT_EQ(data_dir(), dir.string());
  EXPECT_EQ(family_file("kershaw", 2), (dir / "kershaw2.json").string());
  StudyConfig c;
  c.family = "kershaw";
  c.levels = {{1, {}}, {2, {}}};
  c.degrees = {1};
  const auto result = run_study(c);
  EXPECT_EQ(result.records.size(), 2u);

  c.levels = {{1, {}}, {3, {}}};
  expect_kind(ErrorKind::FormatError, [&] { run_study(c); });
  ::unsetenv("HHO_DATA_DIR");
  std::filesystem::remove_all(dir);
  EXPECT_NE(data_dir(), dir.string());
}

TEST(Study, ReportedMeshsize) {
  const auto cart = generate_cartesian(8);
  EXPECT_EQ(reported_meshsize("cartesian", {8, {}}, cart, compute_geometry(cart)), 0.125);
  const auto tri = generate_triangular(8);
  EXPECT_NEAR(reported_meshsize("triangular", {8, {}}, tri, compute_geometry(tri)), std::sqrt(2.) / 8., 1e-14);
}

TEST(Study, FormatTable) {
  const auto records = convergence_rate({record("cartesian", 1, 0.0625, 0.0615), record("cartesian", 1, 0.03125, 0.01529)});
  const std::string table = format_table(records);
  EXPECT_NE(table.find("k=1"), std::string::npos);
  EXPECT_NE(table.find("6.1500e-02"), std::string::npos);
  EXPECT_NE(table.find("2.008"), std::string::npos);
}
