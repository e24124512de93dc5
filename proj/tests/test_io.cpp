#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "flreg/errors.hpp"
#include "flreg/io.hpp"
#include "flreg/prediction.hpp"
#include "flreg/synthetic.hpp"

using namespace flreg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("flreg_io_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 200; ++i) {
    const double v = normal(rng) * std::pow(10.0, int(rng() % 17) - 8);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.25) == "0.25");
}

TEST_CASE("wide CSV loads as a functional sample") {
  TempDir dir;
  const std::string path = dir.file("wide.csv");
  write_file(path, "t_1,t_2,t_3,y\n1,2,3,10\n4,5,6,20\n");
  auto loaded = io::load_curves_csv(path);
  REQUIRE(std::holds_alternative<FunctionalSample>(loaded));
  const auto& s = std::get<FunctionalSample>(loaded);
  CHECK(s.n() == 2);
  CHECK(s.grid.p == 3);
  CHECK(s.x(1, 2) == 6.0);
  CHECK(s.y[1] == 20.0);
}

TEST_CASE("CSV parse failures carry line numbers") {
  TempDir dir;

  SUBCASE("empty file") {
    const std::string path = dir.file("empty.csv");
    write_file(path, "");
    CHECK_THROWS_AS(io::load_curves_csv(path), ParseError);
  }

  SUBCASE("ragged row") {
    const std::string path = dir.file("ragged.csv");
    write_file(path, "t_1,t_2,y\n1,2,3\n1,2\n");
    try {
      io::load_curves_csv(path);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line == 3);
    }
  }

  SUBCASE("non-numeric cell") {
    const std::string path = dir.file("nan.csv");
    write_file(path, "t_1,y\n1,2\nfoo,3\n");
    try {
      io::load_curves_csv(path);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line == 3);
    }
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(io::load_curves_csv(dir.file("nope.csv")), IoError);
  }
}

TEST_CASE("long CSV yields raw observations with per-curve counts") {
  TempDir dir;
  const std::string path = dir.file("long.csv");
  std::string content = "curve_id,time,value\n";
  const int counts[3] = {4, 5, 6};
  for (int id = 0; id < 3; ++id)
    for (int k = 0; k < counts[id]; ++k)
      content += std::to_string(id) + "," +
                 std::to_string(0.1 + 0.8 * k / (counts[id] - 1)) + "," +
                 std::to_string(id + k * 0.5) + "\n";
  write_file(path, content);

  auto loaded = io::load_curves_csv(path);
  REQUIRE(std::holds_alternative<io::RawObservationSet>(loaded));
  auto raw = std::get<io::RawObservationSet>(loaded);
  REQUIRE(raw.records.size() == 3);
  for (int id = 0; id < 3; ++id)
    CHECK(static_cast<int>(raw.records[id].size()) == counts[id]);

  const std::string rpath = dir.file("responses.csv");
  write_file(rpath, "curve_id,y\n0,1.5\n1,2.5\n2,3.5\n");
  io::load_responses_csv(rpath, raw);
  CHECK(raw.responses == std::vector<double>{1.5, 2.5, 3.5});
}

TEST_CASE("regularize: interpolation onto the equidistant grid") {
  SUBCASE("observations at target grid points are reproduced") {
    const Grid grid = build_grid(16);
    io::RawObservationSet raw;
    raw.records.emplace_back();
    for (int k : {1, 4, 7, 10, 14})
      raw.records[0].emplace_back(grid.points[k], std::sin(2.0 * M_PI * grid.points[k]));
    raw.responses = {1.0};
    io::RegularizedSample reg = io::regularize(raw, 16, 2);
    for (int pos = 0; pos < 5; ++pos) {
      const int k = std::vector<int>{1, 4, 7, 10, 14}[pos];
      CHECK(std::abs(reg.sample.x(0, k) - raw.records[0][pos].second) <= 1e-9);
    }
    CHECK(reg.sample.y[0] == 1.0);
    CHECK(reg.min_points == 5);
    CHECK(reg.extrapolated[0]);  // grid extends beyond the observed span
  }

  SUBCASE("affine curves are recovered everywhere") {
    io::RawObservationSet raw;
    raw.records.push_back({{0.21, 1.42}, {0.55, 2.10}, {0.83, 2.66}});
    raw.responses = {0.0};
    io::RegularizedSample reg = io::regularize(raw, 8, 2);
    const Grid grid = build_grid(8);
    const double slope = (2.66 - 1.42) / (0.83 - 0.21);
    for (int j = 0; j < 8; ++j) {
      const double expected = 1.42 + slope * (grid.points[j] - 0.21);
      CHECK(reg.sample.x(0, j) == doctest::Approx(expected).epsilon(1e-9));
    }
  }

  SUBCASE("sin curve from 30 random points is recovered to 1e-3") {
    // One uniform point per stratum keeps the gaps bounded; interpolation
    // accuracy is asserted inside the observed span, and the grid points
    // beyond it must carry the extrapolation flag and follow the natural
    // spline's linear extension.
    std::mt19937_64 rng(314);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    io::RawObservationSet raw;
    raw.records.emplace_back();
    std::vector<double> times;
    for (int k = 0; k < 30; ++k) times.push_back((k + unif(rng)) / 30.0 * 0.998 + 0.001);
    std::sort(times.begin(), times.end());
    for (double t : times) raw.records[0].emplace_back(t, std::sin(2.0 * M_PI * t));
    raw.responses = {0.5};
    io::RegularizedSample reg = io::regularize(raw, 64, 2);
    const Grid grid = build_grid(64);
    double worst = 0.0;
    for (int j = 0; j < 64; ++j) {
      if (grid.points[j] < times.front() || grid.points[j] > times.back()) continue;
      worst = std::max(worst,
                       std::abs(reg.sample.x(0, j) - std::sin(2.0 * M_PI * grid.points[j])));
    }
    CHECK(worst <= 1e-3);
    CHECK(reg.extrapolated[0] ==
          (grid.points[0] < times.front() || grid.points[63] > times.back()));
  }

  SUBCASE("grid size must exceed every per-curve count") {
    io::RawObservationSet raw;
    raw.records.push_back({{0.1, 1.0}, {0.3, 2.0}, {0.5, 1.0}, {0.9, 0.0}});
    raw.responses = {0.0};
    CHECK_THROWS_AS(io::regularize(raw, 4, 2), GridTooCoarse);
    CHECK_THROWS_AS(io::regularize(raw, 3, 2), GridTooCoarse);
  }

  SUBCASE("duplicate observation times are invalid") {
    io::RawObservationSet raw;
    raw.records.push_back({{0.2, 1.0}, {0.2, 2.0}, {0.5, 1.0}});
    raw.responses = {0.0};
    CHECK_THROWS_AS(io::regularize(raw, 8, 2), InvalidInput);
  }

  SUBCASE("curves with a single point are invalid") {
    io::RawObservationSet raw;
    raw.records.push_back({{0.4, 1.0}});
    raw.responses = {0.0};
    CHECK_THROWS_AS(io::regularize(raw, 8, 2), InvalidInput);
  }
}

namespace {

io::ModelFile fitted_fixture(std::uint64_t seed) {
  ProcessSpec spec;
  spec.kind = ProcessKind::brownian;
  spec.seed = seed;
  const Grid grid = build_grid(12);
  CurveSet curves = generate_curves(spec, 20, grid);
  FunctionalSample s;
  s.grid = grid;
  s.x = curves.x;
  s.y = generate_responses(curves.x_fine, curves.fine_grid, default_alpha, 1.0, 0.3,
                           seed + 1);
  const PenaltyOperator op = build_penalty(grid, 2);
  io::ModelFile file;
  file.model = fit(s, op, 0.02);
  return file;
}

}  // namespace

TEST_CASE("model files round-trip predictions bitwise") {
  TempDir dir;
  io::ModelFile file = fitted_fixture(606);
  file.provenance.input_digest = "fnv1a64:0123456789abcdef";
  const std::string path = dir.file("model.json");
  io::save_model(path, file);
  io::ModelFile loaded = io::load_model(path);

  CHECK(loaded.model.m == file.model.m);
  CHECK(loaded.model.rho == file.model.rho);
  CHECK(loaded.model.alpha_hat == file.model.alpha_hat);
  CHECK(loaded.model.x_mean == file.model.x_mean);
  CHECK(loaded.model.alpha0_hat == file.model.alpha0_hat);
  CHECK(loaded.provenance.input_digest == "fnv1a64:0123456789abcdef");

  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd x(12);
    for (int j = 0; j < 12; ++j) x[j] = normal(rng);
    CHECK(predict(loaded.model, x) == predict(file.model, x));  // bitwise
  }
}

TEST_CASE("model files keep the EIV fields") {
  TempDir dir;
  io::ModelFile file = fitted_fixture(707);
  file.sigma_delta_hat_sq = 0.031;
  file.corrected = true;
  const std::string path = dir.file("model.json");
  io::save_model(path, file);
  io::ModelFile loaded = io::load_model(path);
  REQUIRE(loaded.sigma_delta_hat_sq.has_value());
  CHECK(*loaded.sigma_delta_hat_sq == 0.031);
  REQUIRE(loaded.corrected.has_value());
  CHECK(*loaded.corrected);
}

TEST_CASE("model file failure modes") {
  TempDir dir;

  SUBCASE("truncated JSON") {
    const std::string path = dir.file("trunc.json");
    io::ModelFile file = fitted_fixture(808);
    io::save_model(path, file);
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), {});
    write_file(path, content.substr(0, content.size() / 2));
    CHECK_THROWS_AS(io::load_model(path), ParseError);
  }

  SUBCASE("unsupported format version") {
    const std::string path = dir.file("vers.json");
    write_file(path, "{\"format_version\": 99}");
    CHECK_THROWS_AS(io::load_model(path), UnsupportedVersion);
  }

  SUBCASE("missing fields") {
    const std::string path = dir.file("missing.json");
    write_file(path, "{\"format_version\": 1, \"m\": 2}");
    CHECK_THROWS_AS(io::load_model(path), ParseError);
  }
}

TEST_CASE("file digest is stable and content-sensitive") {
  TempDir dir;
  const std::string a = dir.file("a.txt");
  const std::string b = dir.file("b.txt");
  write_file(a, "hello");
  write_file(b, "hello");
  CHECK(io::file_digest(a) == io::file_digest(b));
  write_file(b, "hellp");
  CHECK(io::file_digest(a) != io::file_digest(b));
  CHECK(io::file_digest(a).rfind("fnv1a64:", 0) == 0);
}
