#include "flreg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flreg/errors.hpp"
#include "flreg/grid.hpp"

namespace flreg::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // Trim plain ASCII whitespace; numeric CSVs here carry no quoting.
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, long line_no) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("cell '" + cell + "' is not numeric", line_no);
  return v;
}

std::vector<std::string> read_nonempty_lines(const std::string& path,
                                             std::vector<long>& line_numbers) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  long no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
    line_numbers.push_back(no);
  }
  return lines;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

RegularizedSample regularize(const RawObservationSet& raw, int p, int m) {
  if (raw.records.empty()) throw InvalidInput("no curves to regularize");
  if (raw.records.size() != raw.responses.size())
    throw InvalidInput("curve/response count mismatch");

  int max_pi = 0;
  int min_pi = std::numeric_limits<int>::max();
  for (const auto& rec : raw.records) {
    max_pi = std::max(max_pi, static_cast<int>(rec.size()));
    min_pi = std::min(min_pi, static_cast<int>(rec.size()));
  }
  if (min_pi < 2) throw InvalidInput("every curve needs at least 2 observation points");
  if (p <= max_pi)
    throw GridTooCoarse("target grid size p=" + std::to_string(p) +
                        " must exceed the largest per-curve count " +
                        std::to_string(max_pi));

  RegularizedSample out;
  out.min_points = min_pi;
  const Grid grid = build_grid(p);
  const int n = static_cast<int>(raw.records.size());
  out.sample.grid = grid;
  out.sample.x.resize(n, p);
  out.sample.y = Eigen::Map<const Eigen::VectorXd>(raw.responses.data(), n);
  out.extrapolated.assign(n, false);

  for (int i = 0; i < n; ++i) {
    auto rec = raw.records[i];
    std::sort(rec.begin(), rec.end());
    Eigen::VectorXd times(rec.size()), values(rec.size());
    for (std::size_t j = 0; j < rec.size(); ++j) {
      if (j > 0 && !(rec[j].first > rec[j - 1].first))
        throw InvalidInput("curve " + std::to_string(i) +
                           " has duplicate observation times");
      if (!(rec[j].first > 0.0 && rec[j].first < 1.0))
        throw InvalidInput("curve " + std::to_string(i) +
                           " has observation times outside (0,1)");
      times[j] = rec[j].first;
      values[j] = rec[j].second;
    }
    NaturalSplineBasis basis(times, m);
    SplineFunction s = basis.interpolate(values);
    for (int j = 0; j < p; ++j) out.sample.x(i, j) = s(grid.points[j]);
    out.extrapolated[i] =
        grid.points[0] < times[0] || grid.points[p - 1] > times[times.size() - 1];
  }
  return out;
}

LoadedCurves load_curves_csv(const std::string& path) {
  std::vector<long> line_no;
  std::vector<std::string> lines = read_nonempty_lines(path, line_no);
  if (lines.empty()) throw ParseError("file '" + path + "' has no content", 0);

  const std::vector<std::string> header = split_csv_line(lines[0]);
  if (header.empty()) throw ParseError("empty header", line_no[0]);

  const bool long_format = header.size() == 3 && header[0] == "curve_id" &&
                           header[1] == "time" && header[2] == "value";
  if (long_format) {
    RawObservationSet raw;
    std::vector<long> ids;
    for (std::size_t r = 1; r < lines.size(); ++r) {
      const auto cells = split_csv_line(lines[r]);
      if (cells.size() != 3)
        throw ParseError("long format expects 3 cells, got " +
                         std::to_string(cells.size()), line_no[r]);
      const long id = static_cast<long>(parse_cell(cells[0], line_no[r]));
      auto it = std::find(ids.begin(), ids.end(), id);
      std::size_t idx;
      if (it == ids.end()) {
        ids.push_back(id);
        raw.records.emplace_back();
        idx = raw.records.size() - 1;
      } else {
        idx = static_cast<std::size_t>(it - ids.begin());
      }
      raw.records[idx].emplace_back(parse_cell(cells[1], line_no[r]),
                                    parse_cell(cells[2], line_no[r]));
    }
    if (raw.records.empty()) throw ParseError("long-format file has no observations", line_no[0]);
    return raw;
  }

  // Wide format: t_1..t_p columns, optionally followed by a final y column.
  const bool has_y = header.back() == "y";
  const int p = static_cast<int>(header.size()) - (has_y ? 1 : 0);
  if (p < 1)
    throw ParseError("wide format needs at least one curve column", line_no[0]);
  for (int c = 0; c < p; ++c)
    if (header[c].rfind("t_", 0) != 0)
      throw ParseError("wide-format curve columns must be named t_<j>, got '" +
                       header[c] + "'", line_no[0]);
  const int n = static_cast<int>(lines.size()) - 1;
  if (n < 1) throw ParseError("wide-format file has a header but no curves", line_no[0]);

  FunctionalSample sample;
  sample.grid = build_grid(p);
  sample.x.resize(n, p);
  sample.y.resize(has_y ? n : 0);
  const int cells_expected = p + (has_y ? 1 : 0);
  for (int i = 0; i < n; ++i) {
    const auto cells = split_csv_line(lines[i + 1]);
    if (static_cast<int>(cells.size()) != cells_expected)
      throw ParseError("expected " + std::to_string(cells_expected) + " cells, got " +
                       std::to_string(cells.size()), line_no[i + 1]);
    for (int j = 0; j < p; ++j) sample.x(i, j) = parse_cell(cells[j], line_no[i + 1]);
    if (has_y) sample.y[i] = parse_cell(cells[p], line_no[i + 1]);
  }
  return sample;
}

void load_responses_csv(const std::string& path, RawObservationSet& raw) {
  std::vector<long> line_no;
  std::vector<std::string> lines = read_nonempty_lines(path, line_no);
  if (lines.empty()) throw ParseError("responses file '" + path + "' has no content", 0);
  const auto header = split_csv_line(lines[0]);
  if (header.size() != 2 || header[0] != "curve_id" || header[1] != "y")
    throw ParseError("responses file needs header curve_id,y", line_no[0]);
  if (lines.size() - 1 != raw.records.size())
    throw ParseError("responses file has " + std::to_string(lines.size() - 1) +
                     " rows for " + std::to_string(raw.records.size()) + " curves",
                     line_no[0]);
  raw.responses.resize(raw.records.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    if (cells.size() != 2) throw ParseError("responses rows need 2 cells", line_no[r]);
    const long id = static_cast<long>(parse_cell(cells[0], line_no[r]));
    if (id < 0 || id >= static_cast<long>(raw.records.size()))
      throw ParseError("curve_id " + std::to_string(id) + " out of range", line_no[r]);
    raw.responses[id] = parse_cell(cells[1], line_no[r]);
  }
}

void save_curves_csv(const std::string& path, const FunctionalSample& sample) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (int j = 0; j < sample.grid.p; ++j) out << "t_" << (j + 1) << ',';
  out << "y\n";
  for (int i = 0; i < sample.n(); ++i) {
    for (int j = 0; j < sample.grid.p; ++j) out << format_double(sample.x(i, j)) << ',';
    out << format_double(sample.y[i]) << '\n';
  }
}

void save_model(const std::string& path, const ModelFile& file) {
  nlohmann::json j;
  j["format_version"] = file.format_version;
  j["m"] = file.model.m;
  j["rho"] = file.model.rho;
  j["p"] = static_cast<int>(file.model.alpha_hat.size());
  j["alpha_hat"] = std::vector<double>(file.model.alpha_hat.begin(),
                                       file.model.alpha_hat.end());
  j["alpha0_hat"] = file.model.alpha0_hat;
  j["x_mean"] = std::vector<double>(file.model.x_mean.begin(), file.model.x_mean.end());
  j["y_mean"] = file.model.y_mean;
  j["sigma_eps_hat_sq"] = file.model.sigma_eps_hat_sq;
  if (file.model.degenerate_design) j["degenerate_design"] = true;
  if (file.sigma_delta_hat_sq) j["sigma_delta_hat_sq"] = *file.sigma_delta_hat_sq;
  if (file.corrected) j["corrected"] = *file.corrected;

  nlohmann::json prov = nlohmann::json::object();
  if (file.provenance.gcv) {
    prov["gcv"] = {{"rho", file.provenance.gcv->rho_grid},
                   {"score", file.provenance.gcv->scores},
                   {"trace", file.provenance.gcv->traces},
                   {"best_rho", file.provenance.gcv->best_rho},
                   {"best_m", file.provenance.gcv->best_m}};
  }
  if (file.provenance.seed) prov["seed"] = *file.provenance.seed;
  if (!file.provenance.input_digest.empty())
    prov["input_digest"] = file.provenance.input_digest;
  if (!file.provenance.warnings.empty()) prov["warnings"] = file.provenance.warnings;
  if (!prov.empty()) j["provenance"] = prov;

  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what(), 0);
  }

  ModelFile file;
  try {
    file.format_version = j.at("format_version").get<int>();
    if (file.format_version != kModelFormatVersion)
      throw UnsupportedVersion("model format_version " +
                               std::to_string(file.format_version) +
                               " is not supported (expected " +
                               std::to_string(kModelFormatVersion) + ")");
    file.model.m = j.at("m").get<int>();
    file.model.rho = j.at("rho").get<double>();
    const int p = j.at("p").get<int>();
    const auto alpha = j.at("alpha_hat").get<std::vector<double>>();
    const auto xmean = j.at("x_mean").get<std::vector<double>>();
    if (static_cast<int>(alpha.size()) != p || static_cast<int>(xmean.size()) != p)
      throw ParseError("alpha_hat/x_mean length does not match p", 0);
    file.model.alpha_hat = Eigen::Map<const Eigen::VectorXd>(alpha.data(), p);
    file.model.x_mean = Eigen::Map<const Eigen::VectorXd>(xmean.data(), p);
    file.model.alpha0_hat = j.at("alpha0_hat").get<double>();
    file.model.y_mean = j.at("y_mean").get<double>();
    file.model.sigma_eps_hat_sq = j.at("sigma_eps_hat_sq").get<double>();
    file.model.degenerate_design = j.value("degenerate_design", false);
    if (j.contains("sigma_delta_hat_sq"))
      file.sigma_delta_hat_sq = j["sigma_delta_hat_sq"].get<double>();
    if (j.contains("corrected")) file.corrected = j["corrected"].get<bool>();
    if (j.contains("provenance")) {
      const auto& prov = j["provenance"];
      if (prov.contains("seed")) file.provenance.seed = prov["seed"].get<std::uint64_t>();
      if (prov.contains("input_digest"))
        file.provenance.input_digest = prov["input_digest"].get<std::string>();
      if (prov.contains("warnings"))
        file.provenance.warnings = prov["warnings"].get<std::vector<std::string>>();
      if (prov.contains("gcv")) {
        GCVResult gcv;
        gcv.rho_grid = prov["gcv"].at("rho").get<std::vector<double>>();
        gcv.scores = prov["gcv"].at("score").get<std::vector<double>>();
        gcv.traces = prov["gcv"].at("trace").get<std::vector<double>>();
        gcv.best_rho = prov["gcv"].at("best_rho").get<double>();
        gcv.best_m = prov["gcv"].at("best_m").get<int>();
        file.provenance.gcv = std::move(gcv);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file is missing fields: ") + e.what(), 0);
  }

  // Rebuild the off-grid spline representation.
  const Grid grid = build_grid(static_cast<int>(file.model.alpha_hat.size()));
  NaturalSplineBasis basis(grid.points, file.model.m);
  file.model.spline = basis.interpolate(file.model.alpha_hat);
  return file;
}

}  // namespace flreg::io
