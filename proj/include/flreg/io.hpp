#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "flreg/eiv.hpp"
#include "flreg/estimator.hpp"
#include "flreg/model_selection.hpp"

namespace flreg::io {

// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double v);

// FNV-1a 64 digest of a file's bytes, "fnv1a64:<hex>".
std::string file_digest(const std::string& path);

// Irregular observations: per-curve (time, value) pairs and responses.
struct RawObservationSet {
  std::vector<std::vector<std::pair<double, double>>> records;
  std::vector<double> responses;
};

struct RegularizedSample {
  FunctionalSample sample;
  std::vector<bool> extrapolated;  // grid point outside the curve's observed span
  int min_points = 0;
};

// Interpolate each curve by a natural spline on its own observation times and
// evaluate on the equidistant grid of size p. Requires p > max_i p_i.
RegularizedSample regularize(const RawObservationSet& raw, int p, int m);

// Wide CSV (header t_1..t_p,y; one row per curve) -> FunctionalSample.
// Long CSV (header curve_id,time,value) -> RawObservationSet with empty
// responses; attach them from a separate file with load_responses_csv.
using LoadedCurves = std::variant<FunctionalSample, RawObservationSet>;
LoadedCurves load_curves_csv(const std::string& path);

// Responses file for the long format: header curve_id,y.
void load_responses_csv(const std::string& path, RawObservationSet& raw);

void save_curves_csv(const std::string& path, const FunctionalSample& sample);

struct ModelProvenance {
  std::optional<GCVResult> gcv;
  std::optional<std::uint64_t> seed;
  std::string input_digest;
  std::vector<std::string> warnings;
};

struct ModelFile {
  int format_version = 1;
  FittedModel model;
  std::optional<double> sigma_delta_hat_sq;
  std::optional<bool> corrected;
  ModelProvenance provenance;
};

inline constexpr int kModelFormatVersion = 1;

void save_model(const std::string& path, const ModelFile& file);
ModelFile load_model(const std::string& path);

}  // namespace flreg::io
