#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "xtrem/model.hpp"
#include "xtrem/simulate.hpp"
#include "xtrem/types.hpp"

namespace xtrem {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;
inline constexpr int kSignificantDigits = 12;

using Json = nlohmann::ordered_json;

/// Reads `study,events,size` CSV (extra columns ignored, blank lines and
/// '#' comments skipped). The dataset label is the file stem.
Dataset read_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::istream& in, const std::string& label);

std::string sha256_hex(std::string_view bytes);
std::string file_checksum(const std::filesystem::path& path);

/// Rounds to `digits` significant decimal digits.
double round_significant(double value, int digits = kSignificantDigits);

/// Metadata recorded next to every serialized result.
struct Provenance {
    std::string input_checksum;
    std::string threshold_spec;
    std::optional<std::string> rng;
    std::optional<std::uint64_t> seed;
};

Json to_json(const Segmentation& seg);
Json to_json(const FitResult& fit);
Json to_json(const ComparisonReport& report);
Json to_json(const SimMetrics& metrics);
Json to_json(const SimScenario& scenario);
/// Scenario and both metric blocks; per-replication rows go to CSV.
Json to_json(const MonteCarloResult& result);

Segmentation segmentation_from_json(const Json& j);
FitResult fit_result_from_json(const Json& j);
ComparisonReport comparison_from_json(const Json& j);
SimMetrics sim_metrics_from_json(const Json& j);
/// Fields missing from `j` keep the values of `base`.
SimScenario scenario_from_json(const Json& j, const SimScenario& base = {});
MonteCarloResult monte_carlo_from_json(const Json& j);

void write_result(const FitResult& fit, const std::filesystem::path& path,
                  const Provenance& provenance = {});
void write_result(const ComparisonReport& report, const std::filesystem::path& path,
                  const Provenance& provenance = {});
void write_result(const MonteCarloResult& result, const std::filesystem::path& path,
                  const Provenance& provenance = {});

/// Reads a document written by write_result; throws IoError when the file
/// is missing or its schema version is unknown.
Json read_result_document(const std::filesystem::path& path);

/// Per-replication table as CSV.
void write_replications_csv(const MonteCarloResult& result, const std::filesystem::path& path);

} // namespace xtrem
