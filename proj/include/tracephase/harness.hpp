#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracephase/numberfield.hpp"

namespace tracephase {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Canonical text output
// ---------------------------------------------------------------------------

// Shortest round-trip decimal form, locale independent ('.' always), so that
// equal doubles render as equal bytes on every platform.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Header line plus rows, comma separated, LF line endings, no trailing blank
// line beyond the final LF.  Cells must already be rendered.
std::string render_csv(const CsvTable& t);

void write_text_file(const std::string& path, const std::string& content);

// FNV-1a over the bytes, rendered as 16 hex digits; used for input hashes in
// run manifests.
std::string content_hash(const std::string& bytes);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string experiment;
  bool has_field = false;
  FieldSpec field;
  std::string field_id;  // label used in artifacts and fixture keys
  std::uint64_t seed = 42;
  int threads = 1;
  double tol = 1e-6;
  std::string out_dir;      // empty: no files written
  std::string pinned_path;  // empty: skip fixture comparison
  nlohmann::json params;    // experiment-specific knobs
};

// {"minpoly": ["-2","0","1"], "basis": [["1","0"],["0","1"]]}; basis optional.
FieldSpec parse_field_spec(const nlohmann::json& j);

// Full config document; unknown experiment names, missing required fields, or
// out-of-range tolerances throw ConfigInvalid.
ExperimentConfig parse_config(const nlohmann::json& j);

std::vector<std::string> experiment_names();

// ---------------------------------------------------------------------------
// Pinned empirical constants
// ---------------------------------------------------------------------------

struct PinnedKey {
  std::string experiment;
  std::string field_id;
  int d = 0;  // field degree
  int n = 0;  // number of variables / polynomial degree knob
};

class PinnedConstants {
 public:
  static PinnedConstants load(const std::string& path);  // missing file: empty
  void save(const std::string& path) const;

  std::optional<std::map<std::string, double>> find(const PinnedKey& key) const;
  void set(const PinnedKey& key, const std::map<std::string, double>& values,
           const std::string& timestamp);

  // Throws ExperimentFailed naming the first constant that drifted more than
  // 25% from its pinned value; absent keys or constants pass silently.
  void check(const PinnedKey& key, const std::map<std::string, double>& measured) const;

  const nlohmann::json& doc() const { return doc_; }

 private:
  nlohmann::json doc_ = nlohmann::json::object();
};

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

struct RunResult {
  std::string csv;             // canonical table bytes
  nlohmann::json summary;      // experiment summary, includes "constants" when
                               // the experiment produces pinnable values
  nlohmann::json manifest;     // inputs hash, seed, version, artifact list
  std::vector<std::string> artifacts;  // files written (empty when out_dir empty)
};

// Executes the configured experiment, enforces its invariants (first failure
// throws ExperimentFailed with the assertion named), compares pinnable
// constants against the fixture when configured, and persists CSV + JSON
// mirror + manifest under out_dir.  Identical (config, seed) gives
// byte-identical CSV regardless of the threads setting.
RunResult run(const ExperimentConfig& cfg);

// Calibration: runs cfg's target experiment twice under derived seeds,
// requires every pinnable constant to agree within 10% (CalibrationUnstable
// otherwise), and records the first run's values in the fixture file.
RunResult pin_constants(const ExperimentConfig& cfg);

}  // namespace tracephase
