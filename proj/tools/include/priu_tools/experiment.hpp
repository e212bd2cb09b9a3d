#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "priu/capture.hpp"
#include "priu/ingest.hpp"
#include "priu/synthetic.hpp"
#include "priu_tools/json_text.hpp"

namespace priu::tools {

inline constexpr int kReportSchema = 1;

struct DatasetSource {
  // Either a file ...
  std::filesystem::path path;
  DataFormat format = DataFormat::kCsv;
  int label_column = -1;
  bool standardize = false;
  // ... or a synthetic generator when `synthetic` is set.
  std::optional<SyntheticOptions> synthetic;
};

struct ExperimentConfig {
  DatasetSource dataset;
  ModelKind kind = ModelKind::kLinear;
  double split = 0.9;
  std::uint64_t split_seed = 1;
  Hyperparams hp;              // eta <= 0 picks 0.9 / L
  std::vector<double> rates{0.0001, 0.001, 0.01, 0.1, 0.2};
  std::vector<std::string> methods{"priu", "basel"};
  double error_factor = 10.0;
  std::uint64_t error_seed = 7;
  CacheMode cache_mode = CacheMode::kDenseFull;
  double epsilon = 0.01;
  std::optional<double> early_stop;  // fraction of tau; defaults to 0.7 when priu-opt runs
  Index repeat_count = 0;            // repeated-removal scenario; 0 disables
  double repeat_rate = 0.001;
  std::filesystem::path output = "report.jsonl";
  std::filesystem::path summary;     // CSV; defaults to output with .csv
};

/// Parses a JSON config; unknown keys are rejected.
ExperimentConfig parse_experiment_config(const Json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

TrainingDataset load_dataset(const DatasetSource& source, ModelKind kind);

bool is_known_method(const std::string& method);

/// Runs every (rate, method) cell and writes the JSON-lines report and the CSV
/// summary. Per-cell failures are recorded in the cell's "error" field.
std::vector<Json> run_sweep(const ExperimentConfig& config);

/// Writes the records as JSON lines plus the CSV summary.
void write_report(const std::vector<Json>& records, const std::filesystem::path& jsonl,
                  const std::filesystem::path& csv);

std::vector<Json> read_report(const std::filesystem::path& jsonl);

/// Static SVG of update time against deletion rate, one series per method.
std::string render_time_plot(const std::vector<Json>& records);
/// Markdown table of the per-cell metrics.
std::string render_table(const std::vector<Json>& records);
/// Writes update_time.svg and summary.md into `dir`.
void render_report(const std::vector<Json>& records, const std::filesystem::path& dir);

/// Resident set size in bytes from /proc (approximate; 0 when unavailable).
std::size_t resident_bytes();

}  // namespace priu::tools
