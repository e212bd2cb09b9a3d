#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "priu/dataset.hpp"

namespace priu {

enum class DataFormat { kCsv, kLibsvm };

DataFormat parse_data_format(const std::string& text);
// Guesses from the extension: .csv is CSV, everything else LIBSVM.
DataFormat guess_data_format(const std::filesystem::path& path);

struct IngestOptions {
  ModelKind kind = ModelKind::kLinear;
  // CSV only: label column, negative counts from the end (-1 is the last column).
  int label_column = -1;
  // LIBSVM only: feature count; zero uses the largest index seen.
  Index num_features = 0;
  // Dense: z-score every column. Sparse: scale columns to unit RMS (no centering).
  bool standardize = false;
};

/// Parses a CSV (dense) or LIBSVM (sparse) file. Binary labels with two distinct
/// values are mapped smaller -> -1, larger -> +1; multinomial labels are mapped to
/// 0..q-1 in ascending order. Errors carry the offending line number.
TrainingDataset ingest(const std::filesystem::path& path, DataFormat format, const IngestOptions& options);
TrainingDataset ingest_text(const std::string& text, DataFormat format, const IngestOptions& options);

struct InjectedErrors {
  TrainingDataset dirty;
  std::vector<Index> rows;  // ascending
};

/// Rescales ceil(rate * n) uniformly chosen rows by `factor`.
InjectedErrors inject_errors(const TrainingDataset& ds, double rate, double factor, std::uint64_t seed);

/// `count` distinct rows drawn uniformly (seeded), ascending.
std::vector<Index> sample_rows(Index n, Index count, std::uint64_t seed);

/// Rows for a deletion rate: ceil(rate * n) distinct rows (seeded), ascending.
std::vector<Index> sample_rate(Index n, double rate, std::uint64_t seed);

struct Split {
  TrainingDataset train;
  TrainingDataset validation;
};

/// Seeded shuffle split; `train_fraction` of the rows (rounded down, at least one
/// on each side) go to training.
Split split_dataset(const TrainingDataset& ds, double train_fraction, std::uint64_t seed);

/// Writes the dataset in the given format (labels first for LIBSVM, last for CSV).
void write_dataset(const TrainingDataset& ds, const std::filesystem::path& path, DataFormat format);

}  // namespace priu
