#include "priu/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "priu/error.hpp"
#include "priu/random.hpp"

namespace priu {

DataFormat parse_data_format(const std::string& text) {
  if (text == "csv") return DataFormat::kCsv;
  if (text == "libsvm" || text == "svmlight") return DataFormat::kLibsvm;
  fail(ErrorCode::kConfig, "unknown data format '" + text + "' (expected csv or libsvm)");
}

DataFormat guess_data_format(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DataFormat::kCsv : DataFormat::kLibsvm;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  fail(ErrorCode::kData, "line " + std::to_string(line) + ": " + what);
}

// Maps raw labels onto the encoding the model kind expects.
Vector encode_labels(const std::vector<double>& raw, ModelKind kind, int& classes) {
  Vector y(static_cast<Eigen::Index>(raw.size()));
  classes = 0;
  if (kind == ModelKind::kLinear) {
    for (std::size_t i = 0; i < raw.size(); ++i) y[static_cast<Eigen::Index>(i)] = raw[i];
    return y;
  }
  std::map<double, int> ids;
  for (double v : raw) ids.emplace(v, 0);
  if (kind == ModelKind::kBinaryLogistic) {
    require(ids.size() == 2, ErrorCode::kData,
            "binary logistic regression needs exactly 2 distinct labels, found " + std::to_string(ids.size()));
    const double low = ids.begin()->first;
    for (std::size_t i = 0; i < raw.size(); ++i) y[static_cast<Eigen::Index>(i)] = raw[i] == low ? -1.0 : 1.0;
    return y;
  }
  require(ids.size() >= 2, ErrorCode::kData, "multinomial logistic regression needs at least 2 classes");
  int next = 0;
  for (auto& [value, id] : ids) id = next++;
  classes = next;
  for (std::size_t i = 0; i < raw.size(); ++i) y[static_cast<Eigen::Index>(i)] = ids[raw[i]];
  return y;
}

TrainingDataset parse_csv(const std::string& text, const IngestOptions& options) {
  std::vector<double> values;
  std::vector<double> labels;
  std::size_t cols = 0;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    fields.clear();
    std::size_t start = 0;
    while (true) {
      std::size_t comma = sv.find(',', start);
      fields.push_back(sv.substr(start, comma == std::string_view::npos ? sv.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    double probe;
    if (labels.empty() && cols == 0 && !parse_double(fields.front(), probe)) continue;  // header line
    if (cols == 0) {
      if (fields.size() < 2) parse_error(line_no, "need at least one feature and a label");
      cols = fields.size();
    } else if (fields.size() != cols) {
      parse_error(line_no, "expected " + std::to_string(cols) + " fields, found " + std::to_string(fields.size()));
    }
    const int lc = options.label_column < 0 ? static_cast<int>(cols) + options.label_column : options.label_column;
    if (lc < 0 || lc >= static_cast<int>(cols)) parse_error(line_no, "label column out of range");
    for (std::size_t c = 0; c < cols; ++c) {
      double v;
      if (!parse_double(fields[c], v) || !std::isfinite(v))
        parse_error(line_no, "field " + std::to_string(c + 1) + " is not a finite number");
      if (static_cast<int>(c) == lc)
        labels.push_back(v);
      else
        values.push_back(v);
    }
  }
  require(!labels.empty(), ErrorCode::kData, "no data rows found");
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  const Eigen::Index m = static_cast<Eigen::Index>(cols - 1);
  RowMatrix X = Eigen::Map<const RowMatrix>(values.data(), n, m);
  if (options.standardize) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double mean = X.col(j).mean();
      X.col(j).array() -= mean;
      const double sd = std::sqrt(X.col(j).squaredNorm() / n);
      if (sd > 0) X.col(j) /= sd;
    }
  }
  int q = 0;
  Vector y = encode_labels(labels, options.kind, q);
  return TrainingDataset::dense(std::move(X), std::move(y), options.kind, {}, q);
}

TrainingDataset parse_libsvm(const std::string& text, const IngestOptions& options) {
  std::vector<Eigen::Triplet<double, std::int64_t>> entries;
  std::vector<double> labels;
  std::int64_t max_index = 0;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (auto hash = sv.find('#'); hash != sv.npos) sv = trim(sv.substr(0, hash));
    if (sv.empty()) continue;
    std::size_t pos = sv.find_first_of(" \t");
    double label;
    if (!parse_double(sv.substr(0, pos), label) || !std::isfinite(label))
      parse_error(line_no, "label is not a finite number");
    const auto row = static_cast<std::int64_t>(labels.size());
    labels.push_back(label);
    std::int64_t last = 0;
    while (pos != sv.npos) {
      std::size_t begin = sv.find_first_not_of(" \t", pos);
      if (begin == sv.npos) break;
      std::size_t end = sv.find_first_of(" \t", begin);
      std::string_view tok = sv.substr(begin, end == sv.npos ? sv.npos : end - begin);
      pos = end;
      std::size_t colon = tok.find(':');
      if (colon == tok.npos) parse_error(line_no, "expected index:value, got '" + std::string(tok) + "'");
      std::int64_t index = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + colon, index);
      if (ec != std::errc() || ptr != tok.data() + colon || index < 1)
        parse_error(line_no, "feature index must be a positive integer");
      if (index <= last) parse_error(line_no, "feature indices must be strictly increasing");
      last = index;
      double value;
      if (!parse_double(tok.substr(colon + 1), value) || !std::isfinite(value))
        parse_error(line_no, "feature value is not a finite number");
      if (options.num_features && index > static_cast<std::int64_t>(options.num_features))
        parse_error(line_no, "feature index " + std::to_string(index) + " exceeds the declared " +
                                 std::to_string(options.num_features) + " features");
      max_index = std::max(max_index, index);
      if (value != 0.0) entries.emplace_back(row, index - 1, value);
    }
  }
  require(!labels.empty(), ErrorCode::kData, "no data rows found");
  const std::int64_t m = options.num_features ? options.num_features : std::max<std::int64_t>(max_index, 1);
  SparseRowMatrix X(static_cast<std::int64_t>(labels.size()), m);
  X.setFromTriplets(entries.begin(), entries.end());
  X.makeCompressed();
  if (options.standardize) {
    Vector sq = Vector::Zero(m);
    for (std::int64_t r = 0; r < X.outerSize(); ++r)
      for (SparseRowMatrix::InnerIterator it(X, r); it; ++it) sq[it.col()] += it.value() * it.value();
    const double n = static_cast<double>(labels.size());
    for (std::int64_t r = 0; r < X.outerSize(); ++r)
      for (SparseRowMatrix::InnerIterator it(X, r); it; ++it) it.valueRef() /= std::sqrt(sq[it.col()] / n);
  }
  int q = 0;
  Vector y = encode_labels(labels, options.kind, q);
  return TrainingDataset::sparse(std::move(X), std::move(y), options.kind, {}, q);
}

}  // namespace

TrainingDataset ingest_text(const std::string& text, DataFormat format, const IngestOptions& options) {
  return format == DataFormat::kCsv ? parse_csv(text, options) : parse_libsvm(text, options);
}

TrainingDataset ingest(const std::filesystem::path& path, DataFormat format, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kData, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return ingest_text(buf.str(), format, options);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<Index> sample_rows(Index n, Index count, std::uint64_t seed) {
  require(count <= n, ErrorCode::kConfig, "cannot sample more rows than the dataset holds");
  // Partial Fisher-Yates: the first `count` slots of one seeded shuffle, so
  // samples of growing size under the same seed are nested.
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < count; ++i) {
    auto j = i + static_cast<Index>(uniform_below(rng, n - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(count);
  std::sort(perm.begin(), perm.end());
  return perm;
}

std::vector<Index> sample_rate(Index n, double rate, std::uint64_t seed) {
  require(rate > 0.0 && rate < 1.0, ErrorCode::kConfig, "rate must lie in (0, 1)");
  auto count = static_cast<Index>(std::ceil(rate * n - 1e-9));
  return sample_rows(n, std::clamp<Index>(count, 1, n), seed);
}

InjectedErrors inject_errors(const TrainingDataset& ds, double rate, double factor, std::uint64_t seed) {
  require(std::isfinite(factor), ErrorCode::kConfig, "error factor must be finite");
  InjectedErrors out;
  out.rows = sample_rate(ds.rows(), rate, seed);
  out.dirty = ds.with_scaled_rows(out.rows, factor);
  return out;
}

Split split_dataset(const TrainingDataset& ds, double train_fraction, std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::kConfig, "split fraction must lie in (0, 1)");
  require(ds.rows() >= 2, ErrorCode::kData, "need at least two rows to split");
  auto train_rows = static_cast<Index>(std::floor(train_fraction * ds.rows()));
  train_rows = std::clamp<Index>(train_rows, 1, ds.rows() - 1);
  std::vector<Index> chosen = sample_rows(ds.rows(), train_rows, seed);
  std::vector<Index> rest;
  rest.reserve(ds.rows() - train_rows);
  std::size_t k = 0;
  for (Index i = 0; i < ds.rows(); ++i) {
    if (k < chosen.size() && chosen[k] == i)
      ++k;
    else
      rest.push_back(i);
  }
  return {ds.select(chosen), ds.select(rest)};
}

void write_dataset(const TrainingDataset& ds, const std::filesystem::path& path, DataFormat format) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kData, "cannot open '" + path.string() + "' for writing");
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (Index i = 0; i < ds.rows(); ++i) {
    if (format == DataFormat::kCsv) {
      const Vector x = ds.row(i);
      for (Eigen::Index j = 0; j < x.size(); ++j) out << num(x[j]) << ',';
      out << num(ds.label(i)) << '\n';
    } else {
      out << num(ds.label(i));
      if (ds.is_dense()) {
        const Vector x = ds.row(i);
        for (Eigen::Index j = 0; j < x.size(); ++j)
          if (x[j] != 0.0) out << ' ' << j + 1 << ':' << num(x[j]);
      } else {
        for (SparseRowMatrix::InnerIterator it(ds.sparse_features(), i); it; ++it)
          out << ' ' << it.col() + 1 << ':' << num(it.value());
      }
      out << '\n';
    }
  }
  require(out.good(), ErrorCode::kData, "failed writing '" + path.string() + "'");
}

}  // namespace priu
