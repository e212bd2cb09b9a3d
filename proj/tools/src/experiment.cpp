#include "priu_tools/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "priu/baselines.hpp"
#include "priu/error.hpp"
#include "priu/metrics.hpp"
#include "priu/trainer.hpp"
#include "priu_tools/methods.hpp"

namespace priu::tools {

namespace {

const std::set<std::string> kMethods{"priu", "priu-opt", "basel", "closed-form", "infl"};

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), ErrorCode::kConfig, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    require(allowed.count(it.key()) > 0, ErrorCode::kConfig, "unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    out = j[key].get<T>();
  } catch (const Json::exception& e) {
    fail(ErrorCode::kConfig, std::string("config key '") + key + "': " + e.what());
  }
}

SyntheticOptions parse_synthetic(const Json& j) {
  reject_unknown(j, {"n", "m", "classes", "noise", "margin", "nnz_per_row", "seed", "sparse"}, "synthetic");
  SyntheticOptions s;
  read(j, "n", s.n);
  read(j, "m", s.m);
  read(j, "classes", s.classes);
  read(j, "noise", s.noise);
  read(j, "margin", s.margin);
  read(j, "nnz_per_row", s.nnz_per_row);
  read(j, "seed", s.seed);
  return s;
}

}  // namespace

bool is_known_method(const std::string& method) {
  return kMethods.count(method) > 0;
}

ExperimentConfig parse_experiment_config(const Json& j) {
  reject_unknown(j, {"dataset", "model", "split", "split_seed", "hp", "rates", "methods", "error_factor",
                     "error_seed", "cache_mode", "epsilon", "early_stop", "repeat", "output", "summary"},
                 "config");
  ExperimentConfig c;
  require(j.contains("dataset"), ErrorCode::kConfig, "config needs a 'dataset' section");
  const Json& d = j["dataset"];
  reject_unknown(d, {"path", "format", "label_column", "standardize", "synthetic"}, "dataset");
  if (d.contains("synthetic")) {
    c.dataset.synthetic = parse_synthetic(d["synthetic"]);
    if (d["synthetic"].value("sparse", false)) c.dataset.format = DataFormat::kLibsvm;
  } else {
    std::string path;
    read(d, "path", path);
    require(!path.empty(), ErrorCode::kConfig, "dataset needs 'path' or 'synthetic'");
    c.dataset.path = path;
    c.dataset.format = guess_data_format(path);
    if (d.contains("format")) c.dataset.format = parse_data_format(d["format"].get<std::string>());
  }
  read(d, "label_column", c.dataset.label_column);
  read(d, "standardize", c.dataset.standardize);

  std::string model = "linear";
  read(j, "model", model);
  c.kind = parse_model_kind(model);
  read(j, "split", c.split);
  read(j, "split_seed", c.split_seed);
  c.hp.kind = c.kind;
  c.hp.lambda = 0.01;
  c.hp.batch_size = 100;
  c.hp.iterations = 1000;
  c.hp.seed = 1;
  if (j.contains("hp")) {
    const Json& h = j["hp"];
    reject_unknown(h, {"eta", "lambda", "batch_size", "iterations", "seed"}, "hp");
    read(h, "eta", c.hp.eta);
    read(h, "lambda", c.hp.lambda);
    read(h, "batch_size", c.hp.batch_size);
    read(h, "iterations", c.hp.iterations);
    read(h, "seed", c.hp.seed);
  }
  read(j, "rates", c.rates);
  read(j, "methods", c.methods);
  read(j, "error_factor", c.error_factor);
  read(j, "error_seed", c.error_seed);
  if (j.contains("cache_mode")) c.cache_mode = parse_cache_mode(j["cache_mode"].get<std::string>());
  read(j, "epsilon", c.epsilon);
  if (j.contains("early_stop") && !j["early_stop"].is_null()) c.early_stop = j["early_stop"].get<double>();
  if (j.contains("repeat")) {
    const Json& r = j["repeat"];
    reject_unknown(r, {"count", "rate"}, "repeat");
    read(r, "count", c.repeat_count);
    read(r, "rate", c.repeat_rate);
  }
  std::string out = c.output.string();
  read(j, "output", out);
  c.output = out;
  std::string summary;
  read(j, "summary", summary);
  c.summary = summary;

  require(c.split > 0.0 && c.split < 1.0, ErrorCode::kConfig, "split must lie in (0, 1)");
  for (double r : c.rates) require(r > 0.0 && r < 1.0, ErrorCode::kConfig, "deletion rates must lie in (0, 1)");
  require(!c.methods.empty(), ErrorCode::kConfig, "no methods selected");
  for (const auto& m : c.methods)
    require(is_known_method(m), ErrorCode::kConfig, "unknown method '" + m + "'");
  if (c.early_stop)
    require(*c.early_stop > 0.0 && *c.early_stop <= 1.0, ErrorCode::kConfig, "early_stop must lie in (0, 1]");
  if (c.repeat_count)
    require(c.repeat_rate > 0.0 && c.repeat_rate < 1.0, ErrorCode::kConfig, "repeat rate must lie in (0, 1)");
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kConfig, "cannot open config '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return parse_experiment_config(j);
}

TrainingDataset load_dataset(const DatasetSource& source, ModelKind kind) {
  if (source.synthetic) {
    const bool sparse = source.format == DataFormat::kLibsvm;
    switch (kind) {
      case ModelKind::kLinear:
        require(!sparse, ErrorCode::kConfig, "sparse synthetic data is only generated for binary models");
        return make_linear(*source.synthetic);
      case ModelKind::kBinaryLogistic:
        return sparse ? make_sparse_binary(*source.synthetic) : make_binary(*source.synthetic);
      case ModelKind::kMultinomialLogistic:
        require(!sparse, ErrorCode::kConfig, "sparse synthetic data is only generated for binary models");
        return make_multinomial(*source.synthetic);
    }
  }
  IngestOptions opts;
  opts.kind = kind;
  opts.label_column = source.label_column;
  opts.standardize = source.standardize;
  return ingest(source.path, source.format, opts);
}

std::size_t resident_bytes() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      std::istringstream fields(line.substr(6));
      std::size_t kb = 0;
      fields >> kb;
      return kb * 1024;
    }
  }
  return 0;
}

namespace {

struct Prepared {
  TrainedCache trained;
  Hyperparams hp;
};

Prepared prepare(const TrainingDataset& ds, const ExperimentConfig& c, bool want_opt) {
  Hyperparams hp = c.hp;
  hp.kind = ds.kind();
  if (hp.eta <= 0.0) hp.eta = default_learning_rate(ds, hp);
  const BatchSchedule schedule = BatchSchedule::build(ds.rows(), hp);
  CaptureOptions co;
  co.mode = c.cache_mode;
  co.epsilon = c.epsilon;
  if (is_logistic(ds.kind()) && (want_opt || c.early_stop))
    co.t_s = static_cast<Index>(std::floor(c.early_stop.value_or(0.7) * hp.iterations));
  return {train_and_capture(ds, hp, schedule, InterpolationTable(), co), hp};
}

Json base_record(const char* scenario, const std::string& method, const TrainingDataset& ds) {
  Json r;
  r["schema"] = kReportSchema;
  r["scenario"] = scenario;
  r["method"] = method;
  r["model"] = to_string(ds.kind());
  r["n"] = ds.rows();
  r["m"] = ds.cols();
  r["rate"] = nullptr;
  r["subset"] = nullptr;
  r["removed"] = nullptr;
  r["update_seconds"] = nullptr;
  r["prepare_seconds"] = nullptr;
  r["loop_seconds"] = nullptr;
  r["reference"] = nullptr;
  r["l2_to_reference"] = nullptr;
  r["cosine_to_reference"] = nullptr;
  r["validation_metric"] = ds.kind() == ModelKind::kLinear ? "mse" : "accuracy";
  r["validation_value"] = nullptr;
  r["gd_semantics"] = false;
  r["cache_bytes"] = nullptr;
  r["rss_bytes"] = nullptr;
  r["error"] = nullptr;
  return r;
}

double validation_value(const TrainingDataset& val, const Vector& w) {
  return val.kind() == ModelKind::kLinear ? mse(val, w) : validation_accuracy(val, w);
}

// Runs every selected method for one request and appends one record each.
void run_cells(const TrainingDataset& ds, const TrainingDataset& val, const Prepared& prep,
               const ExperimentConfig& c, const DeletionRequest& request, Json proto,
               std::vector<Json>& out, std::vector<double>* seconds) {
  MethodRunner runner(ds, prep.trained.cache);
  std::optional<UpdateResult> basel;
  std::optional<UpdateResult> basel_gd;
  auto reference = [&](bool gd) -> const UpdateResult& {
    auto& slot = gd ? basel_gd : basel;
    if (!slot) slot = runner.run(gd ? "basel-gd" : "basel", request);
    return *slot;
  };
  const std::size_t cache_bytes = cache_stats(prep.trained.cache).total_bytes;
  for (std::size_t k = 0; k < c.methods.size(); ++k) {
    const std::string& method = c.methods[k];
    Json rec = proto;
    rec["method"] = method;
    rec["removed"] = request.size();
    try {
      UpdateResult res = method == "basel" ? reference(false) : runner.run(method, request);
      const bool gd = res.report.gd_semantics && ds.kind() == ModelKind::kLinear;
      const UpdateResult& ref = reference(gd);
      rec["update_seconds"] = res.report.total_seconds;
      rec["prepare_seconds"] = res.report.prepare_seconds;
      rec["loop_seconds"] = res.report.loop_seconds;
      rec["reference"] = gd ? "basel-gd" : "basel";
      rec["gd_semantics"] = res.report.gd_semantics;
      rec["l2_to_reference"] = l2_dist(res.params.w, ref.params.w);
      if (res.params.w.norm() > 0 && ref.params.w.norm() > 0)
        rec["cosine_to_reference"] = cosine_sim(res.params.w, ref.params.w);
      rec["validation_value"] = validation_value(val, res.params.w);
      if (method == "priu" || method == "priu-opt") rec["cache_bytes"] = cache_bytes;
      rec["rss_bytes"] = resident_bytes();
      if (seconds) seconds[k].push_back(res.report.total_seconds);
    } catch (const Error& e) {
      rec["error"] = std::string(to_string(e.code())) + ": " + e.what();
    }
    out.push_back(std::move(rec));
  }
}

}  // namespace

std::vector<Json> run_sweep(const ExperimentConfig& c) {
  const TrainingDataset full = load_dataset(c.dataset, c.kind);
  const Split split = split_dataset(full, c.split, c.split_seed);
  const bool want_opt = std::find(c.methods.begin(), c.methods.end(), "priu-opt") != c.methods.end();
  std::vector<Json> records;

  for (double rate : c.rates) {
    Json proto = base_record("rate", "", split.train);
    proto["rate"] = rate;
    try {
      const InjectedErrors inj = inject_errors(split.train, rate, c.error_factor, c.error_seed);
      const Prepared prep = prepare(inj.dirty, c, want_opt);
      run_cells(inj.dirty, split.validation, prep, c, DeletionRequest(inj.rows, inj.dirty.rows()), proto,
                records, nullptr);
    } catch (const Error& e) {
      for (const auto& m : c.methods) {
        Json rec = proto;
        rec["method"] = m;
        rec["error"] = std::string(to_string(e.code())) + ": " + e.what();
        records.push_back(std::move(rec));
      }
    }
  }

  if (c.repeat_count > 0) {
    Json proto = base_record("repeated", "", split.train);
    proto["rate"] = c.repeat_rate;
    std::vector<std::vector<double>> seconds(c.methods.size());
    try {
      const Prepared prep = prepare(split.train, c, want_opt);
      for (Index s = 0; s < c.repeat_count; ++s) {
        proto["subset"] = s;
        DeletionRequest request(sample_rate(split.train.rows(), c.repeat_rate, c.error_seed + 1000 + s),
                                split.train.rows());
        run_cells(split.train, split.validation, prep, c, request, proto, records, seconds.data());
      }
      for (std::size_t k = 0; k < c.methods.size(); ++k) {
        Json total = base_record("repeated-total", c.methods[k], split.train);
        total["rate"] = c.repeat_rate;
        total["subset"] = c.repeat_count;
        double sum = 0.0;
        for (double v : seconds[k]) sum += v;
        total["update_seconds"] = sum;
        if (seconds[k].size() != c.repeat_count) total["error"] = "some subsets failed";
        records.push_back(std::move(total));
      }
    } catch (const Error& e) {
      for (const auto& m : c.methods) {
        Json rec = proto;
        rec["method"] = m;
        rec["error"] = std::string(to_string(e.code())) + ": " + e.what();
        records.push_back(std::move(rec));
      }
    }
  }

  std::filesystem::path csv = c.summary;
  if (csv.empty()) csv = std::filesystem::path(c.output).replace_extension(".csv");
  write_report(records, c.output, csv);
  return records;
}

namespace {

std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return to_json_text(v);
}

}  // namespace

void write_report(const std::vector<Json>& records, const std::filesystem::path& jsonl,
                  const std::filesystem::path& csv) {
  for (const auto& path : {jsonl, csv}) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(jsonl);
  require(out.good(), ErrorCode::kData, "cannot write '" + jsonl.string() + "'");
  for (const auto& r : records) out << to_json_text(r) << '\n';
  if (csv.empty()) return;
  static const char* columns[] = {"scenario", "rate", "subset", "method", "removed", "update_seconds",
                                  "reference", "l2_to_reference", "cosine_to_reference", "validation_metric",
                                  "validation_value", "cache_bytes", "error"};
  std::ofstream s(csv);
  require(s.good(), ErrorCode::kData, "cannot write '" + csv.string() + "'");
  for (std::size_t i = 0; i < std::size(columns); ++i) s << (i ? "," : "") << columns[i];
  s << '\n';
  for (const auto& r : records) {
    for (std::size_t i = 0; i < std::size(columns); ++i)
      s << (i ? "," : "") << (r.contains(columns[i]) ? csv_cell(r[columns[i]]) : "");
    s << '\n';
  }
}

std::vector<Json> read_report(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  require(in.good(), ErrorCode::kData, "cannot open report '" + jsonl.string() + "'");
  std::vector<Json> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Json j = Json::parse(line);
      require(j.is_object() && j.contains("method") && j.contains("scenario"), ErrorCode::kData,
              "record is missing 'method' or 'scenario'");
      require(j.value("schema", 0) == kReportSchema, ErrorCode::kData, "unsupported report schema");
      out.push_back(std::move(j));
    } catch (const Json::exception& e) {
      fail(ErrorCode::kData, jsonl.string() + ":" + std::to_string(no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::kData, jsonl.string() + ":" + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace priu::tools
