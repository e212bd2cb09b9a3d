#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "priu/capture.hpp"
#include "priu/error.hpp"
#include "priu/ingest.hpp"
#include "priu/metrics.hpp"
#include "priu/synthetic.hpp"
#include "priu/trainer.hpp"
#include "priu_tools/experiment.hpp"
#include "priu_tools/methods.hpp"
#include "priu_tools/whatif.hpp"

using namespace priu;
using namespace priu::tools;

namespace {

struct DataArgs {
  std::string path;
  std::string format;
  std::string kind = "linear";
  int label_column = -1;
  bool standardize = false;

  void attach(CLI::App* app) {
    app->add_option("--data", path, "Training data file (CSV or LIBSVM)")->required();
    app->add_option("--format", format, "csv or libsvm (guessed from the extension by default)");
    app->add_option("--model", kind, "linear, binary or multinomial");
    app->add_option("--label-column", label_column, "CSV label column (default: last)");
    app->add_flag("--standardize", standardize, "Standardize features after loading");
  }

  TrainingDataset load() const {
    IngestOptions o;
    o.kind = parse_model_kind(kind);
    o.label_column = label_column;
    o.standardize = standardize;
    return ingest(path, format.empty() ? guess_data_format(path) : parse_data_format(format), o);
  }
};

struct HpArgs {
  double eta = 0.0;
  double lambda = 0.01;
  Index batch = 100;
  Index iterations = 1000;
  std::uint64_t seed = 1;

  void attach(CLI::App* app) {
    app->add_option("--eta", eta, "Learning rate (default 0.9/L)");
    app->add_option("--lambda", lambda, "L2 regularization");
    app->add_option("--batch", batch, "Mini-batch size");
    app->add_option("--iterations", iterations, "Number of iterations");
    app->add_option("--seed", seed, "Batch schedule seed");
  }

  Hyperparams resolve(const TrainingDataset& ds) const {
    Hyperparams hp;
    hp.kind = ds.kind();
    hp.lambda = lambda;
    hp.batch_size = std::min(batch, ds.rows());
    hp.iterations = iterations;
    hp.seed = seed;
    hp.eta = eta > 0.0 ? eta : default_learning_rate(ds, hp);
    return hp;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  require(out.good(), ErrorCode::kData, "cannot write '" + path + "'");
  out << text << '\n';
}

Json hp_json(const Hyperparams& hp) {
  return Json{{"model", to_string(hp.kind)},
              {"eta", hp.eta},
              {"lambda", hp.lambda},
              {"batch_size", hp.batch_size},
              {"iterations", hp.iterations},
              {"seed", hp.seed}};
}

// A number in (0, 1) that is not an existing file is a deletion rate; anything
// else names a file of row ids separated by whitespace or commas.
DeletionRequest parse_removal(const std::string& spec, Index n, std::uint64_t seed) {
  double rate = 0.0;
  const auto [end, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), rate);
  if (ec == std::errc() && end == spec.data() + spec.size() && !std::filesystem::exists(spec)) {
    require(rate > 0.0 && rate < 1.0, ErrorCode::kConfig, "deletion rate must lie in (0, 1)");
    return DeletionRequest(sample_rate(n, rate, seed), n, spec);
  }
  std::ifstream in(spec);
  require(in.good(), ErrorCode::kData, "cannot open id file '" + spec + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  for (char& c : text)
    if (c == ',') c = ' ';
  std::istringstream words(text);
  std::vector<Index> ids;
  std::string w;
  while (words >> w) {
    long long id = -1;
    const auto [p, e] = std::from_chars(w.data(), w.data() + w.size(), id);
    require(e == std::errc() && p == w.data() + w.size(), ErrorCode::kData, "bad row id '" + w + "' in " + spec);
    require(id >= 0 && id < n, ErrorCode::kData, "row id " + w + " is out of range");
    ids.push_back(static_cast<Index>(id));
  }
  return DeletionRequest(std::move(ids), n, spec);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental model updates after training-sample deletion"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
  std::string gen_kind = "linear", gen_out;
  SyntheticOptions syn;
  bool gen_sparse = false;
  gen->add_option("--model", gen_kind, "linear, binary or multinomial");
  gen->add_option("--n", syn.n, "Rows");
  gen->add_option("--m", syn.m, "Features");
  gen->add_option("--classes", syn.classes, "Classes (multinomial)");
  gen->add_option("--noise", syn.noise, "Label noise");
  gen->add_option("--margin", syn.margin, "Minimum distance to the true boundary (logistic)");
  gen->add_option("--nnz", syn.nnz_per_row, "Nonzeros per row (sparse)");
  gen->add_option("--seed", syn.seed, "Generator seed");
  gen->add_flag("--sparse", gen_sparse, "Sparse binary data in LIBSVM format");
  gen->add_option("--out", gen_out, "Output file")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model and write its parameters");
  DataArgs train_data;
  HpArgs train_hp;
  std::string train_out;
  train_data.attach(train_cmd);
  train_hp.attach(train_cmd);
  train_cmd->add_option("--out", train_out, "Parameter JSON (default stdout)");

  // capture
  auto* cap = app.add_subcommand("capture", "Train and write the provenance cache");
  DataArgs cap_data;
  HpArgs cap_hp;
  std::string cap_out, cap_mode = "dense-full";
  double cap_eps = 0.01;
  double cap_early = 0.0;
  cap_data.attach(cap);
  cap_hp.attach(cap);
  cap->add_option("--mode", cap_mode, "dense-full, dense-svd or sparse");
  cap->add_option("--epsilon", cap_eps, "SVD truncation threshold");
  cap->add_option("--early-stop", cap_early, "Fraction of iterations after which logistic coefficients freeze");
  cap->add_option("--out", cap_out, "Cache file")->required();

  // update
  auto* upd = app.add_subcommand("update", "Update a trained model after deleting rows");
  DataArgs upd_data;
  std::string upd_cache, upd_method = "priu", upd_remove, upd_out;
  std::uint64_t upd_seed = 1;
  bool upd_compare = false;
  upd_data.attach(upd);
  upd->add_option("--cache", upd_cache, "Cache file from capture")->required();
  upd->add_option("--method", upd_method, "priu, priu-opt, basel, closed-form or infl");
  upd->add_option("--remove", upd_remove, "Id file or deletion rate")->required();
  upd->add_option("--remove-seed", upd_seed, "Seed for rate-based removal");
  upd->add_flag("--compare", upd_compare, "Also retrain and report the distance to the retrained model");
  upd->add_option("--out", upd_out, "Result JSON (default stdout)");

  // inject-errors
  auto* inj = app.add_subcommand("inject-errors", "Rescale a random subset of rows");
  DataArgs inj_data;
  double inj_rate = 0.1, inj_factor = 10.0;
  std::uint64_t inj_seed = 7;
  std::string inj_out, inj_ids;
  inj_data.attach(inj);
  inj->add_option("--rate", inj_rate, "Fraction of rows to corrupt");
  inj->add_option("--factor", inj_factor, "Rescaling factor");
  inj->add_option("--seed", inj_seed, "Selection seed");
  inj->add_option("--out", inj_out, "Corrupted dataset")->required();
  inj->add_option("--ids", inj_ids, "File receiving the corrupted row ids")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a deletion-rate sweep from a JSON config");
  std::string sweep_config;
  sweep->add_option("--config", sweep_config, "Experiment config (JSON)")->required();

  // render
  auto* render = app.add_subcommand("render", "Render a sweep report as SVG and markdown");
  std::string render_in, render_dir = ".";
  render->add_option("--report", render_in, "JSON-lines report")->required();
  render->add_option("--out", render_dir, "Output directory");

  // serve
  auto* srv = app.add_subcommand("serve", "Start the what-if HTTP service");
  DataArgs srv_data;
  std::string srv_cache, srv_validation;
  ServeOptions srv_opts;
  if (const char* port = std::getenv("PRIU_PORT")) srv_opts.port = std::atoi(port);
  srv_data.attach(srv);
  srv->add_option("--cache", srv_cache, "Cache file from capture")->required();
  srv->add_option("--validation", srv_validation, "Validation data scored after each update");
  srv->add_option("--host", srv_opts.host, "Bind address");
  srv->add_option("--port", srv_opts.port, "Port (also PRIU_PORT)");
  srv->add_option("--allow-origin", srv_opts.allow_origin, "CORS origin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      const ModelKind kind = parse_model_kind(gen_kind);
      TrainingDataset ds;
      if (gen_sparse) {
        require(kind == ModelKind::kBinaryLogistic, ErrorCode::kConfig, "--sparse needs --model binary");
        ds = make_sparse_binary(syn);
      } else if (kind == ModelKind::kLinear) {
        ds = make_linear(syn);
      } else if (kind == ModelKind::kBinaryLogistic) {
        ds = make_binary(syn);
      } else {
        ds = make_multinomial(syn);
      }
      write_dataset(ds, gen_out, gen_sparse ? DataFormat::kLibsvm : guess_data_format(gen_out));
    } else if (train_cmd->parsed()) {
      const TrainingDataset ds = train_data.load();
      const Hyperparams hp = train_hp.resolve(ds);
      TrainOptions opts;
      opts.record_stride = 0;
      const TrainRun run = train(ds, hp, BatchSchedule::build(ds.rows(), hp), opts);
      write_text(train_out, to_json_text(Json{{"hp", hp_json(hp)}, {"w", vector_json(run.final.w)}}));
    } else if (cap->parsed()) {
      const TrainingDataset ds = cap_data.load();
      const Hyperparams hp = cap_hp.resolve(ds);
      CaptureOptions co;
      co.mode = parse_cache_mode(cap_mode);
      co.epsilon = cap_eps;
      if (cap_early > 0.0) {
        require(cap_early <= 1.0, ErrorCode::kConfig, "--early-stop must lie in (0, 1]");
        co.t_s = static_cast<Index>(cap_early * static_cast<double>(hp.iterations));
      }
      const TrainedCache tc =
          train_and_capture(ds, hp, BatchSchedule::build(ds.rows(), hp), InterpolationTable(), co);
      save_cache(tc.cache, cap_out);
      const CacheStats st = cache_stats(tc.cache);
      std::cout << to_json_text(Json{{"hp", hp_json(hp)},
                                     {"cache_bytes", st.total_bytes},
                                     {"average_rank", st.average_rank},
                                     {"fingerprint", tc.cache.header.fingerprint.hex()}})
                << '\n';
    } else if (upd->parsed()) {
      const TrainingDataset ds = upd_data.load();
      const ProvenanceCache cache = load_cache(upd_cache);
      const DeletionRequest request = parse_removal(upd_remove, ds.rows(), upd_seed);
      MethodRunner runner(ds, cache);
      const UpdateResult res = runner.run(upd_method, request);
      Json out{{"method", upd_method},
               {"removed", request.size()},
               {"update_seconds", res.report.total_seconds},
               {"prepare_seconds", res.report.prepare_seconds},
               {"loop_seconds", res.report.loop_seconds},
               {"w", vector_json(res.params.w)}};
      if (upd_compare) {
        const bool gd = res.report.gd_semantics && ds.kind() == ModelKind::kLinear;
        const UpdateResult ref = runner.run(gd ? "basel-gd" : "basel", request);
        out["reference"] = gd ? "basel-gd" : "basel";
        out["reference_seconds"] = ref.report.total_seconds;
        out["l2_to_reference"] = l2_dist(res.params.w, ref.params.w);
        if (res.params.w.norm() > 0 && ref.params.w.norm() > 0)
          out["cosine_to_reference"] = cosine_sim(res.params.w, ref.params.w);
      }
      write_text(upd_out, to_json_text(out));
    } else if (inj->parsed()) {
      const TrainingDataset ds = inj_data.load();
      const InjectedErrors r = inject_errors(ds, inj_rate, inj_factor, inj_seed);
      const DataFormat fmt = inj_data.format.empty() ? guess_data_format(inj_data.path)
                                                     : parse_data_format(inj_data.format);
      write_dataset(r.dirty, inj_out, fmt);
      std::ofstream ids(inj_ids);
      require(ids.good(), ErrorCode::kData, "cannot write '" + inj_ids + "'");
      for (Index row : r.rows) ids << row << '\n';
    } else if (sweep->parsed()) {
      const ExperimentConfig cfg = load_experiment_config(sweep_config);
      const auto records = run_sweep(cfg);
      std::size_t failed = 0;
      for (const auto& r : records) failed += !r["error"].is_null();
      std::cout << records.size() << " records written to " << cfg.output.string();
      if (failed) std::cout << " (" << failed << " with errors)";
      std::cout << '\n';
    } else if (render->parsed()) {
      render_report(read_report(render_in), render_dir);
    } else if (srv->parsed()) {
      WhatifService service;
      std::thread loader([&] {
        try {
          std::optional<TrainingDataset> val;
          if (!srv_validation.empty()) {
            DataArgs v = srv_data;
            v.path = srv_validation;
            val = v.load();
          }
          service.load(srv_data.load(), load_cache(srv_cache), std::move(val));
          std::cerr << "session ready\n";
        } catch (const Error& e) {
          std::cerr << "error: " << e.what() << '\n';
          std::exit(exit_code(e.code()));
        }
      });
      loader.detach();
      std::cerr << "listening on " << srv_opts.host << ':' << srv_opts.port << '\n';
      if (!serve(service, srv_opts)) {
        std::cerr << "error: cannot bind " << srv_opts.host << ':' << srv_opts.port << '\n';
        return 3;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
