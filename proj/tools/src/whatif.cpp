#include "priu_tools/whatif.hpp"

#include <chrono>
#include <cmath>

#include <httplib.h>

#include "priu/baselines.hpp"
#include "priu/error.hpp"
#include "priu/ingest.hpp"
#include "priu/metrics.hpp"

namespace priu::tools {

namespace {

HttpResponse json_response(int status, const Json& j) {
  return {status, to_json_text(j)};
}

HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, Json{{"error", message}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
      return 400;
    case ErrorCode::kMismatch:
      return 422;
    default:
      return 500;
  }
}

Json hp_json(const Hyperparams& hp) {
  return Json{{"eta", hp.eta},
              {"lambda", hp.lambda},
              {"batch_size", hp.batch_size},
              {"iterations", hp.iterations},
              {"seed", hp.seed}};
}

Json cosine_or_null(const Vector& a, const Vector& b) {
  if (a.norm() == 0.0 || b.norm() == 0.0) return nullptr;
  return cosine_sim(a, b);
}

Json w_summary(const Vector& w) {
  constexpr Eigen::Index kHead = 8;
  Json head = Json::array();
  for (Eigen::Index i = 0; i < std::min(kHead, w.size()); ++i) head.push_back(w[i]);
  Index nonzero = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) nonzero += w[i] != 0.0;
  return Json{{"dim", w.size()}, {"norm", w.norm()}, {"nonzero", nonzero}, {"head", head}};
}

// Parses the removal spec: a list of row ids or {rate, seed}.
std::vector<Index> parse_removal(const Json& spec, Index n) {
  if (spec.is_null()) return {};
  if (spec.is_array()) {
    std::vector<Index> ids;
    for (const auto& v : spec) {
      require(v.is_number_integer(), ErrorCode::kConfig, "removed ids must be integers");
      const auto id = v.get<long long>();
      require(id >= 0 && id < n, ErrorCode::kConfig, "removed id " + std::to_string(id) + " is out of range");
      ids.push_back(static_cast<Index>(id));
    }
    return ids;
  }
  require(spec.is_object() && spec.contains("rate"), ErrorCode::kConfig,
          "'removed' must be a list of ids or {rate, seed}");
  require(spec["rate"].is_number(), ErrorCode::kConfig, "'rate' must be a number");
  const double rate = spec["rate"].get<double>();
  require(rate >= 0.0 && rate < 1.0, ErrorCode::kConfig, "'rate' must lie in [0, 1)");
  std::uint64_t seed = 1;
  if (spec.contains("seed")) {
    require(spec["seed"].is_number_unsigned(), ErrorCode::kConfig, "'seed' must be a non-negative integer");
    seed = spec["seed"].get<std::uint64_t>();
  }
  if (rate == 0.0) return {};
  return sample_rate(n, rate, seed);
}

}  // namespace

void WhatifService::load(TrainingDataset ds, ProvenanceCache cache, std::optional<TrainingDataset> validation) {
  require(!ready_.load(), ErrorCode::kConfig, "session already loaded");
  cache.check_dataset(ds);
  cache.check_complete();
  auto l = std::make_unique<Loaded>();
  l->ds = std::move(ds);
  l->cache = std::move(cache);
  l->validation = std::move(validation);
  if (l->validation)
    require(l->validation->kind() == l->ds.kind() && l->validation->cols() == l->ds.cols(), ErrorCode::kMismatch,
            "validation data does not match the training data");
  l->runner = std::make_unique<MethodRunner>(l->ds, l->cache);
  loaded_ = std::move(l);
  ready_.store(true);
}

Vector WhatifService::exact_retrain(const DeletionRequest& request) {
  const std::vector<Index> key(request.removed().begin(), request.removed().end());
  {
    std::lock_guard lock(memo_mutex_);
    if (auto it = retrain_memo_.find(key); it != retrain_memo_.end()) return it->second;
  }
  Vector w = key.empty() ? loaded_->cache.final_w : loaded_->runner->run("basel", request).params.w;
  std::lock_guard lock(memo_mutex_);
  return retrain_memo_.emplace(key, std::move(w)).first->second;
}

Json WhatifService::entry_summary(const Entry& e) const {
  return Json{{"request_id", e.id},
              {"method", e.method},
              {"removed", e.removed.size()},
              {"metrics", e.metrics},
              {"timing", Json{{"update_ms", e.update_ms}}}};
}

HttpResponse WhatifService::get_session() const {
  if (!ready()) return error_response(503, "session is still loading");
  const TrainingDataset& ds = loaded_->ds;
  Json preview = Json::array();
  for (Index i = 0; i < std::min(kPreviewRows, ds.rows()); ++i)
    preview.push_back(Json{{"row", i}, {"label", ds.label(i)}, {"features", vector_json(ds.row(i))}});
  Json history = Json::array();
  {
    std::lock_guard lock(history_mutex_);
    for (const auto& e : history_) history.push_back(entry_summary(e));
  }
  const CacheHeader& h = loaded_->cache.header;
  return json_response(200, Json{{"n", ds.rows()},
                                 {"m", ds.cols()},
                                 {"q", ds.classes()},
                                 {"model_kind", to_string(ds.kind())},
                                 {"storage", ds.is_dense() ? "dense" : "sparse"},
                                 {"hp", hp_json(h.hp)},
                                 {"cache_mode", to_string(h.mode)},
                                 {"early_stop", h.t_s ? Json(*h.t_s) : Json(nullptr)},
                                 {"preview", preview},
                                 {"history", history}});
}

HttpResponse WhatifService::post_update(const std::string& body) {
  if (!ready()) return error_response(503, "session is still loading");
  Json req;
  try {
    req = Json::parse(body);
  } catch (const Json::exception& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object()) return error_response(400, "request body must be a JSON object");
  const TrainingDataset& ds = loaded_->ds;
  try {
    const std::string method = req.value("method", std::string("priu"));
    const DeletionRequest request(parse_removal(req.value("removed", Json()), ds.rows()), ds.rows());
    loaded_->runner->check_applicable(method);

    Vector w;
    double update_ms = 0.0;
    if (request.empty()) {
      // Nothing to delete: every method returns the trained model.
      w = loaded_->cache.final_w;
    } else {
      UpdateResult res = loaded_->runner->run(method, request);
      w = std::move(res.params.w);
      update_ms = res.report.total_seconds * 1e3;
    }
    const Vector base = exact_retrain(request);
    const TrainingDataset& val = loaded_->validation ? *loaded_->validation : ds;
    Json metrics{{"removed", request.size()},
                 {"l2_dist_to_base", l2_dist(w, base)},
                 {"cosine_to_base", cosine_or_null(w, base)},
                 {"w", w_summary(w)}};
    if (ds.kind() == ModelKind::kLinear)
      metrics["mse"] = mse(val, w);
    else
      metrics["accuracy"] = validation_accuracy(val, w);

    Entry e;
    e.method = method;
    e.removed.assign(request.removed().begin(), request.removed().end());
    e.w = std::move(w);
    e.metrics = std::move(metrics);
    e.update_ms = update_ms;
    Json out;
    {
      std::lock_guard lock(history_mutex_);
      e.id = "r" + std::to_string(history_.size() + 1);
      history_.push_back(std::move(e));
      out = entry_summary(history_.back());
    }
    return json_response(200, out);
  } catch (const Error& err) {
    return error_response(status_for(err.code()), err.what());
  } catch (const Json::exception& err) {
    return error_response(400, err.what());
  }
}

HttpResponse WhatifService::get_compare(const std::string& a, const std::string& b) const {
  if (!ready()) return error_response(503, "session is still loading");
  if (a.empty() || b.empty()) return error_response(400, "both 'a' and 'b' are required");
  std::lock_guard lock(history_mutex_);
  auto find = [&](const std::string& id) -> const Entry* {
    for (const auto& e : history_)
      if (e.id == id) return &e;
    return nullptr;
  };
  const Entry* ea = find(a);
  const Entry* eb = find(b);
  if (!ea) return error_response(404, "unknown request id '" + a + "'");
  if (!eb) return error_response(404, "unknown request id '" + b + "'");
  const SignFlipReport flips = sign_flip_report(ea->w, eb->w);
  return json_response(200, Json{{"a", a},
                                 {"b", b},
                                 {"l2_dist", l2_dist(ea->w, eb->w)},
                                 {"cosine", cosine_or_null(ea->w, eb->w)},
                                 {"sign_flips", flips.flips},
                                 {"max_magnitude_change", flips.max_magnitude_change}});
}

HttpResponse WhatifService::handle(const std::string& method, const std::string& path,
                                   const std::map<std::string, std::string>& query, const std::string& body) {
  auto param = [&](const char* k) {
    auto it = query.find(k);
    return it == query.end() ? std::string() : it->second;
  };
  if (path == "/session" && method == "GET") return get_session();
  if (path == "/update" && method == "POST") return post_update(body);
  if (path == "/compare" && method == "GET") return get_compare(param("a"), param("b"));
  if (path == "/session" || path == "/update" || path == "/compare")
    return error_response(405, "method not allowed");
  return error_response(404, "no such endpoint");
}

bool serve(WhatifService& service, const ServeOptions& options) {
  httplib::Server server;
  server.set_default_headers({{"Access-Control-Allow-Origin", options.allow_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  auto bind = [&service](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query(req.params.begin(), req.params.end());
    const HttpResponse r = service.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get("/session", bind);
  server.Get("/compare", bind);
  server.Post("/update", bind);
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  return server.listen(options.host, options.port);
}

}  // namespace priu::tools
