#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "priu/capture.hpp"
#include "priu_tools/json_text.hpp"
#include "priu_tools/methods.hpp"

namespace priu::tools {

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON text
};

/// What-if session over one (dataset, cache) pair. Handlers take and return
/// plain strings so they can be exercised without a socket; `serve` binds them
/// to HTTP. Requests may run concurrently: the dataset and cache are read-only,
/// the history and the retrain memo sit behind their own locks.
class WhatifService {
 public:
  WhatifService() = default;
  WhatifService(const WhatifService&) = delete;
  WhatifService& operator=(const WhatifService&) = delete;

  // Until this is called every endpoint answers 503. `validation` scores the
  // updated models; when absent the loaded dataset is used.
  void load(TrainingDataset ds, ProvenanceCache cache, std::optional<TrainingDataset> validation = {});
  bool ready() const { return ready_.load(); }

  HttpResponse get_session() const;
  HttpResponse post_update(const std::string& body);
  HttpResponse get_compare(const std::string& a, const std::string& b) const;

  // Routes by method and path; `query` holds decoded query parameters.
  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::map<std::string, std::string>& query, const std::string& body);

  // Number of preview rows in the session descriptor.
  static constexpr Index kPreviewRows = 5;

 private:
  struct Entry {
    std::string id;
    std::string method;
    std::vector<Index> removed;
    Vector w;
    Json metrics;
    double update_ms = 0.0;
  };

  Vector exact_retrain(const DeletionRequest& request);
  Json entry_summary(const Entry& e) const;

  struct Loaded {
    TrainingDataset ds;
    ProvenanceCache cache;
    std::optional<TrainingDataset> validation;
    std::unique_ptr<MethodRunner> runner;
  };
  std::unique_ptr<Loaded> loaded_;
  std::atomic<bool> ready_{false};

  mutable std::mutex history_mutex_;
  std::vector<Entry> history_;

  std::mutex memo_mutex_;
  std::map<std::vector<Index>, Vector> retrain_memo_;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string allow_origin = "*";
};

/// Blocks serving HTTP until the process is stopped. Returns false when the
/// socket cannot be bound.
bool serve(WhatifService& service, const ServeOptions& options);

}  // namespace priu::tools
