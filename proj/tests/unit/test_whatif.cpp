#include <doctest.h>

#include "fixtures.hpp"
#include "priu/capture.hpp"
#include "priu_tools/whatif.hpp"

using namespace priu;
using namespace priu::tools;

namespace {

struct Session {
  WhatifService service;

  explicit Session(const TrainingDataset& ds, Index batch = 40, Index iterations = 100) {
    Hyperparams hp = fixtures::params(ds, batch, iterations);
    auto tc = train_and_capture(ds, hp, BatchSchedule::build(ds.rows(), hp), InterpolationTable(), {});
    service.load(ds, std::move(tc.cache));
  }

  Json get(const std::string& path, std::map<std::string, std::string> q = {}, int status = 200) {
    auto r = service.handle("GET", path, q, "");
    CHECK(r.status == status);
    return Json::parse(r.body);
  }
  Json post(const std::string& body, int status = 200) {
    auto r = service.handle("POST", "/update", {}, body);
    CHECK(r.status == status);
    return Json::parse(r.body);
  }
};

}  // namespace

TEST_CASE("endpoints answer 503 before the session is loaded") {
  WhatifService s;
  CHECK(s.handle("GET", "/session", {}, "").status == 503);
  CHECK(s.handle("POST", "/update", {}, "{}").status == 503);
  CHECK(s.handle("GET", "/compare", {{"a", "r1"}, {"b", "r1"}}, "").status == 503);
}

TEST_CASE("session descriptor and history") {
  auto ds = fixtures::binary(300, 4);
  Session s(ds);
  Json session = s.get("/session");
  CHECK(session["n"] == 300);
  CHECK(session["m"] == 4);
  CHECK(session["q"] == 1);
  CHECK(session["model_kind"] == "binary_logistic");
  CHECK(session["history"].empty());
  REQUIRE(session["preview"].size() == WhatifService::kPreviewRows);
  for (Index i = 0; i < WhatifService::kPreviewRows; ++i)
    CHECK(json_vector(session["preview"][i]["features"]) == ds.row(i));
  s.post(R"({"removed": [1, 2, 3], "method": "priu"})");
  CHECK(s.get("/session")["history"].size() == 1);
}

TEST_CASE("empty removal is distance zero and cosine one") {
  Session s(fixtures::binary(200, 4));
  Json r = s.post(R"({"removed": [], "method": "priu"})");
  CHECK(r["metrics"]["l2_dist_to_base"].get<double>() == 0.0);
  CHECK(r["metrics"]["cosine_to_base"].get<double>() == 1.0);
  CHECK(r["request_id"] == "r1");
}

TEST_CASE("identical requests give identical metric payloads") {
  Session s(fixtures::binary(300, 4));
  const std::string body = R"({"removed": {"rate": 0.05, "seed": 3}, "method": "priu"})";
  Json a = s.post(body);
  Json b = s.post(body);
  CHECK(to_json_text(a["metrics"]) == to_json_text(b["metrics"]));
  CHECK(a["request_id"] != b["request_id"]);
}

TEST_CASE("priu and exact retrain agree on the same removal") {
  Session s(fixtures::binary(500, 5), 50, 200);
  Json p = s.post(R"({"removed": {"rate": 0.1, "seed": 1}, "method": "priu"})");
  Json b = s.post(R"({"removed": {"rate": 0.1, "seed": 1}, "method": "basel"})");
  CHECK(p["metrics"]["cosine_to_base"].get<double>() >= 0.99);
  CHECK(b["metrics"]["l2_dist_to_base"].get<double>() == 0.0);
  Json c = s.get("/compare", {{"a", p["request_id"]}, {"b", b["request_id"]}});
  CHECK(c["cosine"].get<double>() >= 0.99);
}

TEST_CASE("compare reports pairwise metrics") {
  Session s(fixtures::linear(300, 4));
  s.post(R"({"removed": [1, 2]})");
  s.post(R"({"removed": [1, 2, 3, 4, 5, 6]})");
  s.post(R"({"removed": [100, 101]})");
  Json same = s.get("/compare", {{"a", "r1"}, {"b", "r1"}});
  CHECK(same["l2_dist"].get<double>() == 0.0);
  CHECK(same["sign_flips"] == 0);
  for (const char* other : {"r2", "r3"}) {
    Json c = s.get("/compare", {{"a", "r1"}, {"b", other}});
    CHECK(c["l2_dist"].is_number());
    CHECK(c["cosine"].is_number());
    CHECK(c["max_magnitude_change"].is_number());
  }
  s.get("/compare", {{"a", "r1"}, {"b", "r42"}}, 404);
  s.get("/compare", {{"a", "r1"}}, 400);
}

TEST_CASE("request validation") {
  Session s(fixtures::binary(100, 3), 20, 40);
  s.post(R"({"removed": [100]})", 400);
  s.post(R"({"removed": [-1]})", 400);
  s.post(R"({"removed": ["a"]})", 400);
  s.post(R"({"removed": {"rate": 2}})", 400);
  s.post("not json", 400);
  s.post(R"({"removed": [1], "method": "closed-form"})", 422);
  s.post(R"({"removed": [1], "method": "sorcery"})", 400);
  CHECK(s.service.handle("GET", "/nowhere", {}, "").status == 404);
  CHECK(s.service.handle("DELETE", "/update", {}, "").status == 405);
  CHECK(s.get("/session")["history"].empty());
}
