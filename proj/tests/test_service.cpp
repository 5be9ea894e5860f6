#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "flexdoc/service/service.hpp"

using namespace flexdoc;
using namespace flexdoc::service;

namespace {

const std::string kSamples = FLEXDOC_SAMPLES_DIR;
const std::string kFixtures = FLEXDOC_FIXTURES_DIR;

std::string base64(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

/// A service on an ephemeral port with its own cache directory.
struct Running {
  std::filesystem::path dir;
  std::unique_ptr<Service> svc;
  std::thread th;
  int port = -1;
  std::unique_ptr<httplib::Client> cli;

  explicit Running(std::chrono::seconds ttl = std::chrono::seconds(1800)) {
    static std::atomic<int> counter{0};
    dir = std::filesystem::temp_directory_path() /
          ("flexdoc-test-service-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    ServiceConfig cfg;
    cfg.cache_dir = dir;
    cfg.asset_root = kSamples;
    cfg.session_ttl = ttl;
    cfg.time_budget = std::chrono::seconds(30);
    svc = std::make_unique<Service>(cfg);
    port = svc->bind_any();
    th = std::thread([this] { svc->serve(); });
    svc->http().wait_until_ready();
    cli = std::make_unique<httplib::Client>("127.0.0.1", port);
    cli->set_read_timeout(60, 0);
  }
  ~Running() {
    svc->stop();
    th.join();
    std::filesystem::remove_all(dir);
  }

  httplib::Result post(const std::string& path, const json& body, const httplib::Headers& h = {}) {
    return cli->Post(path, h, body.dump(), "application/json");
  }
  httplib::Result put(const std::string& path, const json& body, const httplib::Headers& h = {}) {
    return cli->Put(path, h, body.dump(), "application/json");
  }

  std::string upload(const json& doc) {
    auto r = post("/documents", doc);
    EXPECT_TRUE(r && (r->status == 201 || r->status == 200)) << (r ? r->body : "no response");
    return json::parse(r->body)["document_id"].get<std::string>();
  }

  json session(const std::string& doc_id, double w, double h) {
    auto r = post("/sessions", {{"document_id", doc_id}, {"viewport", {{"width", w}, {"height", h}}}});
    EXPECT_TRUE(r && r->status == 201) << (r ? r->body : "no response");
    return json::parse(r->body);
  }
};

json news_json() { return json::parse(read_file(kSamples + "/news.json")); }

solver::SolverConfig direct_config() {
  solver::SolverConfig c;
  c.time_budget = std::chrono::seconds(30);
  return c;
}

PreferenceState neutral() {
  PreferenceState p;
  p.sliders = {{Modality::audio, 0.5}, {Modality::image, 0.5}, {Modality::text, 0.5}};
  return p;
}

/// One element with a text and an image alternative.
json switchable() {
  return json::parse(R"({
    "schema_version": 1,
    "templates": [{"id": "t", "rank": 1, "tabstops": {"x": [], "y": []},
                   "areas": [{"left": "left", "right": "right", "top": "top", "bottom": "bottom",
                              "elements": ["lead"]}]}],
    "elements": [{"id": "lead", "alternatives": [
      {"id": "lead-text", "modality": "text", "rank": 1, "preferred_size": {"w": 400, "h": 80},
       "text": "The harbor reopened at dawn after a week of repairs.", "preferred_font_size": 16},
      {"id": "lead-photo", "modality": "image", "rank": 2, "preferred_size": {"w": 400, "h": 250},
       "asset": "harbor"}]}],
    "assets": [{"id": "harbor", "path": "assets/harbor.png", "media_type": "image/png"}]
  })");
}

/// Two photos; t2 puts "a" right of a tabstop, so a pin at x = 0 rules it out.
json pin_blocker() {
  return json::parse(R"({
    "schema_version": 1,
    "templates": [
      {"id": "t1", "rank": 1, "tabstops": {"x": [], "y": []},
       "areas": [{"left": "left", "right": "right", "top": "top", "bottom": "bottom", "elements": ["a", "b"]}]},
      {"id": "t2", "rank": 2, "tabstops": {"x": ["s"], "y": []},
       "areas": [{"left": "left", "right": "s", "top": "top", "bottom": "bottom", "elements": ["b"]},
                 {"left": "s", "right": "right", "top": "top", "bottom": "bottom", "elements": ["a"]}]}],
    "elements": [
      {"id": "a", "alternatives": [{"id": "a1", "modality": "image", "rank": 1,
                                    "preferred_size": {"w": 200, "h": 120}, "asset": "harbor"}]},
      {"id": "b", "alternatives": [{"id": "b1", "modality": "image", "rank": 1,
                                    "preferred_size": {"w": 200, "h": 120}, "asset": "market"}]}],
    "assets": [{"id": "harbor", "path": "assets/harbor.png"}, {"id": "market", "path": "assets/market.png"}]
  })");
}

}  // namespace

// ---- documents -------------------------------------------------------------------

TEST(Service, UploadIsContentAddressed) {
  Running s;
  auto r1 = s.post("/documents", news_json());
  ASSERT_TRUE(r1);
  EXPECT_EQ(r1->status, 201);
  EXPECT_EQ(r1->get_header_value("Content-Type"), "application/json");
  const auto id = json::parse(r1->body)["document_id"].get<std::string>();
  EXPECT_EQ(id.size(), 64u);
  auto r2 = s.cli->Post("/documents", news_json().dump(4), "application/json");  // same content, other whitespace
  ASSERT_TRUE(r2);
  EXPECT_EQ(r2->status, 200);
  EXPECT_EQ(json::parse(r2->body)["document_id"], id);
  auto doc = s.cli->Get("/documents/" + id);
  ASSERT_TRUE(doc);
  EXPECT_EQ(doc->status, 200);
  EXPECT_EQ(json::parse(doc->body)["elements"].size(), 7u);
}

TEST(Service, InvalidBundleGets422WithDiagnostics) {
  Running s;
  auto r = s.cli->Post("/documents", read_file(kFixtures + "/duplicate-rank.json"), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 422);
  const auto body = json::parse(r->body);
  ASSERT_TRUE(body["diagnostics"].is_array());
  ASSERT_FALSE(body["diagnostics"].empty());
  EXPECT_EQ(body["diagnostics"][0]["code"], "duplicate-rank");
  auto bad = s.cli->Post("/documents", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 422);
}

TEST(Service, InlineAssetDataIsStoredAndServed) {
  Running s;
  const std::string png = read_file(kSamples + "/assets/market.png");
  json doc = switchable();
  doc["assets"][0] = {{"id", "harbor"}, {"data", base64(png)}};
  const auto id = s.upload(doc);
  const auto stored = json::parse(s.cli->Get("/documents/" + id)->body);
  const std::string hash = stored["assets"][0]["sha256"];
  EXPECT_EQ(hash, content::sha256_hex(png));
  auto a = s.cli->Get("/assets/" + hash);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->status, 200);
  EXPECT_EQ(a->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(a->body, png);

  doc["assets"][0] = {{"id", "harbor"}, {"data", "!!!not base64"}};
  auto bad = s.post("/documents", doc);
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 422);
  doc["assets"][0] = {{"id", "harbor"}, {"data", base64(png)}, {"sha256", std::string(64, '0')}};
  auto mismatch = s.post("/documents", doc);
  ASSERT_TRUE(mismatch);
  EXPECT_EQ(mismatch->status, 422);
  EXPECT_EQ(json::parse(mismatch->body)["diagnostics"][0]["code"], "asset-hash-mismatch");
}

// ---- sessions ----------------------------------------------------------------------

TEST(Service, SessionSolutionEqualsDirectSolve) {
  Running s;
  const auto id = s.upload(news_json());
  const auto created = s.session(id, 1280, 800);
  EXPECT_EQ(created["revision"], 1);
  EXPECT_EQ(created["solution"]["template_id"], "three-column");
  const Document doc = *s.svc->document(id);
  const auto direct = solver::solve(doc, {1280, 800}, neutral(), direct_config());
  EXPECT_EQ(created["solution"].dump(), to_json(direct).dump());
  EXPECT_EQ(created["solution"].dump(), to_json(solver::solve(doc, {1280, 800}, {}, direct_config())).dump());

  const std::string sid = created["session_id"];
  auto again = s.cli->Get("/sessions/" + sid + "/solution");
  ASSERT_TRUE(again);
  EXPECT_EQ(again->status, 200);
  EXPECT_EQ(json::parse(again->body), created);
}

TEST(Service, SessionErrors) {
  Running s;
  const auto id = s.upload(news_json());
  auto unknown = s.post("/sessions", {{"document_id", std::string(64, 'a')}, {"viewport", {{"width", 800}, {"height", 600}}}});
  ASSERT_TRUE(unknown);
  EXPECT_EQ(unknown->status, 404);
  auto zero = s.post("/sessions", {{"document_id", id}, {"viewport", {{"width", 0}, {"height", 600}}}});
  ASSERT_TRUE(zero);
  EXPECT_EQ(zero->status, 422);
  auto missing = s.post("/sessions", {{"viewport", {{"width", 800}, {"height", 600}}}});
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 422);
  auto no_session = s.cli->Get("/sessions/abcdef/solution");
  ASSERT_TRUE(no_session);
  EXPECT_EQ(no_session->status, 404);
  const std::string sid = s.session(id, 800, 600)["session_id"];
  auto bad_kind = s.post("/sessions/" + sid + "/interactions", {{"kind", "wiggle"}});
  ASSERT_TRUE(bad_kind);
  EXPECT_EQ(bad_kind->status, 422);
  auto bad_element = s.post("/sessions/" + sid + "/interactions", {{"kind", "zoom_in"}, {"element_id", "nope"}});
  ASSERT_TRUE(bad_element);
  EXPECT_EQ(bad_element->status, 422);
  auto bad_prefs = s.put("/sessions/" + sid + "/preferences", {{"sliders", {{"image", 3}}}});
  ASSERT_TRUE(bad_prefs);
  EXPECT_EQ(bad_prefs->status, 422);
  auto dangling = s.put("/sessions/" + sid + "/preferences", {{"forced_template", "nope"}});
  ASSERT_TRUE(dangling);
  EXPECT_EQ(dangling->status, 422);
  EXPECT_EQ(json::parse(s.cli->Get("/sessions/" + sid + "/solution")->body)["revision"], 1);
}

TEST(Service, ImageSliderSwitchesLikeDirectSolve) {
  Running s;
  const auto id = s.upload(switchable());
  const auto created = s.session(id, 600, 600);
  EXPECT_EQ(created["solution"]["elements"][0]["alternative_id"], "lead-text");
  const std::string sid = created["session_id"];
  const json prefs = {{"sliders", {{"image", 0.8}}}};
  auto r = s.put("/sessions/" + sid + "/preferences", prefs);
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  const auto body = json::parse(r->body);
  EXPECT_EQ(body["revision"], 2);
  EXPECT_EQ(body["solution"]["elements"][0]["alternative_id"], "lead-photo");
  const auto direct = solver::solve(*s.svc->document(id), {600, 600}, parse_preferences(prefs), direct_config());
  EXPECT_EQ(body["solution"].dump(), to_json(direct).dump());
  EXPECT_FALSE(body["solution"]["elements"][0]["asset"].get<std::string>().empty());
}

TEST(Service, PinHoldsAcrossViewportChange) {
  Running s;
  const auto id = s.upload(news_json());
  const std::string sid = s.session(id, 1280, 800)["session_id"];
  auto pin = s.post("/sessions/" + sid + "/interactions", {{"kind", "pin"}, {"element_id", "harbor-photo"}});
  ASSERT_TRUE(pin);
  ASSERT_EQ(pin->status, 200) << pin->body;
  auto resized = s.put("/sessions/" + sid + "/viewport", {{"width", 900}, {"height", 800}});
  ASSERT_TRUE(resized);
  ASSERT_EQ(resized->status, 200) << resized->body;
  auto find = [](const json& sol, const std::string& eid) {
    for (const auto& e : sol["elements"])
      if (e["element_id"] == eid) return e;
    return json();
  };
  const auto before = find(json::parse(pin->body)["solution"], "harbor-photo");
  const auto after = find(json::parse(resized->body)["solution"], "harbor-photo");
  for (const char* k : {"x", "y", "w", "h"}) EXPECT_EQ(before[k].get<double>(), after[k].get<double>()) << k;
  EXPECT_EQ(json::parse(resized->body)["revision"], 3);
}

TEST(Service, UnfittableTemplateSwitchIs409) {
  Running s;
  const auto id = s.upload(pin_blocker());
  const std::string sid = s.session(id, 800, 600)["session_id"];
  ASSERT_EQ(s.post("/sessions/" + sid + "/interactions", {{"kind", "pin"}, {"element_id", "a"}})->status, 200);
  auto r = s.post("/sessions/" + sid + "/interactions", {{"kind", "switch_template"}, {"template_id", "t2"}});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 409);
  const auto body = json::parse(r->body);
  EXPECT_EQ(body["error"], "infeasible");
  EXPECT_EQ(body["relaxed"], json::array({"forced_template:t2"}));
  const auto current = json::parse(s.cli->Get("/sessions/" + sid + "/solution")->body);
  EXPECT_EQ(current["revision"], 2);
  EXPECT_EQ(current["solution"]["template_id"], "t1");
}

TEST(Service, RevisionCountsMutations) {
  Running s;
  const auto id = s.upload(news_json());
  const std::string sid = s.session(id, 1280, 800)["session_id"];
  ASSERT_EQ(s.put("/sessions/" + sid + "/viewport", {{"width", 834}, {"height", 1112}})->status, 200);
  ASSERT_EQ(s.put("/sessions/" + sid + "/preferences", {{"avoid_scrolling", false}})->status, 200);
  ASSERT_EQ(s.post("/sessions/" + sid + "/interactions", {{"kind", "zoom_out"}, {"element_id", "harbor-story"}})->status,
            200);
  const auto current = json::parse(s.cli->Get("/sessions/" + sid + "/solution")->body);
  EXPECT_EQ(current["revision"], 4);
  EXPECT_EQ(current["solution"]["template_id"], "two-column");
}

TEST(Service, StaleExpectedRevisionIs409) {
  Running s;
  const auto id = s.upload(news_json());
  const std::string sid = s.session(id, 1280, 800)["session_id"];
  auto ok = s.put("/sessions/" + sid + "/viewport", {{"width", 1000}, {"height", 800}}, {{"X-Expected-Revision", "1"}});
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  auto stale = s.put("/sessions/" + sid + "/viewport", {{"width", 900}, {"height", 800}}, {{"X-Expected-Revision", "1"}});
  ASSERT_TRUE(stale);
  EXPECT_EQ(stale->status, 409);
  EXPECT_EQ(json::parse(stale->body)["revision"], 2);
  auto junk = s.put("/sessions/" + sid + "/viewport", {{"width", 900}, {"height", 800}}, {{"X-Expected-Revision", "x"}});
  ASSERT_TRUE(junk);
  EXPECT_EQ(junk->status, 422);
}

TEST(Service, ConcurrentConflictingMutationsOneWins) {
  Running s;
  const auto id = s.upload(news_json());
  const std::string sid = s.session(id, 1280, 800)["session_id"];
  for (int round = 0; round < 5; ++round) {
    const std::string rev =
        std::to_string(json::parse(s.cli->Get("/sessions/" + sid + "/solution")->body)["revision"].get<int>());
    int statuses[2] = {0, 0};
    std::thread a([&] {
      httplib::Client c("127.0.0.1", s.port);
      auto r = c.Put("/sessions/" + sid + "/viewport", {{"X-Expected-Revision", rev}},
                     json({{"width", 700 + round}, {"height", 800}}).dump(), "application/json");
      statuses[0] = r ? r->status : -1;
    });
    std::thread b([&] {
      httplib::Client c("127.0.0.1", s.port);
      auto r = c.Put("/sessions/" + sid + "/viewport", {{"X-Expected-Revision", rev}},
                     json({{"width", 1100 + round}, {"height", 800}}).dump(), "application/json");
      statuses[1] = r ? r->status : -1;
    });
    a.join();
    b.join();
    std::multiset<int> got{statuses[0], statuses[1]};
    EXPECT_EQ(got, (std::multiset<int>{200, 409})) << round;
  }
  EXPECT_EQ(json::parse(s.cli->Get("/sessions/" + sid + "/solution")->body)["revision"], 6);
}

TEST(Service, GeneratedVariantAssetMatchesItsDimensions) {
  Running s;
  json doc = news_json();
  for (auto& e : doc["elements"])
    if (e["id"] == "harbor-photo") e["generate"] = true;
  const auto id = s.upload(doc);
  const std::string sid = s.session(id, 1280, 800)["session_id"];
  auto r = s.post("/sessions/" + sid + "/interactions",
                  {{"kind", "switch_element"}, {"element_id", "harbor-photo"}, {"alternative_id", "harbor-photo-wide~50"}});
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  const json body = json::parse(r->body);
  std::string hash;
  for (const auto& e : body["solution"]["elements"])
    if (e["element_id"] == "harbor-photo") {
      EXPECT_EQ(e["alternative_id"], "harbor-photo-wide~50");
      hash = e["asset"].get<std::string>();
    }
  ASSERT_FALSE(hash.empty());
  auto a = s.cli->Get("/assets/" + hash);
  ASSERT_TRUE(a);
  ASSERT_EQ(a->status, 200);
  EXPECT_EQ(a->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(content::sha256_hex(a->body), hash);
  const auto raster = content::decode_png(a->body);
  const Document stored = *s.svc->document(id);
  const Alternative* alt = stored.find_element("harbor-photo")->find("harbor-photo-wide~50");
  EXPECT_EQ(alt->asset, "harbor-img~" + std::to_string(raster.width) + "x" + std::to_string(raster.height));
  const auto source = content::decode_png(read_file(kSamples + "/assets/harbor.png"));
  EXPECT_NEAR(alt->preferred_size.w, 400.0 * raster.width / source.width, 1e-9);

  auto missing = s.cli->Get("/assets/" + std::string(64, '0'));
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
}

TEST(Service, IdleSessionsExpire) {
  Running s(std::chrono::seconds(1));
  const auto id = s.upload(news_json());
  const std::string sid = s.session(id, 800, 600)["session_id"];
  EXPECT_EQ(s.cli->Get("/sessions/" + sid + "/solution")->status, 200);
  std::this_thread::sleep_for(std::chrono::milliseconds(1300));
  EXPECT_EQ(s.cli->Get("/sessions/" + sid + "/solution")->status, 404);
  EXPECT_EQ(s.svc->session_count(), 0u);
}

TEST(Service, ConfigFromEnvironment) {
  ::setenv("FLEXDOC_PORT", "9191", 1);
  ::setenv("FLEXDOC_SESSION_TTL", "60", 1);
  ::setenv("FLEXDOC_TIME_BUDGET_MS", "200", 1);
  ::setenv("FLEXDOC_CACHE_DIR", "/tmp/flexdoc-env-cache", 1);
  const auto c = ServiceConfig::from_env();
  EXPECT_EQ(c.port, 9191);
  EXPECT_EQ(c.session_ttl, std::chrono::seconds(60));
  EXPECT_EQ(c.time_budget, std::chrono::milliseconds(200));
  EXPECT_EQ(c.cache_dir, "/tmp/flexdoc-env-cache");
  ::setenv("FLEXDOC_PORT", "zero", 1);
  EXPECT_THROW(ServiceConfig::from_env(), Error);
  for (const char* v : {"FLEXDOC_PORT", "FLEXDOC_SESSION_TTL", "FLEXDOC_TIME_BUDGET_MS", "FLEXDOC_CACHE_DIR"})
    ::unsetenv(v);
  EXPECT_EQ(ServiceConfig::from_env().port, 7878);
}

TEST(Service, Base64Decoding) {
  EXPECT_EQ(service::detail::base64_decode("YWJj"), "abc");
  EXPECT_EQ(service::detail::base64_decode("YWI="), "ab");
  EXPECT_EQ(service::detail::base64_decode("YQ=="), "a");
  EXPECT_EQ(service::detail::base64_decode("YW\nJj"), "abc");
  EXPECT_EQ(service::detail::base64_decode("YWJ"), std::nullopt);
  EXPECT_EQ(service::detail::base64_decode("Y*Jj"), std::nullopt);
}
