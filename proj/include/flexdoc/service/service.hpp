#pragma once
// HTTP service: document registration, sessions with interactive
// re-solving, and content-addressed asset retrieval.

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>

#include "flexdoc/content/generate.hpp"
#include "flexdoc/document_io.hpp"
#include "flexdoc/solver/search.hpp"
#include "httplib.h"

namespace flexdoc::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 7878;
  std::filesystem::path cache_dir = std::filesystem::temp_directory_path() / "flexdoc-cache";
  std::filesystem::path asset_root = ".";  // relative asset paths resolve here
  std::chrono::seconds session_ttl{30 * 60};
  std::chrono::milliseconds time_budget{450};

  /// Defaults overridden by FLEXDOC_PORT, FLEXDOC_CACHE_DIR,
  /// FLEXDOC_SESSION_TTL (seconds) and FLEXDOC_TIME_BUDGET_MS.
  static ServiceConfig from_env() {
    ServiceConfig c;
    auto num = [](const char* name, long long fallback) {
      const char* v = std::getenv(name);
      if (!v || !*v) return fallback;
      char* end = nullptr;
      const long long n = std::strtoll(v, &end, 10);
      if (*end != '\0' || n <= 0) throw Error(std::string(name) + " must be a positive integer");
      return n;
    };
    c.port = static_cast<int>(num("FLEXDOC_PORT", c.port));
    if (const char* d = std::getenv("FLEXDOC_CACHE_DIR"); d && *d) c.cache_dir = d;
    c.session_ttl = std::chrono::seconds(num("FLEXDOC_SESSION_TTL", c.session_ttl.count()));
    c.time_budget = std::chrono::milliseconds(num("FLEXDOC_TIME_BUDGET_MS", c.time_budget.count()));
    return c;
  }
};

namespace detail {

/// Standard base64 with optional padding; nullopt on malformed input.
inline std::optional<std::string> base64_decode(std::string_view in) {
  std::string s;
  for (char c : in)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.size() % 4 != 0) return std::nullopt;
  std::string out(s.size() / 4 * 3, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(s.data()), static_cast<int>(s.size()));
  if (n < 0) return std::nullopt;
  std::size_t pad = 0;
  if (!s.empty() && s.back() == '=') ++pad;
  if (s.size() > 1 && s[s.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

inline std::string sniff_media_type(std::string_view bytes) {
  if (bytes.size() >= 4 && bytes.substr(1, 3) == "PNG") return "image/png";
  if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8)
    return "image/jpeg";
  return "application/octet-stream";
}

inline json diagnostics_json(const std::vector<Diagnostic>& d) {
  json a = json::array();
  for (const auto& x : d) a.push_back({{"code", x.code}, {"path", x.path}, {"message", x.message}});
  return a;
}

/// Forcing keys of a preference state, in the solver's relaxation vocabulary.
inline std::set<std::string> forcing_keys(const PreferenceState& p) {
  std::set<std::string> out;
  for (const auto& [eid, _] : p.zoom_deltas) out.insert("zoom:" + eid);
  for (const auto& [eid, _] : p.forced_alternatives) out.insert("forced_alternative:" + eid);
  if (p.forced_template) out.insert("forced_template:" + *p.forced_template);
  return out;
}

}  // namespace detail

/// An HTTP error with a JSON body.
struct HttpError {
  int status;
  json body;
};

class Service {
 public:
  using Clock = std::chrono::steady_clock;

  explicit Service(ServiceConfig config)
      : config_(std::move(config)),
        cache_(config_.cache_dir),
        plugins_(content::PluginRegistry::with_builtins()) {
    // SO_REUSEADDR without SO_REUSEPORT, so a port held by another process
    // fails to bind.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
  }

  ~Service() { stop(); }

  httplib::Server& http() { return server_; }
  const ServiceConfig& config() const { return config_; }

  /// Binds the configured host and port; false if the port is unavailable.
  bool bind() { return server_.bind_to_port(config_.host, config_.port); }
  /// Binds an ephemeral port and returns it, or -1.
  int bind_any() { return server_.bind_to_any_port(config_.host); }
  /// Serves until stop() is called.
  bool serve() { return server_.listen_after_bind(); }
  void stop() {
    stopping_ = true;
    server_.stop();
  }

  // ---- operations (also usable without HTTP) ---------------------------------

  /// Returns the document id and whether it was newly stored.
  std::pair<std::string, bool> add_document(std::string_view body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      throw HttpError{422, error_body("schema-violation", std::string("malformed JSON: ") + e.what(),
                                      {{"schema-violation", "", "malformed JSON"}})};
    }
    const std::string id = content::sha256_hex(j.dump());
    {
      std::shared_lock lock(docs_mu_);
      if (documents_.count(id)) return {id, false};
    }
    std::vector<Diagnostic> diags;
    Document doc = read_document(j, diags);
    if (diags.empty()) diags = validate(doc);
    if (!diags.empty()) throw HttpError{422, error_body("invalid-document", diags.front().message, diags)};
    resolve_assets(doc, j, diags);
    if (!diags.empty()) throw HttpError{422, error_body("invalid-asset", diags.front().message, diags)};
    try {
      content::expand_document(
          doc, [&](const Asset& a) { return read_file(a.path); }, cache_, plugins_, {}, {},
          [&] { return stopping_.load(); });
    } catch (const content::GenerationCancelled&) {
      throw HttpError{503, error_body("shutting-down", "server is stopping")};
    } catch (const Error& e) {
      throw HttpError{422, error_body("generation-failed", e.what())};
    }
    for (const auto& a : doc.assets)
      if (!a.hash.empty()) register_asset(a.hash, a.path, a.media_type.empty() ? "image/png" : a.media_type);

    std::unique_lock lock(docs_mu_);
    auto [it, inserted] = documents_.emplace(id, std::make_shared<const Document>(std::move(doc)));
    return {id, inserted};
  }

  std::shared_ptr<const Document> document(const std::string& id) const {
    std::shared_lock lock(docs_mu_);
    auto it = documents_.find(id);
    return it == documents_.end() ? nullptr : it->second;
  }

  /// Session id, revision and solution JSON.
  json create_session(const json& body) {
    if (!body.is_object() || !body.contains("document_id") || !body["document_id"].is_string())
      throw HttpError{422, error_body("schema-violation", "document_id (string) is required")};
    auto doc = document(body["document_id"].get<std::string>());
    if (!doc) throw HttpError{404, error_body("not-found", "unknown document")};
    const Viewport vp = parse_viewport(body.value("viewport", json()));
    PreferenceState prefs;
    prefs.sliders = {{Modality::audio, 0.5}, {Modality::image, 0.5}, {Modality::text, 0.5}};
    if (body.contains("preferences")) prefs = parse_prefs(*doc, body["preferences"]);

    auto s = std::make_shared<Session>();
    s->id = new_session_id();
    s->document_id = body["document_id"].get<std::string>();
    s->doc = doc;
    s->viewport = vp;
    s->prefs = prefs;
    s->solution = run_solve(*s, vp, prefs, 0);
    s->revision = 1;
    s->touched = Clock::now();
    {
      std::lock_guard lock(sessions_mu_);
      sweep_locked();
      sessions_[s->id] = s;
    }
    return response(*s);
  }

  json get_solution(const std::string& sid) {
    auto s = session(sid);
    std::lock_guard lock(s->mu);
    return response(*s);
  }

  json put_viewport(const std::string& sid, const json& body, std::optional<std::uint64_t> expected) {
    auto s = session(sid);
    const Viewport vp = parse_viewport(body);
    return mutate(*s, expected, [&](Viewport& v, PreferenceState&) {
      v = vp;
      return std::vector<std::string>{};
    });
  }

  json put_preferences(const std::string& sid, const json& body, std::optional<std::uint64_t> expected) {
    auto s = session(sid);
    const PreferenceState next = parse_prefs(*s->doc, body);
    return mutate(*s, expected, [&](Viewport&, PreferenceState& p) {
      p = next;
      return std::vector<std::string>{};
    });
  }

  json post_interaction(const std::string& sid, const json& body, std::optional<std::uint64_t> expected) {
    auto s = session(sid);
    if (!body.is_object() || !body.contains("kind") || !body["kind"].is_string())
      throw HttpError{422, error_body("schema-violation", "kind (string) is required")};
    const auto kind = solver::interaction_from_string(body["kind"].get<std::string>());
    if (!kind) throw HttpError{422, error_body("schema-violation", "unknown interaction kind")};
    solver::Interaction in;
    in.kind = *kind;
    auto str = [&](const char* k) {
      return body.contains(k) && body[k].is_string() ? body[k].get<std::string>() : std::string();
    };
    in.element_id = str("element_id");
    in.template_id = str("template_id");
    in.alternative_id = str("alternative_id");
    return mutate(*s, expected, [&](Viewport&, PreferenceState& p) {
      LayoutSolution shown;
      {
        std::lock_guard lock(s->mu);
        shown = s->solution;
      }
      try {
        p = solver::apply_interaction(*s->doc, shown, in, p);
      } catch (const std::invalid_argument& e) {
        throw HttpError{422, error_body("invalid-interaction", e.what())};
      }
      return solver::relaxation_keys(in);
    });
  }

  /// Solves a stored document without creating a session.
  LayoutSolution solve(const std::string& document_id, const Viewport& vp, const PreferenceState& prefs,
                       solver::SearchMode mode = solver::SearchMode::automatic) {
    auto doc = document(document_id);
    if (!doc) throw HttpError{404, error_body("not-found", "unknown document")};
    if (!vp.valid()) throw HttpError{422, error_body("invalid-viewport", "viewport must be positive")};
    const auto diags = validate_preferences(*doc, prefs);
    if (!diags.empty()) throw HttpError{422, error_body("invalid-preferences", diags.front().message, diags)};
    solver::SolverConfig cfg;
    cfg.mode = mode;
    cfg.time_budget = config_.time_budget;
    cfg.cancelled = [this] { return stopping_.load(); };
    return checked_solve(*doc, vp, prefs, cfg);
  }

  /// Path and media type of a stored asset.
  std::optional<std::pair<std::string, std::string>> asset(const std::string& hash) const {
    {
      std::shared_lock lock(assets_mu_);
      if (auto it = assets_.find(hash); it != assets_.end()) return it->second;
    }
    if (auto p = cache_.path_for_hash(hash)) return std::make_pair(*p, std::string("image/png"));
    return std::nullopt;
  }

  std::size_t session_count() {
    std::lock_guard lock(sessions_mu_);
    sweep_locked();
    return sessions_.size();
  }

 private:
  struct Session {
    std::string id;
    std::string document_id;
    std::shared_ptr<const Document> doc;
    std::mutex mu;        // guards the fields below
    Viewport viewport;
    PreferenceState prefs;
    LayoutSolution solution;
    std::uint64_t revision = 0;
    Clock::time_point touched;
    std::mutex solve_mu;  // one solve at a time
    std::atomic<std::uint64_t> ticket{0};
    solver::GeometryCache geometry;
  };

  static json error_body(const std::string& code, const std::string& message,
                         const std::vector<Diagnostic>& diags = {}) {
    json j = {{"error", code}, {"message", message}};
    if (!diags.empty()) j["diagnostics"] = detail::diagnostics_json(diags);
    return j;
  }

  static Viewport parse_viewport(const json& j) {
    if (!j.is_object() || !j.contains("width") || !j.contains("height") || !j["width"].is_number() ||
        !j["height"].is_number())
      throw HttpError{422, error_body("schema-violation", "viewport needs numeric width and height")};
    const Viewport vp{j["width"].get<double>(), j["height"].get<double>()};
    if (!vp.valid()) throw HttpError{422, error_body("invalid-viewport", "viewport must be positive")};
    return vp;
  }

  static PreferenceState parse_prefs(const Document& doc, const json& j) {
    PreferenceState p;
    try {
      p = parse_preferences(j);
    } catch (const DocumentError& e) {
      throw HttpError{422, error_body("invalid-preferences", e.what(), e.diagnostics())};
    }
    const auto diags = validate_preferences(doc, p);
    if (!diags.empty()) throw HttpError{422, error_body("invalid-preferences", diags.front().message, diags)};
    return p;
  }

  static json response(const Session& s) {
    return {{"session_id", s.id}, {"document_id", s.document_id}, {"revision", s.revision},
            {"solution", to_json(s.solution)}};
  }

  std::string new_session_id() {
    std::lock_guard lock(rng_mu_);
    std::uniform_int_distribution<std::uint64_t> d;
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(d(rng_)),
                  static_cast<unsigned long long>(d(rng_)));
    return buf;
  }

  std::shared_ptr<Session> session(const std::string& id) {
    std::lock_guard lock(sessions_mu_);
    sweep_locked();
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw HttpError{404, error_body("not-found", "unknown session")};
    {
      std::lock_guard slock(it->second->mu);
      it->second->touched = Clock::now();
    }
    return it->second;
  }

  void sweep_locked() {
    const auto now = Clock::now();
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      std::unique_lock slock(it->second->mu, std::try_to_lock);
      const bool idle = slock.owns_lock() && now - it->second->touched > config_.session_ttl;
      slock = {};
      it = idle ? sessions_.erase(it) : std::next(it);
    }
  }

  solver::SolverConfig solver_config(Session& s, std::uint64_t ticket) {
    solver::SolverConfig cfg;
    cfg.time_budget = config_.time_budget;
    cfg.cache = &s.geometry;
    cfg.cancelled = [&s, ticket, this] { return s.ticket.load() != ticket || stopping_.load(); };
    return cfg;
  }

  LayoutSolution run_solve(Session& s, const Viewport& vp, const PreferenceState& prefs, std::uint64_t ticket) {
    return checked_solve(*s.doc, vp, prefs, solver_config(s, ticket));
  }

  static LayoutSolution checked_solve(const Document& doc, const Viewport& vp, const PreferenceState& prefs,
                                      const solver::SolverConfig& cfg) {
    try {
      return solver::solve(doc, vp, prefs, cfg);
    } catch (const solver::InfeasibleError& e) {
      json b = error_body("infeasible", e.what());
      b["relaxed"] = e.relaxed();
      throw HttpError{409, b};
    } catch (const solver::CancelledError&) {
      throw HttpError{409, error_body("superseded", "a newer request for this session replaced this one")};
    }
  }

  /// Applies `change` to a copy of the session state, re-solves and commits.
  /// `change` returns relaxation keys that must not be dropped.
  template <class F>
  json mutate(Session& s, std::optional<std::uint64_t> expected, F&& change) {
    Viewport vp;
    PreferenceState prefs;
    {
      std::lock_guard lock(s.mu);
      if (expected && *expected != s.revision) throw stale(s.revision);
      vp = s.viewport;
      prefs = s.prefs;
    }
    const auto before = detail::forcing_keys(prefs);
    std::vector<std::string> protect = change(vp, prefs);
    for (const auto& k : detail::forcing_keys(prefs))
      if (!before.count(k)) protect.push_back(k);

    const std::uint64_t ticket = ++s.ticket;  // cancels any solve in flight
    std::lock_guard solving(s.solve_mu);
    if (s.ticket.load() != ticket)
      throw HttpError{409, error_body("superseded", "a newer request for this session replaced this one")};
    LayoutSolution sol = run_solve(s, vp, prefs, ticket);
    for (const auto& r : sol.relaxed)
      if (std::find(protect.begin(), protect.end(), r) != protect.end()) {
        json b = error_body("infeasible", "the requested change cannot be honored; it was relaxed to find a layout");
        b["relaxed"] = sol.relaxed;
        throw HttpError{409, b};
      }

    std::lock_guard lock(s.mu);
    if (expected && *expected != s.revision) throw stale(s.revision);
    s.viewport = vp;
    s.prefs = std::move(prefs);
    s.solution = std::move(sol);
    ++s.revision;
    s.touched = Clock::now();
    return response(s);
  }

  static HttpError stale(std::uint64_t current) {
    json b = error_body("stale-revision", "expected revision does not match");
    b["revision"] = current;
    return {409, b};
  }

  void register_asset(const std::string& hash, const std::string& path, const std::string& media_type) {
    std::unique_lock lock(assets_mu_);
    assets_.emplace(hash, std::make_pair(path, media_type));
  }

  /// Decodes inline asset data into the cache directory, resolves paths and
  /// fills content hashes.
  void resolve_assets(Document& doc, const json& j, std::vector<Diagnostic>& diags) {
    const json* arr = j.contains("assets") && j["assets"].is_array() ? &j["assets"] : nullptr;
    for (std::size_t i = 0; i < doc.assets.size(); ++i) {
      Asset& a = doc.assets[i];
      const std::string p = "/assets/" + std::to_string(i);
      std::string bytes;
      if (arr && (*arr)[i].contains("data")) {
        auto decoded = detail::base64_decode((*arr)[i]["data"].get<std::string>());
        if (!decoded) {
          diags.push_back({"invalid-asset", p + "/data", "malformed base64"});
          continue;
        }
        bytes = std::move(*decoded);
        const std::string hash = content::sha256_hex(bytes);
        const auto file = cache_.directory() / (hash + ".bin");
        if (!std::filesystem::exists(file)) {
          const auto tmp = cache_.directory() / (hash + ".bin.tmp" + new_session_id());
          {
            std::ofstream out(tmp, std::ios::binary);
            if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
              throw HttpError{500, error_body("io-error", "cannot write asset")};
          }
          std::filesystem::rename(tmp, file);
        }
        a.path = file.string();
      } else {
        std::filesystem::path path(a.path);
        if (path.is_relative()) path = config_.asset_root / path;
        a.path = path.string();
        std::ifstream in(path, std::ios::binary);
        if (!in) continue;  // layout does not need the bytes; generation reports it if it does
        bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
      }
      const std::string hash = content::sha256_hex(bytes);
      if (!a.hash.empty() && a.hash != hash) {
        diags.push_back({"asset-hash-mismatch", p + "/sha256", "declared sha256 does not match the bytes"});
        continue;
      }
      a.hash = hash;
      if (a.media_type.empty()) a.media_type = detail::sniff_media_type(bytes);
    }
  }

  // ---- HTTP ---------------------------------------------------------------

  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <class F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const HttpError& e) {
      send(res, e.status, e.body);
    } catch (const std::exception& e) {
      send(res, 500, error_body("internal", e.what()));
    }
  }

  static std::optional<std::uint64_t> expected_revision(const httplib::Request& req) {
    if (!req.has_header("X-Expected-Revision")) return std::nullopt;
    const std::string v = req.get_header_value("X-Expected-Revision");
    char* end = nullptr;
    const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0')
      throw HttpError{422, error_body("schema-violation", "X-Expected-Revision must be an integer")};
    return n;
  }

  static json body_json(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw HttpError{422, error_body("schema-violation", std::string("malformed JSON: ") + e.what())};
    }
  }

  void routes() {
    server_.Post("/documents", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto [id, created] = add_document(req.body);
        send(res, created ? 201 : 200, {{"document_id", id}});
      });
    });
    server_.Get(R"(/documents/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto doc = document(req.matches[1]);
        if (!doc) throw HttpError{404, error_body("not-found", "unknown document")};
        send(res, 200, to_json(*doc));
      });
    });
    server_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send(res, 201, create_session(body_json(req))); });
    });
    server_.Get(R"(/sessions/([0-9a-f]+)/solution)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, get_solution(req.matches[1])); });
    });
    server_.Put(R"(/sessions/([0-9a-f]+)/viewport)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, put_viewport(req.matches[1], body_json(req), expected_revision(req))); });
    });
    server_.Put(R"(/sessions/([0-9a-f]+)/preferences)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    send(res, 200, put_preferences(req.matches[1], body_json(req), expected_revision(req)));
                  });
                });
    server_.Post(R"(/sessions/([0-9a-f]+)/interactions)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   guarded(res, [&] {
                     send(res, 200, post_interaction(req.matches[1], body_json(req), expected_revision(req)));
                   });
                 });
    server_.Get(R"(/assets/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto a = asset(req.matches[1]);
        if (!a) throw HttpError{404, error_body("not-found", "unknown asset")};
        std::string bytes;
        try {
          bytes = read_file(a->first);
        } catch (const Error&) {
          throw HttpError{404, error_body("not-found", "asset bytes are gone")};
        }
        res.set_header("Cache-Control", "public, max-age=31536000, immutable");
        res.set_content(std::move(bytes), a->second);
      });
    });
  }

  ServiceConfig config_;
  content::VariantCache cache_;
  content::PluginRegistry plugins_;
  httplib::Server server_;
  std::atomic<bool> stopping_{false};

  mutable std::shared_mutex docs_mu_;
  std::map<std::string, std::shared_ptr<const Document>> documents_;
  mutable std::shared_mutex assets_mu_;
  std::map<std::string, std::pair<std::string, std::string>> assets_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace flexdoc::service
