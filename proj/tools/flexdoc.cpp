// flexdoc: validate bundles, solve layouts, retarget images, summarize text
// and run the HTTP service.
//
// Exit codes: 0 success, 1 domain failure (invalid document, infeasible
// layout, content precondition), 2 environment failure (I/O, bind, usage).

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "flexdoc/content/plugins.hpp"
#include "flexdoc/content/raster.hpp"
#include "flexdoc/service/service.hpp"

namespace {

using namespace flexdoc;

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kEnvironment = 2;

/// Thrown for failures that map to exit code 2.
struct EnvironmentError : Error {
  using Error::Error;
};

std::string read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EnvironmentError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_output(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
    throw EnvironmentError("cannot write " + path);
}

void print_diagnostics(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) std::cerr << d.code << ' ' << (d.path.empty() ? "/" : d.path) << ' ' << d.message << '\n';
}

void print_http_error(const service::HttpError& e) {
  const json& b = e.body;
  std::cerr << b.value("error", "error") << ": " << b.value("message", "") << '\n';
  if (b.contains("relaxed") && !b["relaxed"].empty()) {
    std::cerr << "relaxed:";
    for (const auto& r : b["relaxed"]) std::cerr << ' ' << r.get<std::string>();
    std::cerr << '\n';
  }
  if (b.contains("diagnostics"))
    for (const auto& d : b["diagnostics"])
      std::cerr << d.value("code", "") << ' ' << d.value("path", "/") << ' ' << d.value("message", "") << '\n';
}

// ---- commands ------------------------------------------------------------------

int cmd_validate(const std::string& path) {
  const auto diags = check_document(read_input(path));
  print_diagnostics(diags);
  return diags.empty() ? kOk : kDomain;
}

struct SolveArgs {
  std::string doc;
  double width = 0;
  double height = 0;
  std::string prefs;
  std::string out;
  std::string mode = "auto";
};

int cmd_solve(const SolveArgs& a) {
  const std::string bundle = read_input(a.doc);
  PreferenceState prefs;
  if (!a.prefs.empty()) {
    json j;
    try {
      j = json::parse(read_input(a.prefs));
    } catch (const json::parse_error& e) {
      std::cerr << "schema-violation / malformed preferences JSON: " << e.what() << '\n';
      return kDomain;
    }
    try {
      prefs = parse_preferences(j);
    } catch (const DocumentError& e) {
      print_diagnostics(e.diagnostics());
      return kDomain;
    }
  }

  service::ServiceConfig cfg = service::ServiceConfig::from_env();
  cfg.asset_root = std::filesystem::absolute(a.doc).parent_path();
  service::Service svc(cfg);
  LayoutSolution sol;
  try {
    const auto [id, created] = svc.add_document(bundle);
    sol = svc.solve(id, {a.width, a.height}, prefs, *solver::search_mode_from_string(a.mode));
  } catch (const service::HttpError& e) {
    print_http_error(e);
    return e.status >= 500 && e.status != 503 ? kEnvironment : kDomain;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid-preferences: " << e.what() << '\n';
    return kDomain;
  }
  if (!sol.relaxed.empty()) {
    std::cerr << "warning: relaxed";
    for (const auto& r : sol.relaxed) std::cerr << ' ' << r;
    std::cerr << '\n';
  }
  if (sol.truncated) std::cerr << "warning: search stopped at the time budget; the result may not be optimal\n";

  const std::string bytes = serialize_solution(sol);
  if (a.out.empty()) std::cout << bytes;
  else write_output(a.out, bytes);
  return kOk;
}

int cmd_carve(const std::string& in, int width, int height, const std::string& out) {
  const content::Raster src = content::decode_image(read_input(in));
  const auto res = content::carve(src, width, height);
  write_output(out, content::encode_png(res.raster));
  return kOk;
}

int cmd_summarize(const std::string& in, double ratio) {
  const std::string text = read_input(in);
  const auto plugins = content::PluginRegistry::with_builtins();
  const auto v = plugins.summarizer(content::kDefaultSummarizer)(text, ratio);
  std::cout << v.text;
  if (v.text.empty() || v.text.back() != '\n') std::cout << '\n';
  std::cout << "similarity " << v.similarity_to_original << '\n';
  return kOk;
}

struct ServeArgs {
  std::string host;
  int port = 0;
  std::string cache_dir;
  std::string asset_root = ".";
  long long session_ttl = 0;
  long long time_budget_ms = 0;
};

int cmd_serve(const ServeArgs& a) {
  service::ServiceConfig cfg = service::ServiceConfig::from_env();
  if (!a.host.empty()) cfg.host = a.host;
  if (a.port >= 0) cfg.port = a.port;
  if (!a.cache_dir.empty()) cfg.cache_dir = a.cache_dir;
  cfg.asset_root = a.asset_root;
  if (a.session_ttl > 0) cfg.session_ttl = std::chrono::seconds(a.session_ttl);
  if (a.time_budget_ms > 0) cfg.time_budget = std::chrono::milliseconds(a.time_budget_ms);

  // Interrupts are taken by a dedicated thread; every other thread, including
  // the server's workers, inherits the blocked mask.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  service::Service svc(cfg);
  int port = cfg.port;
  if (port == 0) {
    port = svc.bind_any();
    if (port < 0) {
      std::cerr << "cannot bind " << cfg.host << '\n';
      return kEnvironment;
    }
  } else if (!svc.bind()) {
    std::cerr << "cannot bind " << cfg.host << ':' << cfg.port << '\n';
    return kEnvironment;
  }

  std::atomic<bool> interrupted{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    interrupted = true;
    svc.stop();
  });
  std::cerr << "listening on http://" << cfg.host << ':' << port << std::endl;
  const bool clean = svc.serve();
  if (!interrupted) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return interrupted || clean ? kOk : kEnvironment;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive document layout engine"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a document bundle; diagnostics go to standard error");
  validate->add_option("bundle", validate_path, "Bundle JSON file")->required();

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Solve a layout for one viewport");
  solve->add_option("--doc", solve_args.doc, "Bundle JSON file")->required();
  solve->add_option("--width", solve_args.width, "Viewport width in px")->required()->check(CLI::PositiveNumber);
  solve->add_option("--height", solve_args.height, "Viewport height in px")->required()->check(CLI::PositiveNumber);
  solve->add_option("--prefs", solve_args.prefs, "Preference state JSON file");
  solve->add_option("--out", solve_args.out, "Output file (default: standard output)");
  solve->add_option("--mode", solve_args.mode, "Search mode")
      ->check(CLI::IsMember({"auto", "exhaustive", "beam"}))
      ->capture_default_str();

  std::string carve_in, carve_out;
  int carve_w = 0, carve_h = 0;
  auto* carve = app.add_subcommand("carve", "Retarget an image by seam carving");
  carve->add_option("image", carve_in, "PNG or JPEG input")->required();
  carve->add_option("--width", carve_w, "Target width in pixels")->required();
  carve->add_option("--height", carve_h, "Target height in pixels")->required();
  carve->add_option("--out", carve_out, "PNG output file")->required();

  std::string summarize_in;
  double ratio = 1.0;
  auto* summarize = app.add_subcommand("summarize", "Extractive summary of a text file");
  summarize->add_option("text", summarize_in, "Text file")->required();
  summarize->add_option("--ratio", ratio, "Target length as a fraction of the input, in (0, 1]")->required();

  ServeArgs serve_args;
  serve_args.port = -1;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service until interrupted");
  serve->add_option("--host", serve_args.host, "Listen address (default 127.0.0.1)");
  serve->add_option("--port", serve_args.port, "Listen port, 0 for any (default 7878 or FLEXDOC_PORT)")
      ->check(CLI::Range(0, 65535));
  serve->add_option("--cache-dir", serve_args.cache_dir, "Generated asset cache (default FLEXDOC_CACHE_DIR)");
  serve->add_option("--asset-root", serve_args.asset_root, "Directory relative asset paths resolve against")
      ->capture_default_str();
  serve->add_option("--session-ttl", serve_args.session_ttl, "Idle session lifetime in seconds")
      ->check(CLI::PositiveNumber);
  serve->add_option("--time-budget-ms", serve_args.time_budget_ms, "Solver time budget per request")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kEnvironment;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*solve) return cmd_solve(solve_args);
    if (*carve) return cmd_carve(carve_in, carve_w, carve_h, carve_out);
    if (*summarize) return cmd_summarize(summarize_in, ratio);
    if (*serve) return cmd_serve(serve_args);
  } catch (const EnvironmentError& e) {
    std::cerr << e.what() << '\n';
    return kEnvironment;
  } catch (const content::ContentError& e) {
    std::cerr << e.what() << '\n';
    return kDomain;
  } catch (const Error& e) {
    // Remaining library errors come from the environment (cache directory,
    // configuration variables).
    std::cerr << e.what() << '\n';
    return kEnvironment;
  }
  return kOk;
}
