#pragma once
// Named registry of content replacement plugins: similarity scorers,
// summarizers and image retargeters, looked up by string id.

#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "flexdoc/content/seam_carving.hpp"
#include "flexdoc/content/text.hpp"

namespace flexdoc::content {

using Scorer = std::function<double(std::string_view candidate, std::string_view original)>;
using Summarizer = std::function<TextVariant(std::string_view text, double ratio)>;
using Retargeter = std::function<Raster(const Raster& src, int width, int height)>;

inline constexpr std::string_view kDefaultScorer = "token-f1";
inline constexpr std::string_view kDefaultSummarizer = "frequency";
inline constexpr std::string_view kDefaultRetargeter = "seam-carving";

class PluginRegistry {
 public:
  /// Registry holding the built-in plugins.
  static PluginRegistry with_builtins() {
    PluginRegistry r;
    r.add_scorer(std::string(kDefaultScorer), [](std::string_view c, std::string_view o) { return similarity(c, o); });
    r.add_summarizer(std::string(kDefaultSummarizer), [](std::string_view t, double ratio) { return summarize(t, ratio); });
    r.add_retargeter(std::string(kDefaultRetargeter),
                     [](const Raster& src, int w, int h) { return carve(src, w, h).raster; });
    return r;
  }

  PluginRegistry() = default;
  PluginRegistry(const PluginRegistry& o) {
    std::shared_lock lock(o.mu_);
    scorers_ = o.scorers_;
    summarizers_ = o.summarizers_;
    retargeters_ = o.retargeters_;
  }

  void add_scorer(std::string id, Scorer f) { put(scorers_, std::move(id), std::move(f)); }
  void add_summarizer(std::string id, Summarizer f) { put(summarizers_, std::move(id), std::move(f)); }
  void add_retargeter(std::string id, Retargeter f) { put(retargeters_, std::move(id), std::move(f)); }

  Scorer scorer(std::string_view id) const { return get(scorers_, id, "scorer"); }
  Summarizer summarizer(std::string_view id) const { return get(summarizers_, id, "summarizer"); }
  Retargeter retargeter(std::string_view id) const { return get(retargeters_, id, "retargeter"); }

  std::vector<std::string> scorer_ids() const { return keys(scorers_); }
  std::vector<std::string> summarizer_ids() const { return keys(summarizers_); }
  std::vector<std::string> retargeter_ids() const { return keys(retargeters_); }

 private:
  template <class F>
  void put(std::map<std::string, F, std::less<>>& m, std::string id, F f) {
    if (id.empty()) throw ContentError("plugin id must not be empty");
    std::unique_lock lock(mu_);
    m[std::move(id)] = std::move(f);
  }
  template <class F>
  F get(const std::map<std::string, F, std::less<>>& m, std::string_view id, const char* kind) const {
    std::shared_lock lock(mu_);
    auto it = m.find(id);
    if (it == m.end()) throw ContentError(std::string("unknown ") + kind + " plugin '" + std::string(id) + "'");
    return it->second;
  }
  template <class F>
  std::vector<std::string> keys(const std::map<std::string, F, std::less<>>& m) const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (const auto& [k, _] : m) out.push_back(k);
    return out;
  }

  mutable std::shared_mutex mu_;
  std::map<std::string, Scorer, std::less<>> scorers_;
  std::map<std::string, Summarizer, std::less<>> summarizers_;
  std::map<std::string, Retargeter, std::less<>> retargeters_;
};

}  // namespace flexdoc::content
