#pragma once
// Generated alternatives: summaries of an element's longest text and
// retargeted versions of its largest image.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flexdoc/content/cache.hpp"
#include "flexdoc/content/plugins.hpp"
#include "flexdoc/document_io.hpp"

namespace flexdoc::content {

struct GenerationConfig {
  std::vector<double> text_ratios{1.0, 0.6, 0.3};
  std::vector<double> image_scales{1.0, 0.75, 0.5};  // fractions of the preferred area
  std::string summarizer{kDefaultSummarizer};
  std::string retargeter{kDefaultRetargeter};
};

struct ViewportHint {
  std::optional<double> aspect;  // width / height the image variants should take
};

/// Returns the raw bytes of an asset.
using AssetLoader = std::function<std::string(const Asset&)>;

class GenerationCancelled : public Error {
 public:
  GenerationCancelled() : Error("generation cancelled") {}
};

struct GeneratedContent {
  std::vector<Alternative> alternatives;  // authored first, then generated
  std::vector<Asset> assets;              // new assets referenced by generated images
};

namespace detail {

inline std::string percent_tag(double f) { return std::to_string(static_cast<int>(std::lround(f * 100))); }

inline const Alternative* largest(const Element& e, Modality m) {
  const Alternative* best = nullptr;
  auto size = [](const Alternative& a) {
    return a.modality == Modality::text ? static_cast<double>(a.text.size())
                                        : a.preferred_size.w * a.preferred_size.h;
  };
  for (const auto& a : e.alternatives)
    if (a.modality == m && (!best || size(a) > size(*best) || (size(a) == size(*best) && a.rank < best->rank)))
      best = &a;
  return best;
}

}  // namespace detail

/// Raster dimensions for a variant covering `scale` of the preferred area at
/// the given aspect, clamped to the retargeter's expansion limit.
inline std::pair<int, int> variant_dims(int src_w, int src_h, Size preferred, double scale, double aspect) {
  const double area = scale * preferred.w * preferred.h;
  const double tw = std::sqrt(area * aspect), th = tw / aspect;
  auto clamp_dim = [](double v, int src) {
    const int hi = static_cast<int>(std::floor(src * kMaxExpansion));
    return std::clamp(static_cast<int>(std::lround(v)), 1, std::max(hi, 1));
  };
  return {clamp_dim(src_w * tw / preferred.w, src_w), clamp_dim(src_h * th / preferred.h, src_h)};
}

/// Authored alternatives followed by generated ones.  A generated variant
/// identical to an authored alternative is omitted.  Audio passes through.
inline GeneratedContent generate_alternatives(const Element& element, const Document& doc,
                                              const AssetLoader& load, VariantCache& cache,
                                              const PluginRegistry& plugins,
                                              const GenerationConfig& config = {},
                                              const ViewportHint& hint = {},
                                              const std::function<bool()>& cancelled = {}) {
  if (element.alternatives.empty()) throw ContentError("element " + element.id + " has no alternatives");
  GeneratedContent out;
  out.alternatives = element.alternatives;
  int next_rank = 0;
  for (const auto& a : element.alternatives) next_rank = std::max(next_rank, a.rank);
  auto check = [&] {
    if (cancelled && cancelled()) throw GenerationCancelled();
  };

  if (const Alternative* src = detail::largest(element, Modality::text)) {
    const auto summarizer = plugins.summarizer(config.summarizer);
    const std::string source_hash = sha256_hex(src->text);
    for (double ratio : config.text_ratios) {
      check();
      const std::string key = variant_key(source_hash, "summary:" + config.summarizer + ":" + std::to_string(ratio));
      TextVariant v;
      if (auto hit = cache.find_text(key)) {
        v = *hit;
      } else {
        v = summarizer(src->text, ratio);
        cache.store_text(key, v);
      }
      bool duplicate = false;
      for (const auto& a : out.alternatives)
        duplicate = duplicate || (a.modality == Modality::text && a.text == v.text);
      if (duplicate) continue;
      Alternative alt = *src;
      alt.id = src->id + "~" + detail::percent_tag(ratio);
      alt.rank = ++next_rank;
      alt.text = v.text;
      alt.similarity = v.similarity_to_original;
      out.alternatives.push_back(std::move(alt));
    }
  }

  if (const Alternative* src = detail::largest(element, Modality::image)) {
    const Asset* asset = doc.find_asset(src->asset);
    if (!asset) throw ContentError("image alternative " + src->id + " references unknown asset " + src->asset);
    const std::string bytes = load(*asset);
    const Raster raster = decode_image(bytes);
    const std::string source_hash = sha256_hex(bytes);
    const auto retarget = plugins.retargeter(config.retargeter);
    const Size pref = src->preferred_size;
    const double aspect = hint.aspect.value_or(pref.w / pref.h);
    for (double scale : config.image_scales) {
      check();
      const auto [rw, rh] = variant_dims(raster.width, raster.height, pref, scale, aspect);
      if (rw == raster.width && rh == raster.height) continue;
      const std::string key = variant_key(
          source_hash, "retarget:" + config.retargeter + ":" + std::to_string(rw) + "x" + std::to_string(rh));
      auto stored = cache.find_image(key);
      if (!stored) stored = cache.store_image(key, retarget(raster, rw, rh));
      Alternative alt = *src;
      alt.id = src->id + "~" + detail::percent_tag(scale);
      alt.rank = ++next_rank;
      alt.asset = asset->id + "~" + std::to_string(rw) + "x" + std::to_string(rh);
      alt.preferred_size = {pref.w * rw / raster.width, pref.h * rh / raster.height};
      out.alternatives.push_back(std::move(alt));
      out.assets.push_back({out.alternatives.back().asset, stored->path, "image/png", stored->hash});
    }
  }
  return out;
}

/// Expands every element flagged for generation in place and refreshes the
/// derived fields.
inline void expand_document(Document& doc, const AssetLoader& load, VariantCache& cache,
                            const PluginRegistry& plugins, const GenerationConfig& config = {},
                            const ViewportHint& hint = {}, const std::function<bool()>& cancelled = {}) {
  std::vector<Asset> new_assets;
  for (auto& e : doc.elements) {
    if (!e.generate) continue;
    auto g = generate_alternatives(e, doc, load, cache, plugins, config, hint, cancelled);
    e.alternatives = std::move(g.alternatives);
    for (auto& a : g.assets) {
      const bool known = doc.find_asset(a.id) ||
                         std::any_of(new_assets.begin(), new_assets.end(), [&](const Asset& n) { return n.id == a.id; });
      if (!known) new_assets.push_back(std::move(a));
    }
  }
  for (auto& a : new_assets) doc.assets.push_back(std::move(a));
  derive(doc);
}

}  // namespace flexdoc::content
