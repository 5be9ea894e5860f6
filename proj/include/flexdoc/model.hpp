#pragma once
// Document, template, preference and solution types shared by every module.
// All geometry is in device-independent pixels.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flexdoc {

inline constexpr int kSchemaVersion = 1;

enum class Axis { x, y };
enum class Modality { image, text, audio };
enum class FlowDirection { row_wrap, column };

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::image: return "image";
    case Modality::text: return "text";
    case Modality::audio: return "audio";
  }
  return "?";
}

inline std::optional<Modality> modality_from_string(std::string_view s) {
  if (s == "image") return Modality::image;
  if (s == "text") return Modality::text;
  if (s == "audio") return Modality::audio;
  return std::nullopt;
}

inline std::string_view to_string(FlowDirection d) {
  return d == FlowDirection::column ? "column" : "row-wrap";
}

inline std::optional<FlowDirection> flow_from_string(std::string_view s) {
  if (s == "row-wrap") return FlowDirection::row_wrap;
  if (s == "column") return FlowDirection::column;
  return std::nullopt;
}

/// Layout edges usable wherever a tabstop id is expected.  Their solved
/// positions are 0 (left, top), the viewport width (right) and the document
/// bottom (bottom).
inline constexpr std::string_view kBoundaryLeft = "left";
inline constexpr std::string_view kBoundaryRight = "right";
inline constexpr std::string_view kBoundaryTop = "top";
inline constexpr std::string_view kBoundaryBottom = "bottom";

struct Box {
  double x = 0, y = 0, w = 0, h = 0;
  bool operator==(const Box&) const = default;
};

struct Size {
  double w = 0, h = 0;
  bool operator==(const Size&) const = default;
};

struct Tabstop {
  std::string id;
  Axis axis = Axis::x;
  std::optional<double> solved_position;
  bool operator==(const Tabstop&) const = default;
};

struct ElementArea {
  std::string left, right, top, bottom;
  std::vector<std::string> assigned_elements;
  std::optional<FlowDirection> flow_direction;
  bool operator==(const ElementArea&) const = default;
};

struct Template {
  std::string id;
  int rank = 1;
  std::vector<std::string> x_tabstops;  // ordered left to right
  std::vector<std::string> y_tabstops;  // ordered top to bottom
  std::vector<ElementArea> areas;
  FlowDirection flow_direction_default = FlowDirection::row_wrap;

  FlowDirection flow_of(const ElementArea& a) const {
    return a.flow_direction.value_or(flow_direction_default);
  }
  bool operator==(const Template&) const = default;
};

struct Alternative {
  std::string id;
  Modality modality = Modality::text;
  int rank = 1;
  std::string text;   // text body (text modality)
  std::string asset;  // asset id (image and audio modalities)
  Size preferred_size;
  double preferred_font_size = 16.0;  // text only

  // Derived on load, not serialized.
  int detail_level = 0;
  double similarity = 1.0;  // text only: vs the element's most detailed text

  bool operator==(const Alternative&) const = default;
};

struct Element {
  std::string id;
  std::vector<Alternative> alternatives;
  std::optional<Box> pinned_geometry;
  bool generate = false;  // request generated alternatives on load

  const Alternative* find(std::string_view alt_id) const {
    for (const auto& a : alternatives)
      if (a.id == alt_id) return &a;
    return nullptr;
  }
  int max_detail_level() const {
    return static_cast<int>(alternatives.size()) - 1;
  }
  const Alternative* at_detail_level(int level) const {
    for (const auto& a : alternatives)
      if (a.detail_level == level) return &a;
    return nullptr;
  }
  const Alternative* by_rank(int rank) const {
    for (const auto& a : alternatives)
      if (a.rank == rank) return &a;
    return nullptr;
  }
  bool operator==(const Element&) const = default;
};

struct Asset {
  std::string id;
  std::string path;        // relative to the bundle, or absolute
  std::string media_type;  // e.g. image/png
  std::string hash;        // sha256 of the bytes, when known
  bool operator==(const Asset&) const = default;
};

struct Document {
  int schema_version = kSchemaVersion;
  std::vector<Template> templates;
  std::vector<Element> elements;
  std::vector<Asset> assets;

  const Template* find_template(std::string_view id) const {
    for (const auto& t : templates)
      if (t.id == id) return &t;
    return nullptr;
  }
  const Element* find_element(std::string_view id) const {
    for (const auto& e : elements)
      if (e.id == id) return &e;
    return nullptr;
  }
  const Asset* find_asset(std::string_view id) const {
    for (const auto& a : assets)
      if (a.id == id) return &a;
    return nullptr;
  }
  int element_index(std::string_view id) const {
    for (std::size_t i = 0; i < elements.size(); ++i)
      if (elements[i].id == id) return static_cast<int>(i);
    return -1;
  }
  bool operator==(const Document&) const = default;
};

struct Viewport {
  double width = 0;
  double height = 0;
  bool valid() const { return width > 0 && height > 0; }
  bool operator==(const Viewport&) const = default;
};

/// A viewer pin: the element keeps this box and this alternative.
struct Pin {
  Box box;
  std::string alternative;
  bool operator==(const Pin&) const = default;
};

struct PreferenceState {
  std::map<Modality, double> sliders;  // absent means 0.5
  std::optional<std::string> forced_template;
  std::map<std::string, std::string> forced_alternatives;
  std::map<std::string, int> zoom_deltas;
  std::map<std::string, Pin> pins;
  bool avoid_scrolling = false;

  double slider(Modality m) const {
    auto it = sliders.find(m);
    return it == sliders.end() ? 0.5 : it->second;
  }
  bool operator==(const PreferenceState&) const = default;
};

struct ElementPlacement {
  std::string element_id;
  std::string alternative_id;
  Modality modality = Modality::text;
  Box box;
  std::optional<double> font_size;  // text only
  std::string asset_hash;           // image/audio, when the asset bytes are known
  bool operator==(const ElementPlacement&) const = default;
};

struct LayoutSolution {
  std::string template_id;
  std::vector<ElementPlacement> placements;  // document element order
  std::map<std::string, double> x_tabstops;  // solved positions
  std::map<std::string, double> y_tabstops;
  double document_height = 0;
  double total_loss = 0;
  std::map<std::string, double> loss_breakdown;
  std::vector<std::string> relaxed;  // interaction forcings dropped for feasibility
  bool truncated = false;            // time budget or cancellation cut the search

  const ElementPlacement* find(std::string_view element_id) const {
    for (const auto& p : placements)
      if (p.element_id == element_id) return &p;
    return nullptr;
  }
  bool operator==(const LayoutSolution&) const = default;
};

/// A machine-readable validation finding.
struct Diagnostic {
  std::string code;
  std::string path;
  std::string message;
  bool operator==(const Diagnostic&) const = default;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DocumentError : public Error {
 public:
  explicit DocumentError(std::vector<Diagnostic> diags)
      : Error(summarize(diags)), diagnostics_(std::move(diags)) {}
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  static std::string summarize(const std::vector<Diagnostic>& d) {
    if (d.empty()) return "invalid document";
    std::string s = d.front().code + " " + d.front().path + " " + d.front().message;
    if (d.size() > 1) s += " (+" + std::to_string(d.size() - 1) + " more)";
    return s;
  }
  std::vector<Diagnostic> diagnostics_;
};

/// Assigns detail levels: audio < image < text, then by information size
/// (image area, text length), then by rank.
inline void assign_detail_levels(Element& e) {
  auto tier = [](Modality m) {
    switch (m) {
      case Modality::audio: return 0;
      case Modality::image: return 1;
      case Modality::text: return 2;
    }
    return 0;
  };
  auto metric = [](const Alternative& a) {
    if (a.modality == Modality::text) return static_cast<double>(a.text.size());
    return a.preferred_size.w * a.preferred_size.h;
  };
  std::vector<Alternative*> order;
  for (auto& a : e.alternatives) order.push_back(&a);
  std::stable_sort(order.begin(), order.end(), [&](const Alternative* a, const Alternative* b) {
    if (tier(a->modality) != tier(b->modality)) return tier(a->modality) < tier(b->modality);
    if (metric(*a) != metric(*b)) return metric(*a) < metric(*b);
    return a->rank < b->rank;
  });
  for (std::size_t i = 0; i < order.size(); ++i) order[i]->detail_level = static_cast<int>(i);
}

}  // namespace flexdoc
