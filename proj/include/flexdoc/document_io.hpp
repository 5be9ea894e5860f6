#pragma once
// JSON (de)serialization and validation of document bundles, preference
// states and layout solutions.  Field names are documented in docs/schema.md.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "flexdoc/content/text.hpp"
#include "flexdoc/model.hpp"

namespace flexdoc {

using json = nlohmann::json;

namespace detail {

/// Typed access to a JSON object that records schema violations instead of
/// throwing, so one pass reports every problem.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string path, std::vector<Diagnostic>& diags)
      : obj_(obj), path_(std::move(path)), diags_(diags) {
    if (!obj_.is_object()) fail(path_, "expected an object");
  }

  bool ok() const { return obj_.is_object(); }
  const std::string& path() const { return path_; }
  std::string at(std::string_view key) const { return path_ + "/" + std::string(key); }

  bool has(std::string_view key) const { return ok() && obj_.contains(key); }

  const json* get(std::string_view key, bool required, json::value_t a,
                  json::value_t b = json::value_t::discarded) const {
    if (!ok()) return nullptr;
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      if (required) fail(at(key), "missing required field");
      return nullptr;
    }
    const auto t = it->type();
    const bool numeric_ok = (a == json::value_t::number_float) && it->is_number();
    const bool int_ok = (a == json::value_t::number_integer) &&
                        (t == json::value_t::number_unsigned || t == json::value_t::number_integer);
    if (t != a && t != b && !numeric_ok && !int_ok) {
      fail(at(key), "wrong type");
      return nullptr;
    }
    return &*it;
  }

  std::string str(std::string_view key, bool required = true, std::string fallback = {}) const {
    const json* v = get(key, required, json::value_t::string);
    return v ? v->get<std::string>() : fallback;
  }
  double num(std::string_view key, bool required = true, double fallback = 0) const {
    const json* v = get(key, required, json::value_t::number_float);
    return v ? v->get<double>() : fallback;
  }
  int integer(std::string_view key, bool required = true, int fallback = 0) const {
    const json* v = get(key, required, json::value_t::number_integer);
    return v ? v->get<int>() : fallback;
  }
  bool boolean(std::string_view key, bool fallback) const {
    const json* v = get(key, false, json::value_t::boolean);
    return v ? v->get<bool>() : fallback;
  }
  const json* array(std::string_view key, bool required = true) const {
    return get(key, required, json::value_t::array);
  }
  const json* object(std::string_view key, bool required = true) const {
    return get(key, required, json::value_t::object);
  }

  void fail(const std::string& p, std::string msg, std::string code = "schema-violation") const {
    diags_.push_back({std::move(code), p, std::move(msg)});
  }

 private:
  const json& obj_;
  std::string path_;
  std::vector<Diagnostic>& diags_;
};

inline std::vector<std::string> read_string_list(const json* arr, const std::string& path,
                                                 std::vector<Diagnostic>& diags) {
  std::vector<std::string> out;
  if (!arr) return out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const auto& v = (*arr)[i];
    if (!v.is_string()) {
      diags.push_back({"schema-violation", path + "/" + std::to_string(i), "expected a string"});
      continue;
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline Size read_size(const FieldReader& r, std::string_view key, std::vector<Diagnostic>& diags) {
  Size s;
  if (const json* o = r.object(key)) {
    FieldReader sr(*o, r.at(key), diags);
    s.w = sr.num("w");
    s.h = sr.num("h");
  }
  return s;
}

inline Box read_box(const json& o, const std::string& path, std::vector<Diagnostic>& diags) {
  FieldReader r(o, path, diags);
  return {r.num("x"), r.num("y"), r.num("w"), r.num("h")};
}

}  // namespace detail

/// Builds a Document from JSON, collecting schema violations.  Semantic
/// checks are left to validate().
inline Document read_document(const json& j, std::vector<Diagnostic>& diags) {
  using detail::FieldReader;
  Document doc;
  FieldReader root(j, "", diags);
  if (!root.ok()) return doc;
  doc.schema_version = root.integer("schema_version");

  if (const json* ts = root.array("templates")) {
    for (std::size_t ti = 0; ti < ts->size(); ++ti) {
      const std::string tp = "/templates/" + std::to_string(ti);
      FieldReader tr((*ts)[ti], tp, diags);
      if (!tr.ok()) continue;
      Template t;
      t.id = tr.str("id");
      t.rank = tr.integer("rank");
      if (const json* tabs = tr.object("tabstops")) {
        FieldReader tabr(*tabs, tr.at("tabstops"), diags);
        t.x_tabstops = detail::read_string_list(tabr.array("x", false), tabr.at("x"), diags);
        t.y_tabstops = detail::read_string_list(tabr.array("y", false), tabr.at("y"), diags);
      }
      if (tr.has("flow_direction")) {
        const std::string f = tr.str("flow_direction");
        if (auto fd = flow_from_string(f)) t.flow_direction_default = *fd;
        else if (!f.empty()) tr.fail(tr.at("flow_direction"), "unknown flow direction '" + f + "'");
      }
      if (const json* areas = tr.array("areas")) {
        for (std::size_t ai = 0; ai < areas->size(); ++ai) {
          const std::string ap = tp + "/areas/" + std::to_string(ai);
          FieldReader ar((*areas)[ai], ap, diags);
          if (!ar.ok()) continue;
          ElementArea a;
          a.left = ar.str("left");
          a.right = ar.str("right");
          a.top = ar.str("top");
          a.bottom = ar.str("bottom");
          a.assigned_elements = detail::read_string_list(ar.array("elements"), ar.at("elements"), diags);
          if (ar.has("flow_direction")) {
            const std::string f = ar.str("flow_direction");
            if (auto fd = flow_from_string(f)) a.flow_direction = *fd;
            else if (!f.empty()) ar.fail(ar.at("flow_direction"), "unknown flow direction '" + f + "'");
          }
          t.areas.push_back(std::move(a));
        }
      }
      doc.templates.push_back(std::move(t));
    }
  }

  if (const json* es = root.array("elements")) {
    for (std::size_t ei = 0; ei < es->size(); ++ei) {
      const std::string ep = "/elements/" + std::to_string(ei);
      FieldReader er((*es)[ei], ep, diags);
      if (!er.ok()) continue;
      Element e;
      e.id = er.str("id");
      e.generate = er.boolean("generate", false);
      if (const json* pg = er.object("pinned_geometry", false))
        e.pinned_geometry = detail::read_box(*pg, er.at("pinned_geometry"), diags);
      if (const json* alts = er.array("alternatives")) {
        for (std::size_t k = 0; k < alts->size(); ++k) {
          const std::string kp = ep + "/alternatives/" + std::to_string(k);
          FieldReader alr((*alts)[k], kp, diags);
          if (!alr.ok()) continue;
          Alternative a;
          a.id = alr.str("id");
          a.rank = alr.integer("rank");
          const std::string m = alr.str("modality");
          if (auto mod = modality_from_string(m)) a.modality = *mod;
          else if (!m.empty() || alr.has("modality"))
            alr.fail(alr.at("modality"), "unknown modality '" + m + "'");
          a.preferred_size = detail::read_size(alr, "preferred_size", diags);
          if (a.modality == Modality::text) {
            a.text = alr.str("text");
            a.preferred_font_size = alr.num("preferred_font_size", false, 16.0);
          } else {
            a.asset = alr.str("asset");
          }
          e.alternatives.push_back(std::move(a));
        }
      }
      doc.elements.push_back(std::move(e));
    }
  }

  if (const json* as = root.array("assets", false)) {
    for (std::size_t i = 0; i < as->size(); ++i) {
      const std::string p = "/assets/" + std::to_string(i);
      FieldReader r((*as)[i], p, diags);
      if (!r.ok()) continue;
      Asset a;
      a.id = r.str("id");
      a.path = r.str("path", !r.has("data"));
      a.media_type = r.str("media_type", false);
      a.hash = r.str("sha256", false);
      if (r.has("data")) r.str("data");
      doc.assets.push_back(std::move(a));
    }
  }
  return doc;
}

namespace detail {

inline void check_ranks(const std::vector<int>& ranks, const std::vector<std::string>& paths,
                        std::vector<Diagnostic>& out) {
  const int n = static_cast<int>(ranks.size());
  std::set<int> seen;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] < 1 || ranks[i] > n) {
      out.push_back({"rank-range", paths[i],
                     "rank " + std::to_string(ranks[i]) + " outside 1.." + std::to_string(n)});
    } else if (!seen.insert(ranks[i]).second) {
      out.push_back({"duplicate-rank", paths[i], "rank " + std::to_string(ranks[i]) + " used twice"});
    }
  }
}

inline bool is_boundary(std::string_view id) {
  return id == kBoundaryLeft || id == kBoundaryRight || id == kBoundaryTop || id == kBoundaryBottom;
}

}  // namespace detail

/// Position of a bound along its axis: -1 for the leading boundary, the list
/// size for the trailing one, nullopt when it does not resolve.
inline std::optional<int> tabstop_order(const Template& t, Axis axis, std::string_view id) {
  const auto& list = axis == Axis::x ? t.x_tabstops : t.y_tabstops;
  const auto lead = axis == Axis::x ? kBoundaryLeft : kBoundaryTop;
  const auto trail = axis == Axis::x ? kBoundaryRight : kBoundaryBottom;
  if (id == lead) return -1;
  if (id == trail) return static_cast<int>(list.size());
  for (std::size_t i = 0; i < list.size(); ++i)
    if (list[i] == id) return static_cast<int>(i);
  return std::nullopt;
}

/// Semantic checks.  Empty result iff every model invariant holds.
inline std::vector<Diagnostic> validate(const Document& doc) {
  std::vector<Diagnostic> out;
  if (doc.schema_version != kSchemaVersion)
    out.push_back({"unsupported-schema-version", "/schema_version",
                   "expected " + std::to_string(kSchemaVersion)});
  if (doc.templates.empty()) out.push_back({"empty-document", "/templates", "no templates"});
  if (doc.elements.empty()) out.push_back({"empty-document", "/elements", "no elements"});

  std::set<std::string> ids;
  std::vector<int> ranks;
  std::vector<std::string> rank_paths;
  for (std::size_t ti = 0; ti < doc.templates.size(); ++ti) {
    const auto& t = doc.templates[ti];
    const std::string tp = "/templates/" + std::to_string(ti);
    if (t.id.empty()) out.push_back({"empty-id", tp + "/id", "template id is empty"});
    if (!ids.insert(t.id).second) out.push_back({"duplicate-id", tp + "/id", "template '" + t.id + "'"});
    ranks.push_back(t.rank);
    rank_paths.push_back(tp + "/rank");

    for (Axis axis : {Axis::x, Axis::y}) {
      const auto& list = axis == Axis::x ? t.x_tabstops : t.y_tabstops;
      const std::string ap = tp + "/tabstops/" + (axis == Axis::x ? "x" : "y");
      std::set<std::string> seen;
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (detail::is_boundary(list[i]) || list[i].empty())
          out.push_back({"reserved-id", ap + "/" + std::to_string(i), "'" + list[i] + "' is reserved"});
        else if (!seen.insert(list[i]).second)
          out.push_back({"duplicate-id", ap + "/" + std::to_string(i), "tabstop '" + list[i] + "'"});
      }
    }

    std::map<std::string, int> assigned;
    for (std::size_t ai = 0; ai < t.areas.size(); ++ai) {
      const auto& a = t.areas[ai];
      const std::string ap = tp + "/areas/" + std::to_string(ai);
      auto bound = [&](Axis axis, const std::string& id, const char* key) {
        auto o = tabstop_order(t, axis, id);
        if (!o) out.push_back({"dangling-reference", ap + "/" + key, "unknown tabstop '" + id + "'"});
        return o;
      };
      auto l = bound(Axis::x, a.left, "left");
      auto r = bound(Axis::x, a.right, "right");
      auto tp_ = bound(Axis::y, a.top, "top");
      auto b = bound(Axis::y, a.bottom, "bottom");
      if (l && r) {
        if (*l == *r) out.push_back({"degenerate-area", ap, "left and right coincide"});
        else if (*l > *r) out.push_back({"cyclic-order", ap, "right tabstop precedes left"});
      }
      if (tp_ && b) {
        if (*tp_ == *b) out.push_back({"degenerate-area", ap, "top and bottom coincide"});
        else if (*tp_ > *b) out.push_back({"cyclic-order", ap, "bottom tabstop precedes top"});
      }
      if (a.assigned_elements.empty()) out.push_back({"empty-area", ap + "/elements", "no elements"});
      for (std::size_t k = 0; k < a.assigned_elements.size(); ++k) {
        const auto& eid = a.assigned_elements[k];
        const std::string kp = ap + "/elements/" + std::to_string(k);
        if (!doc.find_element(eid))
          out.push_back({"dangling-reference", kp, "unknown element '" + eid + "'"});
        else if (++assigned[eid] > 1)
          out.push_back({"duplicate-assignment", kp, "element '" + eid + "' placed twice"});
      }
    }
    for (const auto& e : doc.elements)
      if (!assigned.count(e.id))
        out.push_back({"unassigned-element", tp + "/areas", "element '" + e.id + "' has no area"});
  }
  detail::check_ranks(ranks, rank_paths, out);

  std::set<std::string> eids;
  for (std::size_t ei = 0; ei < doc.elements.size(); ++ei) {
    const auto& e = doc.elements[ei];
    const std::string ep = "/elements/" + std::to_string(ei);
    if (e.id.empty()) out.push_back({"empty-id", ep + "/id", "element id is empty"});
    if (!eids.insert(e.id).second) out.push_back({"duplicate-id", ep + "/id", "element '" + e.id + "'"});
    if (e.alternatives.empty()) out.push_back({"no-alternatives", ep + "/alternatives", "empty"});
    if (e.pinned_geometry) {
      const auto& g = *e.pinned_geometry;
      if (!(g.w > 0 && g.h > 0 && g.x >= 0 && g.y >= 0))
        out.push_back({"invalid-pin", ep + "/pinned_geometry", "pinned box must be non-negative with positive size"});
    }
    std::set<std::string> aids;
    std::vector<int> k_ranks;
    std::vector<std::string> k_paths;
    for (std::size_t k = 0; k < e.alternatives.size(); ++k) {
      const auto& a = e.alternatives[k];
      const std::string kp = ep + "/alternatives/" + std::to_string(k);
      if (a.id.empty()) out.push_back({"empty-id", kp + "/id", "alternative id is empty"});
      if (!aids.insert(a.id).second) out.push_back({"duplicate-id", kp + "/id", "alternative '" + a.id + "'"});
      k_ranks.push_back(a.rank);
      k_paths.push_back(kp + "/rank");
      if (!(a.preferred_size.w > 0) || !(a.preferred_size.h > 0))
        out.push_back({"invalid-size", kp + "/preferred_size", "preferred size must be positive"});
      if (a.modality == Modality::text) {
        if (a.text.empty()) out.push_back({"missing-text", kp + "/text", "text alternative without body"});
        if (!(a.preferred_font_size >= 6 && a.preferred_font_size <= 72))
          out.push_back({"invalid-font", kp + "/preferred_font_size", "must lie in [6, 72]"});
      } else if (!doc.find_asset(a.asset)) {
        out.push_back({"dangling-reference", kp + "/asset", "unknown asset '" + a.asset + "'"});
      }
    }
    detail::check_ranks(k_ranks, k_paths, out);
  }

  std::set<std::string> asset_ids;
  for (std::size_t i = 0; i < doc.assets.size(); ++i)
    if (!asset_ids.insert(doc.assets[i].id).second)
      out.push_back({"duplicate-id", "/assets/" + std::to_string(i) + "/id", doc.assets[i].id});
  return out;
}

/// Fills derived alternative fields: detail levels and text similarity
/// against the element's longest text.
inline void derive(Document& doc) {
  for (auto& e : doc.elements) {
    assign_detail_levels(e);
    const Alternative* original = nullptr;
    for (const auto& a : e.alternatives)
      if (a.modality == Modality::text && (!original || a.text.size() > original->text.size()))
        original = &a;
    const std::string orig = original ? original->text : std::string();
    for (auto& a : e.alternatives)
      a.similarity = (a.modality == Modality::text && !a.text.empty() && !orig.empty())
                         ? content::similarity(a.text, orig)
                         : 1.0;
  }
}

/// Parses and validates.  Throws DocumentError listing every diagnostic.
inline Document parse_document(const json& j) {
  std::vector<Diagnostic> diags;
  Document doc = read_document(j, diags);
  if (diags.empty()) diags = validate(doc);
  if (!diags.empty()) throw DocumentError(std::move(diags));
  derive(doc);
  return doc;
}

inline Document parse_document(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw DocumentError({{"schema-violation", "", std::string("malformed JSON: ") + e.what()}});
  }
  return parse_document(j);
}

inline Document parse_document(const std::string& bytes) { return parse_document(std::string_view(bytes)); }
inline Document parse_document(const char* bytes) { return parse_document(std::string_view(bytes)); }

/// Collects schema and semantic diagnostics without throwing.
inline std::vector<Diagnostic> check_document(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    return {{"schema-violation", "", std::string("malformed JSON: ") + e.what()}};
  }
  std::vector<Diagnostic> diags;
  Document doc = read_document(j, diags);
  if (!diags.empty()) return diags;
  return validate(doc);
}

inline json box_to_json(const Box& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

inline json to_json(const Document& doc) {
  json j;
  j["schema_version"] = doc.schema_version;
  j["templates"] = json::array();
  for (const auto& t : doc.templates) {
    json areas = json::array();
    for (const auto& a : t.areas) {
      json ja = {{"left", a.left}, {"right", a.right}, {"top", a.top}, {"bottom", a.bottom},
                 {"elements", a.assigned_elements}};
      if (a.flow_direction) ja["flow_direction"] = to_string(*a.flow_direction);
      areas.push_back(std::move(ja));
    }
    j["templates"].push_back({{"id", t.id},
                              {"rank", t.rank},
                              {"tabstops", {{"x", t.x_tabstops}, {"y", t.y_tabstops}}},
                              {"flow_direction", to_string(t.flow_direction_default)},
                              {"areas", std::move(areas)}});
  }
  j["elements"] = json::array();
  for (const auto& e : doc.elements) {
    json alts = json::array();
    for (const auto& a : e.alternatives) {
      json ja = {{"id", a.id},
                 {"modality", to_string(a.modality)},
                 {"rank", a.rank},
                 {"preferred_size", {{"w", a.preferred_size.w}, {"h", a.preferred_size.h}}}};
      if (a.modality == Modality::text) {
        ja["text"] = a.text;
        ja["preferred_font_size"] = a.preferred_font_size;
      } else {
        ja["asset"] = a.asset;
      }
      alts.push_back(std::move(ja));
    }
    json je = {{"id", e.id}, {"alternatives", std::move(alts)}};
    if (e.generate) je["generate"] = true;
    if (e.pinned_geometry) je["pinned_geometry"] = box_to_json(*e.pinned_geometry);
    j["elements"].push_back(std::move(je));
  }
  j["assets"] = json::array();
  for (const auto& a : doc.assets) {
    json ja = {{"id", a.id}, {"path", a.path}};
    if (!a.media_type.empty()) ja["media_type"] = a.media_type;
    if (!a.hash.empty()) ja["sha256"] = a.hash;
    j["assets"].push_back(std::move(ja));
  }
  return j;
}

// ---- preferences ----------------------------------------------------------

inline PreferenceState parse_preferences(const json& j) {
  std::vector<Diagnostic> diags;
  detail::FieldReader r(j, "", diags);
  PreferenceState p;
  if (const json* s = r.object("sliders", false)) {
    for (const auto& [k, v] : s->items()) {
      auto m = modality_from_string(k);
      if (!m) diags.push_back({"schema-violation", "/sliders/" + k, "unknown modality"});
      else if (!v.is_number() || v.get<double>() < 0 || v.get<double>() > 1)
        diags.push_back({"slider-range", "/sliders/" + k, "slider must be a number in [0, 1]"});
      else p.sliders[*m] = v.get<double>();
    }
  }
  if (r.has("forced_template") && !j["forced_template"].is_null())
    p.forced_template = r.str("forced_template");
  if (const json* f = r.object("forced_alternatives", false))
    for (const auto& [k, v] : f->items()) {
      if (v.is_string()) p.forced_alternatives[k] = v.get<std::string>();
      else diags.push_back({"schema-violation", "/forced_alternatives/" + k, "expected a string"});
    }
  if (const json* z = r.object("zoom_deltas", false))
    for (const auto& [k, v] : z->items()) {
      if (v.is_number_integer()) p.zoom_deltas[k] = v.get<int>();
      else diags.push_back({"schema-violation", "/zoom_deltas/" + k, "expected an integer"});
    }
  if (const json* pins = r.object("pins", false))
    for (const auto& [k, v] : pins->items()) {
      detail::FieldReader pr(v, "/pins/" + k, diags);
      Pin pin;
      pin.box = {pr.num("x"), pr.num("y"), pr.num("w"), pr.num("h")};
      pin.alternative = pr.str("alternative");
      p.pins[k] = pin;
    }
  p.avoid_scrolling = r.boolean("avoid_scrolling", false);
  if (!diags.empty()) throw DocumentError(std::move(diags));
  return p;
}

inline json to_json(const PreferenceState& p) {
  json j;
  j["sliders"] = json::object();
  for (const auto& [m, s] : p.sliders) j["sliders"][std::string(to_string(m))] = s;
  j["forced_template"] = p.forced_template ? json(*p.forced_template) : json(nullptr);
  j["forced_alternatives"] = p.forced_alternatives;
  j["zoom_deltas"] = p.zoom_deltas;
  j["pins"] = json::object();
  for (const auto& [id, pin] : p.pins) {
    json jp = box_to_json(pin.box);
    jp["alternative"] = pin.alternative;
    j["pins"][id] = std::move(jp);
  }
  j["avoid_scrolling"] = p.avoid_scrolling;
  return j;
}

/// Checks that every id in the preference state resolves in the document.
inline std::vector<Diagnostic> validate_preferences(const Document& doc, const PreferenceState& p) {
  std::vector<Diagnostic> out;
  for (const auto& [m, s] : p.sliders)
    if (!(s >= 0 && s <= 1))
      out.push_back({"slider-range", "/sliders/" + std::string(to_string(m)), "outside [0, 1]"});
  if (p.forced_template && !doc.find_template(*p.forced_template))
    out.push_back({"dangling-reference", "/forced_template", *p.forced_template});
  for (const auto& [eid, aid] : p.forced_alternatives) {
    const Element* e = doc.find_element(eid);
    if (!e) out.push_back({"dangling-reference", "/forced_alternatives/" + eid, "unknown element"});
    else if (!e->find(aid))
      out.push_back({"dangling-reference", "/forced_alternatives/" + eid, "unknown alternative '" + aid + "'"});
  }
  for (const auto& [eid, _] : p.zoom_deltas)
    if (!doc.find_element(eid))
      out.push_back({"dangling-reference", "/zoom_deltas/" + eid, "unknown element"});
  for (const auto& [eid, pin] : p.pins) {
    const Element* e = doc.find_element(eid);
    if (!e) out.push_back({"dangling-reference", "/pins/" + eid, "unknown element"});
    else if (!e->find(pin.alternative))
      out.push_back({"dangling-reference", "/pins/" + eid + "/alternative", pin.alternative});
    if (!(pin.box.w > 0 && pin.box.h > 0 && pin.box.x >= 0 && pin.box.y >= 0))
      out.push_back({"invalid-pin", "/pins/" + eid, "pinned box must be non-negative with positive size"});
  }
  return out;
}

// ---- solutions -------------------------------------------------------------

inline json to_json(const LayoutSolution& s) {
  if (s.loss_breakdown.empty())
    throw Error("serialize_solution: loss breakdown is required");
  json j;
  j["schema_version"] = kSchemaVersion;
  j["template_id"] = s.template_id;
  j["total_loss"] = s.total_loss;
  j["loss_breakdown"] = s.loss_breakdown;
  j["document_height"] = s.document_height;
  j["tabstops"] = {{"x", s.x_tabstops}, {"y", s.y_tabstops}};
  j["elements"] = json::array();
  for (const auto& p : s.placements) {
    json e = {{"element_id", p.element_id},
              {"alternative_id", p.alternative_id},
              {"modality", to_string(p.modality)},
              {"x", p.box.x},
              {"y", p.box.y},
              {"w", p.box.w},
              {"h", p.box.h}};
    if (p.font_size) e["font_size"] = *p.font_size;
    if (!p.asset_hash.empty()) e["asset"] = p.asset_hash;
    j["elements"].push_back(std::move(e));
  }
  j["relaxed"] = s.relaxed;
  j["truncated"] = s.truncated;
  return j;
}

inline std::string serialize_solution(const LayoutSolution& s) { return to_json(s).dump(2) + "\n"; }

inline LayoutSolution parse_solution(const json& j) {
  LayoutSolution s;
  s.template_id = j.at("template_id").get<std::string>();
  s.total_loss = j.at("total_loss").get<double>();
  s.loss_breakdown = j.at("loss_breakdown").get<std::map<std::string, double>>();
  s.document_height = j.at("document_height").get<double>();
  s.x_tabstops = j.at("tabstops").at("x").get<std::map<std::string, double>>();
  s.y_tabstops = j.at("tabstops").at("y").get<std::map<std::string, double>>();
  for (const auto& e : j.at("elements")) {
    ElementPlacement p;
    p.element_id = e.at("element_id").get<std::string>();
    p.alternative_id = e.at("alternative_id").get<std::string>();
    p.modality = modality_from_string(e.at("modality").get<std::string>()).value_or(Modality::text);
    p.box = {e.at("x").get<double>(), e.at("y").get<double>(), e.at("w").get<double>(),
             e.at("h").get<double>()};
    if (e.contains("font_size")) p.font_size = e["font_size"].get<double>();
    if (e.contains("asset")) p.asset_hash = e["asset"].get<std::string>();
    s.placements.push_back(std::move(p));
  }
  s.relaxed = j.value("relaxed", std::vector<std::string>{});
  s.truncated = j.value("truncated", false);
  return s;
}

inline LayoutSolution parse_solution(std::string_view bytes) { return parse_solution(json::parse(bytes)); }
inline LayoutSolution parse_solution(const std::string& bytes) { return parse_solution(std::string_view(bytes)); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace flexdoc
