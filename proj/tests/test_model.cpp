#include <gtest/gtest.h>

#include "json.hpp"

#include "flexdoc/document_io.hpp"

using namespace flexdoc;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) { return read_file(std::string(FLEXDOC_FIXTURES_DIR) + "/" + name); }
std::string sample(const std::string& name) { return read_file(std::string(FLEXDOC_SAMPLES_DIR) + "/" + name); }

bool has_code(const std::vector<Diagnostic>& ds, const std::string& code) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.code == code; });
}

}  // namespace

TEST(ParseDocument, MinimalBundle) {
  json j = json::parse(fixture("minimal.json"));
  j["elements"].erase(0);
  j["templates"][0]["areas"].erase(0);
  j["templates"][0]["areas"][0]["left"] = "left";
  j["elements"][0]["alternatives"].erase(1);
  const Document doc = parse_document(j);
  ASSERT_EQ(doc.templates.size(), 1u);
  ASSERT_EQ(doc.elements.size(), 1u);
  EXPECT_EQ(doc.elements[0].alternatives.size(), 1u);
}

TEST(ParseDocument, NewsHasThreeTemplates) {
  const Document doc = parse_document(sample("news.json"));
  EXPECT_EQ(doc.templates.size(), 3u);
}

TEST(ParseDocument, MissingTabstopIsDanglingReference) {
  json j = json::parse(fixture("minimal.json"));
  j["templates"][0]["areas"][0]["right"] = "nowhere";
  try {
    parse_document(j);
    FAIL() << "expected DocumentError";
  } catch (const DocumentError& e) {
    ASSERT_TRUE(has_code(e.diagnostics(), "dangling-reference"));
    EXPECT_EQ(e.diagnostics().front().path, "/templates/0/areas/0/right");
  }
}

TEST(ParseDocument, MalformedJsonIsSchemaViolation) {
  EXPECT_TRUE(has_code(check_document("{not json"), "schema-violation"));
}

TEST(ParseDocument, MissingFieldNamesPath) {
  json j = json::parse(fixture("minimal.json"));
  j["elements"][1]["alternatives"][0].erase("rank");
  const auto ds = check_document(j.dump());
  ASSERT_FALSE(ds.empty());
  EXPECT_EQ(ds.front().code, "schema-violation");
  EXPECT_NE(ds.front().path.find("/elements/1/alternatives/0"), std::string::npos);
}

TEST(ParseDocument, CyclicTabstopOrder) {
  json j = json::parse(fixture("minimal.json"));
  j["templates"][0]["areas"][1]["left"] = "right";
  j["templates"][0]["areas"][1]["right"] = "split";
  EXPECT_TRUE(has_code(check_document(j.dump()), "cyclic-order"));
}

TEST(Validate, ValidDocumentHasNoDiagnostics) {
  EXPECT_TRUE(check_document(fixture("minimal.json")).empty());
  EXPECT_TRUE(check_document(sample("news.json")).empty());
}

TEST(Validate, DuplicateRankAtElementPath) {
  const auto ds = check_document(fixture("duplicate-rank.json"));
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].code, "duplicate-rank");
  EXPECT_EQ(ds[0].path, "/elements/1/alternatives/1/rank");
}

TEST(Validate, DegenerateArea) {
  json j = json::parse(fixture("minimal.json"));
  j["templates"][0]["areas"][0]["right"] = "left";
  EXPECT_TRUE(has_code(check_document(j.dump()), "degenerate-area"));
}

TEST(Validate, DanglingFixture) {
  EXPECT_TRUE(has_code(check_document(fixture("dangling-reference.json")), "dangling-reference"));
}

TEST(Validate, RanksArePermutations) {
  const Document doc = parse_document(sample("news.json"));
  std::vector<int> tr;
  for (const auto& t : doc.templates) tr.push_back(t.rank);
  std::sort(tr.begin(), tr.end());
  for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_EQ(tr[i], static_cast<int>(i) + 1);
  for (const auto& e : doc.elements) {
    std::vector<int> r;
    for (const auto& a : e.alternatives) r.push_back(a.rank);
    std::sort(r.begin(), r.end());
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r[i], static_cast<int>(i) + 1) << e.id;
  }
}

// Every structural field of the fixture, blanked or negated, must be caught.
TEST(Validate, SingleFieldCorruptionIsDetected) {
  const json base = json::parse(sample("news.json"));
  const json flat = base.flatten();
  int checked = 0;
  for (const auto& [ptr, value] : flat.items()) {
    // Free-form fields without a validity rule.
    if (ptr.ends_with("/media_type") || ptr.ends_with("/path") || ptr.ends_with("/flow_direction")) continue;
    json bad = flat;
    if (value.is_number()) bad[ptr] = -1;
    else if (value.is_string()) bad[ptr] = "";
    else if (value.is_boolean()) bad[ptr] = "yes";
    else continue;
    const auto ds = check_document(bad.unflatten().dump());
    EXPECT_FALSE(ds.empty()) << "corrupting " << ptr << " went unnoticed";
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Document, RoundTrip) {
  for (const std::string& text : {fixture("minimal.json"), sample("news.json")}) {
    const Document doc = parse_document(text);
    const Document again = parse_document(to_json(doc).dump());
    EXPECT_EQ(doc, again);
  }
}

TEST(DetailLevels, ImagesBelowTextAndOrderedBySize) {
  const Document doc = parse_document(fixture("minimal.json"));
  const Element* body = doc.find_element("body");
  ASSERT_NE(body, nullptr);
  EXPECT_EQ(body->find("body-short")->detail_level, 0);
  EXPECT_EQ(body->find("body-full")->detail_level, 1);
  EXPECT_LT(body->find("body-short")->similarity, 1.0);
  EXPECT_DOUBLE_EQ(body->find("body-full")->similarity, 1.0);
}

namespace {

LayoutSolution example_solution() {
  LayoutSolution s;
  s.template_id = "side-by-side";
  s.placements.push_back({"photo", "photo-full", Modality::image, {0.1, 0.2, 199.99999999999997, 100.3}, {}, "abc"});
  s.placements.push_back({"body", "body-full", Modality::text, {200, 0, 300.25, 120}, 15.75, ""});
  s.x_tabstops = {{"split", 200.0}};
  s.y_tabstops = {{"fold", 120.5}};
  s.document_height = 120.5;
  s.total_loss = -1234.5678901234;
  s.loss_breakdown = {{"author", -1100}, {"size", 1e-9}};
  s.relaxed = {"zoom:photo"};
  s.truncated = true;
  return s;
}

}  // namespace

TEST(Solution, RoundTripIsExact) {
  const LayoutSolution s = example_solution();
  EXPECT_EQ(parse_solution(serialize_solution(s)), s);
}

TEST(Solution, PinnedGeometryBitExact) {
  LayoutSolution s = example_solution();
  s.placements[0].box = {1.0 / 3.0, 2.0 / 7.0, 100.0 / 9.0, 1e-300};
  const auto back = parse_solution(serialize_solution(s));
  EXPECT_EQ(back.placements[0].box, s.placements[0].box);
}

TEST(Solution, EmptyBreakdownRejected) {
  LayoutSolution s = example_solution();
  s.loss_breakdown.clear();
  EXPECT_THROW(serialize_solution(s), Error);
}

TEST(Preferences, RoundTripAndValidation) {
  const Document doc = parse_document(fixture("minimal.json"));
  PreferenceState p;
  p.sliders[Modality::image] = 0.8;
  p.forced_alternatives["body"] = "body-short";
  p.zoom_deltas["body"] = -1;
  p.pins["photo"] = {{1, 2, 3, 4}, "photo-full"};
  p.avoid_scrolling = true;
  EXPECT_EQ(parse_preferences(to_json(p)), p);
  EXPECT_TRUE(validate_preferences(doc, p).empty());
  p.sliders[Modality::text] = 1.5;
  p.forced_alternatives["body"] = "nope";
  EXPECT_EQ(validate_preferences(doc, p).size(), 2u);
}
