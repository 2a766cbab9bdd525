// Copyright 2026 The guiagent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "guiagent/raa.hpp"
#include "oracles.hpp"
#include "raa_gen.hpp"

using namespace guiagent;
using raa::Document;
using raa::PlainText;
using raa::Reference;

namespace {

Json oracle_json(const oracle::RaaSeg& s) {
    Json j = Json::object();
    if (!s.is_ref) {
        j["kind"] = "plain";
        j["text"] = s.text;
        return j;
    }
    j["kind"] = "reference";
    j["type"] = s.type;
    j["coords"] = s.coords;
    j["content"] = s.text;
    if (s.has_note) j["note"] = s.note;
    return j;
}

std::size_t strict_error_offset(std::string_view text) {
    try {
        parse_raa(text);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::parse);
        return e.offset().value_or(std::string::npos);
    }
    ADD_FAILURE() << "expected strict parse error for: " << text;
    return std::string::npos;
}

const std::string kSubmit =
    R"(Tap <ref type="point" x="500" y="500" note="submit">the Submit button</ref> to continue)";

}  // namespace

TEST(Raa, NoMarkersIsSinglePlainSegment) {
    auto doc = parse_raa("just text < > here");
    ASSERT_EQ(doc.segments.size(), 1u);
    EXPECT_EQ(std::get<PlainText>(doc.segments[0]).text, "just text < > here");
    EXPECT_TRUE(parse_raa("").segments.empty());
}

TEST(Raa, SubmitExample) {
    auto doc = parse_raa(kSubmit);
    ASSERT_EQ(doc.segments.size(), 3u);
    EXPECT_EQ(std::get<PlainText>(doc.segments[0]).text, "Tap ");
    const auto& ref = std::get<Reference>(doc.segments[1]);
    EXPECT_EQ(ref.type(), raa::RefType::point);
    EXPECT_EQ(std::get<NormPoint>(ref.target), (NormPoint{500, 500}));
    EXPECT_EQ(ref.note, std::optional<std::string>("submit"));
    EXPECT_EQ(ref.content, "the Submit button");
    EXPECT_EQ(std::get<PlainText>(doc.segments[2]).text, " to continue");
    EXPECT_EQ(emit_raa(doc), kSubmit);
    EXPECT_EQ(strip_raa(kSubmit), "Tap the Submit button to continue");
}

TEST(Raa, EmitEmptyAndSinglePoint) {
    EXPECT_EQ(emit_raa(Document{}), "");
    Document doc;
    doc.append(Reference::point({3, 4}, "here"));
    EXPECT_EQ(emit_raa(doc), R"(<ref type="point" x="3" y="4">here</ref>)");
    EXPECT_EQ(parse_raa(emit_raa(doc)), doc);
}

TEST(Raa, NestedMarkerReportsInnerOffset) {
    std::string text = R"(a <ref type="point" x="1" y="1">outer <ref type="point" x="2" y="2">in</ref></ref>)";
    auto inner = text.find("<ref", 3);
    EXPECT_EQ(strict_error_offset(text), inner);
}

TEST(Raa, MalformedMarkersStrictVersusLenient) {
    const std::vector<std::string> bad = {
        R"(x <ref type="point" x="1" y="1">never closed)",
        R"(<ref type="point" x="1001" y="1">too far</ref>)",
        R"(<ref type="point" x="1">missing y</ref>)",
        R"(<ref type="box" x1="9" y1="0" x2="3" y2="4">disordered</ref>)",
        R"(<ref type="circle" x="1" y="1">shape</ref>)",
        R"(<ref type="point" x="1" y="1" color="red">extra</ref>)",
        R"(<ref type="point" x="1" y="1"></ref>)",
        R"(<ref type="point" x="-1" y="1">neg</ref>)",
        R"(<ref>bare</ref>)",
        R"(stray </ref> close)",
    };
    for (const auto& text : bad) {
        EXPECT_NE(strict_error_offset(text), std::string::npos) << text;
        auto doc = parse_raa(text, ParseMode::lenient);
        EXPECT_EQ(emit_raa(doc), text);
        EXPECT_EQ(doc.reference_count(), 0u) << text;
    }
    EXPECT_EQ(strict_error_offset(R"(x <ref type="point" x="1" y="1">never closed)"), 2u);
}

TEST(Raa, LenientRecoversLaterMarkers) {
    std::string text = R"(<ref broken <ref type="box" x1="1" y1="2" x2="3" y2="4">ok</ref>)";
    auto doc = parse_raa(text, ParseMode::lenient);
    ASSERT_EQ(doc.segments.size(), 2u);
    EXPECT_EQ(std::get<PlainText>(doc.segments[0]).text, "<ref broken ");
    EXPECT_EQ(std::get<Reference>(doc.segments[1]).content, "ok");
    EXPECT_EQ(emit_raa(doc), text);
}

TEST(Raa, NoteEscaping) {
    Document doc;
    doc.append(Reference::box({1, 2, 3, 4}, "q", std::string(R"(say "hi" & &quot;)")));
    auto text = emit_raa(doc);
    EXPECT_EQ(text, R"(<ref type="box" x1="1" y1="2" x2="3" y2="4" note="say &quot;hi&quot; &amp; &amp;quot;">q</ref>)");
    EXPECT_EQ(parse_raa(text), doc);
}

TEST(Raa, CheckDocumentRejectsAmbiguousText) {
    Document doc;
    doc.segments.push_back(PlainText{"a <ref >"});
    EXPECT_THROW(raa::check_document(doc), Error);
    Document adjacent;
    adjacent.segments = {PlainText{"a"}, PlainText{"b"}};
    EXPECT_THROW(raa::check_document(adjacent), Error);
}

TEST(Raa, GoldenCorpusMatchesExpectedAndReferenceParser) {
    std::ifstream in(std::string(GUIAGENT_TEST_DATA) + "/raa_golden.jsonl");
    ASSERT_TRUE(in.good());
    std::string line;
    int cases = 0;
    while (std::getline(in, line)) {
        auto j = Json::parse(line);
        auto text = j["input"].get<std::string>();
        auto doc = parse_raa(text);
        Json got = Json::array();
        for (const auto& s : doc.segments) got.push_back(gen::segment_json(s));
        EXPECT_EQ(got, j["segments"]) << text;

        Json ref = Json::array();
        for (const auto& s : oracle::parse_raa(text)) ref.push_back(oracle_json(s));
        EXPECT_EQ(ref, j["segments"]) << text;

        std::string concat;
        for (const auto& s : j["segments"]) concat += s.contains("text") ? s["text"] : s["content"];
        EXPECT_EQ(strip_raa(text), concat);
        EXPECT_EQ(emit_raa(doc), text);
        ++cases;
    }
    EXPECT_EQ(cases, 50);
}

TEST(Raa, RandomDocumentsRoundTrip) {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 1000; ++i) {
        auto doc = gen::raa_document(rng);
        auto text = emit_raa(doc);
        auto back = parse_raa(text);
        ASSERT_EQ(back, doc) << text;
        EXPECT_EQ(emit_raa(back), text);
        EXPECT_EQ(strip_raa(text), raa::plain_text(doc));
    }
}
