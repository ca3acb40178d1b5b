#include <gtest/gtest.h>

#include <cmath>

#include "test_support.h"
#include "tracelens/errors.h"
#include "tracelens/io.h"
#include "tracelens/json_schema.h"
#include "tracelens/random.h"

namespace tracelens {
namespace {

using testing::TempDir;
using testing::WriteLines;

std::vector<std::string> ReadAll(const std::filesystem::path& p, std::size_t buffer) {
  LineReader r(p, buffer);
  std::vector<std::string> out;
  std::string_view line;
  while (r.Next(&line)) out.emplace_back(line);
  return out;
}

TEST(LineReader, PlainAndGzipGiveSameLines) {
  TempDir dir;
  std::vector<std::string> lines;
  for (int i = 0; i < 1000; ++i) lines.push_back(std::to_string(i) + ",x," + std::string(i % 37, 'y'));
  WriteLines(dir / "a.csv", lines, false);
  WriteLines(dir / "a.csv.gz", lines, true);
  EXPECT_FALSE(HasGzipMagic(dir / "a.csv"));
  EXPECT_TRUE(HasGzipMagic(dir / "a.csv.gz"));
  // A buffer far smaller than a line exercises the carry path.
  for (std::size_t buffer : {std::size_t{7}, std::size_t{64}, std::size_t{1} << 16}) {
    EXPECT_EQ(ReadAll(dir / "a.csv", buffer), lines);
    EXPECT_EQ(ReadAll(dir / "a.csv.gz", buffer), lines);
  }
}

TEST(LineReader, CrLfAndMissingFinalNewline) {
  TempDir dir;
  WriteTextFile(dir / "f.csv", "a,b\r\nc\r\nlast");
  EXPECT_EQ(ReadAll(dir / "f.csv", 4), (std::vector<std::string>{"a,b", "c", "last"}));
}

TEST(LineReader, MissingFileIsIoError) {
  EXPECT_THROW(LineReader("/nonexistent/part-00000-of-00001.csv"), IoError);
}

TEST(Numbers, ShortestFormRoundTrips) {
  Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(rng.Uniform(), static_cast<int>(rng.UniformIndex(80)) - 40);
    EXPECT_EQ(ParseDouble(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(0.5), "0.5");
}

TEST(Numbers, ParseRejectsGarbage) {
  EXPECT_FALSE(ParseDouble(""));
  EXPECT_FALSE(ParseDouble("1.5x"));
  EXPECT_EQ(ParseDouble(" +2.5 "), 2.5);
  EXPECT_FALSE(ParseInt("3.0"));
  EXPECT_EQ(ParseInt("-7"), -7);
  EXPECT_FALSE(ParseUint("-7"));
}

TEST(SplitFields, KeepsEmptyFields) {
  std::vector<std::string_view> f;
  SplitFields("1,,3,", ',', &f);
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[1], "");
  EXPECT_EQ(f[3], "");
}

TEST(KeyValue, SectionsCommentsAndDuplicates) {
  const auto e = ParseKeyValueText(
      "# header\njob_count = 10  # trailing\n[interarrival]\nshape = 1.5\n\nscale=2\n");
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0].key, "job_count");
  EXPECT_EQ(e[0].value, "10");
  EXPECT_EQ(e[1].key, "interarrival.shape");
  EXPECT_EQ(e[2].key, "interarrival.scale");
  EXPECT_EQ(e[2].line, 6);
  EXPECT_THROW(ParseKeyValueText("a = 1\na = 2\n"), ValidationError);
  EXPECT_THROW(ParseKeyValueText("novalue\n"), ValidationError);
  EXPECT_THROW(ParseKeyValueText("[open\n"), ValidationError);
}

TEST(SchemaValidator, SubsetKeywords) {
  const SchemaValidator v(Json::parse(R"({
    "type": "object",
    "required": ["a"],
    "additionalProperties": false,
    "properties": {
      "a": {"type": "integer", "minimum": 0, "maximum": 5},
      "b": {"$ref": "#/definitions/s"},
      "c": {"type": "array", "minItems": 1, "items": {"enum": ["x", "y"]}},
      "d": {"anyOf": [{"type": "null"}, {"type": "string"}]}
    },
    "definitions": {"s": {"type": ["number", "null"]}}
  })"));
  EXPECT_TRUE(v.Validate(Json::parse(R"({"a": 3, "b": null, "c": ["x"], "d": "q"})")).empty());
  EXPECT_EQ(v.Validate(Json::parse(R"({"a": 6})")).size(), 1u);
  EXPECT_EQ(v.Validate(Json::parse(R"({"a": 1.5})")).size(), 1u);
  EXPECT_EQ(v.Validate(Json::parse(R"({"b": 1})")).size(), 1u);
  EXPECT_EQ(v.Validate(Json::parse(R"({"a": 1, "e": 1})")).size(), 1u);
  EXPECT_EQ(v.Validate(Json::parse(R"({"a": 1, "c": []})")).size(), 1u);
  EXPECT_EQ(v.Validate(Json::parse(R"({"a": 1, "c": ["z"]})")).size(), 1u);
  EXPECT_EQ(v.Validate(Json::parse(R"({"a": 1, "d": 2})")).size(), 1u);
  EXPECT_EQ(v.Validate(Json::parse(R"({"a": 1, "b": "s"})")).size(), 1u);
}

TEST(SchemaValidator, RejectsUnsupportedKeywords) {
  EXPECT_THROW(SchemaValidator(Json::parse(R"({"pattern": "x"})")), ArgumentError);
}

TEST(SchemaValidator, ShippedReportSchemaLoads) {
  EXPECT_TRUE(ReportSchema().contains("properties"));
  EXPECT_FALSE(ValidateReport(Json::object()).empty());
}

}  // namespace
}  // namespace tracelens
