// Copyright 2026 The planksynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "planksynth/dataset_io.hpp"

namespace planksynth {
namespace {

std::vector<std::string> kinds(const std::vector<Violation>& v) {
  std::vector<std::string> k;
  for (const auto& x : v) k.push_back(x.kind);
  return k;
}

TEST(Manifest, EmptyRoundTrip) {
  const auto dir = testing::scratch("dio_empty");
  const AnnotationSet empty;
  write_manifest(empty, dir / "a.json");
  EXPECT_EQ(read_manifest(dir / "a.json"), empty);
}

TEST(Manifest, FixtureRoundTripIsFieldExact) {
  const auto dir = testing::scratch("dio_fixture");
  const AnnotationSet set = testing::three_image_fixture();
  ASSERT_EQ(set.images.size(), 3u);
  ASSERT_EQ(set.annotations.size(), 7u);
  write_manifest(set, dir / "a.json");
  const AnnotationSet back = read_manifest(dir / "a.json");
  EXPECT_EQ(back, set);
  EXPECT_TRUE(validate(back).empty());
  // Byte determinism.
  EXPECT_EQ(serialize_manifest(back), serialize_manifest(set));
}

TEST(Manifest, KeyOrderIsFixed) {
  const std::string text = serialize_manifest(testing::three_image_fixture());
  const auto info = text.find("\"info\""), images = text.find("\"images\""),
             cats = text.find("\"categories\""), anns = text.find("\"annotations\"");
  EXPECT_LT(info, images);
  EXPECT_LT(images, cats);
  EXPECT_LT(cats, anns);
  EXPECT_NE(text.find("\"segmentation\":{\"size\":[30,40],\"counts\":["), std::string::npos);
}

TEST(Manifest, DanglingImageNamesAnnotation) {
  auto j = to_json(testing::three_image_fixture());
  j["annotations"][4]["image_id"] = 77;
  try {
    manifest_from_json(j);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("annotation 5"), std::string::npos) << e.what();
  }
}

TEST(Manifest, SchemaErrorsNameTheRecord) {
  auto j = to_json(testing::three_image_fixture());
  j["annotations"][2].erase("bbox");
  try {
    manifest_from_json(j);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("annotation 3"), std::string::npos) << e.what();
  }
  const auto dir = testing::scratch("dio_bad");
  std::ofstream(dir / "broken.json") << "{not json";
  EXPECT_THROW(read_manifest(dir / "broken.json"), SchemaError);
  EXPECT_THROW(read_manifest(dir / "absent.json"), IoError);
}

TEST(Validate, SoundFixtureIsClean) { EXPECT_TRUE(validate(testing::three_image_fixture()).empty()); }

TEST(Validate, AreaOffByOne) {
  AnnotationSet set = testing::three_image_fixture();
  set.annotations[1].area += 1;
  const auto v = validate(set);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "area");
  EXPECT_EQ(v[0].record, "annotation 2");
}

TEST(Validate, ShortRleIsMalformed) {
  AnnotationSet set = testing::three_image_fixture();
  set.annotations[0].segmentation.counts.back() -= 1;
  EXPECT_EQ(kinds(validate(set)), (std::vector<std::string>{"malformed-rle"}));
}

TEST(Validate, LooseBboxAndDanglingRefs) {
  AnnotationSet set = testing::three_image_fixture();
  set.annotations[2].bbox.w += 1;
  set.annotations[3].image_id = 99;
  set.annotations[4].category_id = 5;
  const auto k = kinds(validate(set));
  EXPECT_EQ(k, (std::vector<std::string>{"bbox", "dangling-image", "dangling-category"}));
}

TEST(Detections, RoundTripAndScoreRange) {
  const auto dir = testing::scratch("dio_dt");
  DetectionSet d = detections_from_annotations(testing::three_image_fixture(), 0.25);
  d.detections[0].tile = 3;
  d.detections[1].window = BBox{0, 0, 10, 10};
  write_detections(d, dir / "d.json");
  EXPECT_EQ(read_detections(dir / "d.json"), d);
  auto j = to_json(d);
  j[2]["score"] = 1.5;
  EXPECT_THROW(detections_from_json(j), SchemaError);
}

}  // namespace
}  // namespace planksynth
