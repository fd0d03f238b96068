/*
 * Copyright 2026 The detcfg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "detcfg/dataset.hpp"
#include "detcfg/dataset_io.hpp"
#include "support/synthetic.hpp"

namespace detcfg {
namespace {

TEST(ParseCoco, EmptyInput) {
  const Dataset ds = parse_coco(R"({"images": [], "annotations": [], "categories": []})");
  EXPECT_TRUE(ds.images.empty());
  EXPECT_EQ(ds.annotation_count(), 0u);
}

TEST(ParseCoco, SingleImagePassThrough) {
  const Dataset ds = parse_coco(R"({
    "images": [{"id": 1, "file_name": "a.png", "width": 100, "height": 100}],
    "annotations": [{"id": 9, "image_id": 1, "category_id": 1, "bbox": [10, 10, 20, 20],
                     "iscrowd": 0, "segmentation": [[1, 2, 3]]}],
    "categories": [{"id": 1, "name": "bird"}]})");
  ASSERT_EQ(ds.images.size(), 1u);
  const ImageRecord& img = ds.images[0];
  EXPECT_EQ(img.id, "1");
  EXPECT_EQ(img.width, 100);
  EXPECT_FALSE(img.gsd.has_value());
  ASSERT_EQ(img.annotations.size(), 1u);
  EXPECT_EQ(img.annotations[0].box, (BBox{10, 10, 20, 20}));
  EXPECT_EQ(ds.categories.at(1), "bird");
}

TEST(ParseCoco, AnnotationOrderPreservedAndGsdRead) {
  const Dataset ds = parse_coco(R"({
    "images": [{"id": "x", "width": 50, "height": 40, "gsd": 1.5},
               {"id": "y", "width": 50, "height": 40}],
    "annotations": [{"image_id": "x", "category_id": 1, "bbox": [1, 1, 3, 3]},
                    {"image_id": "y", "category_id": 1, "bbox": [2, 2, 4, 4]},
                    {"image_id": "x", "category_id": 1, "bbox": [5, 5, 6, 6]}],
    "categories": [{"id": 1, "name": "bird"}]})");
  ASSERT_EQ(ds.images[0].annotations.size(), 2u);
  EXPECT_EQ(ds.images[0].annotations[0].box.x, 1);
  EXPECT_EQ(ds.images[0].annotations[1].box.x, 5);
  EXPECT_EQ(ds.images[0].gsd, 1.5);
}

TEST(ParseCoco, NonPositiveBoxIsStructuralError) {
  try {
    parse_coco(R"({"images": [{"id": 1, "width": 100, "height": 100}],
                   "annotations": [{"image_id": 1, "category_id": 1, "bbox": [5, 5, 0, 10]}],
                   "categories": [{"id": 1, "name": "bird"}]})");
    FAIL() << "expected StructuralError";
  } catch (const StructuralError& e) {
    EXPECT_NE(std::string(e.what()).find("non-positive box dimension"), std::string::npos);
  }
}

TEST(ParseCoco, UnknownImageIdIsNamed) {
  try {
    parse_coco(R"({"images": [{"id": 1, "width": 10, "height": 10}],
                   "annotations": [{"image_id": 42, "category_id": 1, "bbox": [1, 1, 2, 2]}],
                   "categories": [{"id": 1, "name": "bird"}]})");
    FAIL() << "expected StructuralError";
  } catch (const StructuralError& e) {
    EXPECT_NE(std::string(e.what()).find("'42'"), std::string::npos);
  }
}

TEST(ParseCoco, MalformedTextReportsByteOffset) {
  const std::string text = R"({"images": [ {"id": 1,, } ]})";
  try {
    parse_coco(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.location(), 0u);
    EXPECT_LE(e.location(), text.size());
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
  }
}

TEST(ParseCoco, UnknownCategoryRejected) {
  EXPECT_THROW(parse_coco(R"({"images": [{"id": 1, "width": 10, "height": 10}],
                   "annotations": [{"image_id": 1, "category_id": 3, "bbox": [1, 1, 2, 2]}],
                   "categories": [{"id": 1, "name": "bird"}]})"),
               StructuralError);
}

TEST(ParseCoco, OutOfBoundsBoxKeptAsWarning) {
  const Dataset ds = parse_coco(R"({"images": [{"id": 1, "width": 10, "height": 10}],
                   "annotations": [{"image_id": 1, "category_id": 1, "bbox": [8, 8, 5, 5]}],
                   "categories": [{"id": 1, "name": "bird"}]})");
  EXPECT_EQ(ds.images[0].annotations[0].box, (BBox{8, 8, 5, 5}));
  const ValidationReport rep = validate(ds);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.warnings.size(), 1u);
}

constexpr const char* kHeader = "image_id,file_name,image_width,image_height,gsd,x,y,w,h,category\n";

TEST(ParseCsv, RowsMergeByImage) {
  const Dataset ds = parse_csv_annotations(std::string(kHeader) +
                                           "a,a.png,100,100,2.5,0,0,10,10,bird\n"
                                           "a,a.png,100,100,2.5,20,20,5,5,bird\n");
  ASSERT_EQ(ds.images.size(), 1u);
  EXPECT_EQ(ds.images[0].annotations.size(), 2u);
  EXPECT_EQ(ds.images[0].gsd, 2.5);
}

TEST(ParseCsv, EmptyGsdIsAbsentAndCrlfAccepted) {
  const Dataset ds =
      parse_csv_annotations("image_id,file_name,image_width,image_height,gsd,x,y,w,h,category\r\n"
                            "a,a.png,100,100,,0,0,10,10,bird\r\n");
  ASSERT_EQ(ds.images.size(), 1u);
  EXPECT_FALSE(ds.images[0].gsd.has_value());
}

TEST(ParseCsv, ConflictingDimensionsNameTheImage) {
  try {
    parse_csv_annotations(std::string(kHeader) + "a,a.png,100,100,,0,0,10,10,bird\n"
                                                 "a,a.png,200,100,,0,0,10,10,bird\n");
    FAIL() << "expected StructuralError";
  } catch (const StructuralError& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
}

TEST(ParseCsv, NonNumericFieldReportsRow) {
  try {
    parse_csv_annotations(std::string(kHeader) + "a,a.png,100,100,,0,0,10,10,bird\n"
                                                 "b,b.png,100,100,,0,zero,10,10,bird\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), 3u);
  }
}

TEST(ParseCsv, WrongHeaderRejected) {
  EXPECT_THROW(parse_csv_annotations("id,x,y\n1,2,3\n"), ParseError);
}

TEST(ParseCsv, QuotedFileNameWithComma) {
  const Dataset ds =
      parse_csv_annotations(std::string(kHeader) + "a,\"tile, 3.png\",100,100,,0,0,10,10,bird\n");
  EXPECT_EQ(ds.images[0].file_name, "tile, 3.png");
}

TEST(DatasetStats, EmptyDataset) {
  const DatasetStats st = dataset_stats(Dataset{});
  EXPECT_EQ(st.images, 0u);
  EXPECT_EQ(st.annotations, 0u);
  EXPECT_TRUE(st.width.empty());
}

TEST(DatasetStats, MedianOfThreeWidths) {
  const Dataset ds = testing::single_class(
      {testing::image("a", 100, 100, {{0, 0, 10, 5}, {0, 0, 20, 5}, {0, 0, 30, 5}})});
  const DatasetStats st = dataset_stats(ds);
  EXPECT_EQ(st.annotations, 3u);
  EXPECT_DOUBLE_EQ(st.width.median(), 20.0);
  EXPECT_DOUBLE_EQ(st.width.min(), 10.0);
  EXPECT_DOUBLE_EQ(st.width.max(), 30.0);
  EXPECT_DOUBLE_EQ(st.width.q25(), 15.0);
  EXPECT_EQ(st.per_category.at("bird"), 3u);
}

// serialize -> parse preserves the statistics, for random datasets including
// empty images, multiple categories and awkward file names.
TEST(DatasetProperties, CsvRoundTripPreservesStats) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Dataset ds = testing::random_dataset(rng, 8, 60);
    ds.categories[2] = "gull, herring";
    for (auto& img : ds.images) {
      if (!img.annotations.empty() && rng() % 2) img.annotations.back().category_id = 2;
      if (rng() % 3 == 0) img.gsd = 0.5 + static_cast<double>(rng() % 100) / 7.0;
    }
    std::ostringstream os;
    write_csv_annotations(ds, os);
    const Dataset back = parse_csv_annotations(os.str());
    EXPECT_EQ(dataset_stats(back), dataset_stats(ds)) << "trial " << trial;
    ASSERT_EQ(back.images.size(), ds.images.size());
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
      EXPECT_EQ(back.images[i].gsd, ds.images[i].gsd);
      ASSERT_EQ(back.images[i].annotations.size(), ds.images[i].annotations.size());
      for (std::size_t a = 0; a < ds.images[i].annotations.size(); ++a)
        EXPECT_EQ(back.images[i].annotations[a].box, ds.images[i].annotations[a].box);
    }
  }
}

TEST(DatasetProperties, ImageOrderDoesNotChangeStats) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset ds = testing::random_dataset(rng);
    Dataset perm = ds;
    std::shuffle(perm.images.begin(), perm.images.end(), rng);
    std::ostringstream a, b;
    write_csv_annotations(ds, a);
    write_csv_annotations(perm, b);
    const Dataset pa = parse_csv_annotations(a.str()), pb = parse_csv_annotations(b.str());
    EXPECT_EQ(dataset_stats(pa), dataset_stats(pb));
    for (const auto& img : pa.images) {
      const ImageRecord* other = pb.find_image(img.id);
      ASSERT_NE(other, nullptr);
      EXPECT_EQ(*other, img);
    }
  }
}

}  // namespace
}  // namespace detcfg
