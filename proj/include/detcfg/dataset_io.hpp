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
#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>

#include "json.hpp"

#include "detcfg/csv.hpp"
#include "detcfg/dataset.hpp"
#include "detcfg/error.hpp"

namespace detcfg {

namespace detail {

inline void throw_on_errors(const Dataset& ds) {
  const ValidationReport rep = validate(ds);
  if (!rep.ok()) {
    const auto& e = rep.errors.front();
    throw StructuralError(e.message + " in image '" + e.image_id + "'");
  }
}

// COCO ids are usually integers but some exporters write strings.
inline std::string id_text(const nlohmann::json& v, const char* what) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d) return std::to_string(static_cast<std::int64_t>(d));
  }
  throw StructuralError(std::string("invalid ") + what);
}

inline double number(const nlohmann::json& obj, const char* key, const std::string& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number())
    throw StructuralError(ctx + ": missing or non-numeric '" + key + "'");
  return it->get<double>();
}

}  // namespace detail

/// Parses COCO-style annotation text. iscrowd, segmentation, area and any
/// other extra fields are ignored. Annotation order within an image follows
/// the input order.
inline Dataset parse_coco(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed annotation JSON", e.byte, "byte offset");
  }
  if (!doc.is_object()) throw StructuralError("top-level JSON value must be an object");

  auto array = [&](const char* key) -> const nlohmann::json& {
    static const nlohmann::json empty = nlohmann::json::array();
    const auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return empty;
    if (!it->is_array()) throw StructuralError(std::string("'") + key + "' must be an array");
    return *it;
  };

  Dataset ds;
  for (const auto& c : array("categories")) {
    if (!c.is_object()) throw StructuralError("category entry must be an object");
    const auto id = static_cast<CategoryId>(detail::number(c, "id", "category"));
    std::string name = std::to_string(id);
    if (auto it = c.find("name"); it != c.end() && it->is_string()) name = it->get<std::string>();
    ds.categories[id] = std::move(name);
  }

  std::unordered_map<std::string, std::size_t> index;
  for (const auto& im : array("images")) {
    if (!im.is_object() || !im.contains("id"))
      throw StructuralError("image entry must be an object with an 'id'");
    ImageRecord rec;
    rec.id = detail::id_text(im.at("id"), "image id");
    const std::string ctx = "image '" + rec.id + "'";
    if (auto it = im.find("file_name"); it != im.end() && it->is_string())
      rec.file_name = it->get<std::string>();
    rec.width = detail::number(im, "width", ctx);
    rec.height = detail::number(im, "height", ctx);
    if (auto it = im.find("gsd"); it != im.end() && !it->is_null()) {
      if (!it->is_number()) throw StructuralError(ctx + ": non-numeric 'gsd'");
      rec.gsd = it->get<double>();
    }
    if (!index.emplace(rec.id, ds.images.size()).second)
      throw StructuralError("duplicate image id '" + rec.id + "'");
    ds.images.push_back(std::move(rec));
  }

  for (const auto& an : array("annotations")) {
    if (!an.is_object() || !an.contains("image_id"))
      throw StructuralError("annotation entry must be an object with an 'image_id'");
    const std::string image_id = detail::id_text(an.at("image_id"), "annotation image_id");
    const auto it = index.find(image_id);
    if (it == index.end())
      throw StructuralError("annotation references unknown image id '" + image_id + "'");
    const auto bb = an.find("bbox");
    if (bb == an.end() || !bb->is_array() || bb->size() != 4)
      throw StructuralError("annotation for image '" + image_id + "' lacks a 4-element bbox");
    for (const auto& v : *bb)
      if (!v.is_number())
        throw StructuralError("annotation for image '" + image_id + "' has a non-numeric bbox");
    Annotation a;
    a.box = {(*bb)[0].get<double>(), (*bb)[1].get<double>(), (*bb)[2].get<double>(),
             (*bb)[3].get<double>()};
    a.category_id = static_cast<CategoryId>(detail::number(an, "category_id", "annotation"));
    ds.images[it->second].annotations.push_back(a);
  }

  detail::throw_on_errors(ds);
  return ds;
}

inline Dataset parse_coco(std::istream& in) { return parse_coco(csv::read_stream(in)); }

inline constexpr std::string_view kAnnotationCsvHeader =
    "image_id,file_name,image_width,image_height,gsd,x,y,w,h,category";

/// Parses the flat annotation CSV. Rows sharing an image_id merge into one
/// image; a row whose box and category fields are all empty declares an
/// image without annotations. Category names get ids 1, 2, ... in order of
/// first appearance.
inline Dataset parse_csv_annotations(std::string_view text) {
  const csv::Table table = csv::read_table(text);
  const csv::Row expected = csv::split(kAnnotationCsvHeader, 1);
  if (table.header != expected)
    throw ParseError("unexpected header, expected '" + std::string(kAnnotationCsvHeader) + "'",
                     1, "row");

  Dataset ds;
  std::unordered_map<std::string, std::size_t> index;
  std::unordered_map<std::string, CategoryId> category_ids;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const csv::Row& f = table.rows[r];
    const std::size_t row_no = table.row_numbers[r];
    if (f.size() != expected.size())
      throw ParseError("expected " + std::to_string(expected.size()) + " fields, got " +
                           std::to_string(f.size()),
                       row_no, "row");
    const std::string& id = f[0];
    if (id.empty()) throw ParseError("empty image_id", row_no, "row");
    const double width = csv::parse_double(f[2], row_no, "image_width");
    const double height = csv::parse_double(f[3], row_no, "image_height");
    std::optional<double> gsd;
    if (!f[4].empty()) gsd = csv::parse_double(f[4], row_no, "gsd");

    auto [it, inserted] = index.emplace(id, ds.images.size());
    if (inserted) {
      ImageRecord rec;
      rec.id = id;
      rec.file_name = f[1];
      rec.width = width;
      rec.height = height;
      rec.gsd = gsd;
      ds.images.push_back(std::move(rec));
    } else {
      const ImageRecord& rec = ds.images[it->second];
      if (rec.width != width || rec.height != height)
        throw StructuralError("inconsistent width/height for image '" + id + "' (row " +
                              std::to_string(row_no) + ")");
      if (rec.gsd != gsd)
        throw StructuralError("inconsistent gsd for image '" + id + "' (row " +
                              std::to_string(row_no) + ")");
    }

    const bool no_box = f[5].empty() && f[6].empty() && f[7].empty() && f[8].empty() &&
                        f[9].empty();
    if (no_box) continue;
    Annotation a;
    a.box = {csv::parse_double(f[5], row_no, "x"), csv::parse_double(f[6], row_no, "y"),
             csv::parse_double(f[7], row_no, "w"), csv::parse_double(f[8], row_no, "h")};
    if (f[9].empty()) throw ParseError("empty category", row_no, "row");
    auto [cit, fresh] =
        category_ids.emplace(f[9], static_cast<CategoryId>(category_ids.size() + 1));
    if (fresh) ds.categories[cit->second] = f[9];
    a.category_id = cit->second;
    ds.images[it->second].annotations.push_back(a);
  }

  detail::throw_on_errors(ds);
  return ds;
}

inline Dataset parse_csv_annotations(std::istream& in) {
  return parse_csv_annotations(csv::read_stream(in));
}

/// Inverse of parse_csv_annotations. Numbers are written in shortest
/// round-trip form so re-parsing reproduces every value exactly.
inline void write_csv_annotations(const Dataset& ds, std::ostream& out) {
  out << kAnnotationCsvHeader << '\n';
  for (const auto& img : ds.images) {
    const std::string prefix = csv::quote(img.id) + ',' + csv::quote(img.file_name) + ',' +
                               csv::format_double(img.width) + ',' +
                               csv::format_double(img.height) + ',' +
                               (img.gsd ? csv::format_double(*img.gsd) : std::string());
    if (img.annotations.empty()) {
      out << prefix << ",,,,,\n";
      continue;
    }
    for (const auto& a : img.annotations) {
      const auto cat = ds.categories.find(a.category_id);
      const std::string name =
          cat != ds.categories.end() ? cat->second : std::to_string(a.category_id);
      out << prefix << ',' << csv::format_double(a.box.x) << ','
          << csv::format_double(a.box.y) << ',' << csv::format_double(a.box.w) << ','
          << csv::format_double(a.box.h) << ',' << csv::quote(name) << '\n';
    }
  }
}

/// Picks the parser from the file extension: `.csv` is the flat format,
/// anything else is treated as COCO JSON.
inline Dataset load_dataset(const std::string& path) {
  const std::string text = csv::read_file(path);
  const bool is_csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  return is_csv ? parse_csv_annotations(text) : parse_coco(text);
}

}  // namespace detcfg
