#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "anchoropt/errors.hpp"
#include "anchoropt/objective.hpp"

namespace anchoropt {

namespace {

ImageAnnotation parse_line(const std::string& line, std::size_t line_no) {
  const std::string where = "annotations line " + std::to_string(line_no) + ": ";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "invalid JSON (" + e.what() + ")");
  }
  try {
    ImageAnnotation image;
    image.image_id = j.at("image_id").get<std::string>();
    image.width = j.at("width").get<int>();
    image.height = j.at("height").get<int>();
    const auto& boxes = j.at("boxes");
    std::vector<int> classes;
    if (j.contains("classes")) classes = j.at("classes").get<std::vector<int>>();
    if (!classes.empty() && classes.size() != boxes.size()) {
      throw ConfigError(where + "'classes' and 'boxes' differ in length");
    }
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      const auto v = boxes[k].get<std::vector<double>>();
      if (v.size() != 4) throw ConfigError(where + "box " + std::to_string(k) + " needs [x, y, w, h]");
      image.boxes.push_back({v[0], v[1], v[2], v[3], classes.empty() ? 0 : classes[k]});
    }
    return image;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "malformed record (" + e.what() + ")");
  }
}

}  // namespace

AnnotationSet::AnnotationSet(std::vector<ImageAnnotation> images) : images_(std::move(images)) {
  std::set<std::string> ids;
  for (const auto& image : images_) {
    if (!ids.insert(image.image_id).second) {
      throw ConfigError("duplicate image_id '" + image.image_id + "'");
    }
    if (image.width <= 0 || image.height <= 0) {
      throw ConfigError("image '" + image.image_id + "' has non-positive size");
    }
    for (std::size_t k = 0; k < image.boxes.size(); ++k) {
      const auto& b = image.boxes[k];
      const std::string id = "image '" + image.image_id + "' box " + std::to_string(k);
      if (!(b.w > 0.0) || !(b.h > 0.0)) throw ConfigError(id + " has zero extent");
      if (b.x < 0.0 || b.y < 0.0 || b.x + b.w > image.width || b.y + b.h > image.height) {
        throw ConfigError(id + " lies outside the image");
      }
    }
  }
  std::sort(images_.begin(), images_.end(),
            [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
}

AnnotationSet AnnotationSet::parse(std::istream& in) {
  std::vector<ImageAnnotation> images;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    images.push_back(parse_line(line, line_no));
  }
  return AnnotationSet(std::move(images));
}

AnnotationSet AnnotationSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open annotations file '" + path + "'");
  return parse(in);
}

std::size_t AnnotationSet::box_count() const {
  std::size_t n = 0;
  for (const auto& image : images_) n += image.boxes.size();
  return n;
}

std::vector<Shape> AnnotationSet::normalized_shapes() const {
  std::vector<Shape> shapes;
  shapes.reserve(box_count());
  for (const auto& image : images_) {
    for (const auto& b : image.boxes) shapes.push_back({b.w / image.width, b.h / image.height});
  }
  return shapes;
}

std::vector<Shape> AnnotationSet::shortest_side_shapes() const {
  std::vector<Shape> shapes;
  shapes.reserve(box_count());
  for (const auto& image : images_) {
    const double side = std::min(image.width, image.height);
    for (const auto& b : image.boxes) shapes.push_back({b.w / side, b.h / side});
  }
  return shapes;
}

}  // namespace anchoropt
