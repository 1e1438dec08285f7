#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgedet/geometry.hpp"

namespace edgedet {

/// One line of the annotation format:
///   <image-id> <x> <y> <w> <h> <class-name> [score]
/// Ground-truth files omit the score; detector output appends it.
struct Annotation {
  std::string image_id;
  BoundingBox box;
  std::string label;
  std::optional<double> score;
};

/// image-id -> boxes, in file order.
using AnnotationSet = std::map<std::string, std::vector<Annotation>>;

/// Blank lines and lines starting with '#' are skipped. Throws FormatError
/// with the offending line number on malformed input.
AnnotationSet parse_annotations(std::istream& in);
AnnotationSet load_annotations(const std::filesystem::path& path);

void write_annotation(std::ostream& out, const Annotation& a);

}  // namespace edgedet
