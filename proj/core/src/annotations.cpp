#include "edgedet/annotations.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "edgedet/errors.hpp"

namespace edgedet {

AnnotationSet parse_annotations(std::istream& in) {
  AnnotationSet set;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    Annotation a;
    if (!(fields >> a.image_id >> a.box.x >> a.box.y >> a.box.w >> a.box.h >> a.label))
      throw FormatError("annotation line " + std::to_string(line_no) + ": expected 6 fields");
    double score = 0.0;
    if (fields >> score) a.score = score;
    std::string rest;
    if (fields.fail() && !fields.eof())
      throw FormatError("annotation line " + std::to_string(line_no) + ": bad score column");
    fields.clear();
    if (fields >> rest)
      throw FormatError("annotation line " + std::to_string(line_no) + ": trailing fields");
    if (a.box.w <= 0.0 || a.box.h <= 0.0)
      throw FormatError("annotation line " + std::to_string(line_no) + ": empty box");
    set[a.image_id].push_back(std::move(a));
  }
  return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open annotation file " + path.string());
  return parse_annotations(in);
}

void write_annotation(std::ostream& out, const Annotation& a) {
  out << a.image_id << ' ' << a.box.x << ' ' << a.box.y << ' ' << a.box.w << ' ' << a.box.h
      << ' ' << a.label;
  if (a.score) out << ' ' << std::setprecision(6) << *a.score;
  out << '\n';
}

}  // namespace edgedet
