#pragma once

#include <map>
#include <string>
#include <vector>

#include "hipmark/landmarks.hpp"

namespace hipmark {

// Sidecar JSON for one image: image filename, spacing_mm, 24 landmark
// records {category, side, x, y, visible} and the structured flag. This is
// the on-disk contract between the generator, the trainer and the evaluator.
void write_annotation_json(const std::string& path, const AnnotatedImage& a,
                           const std::string& image_filename);

// Loads the sidecar; pixels are left empty (read the PNG separately).
AnnotatedImage read_annotation_json(const std::string& path,
                                    std::string* image_filename = nullptr);

struct SampleFlags {
  bool structured = true;
  std::vector<int> missing;  // global ids
};

struct DatasetManifest {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::map<std::string, SampleFlags> samples;
};

void write_manifest_json(const std::string& path, const DatasetManifest& m);
DatasetManifest read_manifest_json(const std::string& path);

}  // namespace hipmark
