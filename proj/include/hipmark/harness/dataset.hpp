#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hipmark/annotation_io.hpp"
#include "hipmark/landmarks.hpp"
#include "hipmark/png_io.hpp"

namespace hipmark::harness {

struct LoadedDataset {
  DatasetManifest manifest;
  std::map<std::string, AnnotatedImage> samples;  // pixels loaded

  const AnnotatedImage& at(const std::string& id) const { return samples.at(id); }
};

inline LoadedDataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  LoadedDataset ds;
  ds.manifest = read_manifest_json((fs::path(dir) / "manifest.json").string());
  auto load_one = [&](const std::string& id) {
    std::string image_name;
    AnnotatedImage a = read_annotation_json(
        (fs::path(dir) / "annotations" / (id + ".json")).string(), &image_name);
    a.pixels = read_gray8_png((fs::path(dir) / "images" / image_name).string());
    a.id = id;
    ds.samples.emplace(id, std::move(a));
  };
  for (const auto& id : ds.manifest.train) load_one(id);
  for (const auto& id : ds.manifest.val) load_one(id);
  return ds;
}

}  // namespace hipmark::harness
