#include "hipmark/annotation_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hipmark {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  json j;
  f >> j;
  return j;
}

void dump_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_annotation_json(const std::string& path, const AnnotatedImage& a,
                           const std::string& image_filename) {
  json j;
  j["image"] = image_filename;
  j["spacing_mm"] = {a.spacing_x, a.spacing_y};
  j["structured"] = a.structured;
  json lms = json::array();
  for (int gid = 0; gid < kNumLandmarks; ++gid) {
    const Landmark& lm = a.landmarks[gid];
    lms.push_back({{"category", category_of(gid)},
                   {"side", side_of(gid) == Side::Left ? "L" : "R"},
                   {"x", lm.x},
                   {"y", lm.y},
                   {"visible", lm.visible}});
  }
  j["landmarks"] = lms;
  dump_json(path, j);
}

AnnotatedImage read_annotation_json(const std::string& path, std::string* image_filename) {
  const json j = load_json(path);
  AnnotatedImage a;
  if (image_filename) *image_filename = j.at("image").get<std::string>();
  a.spacing_x = j.at("spacing_mm").at(0).get<double>();
  a.spacing_y = j.at("spacing_mm").at(1).get<double>();
  a.structured = j.at("structured").get<bool>();
  const auto& lms = j.at("landmarks");
  if (lms.size() != kNumLandmarks)
    throw std::runtime_error(path + ": expected 24 landmarks, got " +
                             std::to_string(lms.size()));
  for (const auto& e : lms) {
    const int cat = e.at("category").get<int>();
    const std::string side = e.at("side").get<std::string>();
    if (cat < 1 || cat > kNumCategories || (side != "L" && side != "R"))
      throw std::runtime_error(path + ": bad landmark record");
    const int gid = global_id(cat, side == "L" ? Side::Left : Side::Right);
    a.landmarks[gid].x = e.at("x").get<double>();
    a.landmarks[gid].y = e.at("y").get<double>();
    a.landmarks[gid].visible = e.at("visible").get<bool>();
  }
  return a;
}

void write_manifest_json(const std::string& path, const DatasetManifest& m) {
  json j;
  j["train"] = m.train;
  j["val"] = m.val;
  json samples = json::object();
  for (const auto& [id, flags] : m.samples)
    samples[id] = {{"structured", flags.structured}, {"missing", flags.missing}};
  j["samples"] = samples;
  dump_json(path, j);
}

DatasetManifest read_manifest_json(const std::string& path) {
  const json j = load_json(path);
  DatasetManifest m;
  m.train = j.at("train").get<std::vector<std::string>>();
  m.val = j.at("val").get<std::vector<std::string>>();
  for (const auto& [id, flags] : j.at("samples").items()) {
    SampleFlags f;
    f.structured = flags.at("structured").get<bool>();
    f.missing = flags.at("missing").get<std::vector<int>>();
    m.samples[id] = f;
  }
  return m;
}

}  // namespace hipmark
