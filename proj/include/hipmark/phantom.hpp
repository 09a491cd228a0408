#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hipmark/annotation_io.hpp"
#include "hipmark/landmarks.hpp"
#include "hipmark/rng.hpp"

namespace hipmark {

struct PhantomConfig {
  int height = 256;
  int width = 256;
  double spacing_mm = 1.0;  // isotropic mm per px

  // Symmetric jitter half-ranges; each phantom draws uniformly in +-range.
  double tilt_deg = 2.5;           // whole-pelvis rotation about image centre
  double head_radius_px = 2.0;     // femoral head radius, at 256-px scale
  double neck_angle_deg = 3.0;     // neck-shaft chain rotation about the head
  double limb_rotation_deg = 4.0;  // shaft rotation about its proximal point

  double noise_sigma = 0.03;          // additive Gaussian, intensity units
  double landmark_margin_px = 8.0;    // absolute, at output scale
  double occlusion_radius_px = 24.0;  // at 256-px scale
  std::uint64_t seed = 0;
};

// Throws std::invalid_argument naming the offending landmarks when the jitter
// ranges could push a landmark within `landmark_margin_px` of the border.
void validate_phantom_config(const PhantomConfig& cfg);

// Deterministic for (cfg, sample_seed). All 24 landmarks visible, coordinates
// quantised to 1/64 px, pixels quantised to 8-bit levels.
AnnotatedImage generate_phantom(const PhantomConfig& cfg, std::uint64_t sample_seed);

enum class DegradeMode { Occlude, Truncate };

// Makes the listed landmarks unidentifiable: occlusion overwrites a disc with
// background texture, truncation blanks the image bottom and keeps the size.
// Listed landmarks become invisible with placeholder coordinates; everything
// else is untouched.
AnnotatedImage inject_unstructured(const AnnotatedImage& a, const std::vector<int>& missing,
                                   DegradeMode mode, const PhantomConfig& cfg,
                                   std::uint64_t seed = 0);

// True when truncation can remove exactly the listed landmarks.
bool truncation_feasible(const AnnotatedImage& a, const std::vector<int>& missing);

// Missing-set draw for unstructured samples: category weights
// {10: 0.4, 12: 0.4, rest uniform over the remaining 10 categories: 0.2},
// set size in {1, 2, 3} with probabilities {0.5, 0.35, 0.15}.
std::vector<int> draw_missing_set(Rng& rng);

struct DatasetSpec {
  int train_total = 257;
  int val_total = 53;
  int train_unstructured = 32;
  int val_unstructured = 18;
};

// Renders the dataset to `out_dir` (images/, annotations/, manifest.json).
DatasetManifest build_dataset(const PhantomConfig& cfg, const DatasetSpec& spec,
                              const std::string& out_dir);

}  // namespace hipmark
