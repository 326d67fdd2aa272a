#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hydra/catalog.hpp"
#include "hydra/types.hpp"

namespace hydra {

// One expanded manifest row. An image with weight w appears as w identical rows.
struct ManifestRow {
  ImageId image_id = 0;
  std::string path;
  std::string class_name;
  std::int64_t weight = 1;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
  friend auto operator<=>(const ManifestRow&, const ManifestRow&) = default;
};

using Manifest = std::vector<ManifestRow>;

struct SplitConfig {
  double train_fraction = 0.95;
  std::uint64_t seed = 0;
  double undersample_ratio = 1.0;

  void validate() const;
};

// Replication count per class; classes not listed get weight 1.
using ClassWeights = std::map<std::string, std::int64_t>;

// Every effectively-labeled image of the plot type, chronological, expanded by
// weight. Throws EmptyClass when a declared class has no labeled image.
Manifest build_manifest(const Catalog& catalog, const std::string& plot_type,
                        const ClassWeights& weights = {});

std::map<std::string, std::size_t> class_counts(const Manifest& manifest);

// Caps every class at ceil(ratio * smallest class count) by seeded uniform
// sampling without replacement. Survivors keep their input order.
Manifest strategic_undersample(const Manifest& manifest, std::uint64_t seed,
                               double ratio);

struct Split {
  Manifest train;
  Manifest validation;
};

// Stratified per class: round(fraction * n) of the class's n distinct images
// go to train, clamped so each class keeps at least one image on both sides.
// Weight replicas of an image stay together. Both halves are shuffled.
// Throws ClassTooSmall for a class with fewer than 2 images.
Split split_shuffle(const Manifest& manifest, const SplitConfig& config);

// Header `image_id,path,class,weight`.
void write_manifest_csv(std::ostream& out, const Manifest& manifest);

}  // namespace hydra
