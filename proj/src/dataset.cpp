#include "hydra/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hydra/error.hpp"
#include "hydra/rng.hpp"

namespace hydra {

void SplitConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  if (!(undersample_ratio >= 1.0))
    fail(ErrorCode::InvalidArgument, "undersample_ratio must be at least 1");
}

Manifest build_manifest(const Catalog& catalog, const std::string& plot_type,
                        const ClassWeights& weights) {
  const ClassSet classes = catalog.class_set(plot_type);
  for (const auto& [name, w] : weights) {
    if (w < 1) fail(ErrorCode::InvalidArgument, "class weight must be >= 1: " + name);
  }

  ImageQuery q;
  q.plot_type = plot_type;
  q.labeled = true;
  Manifest out;
  std::map<std::string, std::size_t> seen;
  for (const auto& row : catalog.query_images(q)) {
    // Labels from a class since removed from the set are not trainable.
    if (!row.label || !classes.contains(*row.label)) continue;
    const auto it = weights.find(*row.label);
    const std::int64_t w = it == weights.end() ? 1 : it->second;
    const std::string path = catalog.resolve_path(row.image.image_id).string();
    for (std::int64_t i = 0; i < w; ++i)
      out.push_back({row.image.image_id, path, *row.label, w});
    ++seen[*row.label];
  }
  for (const auto& c : classes.classes) {
    if (!seen.count(c))
      fail(ErrorCode::EmptyClass,
           "class '" + c + "' of plot type " + plot_type + " has no labeled images");
  }
  return out;
}

std::map<std::string, std::size_t> class_counts(const Manifest& manifest) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : manifest) ++counts[r.class_name];
  return counts;
}

Manifest strategic_undersample(const Manifest& manifest, std::uint64_t seed,
                               double ratio) {
  if (!(ratio >= 1.0))
    fail(ErrorCode::InvalidArgument, "undersample ratio must be at least 1");
  if (manifest.empty()) return {};

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < manifest.size(); ++i)
    by_class[manifest[i].class_name].push_back(i);
  std::size_t smallest = manifest.size();
  for (const auto& [_, rows] : by_class) smallest = std::min(smallest, rows.size());
  const auto cap = static_cast<std::size_t>(std::ceil(ratio * double(smallest)));

  Rng rng(seed);
  std::vector<bool> keep(manifest.size(), false);
  for (auto& [_, rows] : by_class) {
    if (rows.size() <= cap) {
      for (std::size_t i : rows) keep[i] = true;
      continue;
    }
    // Partial Fisher-Yates: the first `cap` slots become the sample.
    for (std::size_t i = 0; i < cap; ++i) {
      const std::size_t j = i + rng.below(rows.size() - i);
      std::swap(rows[i], rows[j]);
      keep[rows[i]] = true;
    }
  }
  Manifest out;
  out.reserve(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (keep[i]) out.push_back(manifest[i]);
  }
  return out;
}

Split split_shuffle(const Manifest& manifest, const SplitConfig& config) {
  config.validate();
  // Replicas of a weighted image form one unit so an image never lands on
  // both sides of the split.
  std::map<std::string, std::vector<std::vector<std::size_t>>> by_class;
  {
    std::map<std::pair<std::string, ImageId>, std::size_t> unit_of;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      auto& units = by_class[manifest[i].class_name];
      const auto key = std::pair(manifest[i].class_name, manifest[i].image_id);
      const auto [it, fresh] = unit_of.try_emplace(key, units.size());
      if (fresh) units.emplace_back();
      units[it->second].push_back(i);
    }
  }
  for (const auto& [name, units] : by_class) {
    if (units.size() < 2)
      fail(ErrorCode::ClassTooSmall,
           "class '" + name + "' needs at least 2 images to split, has " +
               std::to_string(units.size()));
  }
  Rng rng(config.seed);
  Split split;
  for (auto& [_, units] : by_class) {
    const auto n = static_cast<std::int64_t>(units.size());
    const std::int64_t n_train = std::clamp<std::int64_t>(
        std::llround(config.train_fraction * double(n)), 1, n - 1);
    rng.shuffle(std::span(units));
    for (std::int64_t i = 0; i < n; ++i) {
      auto& side = i < n_train ? split.train : split.validation;
      for (std::size_t row : units[i]) side.push_back(manifest[row]);
    }
  }
  rng.shuffle(std::span(split.train));
  rng.shuffle(std::span(split.validation));
  return split;
}

void write_manifest_csv(std::ostream& out, const Manifest& manifest) {
  out << "image_id,path,class,weight\n";
  for (const auto& r : manifest) {
    out << r.image_id << ',' << r.path << ',' << r.class_name << ',' << r.weight << '\n';
  }
}

}  // namespace hydra
