#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hydra/catalog.hpp"
#include "hydra/types.hpp"

namespace hydra {

struct Permission {
  std::string user;
  std::string plot_type;

  friend bool operator==(const Permission&, const Permission&) = default;
};

struct GridItem {
  ImageRef image;
  std::string thumbnail_url;

  friend bool operator==(const GridItem&, const GridItem&) = default;
};

struct GridPage {
  std::string plot_type;
  std::size_t page_index = 0;
  std::size_t page_size = 0;
  std::vector<GridItem> items;

  friend bool operator==(const GridPage&, const GridPage&) = default;
};

// "/images/{id}/thumb"
std::string thumbnail_url(ImageId id);

// Permissioned labeling workflow over a catalog. Holds no state of its own.
class Labeling {
 public:
  explicit Labeling(Catalog& catalog) : catalog_(catalog) {}

  // Chronological page of images with no label record.
  GridPage get_unlabeled_grid(const std::string& plot_type, std::size_t page_index,
                              std::size_t page_size) const;

  LabelRecord apply_label(const std::string& user, ImageId image_id,
                          const std::string& class_name);

  // Labels every image of the endpoints' plot type captured within the closed
  // interval spanned by the two endpoint timestamps, relabeling images that
  // already carry a label. Argument order does not matter.
  std::size_t apply_range_label(const std::string& user, ImageId anchor_id,
                                ImageId target_id, const std::string& class_name);

  Permission grant_permission(const std::string& admin_user, const std::string& user,
                              const std::string& plot_type);

  bool can_label(const std::string& user, const std::string& plot_type) const {
    return catalog_.has_permission(user, plot_type);
  }

 private:
  Catalog& catalog_;
};

}  // namespace hydra
