#include "hydra/labeling.hpp"

#include <algorithm>

#include "hydra/error.hpp"

namespace hydra {

std::string thumbnail_url(ImageId id) {
  return "/images/" + std::to_string(id) + "/thumb";
}

GridPage Labeling::get_unlabeled_grid(const std::string& plot_type,
                                      std::size_t page_index,
                                      std::size_t page_size) const {
  if (page_size < 1) fail(ErrorCode::InvalidArgument, "page size must be at least 1");
  if (!catalog_.has_plot_type(plot_type))
    fail(ErrorCode::UnknownPlotType, "unknown plot type: " + plot_type);
  ImageQuery q;
  q.plot_type = plot_type;
  q.labeled = false;
  q.page_index = page_index;
  q.page_size = page_size;
  GridPage page{plot_type, page_index, page_size, {}};
  for (auto& row : catalog_.query_images(q)) {
    const ImageId id = row.image.image_id;
    page.items.push_back({std::move(row.image), thumbnail_url(id)});
  }
  return page;
}

LabelRecord Labeling::apply_label(const std::string& user, ImageId image_id,
                                  const std::string& class_name) {
  const ImageRef ref = catalog_.image(image_id);
  if (!can_label(user, ref.plot_type))
    fail(ErrorCode::PermissionDenied,
         user + " may not label plot type " + ref.plot_type);
  return catalog_.record_label(image_id, class_name, user);
}

std::size_t Labeling::apply_range_label(const std::string& user, ImageId anchor_id,
                                        ImageId target_id,
                                        const std::string& class_name) {
  const ImageRef anchor = catalog_.image(anchor_id);
  const ImageRef target = catalog_.image(target_id);
  if (anchor.plot_type != target.plot_type)
    fail(ErrorCode::PlotTypeMismatch,
         "range endpoints differ in plot type: " + anchor.plot_type + " vs " +
             target.plot_type);
  if (!can_label(user, anchor.plot_type))
    fail(ErrorCode::PermissionDenied,
         user + " may not label plot type " + anchor.plot_type);

  ImageQuery q;
  q.plot_type = anchor.plot_type;
  q.time_range = {std::min(anchor.captured_at, target.captured_at),
                  std::max(anchor.captured_at, target.captured_at)};
  std::vector<ImageId> ids;
  for (const auto& row : catalog_.query_images(q)) ids.push_back(row.image.image_id);
  return catalog_.record_labels(ids, class_name, user).size();
}

Permission Labeling::grant_permission(const std::string& admin_user,
                                      const std::string& user,
                                      const std::string& plot_type) {
  if (!catalog_.is_admin(admin_user))
    fail(ErrorCode::NotAdmin, admin_user + " is not an administrator");
  if (user.empty() || plot_type.empty())
    fail(ErrorCode::InvalidArgument, "user and plot type are required");
  catalog_.add_permission(user, plot_type);
  return {user, plot_type};
}

}  // namespace hydra
