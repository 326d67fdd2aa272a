#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hydra/time_util.hpp"
#include "hydra/types.hpp"

struct sqlite3;

namespace hydra {

struct ImageQuery {
  std::optional<std::string> plot_type;
  std::optional<std::string> run_period;
  std::optional<std::string> root_id;
  // Closed intervals.
  std::optional<std::pair<std::int64_t, std::int64_t>> run_range;
  std::optional<std::pair<Timestamp, Timestamp>> time_range;
  // true: at least one label record; false: none.
  std::optional<bool> labeled;
  bool descending = false;
  std::size_t page_index = 0;
  std::size_t page_size = 0;  // 0 = unpaged
};

struct ImageRow {
  ImageRef image;
  std::optional<std::string> label;  // effective label

  friend bool operator==(const ImageRow&, const ImageRow&) = default;
};

struct ModelSummary {
  ModelId model_id = 0;
  std::string plot_type;
  std::string backend;
  Timestamp created_at = 0;
  std::string metrics_json;
};

struct OperationalQuery {
  std::optional<std::pair<Timestamp, Timestamp>> decided_range;
  std::vector<Decision> decisions;  // empty = any
  bool newest_first = true;
};

// Persistent two-arm store.
//
// Arm A (images, labels, class sets, users, models, inferences, thresholds) is
// the training/testing record; labels are append-only and enforced by triggers.
// Arm B (ops_records) holds live gatekeeper decisions.
//
// One connection guarded by a mutex: mutations are serialized, handles may be
// shared across threads.
class Catalog {
 public:
  // ":memory:" gives a private in-memory store.
  explicit Catalog(const std::string& db_path, Clock clock = system_clock());
  ~Catalog();

  Catalog(const Catalog&) = delete;
  Catalog& operator=(const Catalog&) = delete;

  Timestamp now() const { return clock_(); }

  // Roots. add_root is idempotent for an identical (id, path) pair.
  FilesystemRoot add_root(const std::string& root_id, const std::string& base_path);
  std::optional<FilesystemRoot> find_root(const std::string& root_id) const;
  std::vector<FilesystemRoot> roots() const;

  // Class sets. Undeclared plot types fall back to ClassSet::defaults.
  void set_class_set(const ClassSet& set);
  ClassSet class_set(const std::string& plot_type) const;
  // Declared class set or at least one image.
  bool has_plot_type(const std::string& plot_type) const;
  std::vector<std::string> plot_types() const;

  ImageRef register_image(const std::string& root_id, const std::string& run_period,
                          std::int64_t run_number, const std::string& plot_type,
                          const std::string& filename, Timestamp captured_at);
  // Same as register_image, also reporting whether a new row was written.
  std::pair<ImageRef, bool> ensure_image(const std::string& root_id,
                                         const std::string& run_period,
                                         std::int64_t run_number,
                                         const std::string& plot_type,
                                         const std::string& filename,
                                         Timestamp captured_at);
  ImageRef image(ImageId id) const;
  std::optional<ImageRef> find_image(const std::string& root_id, const std::string& run_period,
                                     std::int64_t run_number, const std::string& plot_type,
                                     const std::string& filename) const;
  // Maps an absolute file path back to its image via the roots and layout.
  std::optional<ImageRef> find_image_by_path(const std::filesystem::path& path) const;
  std::filesystem::path resolve_path(ImageId id) const;
  std::vector<ImageRow> query_images(const ImageQuery& q) const;
  std::size_t image_count() const;

  // Walks a root in the on-disk layout and registers every image found.
  // Returns only newly registered images. Throws RootUnreachable.
  std::vector<ImageRef> scan(const std::string& root_id);

  LabelRecord record_label(ImageId image_id, const std::string& class_name,
                           const std::string& labeler);
  // All-or-nothing batch in one transaction.
  std::vector<LabelRecord> record_labels(std::span<const ImageId> image_ids,
                                         const std::string& class_name,
                                         const std::string& labeler);
  std::optional<std::string> effective_label(ImageId image_id) const;
  std::vector<LabelRecord> labels_for(ImageId image_id) const;
  std::size_t label_count() const;

  // Users, permissions and API tokens.
  void upsert_user(const std::string& user, bool is_admin);
  bool user_exists(const std::string& user) const;
  bool is_admin(const std::string& user) const;
  // Returns true when a new permission row was written.
  bool add_permission(const std::string& user, const std::string& plot_type);
  bool has_permission(const std::string& user, const std::string& plot_type) const;
  std::size_t permission_count() const;
  std::string issue_token(const std::string& user);
  void add_token(const std::string& token, const std::string& user);
  std::optional<std::string> user_for_token(const std::string& token) const;

  // Models.
  ModelId insert_model(const ModelRecord& m);
  ModelRecord model(ModelId id) const;
  bool has_model(ModelId id) const;
  std::vector<ModelSummary> models() const;  // newest first
  std::optional<ModelId> latest_model(const std::string& plot_type) const;

  // Inferences, replaced per (model, image).
  void upsert_inferences(std::span<const InferenceRecord> records);
  std::vector<InferenceRecord> inferences(ModelId model_id) const;
  std::size_t inference_count(ModelId model_id) const;

  void put_thresholds(const ThresholdTable& table);
  std::optional<ThresholdTable> thresholds(ModelId model_id) const;

  // Arm B.
  OperationalRecord insert_operational(OperationalRecord rec);
  std::vector<OperationalRecord> operational_records(const OperationalQuery& q = {}) const;
  std::vector<OperationalRecord> latest_per_plot_type() const;
  // Sampled images without an effective label, oldest decision first.
  std::vector<ImageId> sampled_unlabeled() const;
  // Registered images under a root with no operational record yet.
  std::vector<ImageRef> unprocessed_images(const std::string& root_id) const;
  std::size_t operational_count() const;

 private:
  void migrate();

  sqlite3* db_ = nullptr;
  Clock clock_;
  mutable std::recursive_mutex mu_;
};

}  // namespace hydra
