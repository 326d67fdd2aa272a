#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hydra/time_util.hpp"

namespace hydra {

using ImageId = std::int64_t;
using LabelId = std::int64_t;
using ModelId = std::int64_t;
using RecordId = std::int64_t;

struct FilesystemRoot {
  std::string root_id;
  std::string base_path;

  friend bool operator==(const FilesystemRoot&, const FilesystemRoot&) = default;
};

struct ImageRef {
  ImageId image_id = 0;
  std::string root_id;
  std::string run_period;
  std::int64_t run_number = 0;
  std::string plot_type;
  std::string filename;
  Timestamp captured_at = 0;

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct LabelRecord {
  LabelId label_id = 0;
  ImageId image_id = 0;
  std::string class_name;
  std::string labeler;
  Timestamp labeled_at = 0;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

struct ClassSet {
  std::string plot_type;
  std::vector<std::string> classes;
  std::vector<std::string> alarm_classes;

  // Good / Bad / NoData with Bad as the only alarm class.
  static ClassSet defaults(std::string plot_type);

  bool contains(std::string_view class_name) const;
  bool is_alarm(std::string_view class_name) const;
  // Throws InvalidArgument on empty/duplicate classes or alarm ⊄ classes.
  void validate() const;
};

struct ClassConfidence {
  std::string class_name;
  double probability = 0.0;

  friend bool operator==(const ClassConfidence&, const ClassConfidence&) = default;
};

// Entries follow the model's declared class order.
using ConfidenceVector = std::vector<ClassConfidence>;

// Index of the largest probability; ties go to the lowest index.
std::size_t argmax(const ConfidenceVector& v);

enum class Decision { Ok, Alarm, Flagged, NoModel };

std::string_view decision_name(Decision d);
Decision parse_decision(std::string_view s);

struct OperationalRecord {
  RecordId record_id = 0;
  ImageId image_id = 0;
  std::optional<ModelId> model_id;
  std::string plot_type;
  ConfidenceVector confidence_vector;
  std::string predicted_class;  // empty for NoModel
  double confidence = 0.0;
  Decision decision = Decision::NoModel;
  std::string decision_class;  // alarm class for Alarm / Flagged
  bool sampled = false;
  Timestamp decided_at = 0;
  std::string note;

  friend bool operator==(const OperationalRecord&, const OperationalRecord&) = default;
};

struct InferenceRecord {
  ImageId image_id = 0;
  ModelId model_id = 0;
  ConfidenceVector confidence_vector;
  std::string predicted_class;
  double confidence = 0.0;
  Timestamp inferred_at = 0;

  friend bool operator==(const InferenceRecord&, const InferenceRecord&) = default;
};

struct ThresholdTable {
  ModelId model_id = 0;
  double target_fpr = 0.0;
  std::map<std::string, double> entries;
  // Alarm classes whose target could not be met even at threshold 1.0.
  std::vector<std::string> unachievable;

  double threshold(const std::string& class_name) const;

  friend bool operator==(const ThresholdTable&, const ThresholdTable&) = default;
};

struct ModelRecord {
  ModelId model_id = 0;
  std::string plot_type;
  std::string backend;
  std::vector<std::string> class_names;
  std::vector<std::uint8_t> blob;
  Timestamp created_at = 0;
  std::string train_config_json;
  std::string split_config_json;
  std::string metrics_json;
  std::vector<ImageId> validation_image_ids;
};

}  // namespace hydra
