#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hydra/backend.hpp"
#include "hydra/catalog.hpp"
#include "hydra/types.hpp"

namespace hydra {

inline constexpr std::size_t kHistogramBins = 20;

// Bins are [i/20, (i+1)/20) with the last one closed at 1.
std::size_t histogram_bin(double confidence);

// One inferred image with its ground truth.
struct LabeledPrediction {
  ImageId image_id = 0;
  std::string truth;
  ConfidenceVector confidences;
  std::string predicted;
  double confidence = 0.0;  // of the predicted class
};

struct Disagreement {
  ImageId image_id = 0;
  std::string ground_truth;
  std::string predicted_class;
  double confidence = 0.0;

  friend bool operator==(const Disagreement&, const Disagreement&) = default;
};

struct ConfusionCell {
  std::size_t count = 0;
  std::array<std::size_t, kHistogramBins> histogram{};
  double mean_confidence = 0.0;
};

struct AugmentedConfusionMatrix {
  std::vector<std::string> class_names;
  std::vector<std::vector<ConfusionCell>> cells;  // [truth][predicted]

  std::size_t total() const;
  const ConfusionCell& at(const std::string& truth, const std::string& predicted) const;
};

// Infers every image of the model's plot type matching `filter` and replaces
// the stored records. Throws UnknownModel. Unreadable images are skipped.
std::size_t infer_all(Catalog& catalog, const BackendRegistry& backends, ModelId model_id,
                      ImageQuery filter = {});

// Stored inferences of the model joined with effective labels.
std::vector<LabeledPrediction> labeled_predictions(const Catalog& catalog, ModelId model_id);

// Mismatches, most confident first (ties by image id).
std::vector<Disagreement> disagreements(std::span<const LabeledPrediction> predictions);
std::vector<Disagreement> disagreement_report(const Catalog& catalog, ModelId model_id);

AugmentedConfusionMatrix build_confusion(const std::vector<std::string>& class_names,
                                         std::span<const LabeledPrediction> predictions);
// Throws UnknownModel, NoLabeledData.
AugmentedConfusionMatrix confusion_with_confidence(const Catalog& catalog, ModelId model_id);

// FPR(a, t): negatives (truth outside the alarm set) predicted `a` with
// confidence >= t, over all negatives.
double false_positive_rate(std::span<const LabeledPrediction> predictions,
                           const std::vector<std::string>& alarm_classes,
                           const std::string& alarm_class, double threshold);

// For each alarm class, the smallest candidate threshold meeting target_fpr.
// Candidates: 0, every observed probability of that class, and the next double
// above the largest one (capped at 1). Non-alarm classes get 0.
// Throws NoValidationData, InvalidArgument.
ThresholdTable calibrate(std::span<const LabeledPrediction> predictions,
                         const std::vector<std::string>& class_names,
                         const std::vector<std::string>& alarm_classes, double target_fpr);

// Calibrates on the model's validation images (all labeled inferences when the
// model has none recorded) and persists the table.
ThresholdTable calibrate_thresholds(Catalog& catalog, ModelId model_id,
                                    const std::vector<std::string>& alarm_classes,
                                    double target_fpr);

// Replays a table: per alarm class, the fraction of negatives that would raise
// that alarm under the gate rule (argmax is the class, confidence >= threshold).
std::map<std::string, double> replay_fpr(std::span<const LabeledPrediction> predictions,
                                         const ThresholdTable& table,
                                         const std::vector<std::string>& alarm_classes);

}  // namespace hydra
