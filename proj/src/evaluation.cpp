#include "hydra/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "hydra/error.hpp"
#include "hydra/png_io.hpp"

namespace hydra {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

double probability_of(const ConfidenceVector& v, const std::string& cls) {
  for (const auto& e : v) {
    if (e.class_name == cls) return e.probability;
  }
  return 0.0;
}

}  // namespace

std::size_t histogram_bin(double confidence) {
  const double c = std::clamp(confidence, 0.0, 1.0);
  return std::min(kHistogramBins - 1, std::size_t(c * double(kHistogramBins)));
}

std::size_t AugmentedConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : cells)
    for (const auto& cell : row) n += cell.count;
  return n;
}

const ConfusionCell& AugmentedConfusionMatrix::at(const std::string& truth,
                                                  const std::string& predicted) const {
  const auto index = [&](const std::string& c) {
    const auto it = std::find(class_names.begin(), class_names.end(), c);
    if (it == class_names.end()) fail(ErrorCode::UnknownClass, "unknown class: " + c);
    return std::size_t(it - class_names.begin());
  };
  return cells[index(truth)][index(predicted)];
}

std::size_t infer_all(Catalog& catalog, const BackendRegistry& backends, ModelId model_id,
                      ImageQuery filter) {
  const ModelRecord model = catalog.model(model_id);
  const auto handle = backends.get(model.backend).load(model.blob);
  filter.plot_type = model.plot_type;
  filter.page_size = 0;
  std::vector<InferenceRecord> records;
  const Timestamp now = catalog.now();
  for (const auto& row : catalog.query_images(filter)) {
    ConfidenceVector cv;
    try {
      cv = handle->infer(read_file(catalog.resolve_path(row.image.image_id)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CorruptImage && e.code() != ErrorCode::IoFailure) throw;
      continue;
    }
    const std::size_t best = argmax(cv);
    records.push_back({row.image.image_id, model_id, cv, cv[best].class_name,
                       cv[best].probability, now});
  }
  catalog.upsert_inferences(records);
  return records.size();
}

std::vector<LabeledPrediction> labeled_predictions(const Catalog& catalog,
                                                   ModelId model_id) {
  const ModelRecord model = catalog.model(model_id);
  ImageQuery q;
  q.plot_type = model.plot_type;
  q.labeled = true;
  std::unordered_map<ImageId, std::string> truth;
  for (auto& row : catalog.query_images(q)) truth.emplace(row.image.image_id, *row.label);

  std::vector<LabeledPrediction> out;
  for (auto& rec : catalog.inferences(model_id)) {
    const auto it = truth.find(rec.image_id);
    if (it == truth.end()) continue;
    out.push_back({rec.image_id, it->second, std::move(rec.confidence_vector),
                   std::move(rec.predicted_class), rec.confidence});
  }
  return out;
}

std::vector<Disagreement> disagreements(std::span<const LabeledPrediction> predictions) {
  std::vector<Disagreement> out;
  for (const auto& p : predictions) {
    if (p.predicted != p.truth)
      out.push_back({p.image_id, p.truth, p.predicted, p.confidence});
  }
  std::sort(out.begin(), out.end(), [](const Disagreement& a, const Disagreement& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.image_id < b.image_id;
  });
  return out;
}

std::vector<Disagreement> disagreement_report(const Catalog& catalog, ModelId model_id) {
  return disagreements(labeled_predictions(catalog, model_id));
}

AugmentedConfusionMatrix build_confusion(const std::vector<std::string>& class_names,
                                         std::span<const LabeledPrediction> predictions) {
  AugmentedConfusionMatrix m;
  m.class_names = class_names;
  m.cells.assign(class_names.size(), std::vector<ConfusionCell>(class_names.size()));
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < class_names.size(); ++i) index[class_names[i]] = i;
  std::vector<std::vector<double>> sums(class_names.size(),
                                        std::vector<double>(class_names.size(), 0.0));
  for (const auto& p : predictions) {
    const auto t = index.find(p.truth);
    const auto q = index.find(p.predicted);
    // Truth labels outside the model's classes cannot be placed.
    if (t == index.end() || q == index.end()) continue;
    ConfusionCell& cell = m.cells[t->second][q->second];
    ++cell.count;
    ++cell.histogram[histogram_bin(p.confidence)];
    sums[t->second][q->second] += p.confidence;
  }
  for (std::size_t t = 0; t < class_names.size(); ++t)
    for (std::size_t q = 0; q < class_names.size(); ++q) {
      ConfusionCell& cell = m.cells[t][q];
      if (cell.count) cell.mean_confidence = sums[t][q] / double(cell.count);
    }
  return m;
}

AugmentedConfusionMatrix confusion_with_confidence(const Catalog& catalog,
                                                   ModelId model_id) {
  const ModelRecord model = catalog.model(model_id);
  const auto predictions = labeled_predictions(catalog, model_id);
  if (predictions.empty())
    fail(ErrorCode::NoLabeledData,
         "model " + std::to_string(model_id) + " has no inferences on labeled images");
  return build_confusion(model.class_names, predictions);
}

double false_positive_rate(std::span<const LabeledPrediction> predictions,
                           const std::vector<std::string>& alarm_classes,
                           const std::string& alarm_class, double threshold) {
  std::size_t negatives = 0;
  std::size_t false_alarms = 0;
  for (const auto& p : predictions) {
    if (contains(alarm_classes, p.truth)) continue;
    ++negatives;
    if (p.predicted == alarm_class && p.confidence >= threshold) ++false_alarms;
  }
  return negatives ? double(false_alarms) / double(negatives) : 0.0;
}

ThresholdTable calibrate(std::span<const LabeledPrediction> predictions,
                         const std::vector<std::string>& class_names,
                         const std::vector<std::string>& alarm_classes, double target_fpr) {
  if (!(target_fpr > 0.0 && target_fpr < 1.0))
    fail(ErrorCode::InvalidArgument, "target_fpr must lie in (0, 1)");
  if (predictions.empty())
    fail(ErrorCode::NoValidationData, "no labeled inference records to calibrate on");
  for (const auto& a : alarm_classes) {
    if (!contains(class_names, a))
      fail(ErrorCode::UnknownClass, "alarm class not in model classes: " + a);
  }

  ThresholdTable table;
  table.target_fpr = target_fpr;
  for (const auto& c : class_names) table.entries[c] = 0.0;

  std::size_t negatives = 0;
  for (const auto& p : predictions) {
    if (!contains(alarm_classes, p.truth)) ++negatives;
  }
  if (negatives == 0) return table;

  for (const auto& a : alarm_classes) {
    std::vector<double> candidates{0.0};
    std::vector<double> false_alarm_conf;
    for (const auto& p : predictions) {
      candidates.push_back(probability_of(p.confidences, a));
      if (p.predicted == a && !contains(alarm_classes, p.truth))
        false_alarm_conf.push_back(p.confidence);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    const double above =
        std::min(1.0, std::nextafter(candidates.back(), std::numeric_limits<double>::infinity()));
    if (above > candidates.back()) candidates.push_back(above);
    std::sort(false_alarm_conf.begin(), false_alarm_conf.end());

    // FPR is non-increasing in the threshold; take the first candidate that fits.
    double chosen = 1.0;
    bool met = false;
    for (double t : candidates) {
      const auto remaining = std::size_t(
          false_alarm_conf.end() -
          std::lower_bound(false_alarm_conf.begin(), false_alarm_conf.end(), t));
      if (double(remaining) / double(negatives) <= target_fpr) {
        chosen = t;
        met = true;
        break;
      }
    }
    if (!met) table.unachievable.push_back(a);
    table.entries[a] = chosen;
  }
  return table;
}

ThresholdTable calibrate_thresholds(Catalog& catalog, ModelId model_id,
                                    const std::vector<std::string>& alarm_classes,
                                    double target_fpr) {
  const ModelRecord model = catalog.model(model_id);
  auto predictions = labeled_predictions(catalog, model_id);
  if (!model.validation_image_ids.empty()) {
    const std::unordered_set<ImageId> held_out(model.validation_image_ids.begin(),
                                               model.validation_image_ids.end());
    std::erase_if(predictions,
                  [&](const LabeledPrediction& p) { return !held_out.count(p.image_id); });
  }
  ThresholdTable table = calibrate(predictions, model.class_names, alarm_classes, target_fpr);
  table.model_id = model_id;
  catalog.put_thresholds(table);
  return table;
}

std::map<std::string, double> replay_fpr(std::span<const LabeledPrediction> predictions,
                                         const ThresholdTable& table,
                                         const std::vector<std::string>& alarm_classes) {
  std::map<std::string, double> out;
  std::size_t negatives = 0;
  std::map<std::string, std::size_t> alarms;
  for (const auto& a : alarm_classes) alarms[a] = 0;
  for (const auto& p : predictions) {
    if (contains(alarm_classes, p.truth)) continue;
    ++negatives;
    const std::size_t best = argmax(p.confidences);
    const auto& cls = p.confidences[best].class_name;
    if (contains(alarm_classes, cls) && p.confidences[best].probability >= table.threshold(cls))
      ++alarms[cls];
  }
  for (const auto& [a, n] : alarms) out[a] = negatives ? double(n) / double(negatives) : 0.0;
  return out;
}

}  // namespace hydra
