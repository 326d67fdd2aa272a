#include "hydra/training.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "hydra/backend.hpp"
#include "hydra/error.hpp"
#include "hydra/json_io.hpp"
#include "hydra/png_io.hpp"

namespace hydra {

const ImageTensor& TensorCache::get(const ManifestRow& row) {
  auto it = tensors_.find(row.image_id);
  if (it == tensors_.end())
    it = tensors_.emplace(row.image_id, preprocess(read_file(row.path), dims_)).first;
  return it->second;
}

std::vector<Example> TensorCache::examples(const Manifest& manifest,
                                           const std::vector<std::string>& class_names) {
  std::vector<Example> out;
  out.reserve(manifest.size());
  for (const auto& row : manifest) {
    const auto it = std::find(class_names.begin(), class_names.end(), row.class_name);
    if (it == class_names.end())
      fail(ErrorCode::UnknownClass, "manifest class not in class set: " + row.class_name);
    out.push_back({get(row).pixels, std::size_t(it - class_names.begin())});
  }
  return out;
}

TrainingOutcome train_plot_type(Catalog& catalog, const TrainingRequest& request,
                                const EpochLogger& log) {
  request.split.validate();
  request.train.validate();
  if (!catalog.has_plot_type(request.plot_type))
    fail(ErrorCode::UnknownPlotType, "unknown plot type: " + request.plot_type);
  const ClassSet classes = catalog.class_set(request.plot_type);

  Manifest manifest = build_manifest(catalog, request.plot_type, request.class_weights);
  if (request.undersample)
    manifest = strategic_undersample(manifest, request.split.seed,
                                     request.split.undersample_ratio);
  const Split split = split_shuffle(manifest, request.split);

  TensorCache cache(request.train.input_dims);
  const auto train_set = cache.examples(split.train, classes.classes);
  const auto validation_set = cache.examples(split.validation, classes.classes);
  TrainResult result =
      train(train_set, validation_set, classes.classes, request.train, log);

  std::set<ImageId> validation_ids;
  for (const auto& row : split.validation) validation_ids.insert(row.image_id);

  ModelRecord record;
  record.plot_type = request.plot_type;
  record.backend = kSoftmaxBackend;
  record.class_names = classes.classes;
  record.blob = serialize_model(result.params, request.train);
  record.train_config_json = nlohmann::json(request.train).dump();
  record.split_config_json = nlohmann::json(request.split).dump();
  record.metrics_json = nlohmann::json(result.metrics).dump();
  record.validation_image_ids.assign(validation_ids.begin(), validation_ids.end());

  TrainingOutcome outcome;
  outcome.model_id = catalog.insert_model(record);
  outcome.metrics = std::move(result.metrics);
  outcome.train_rows = split.train.size();
  outcome.validation_rows = split.validation.size();
  return outcome;
}

}  // namespace hydra
