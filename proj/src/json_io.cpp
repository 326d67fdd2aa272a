#include "hydra/json_io.hpp"

namespace hydra {

void to_json(json& j, const InputDims& v) { j = json::array({v.width, v.height}); }
void from_json(const json& j, InputDims& v) {
  v.width = j.at(0).get<int>();
  v.height = j.at(1).get<int>();
}

void to_json(json& j, const TrainConfig& v) {
  j = {{"learning_rate", v.learning_rate}, {"epochs", v.epochs},
       {"batch_size", v.batch_size},       {"l2", v.l2},
       {"seed", v.seed},                   {"input_dims", v.input_dims}};
}
void from_json(const json& j, TrainConfig& v) {
  const TrainConfig d;
  v.learning_rate = j.value("learning_rate", d.learning_rate);
  v.epochs = j.value("epochs", d.epochs);
  v.batch_size = j.value("batch_size", d.batch_size);
  v.l2 = j.value("l2", d.l2);
  v.seed = j.value("seed", d.seed);
  v.input_dims = j.contains("input_dims") ? j.at("input_dims").get<InputDims>() : d.input_dims;
}

void to_json(json& j, const SplitConfig& v) {
  j = {{"train_fraction", v.train_fraction},
       {"seed", v.seed},
       {"undersample_ratio", v.undersample_ratio}};
}
void from_json(const json& j, SplitConfig& v) {
  const SplitConfig d;
  v.train_fraction = j.value("train_fraction", d.train_fraction);
  v.seed = j.value("seed", d.seed);
  v.undersample_ratio = j.value("undersample_ratio", d.undersample_ratio);
}

void to_json(json& j, const TrainMetrics& v) {
  j = {{"final_loss", v.final_loss}, {"train_acc", v.train_acc},
       {"val_acc", v.val_acc},       {"epochs_run", v.epochs_run},
       {"epoch_losses", v.epoch_losses}};
}
void from_json(const json& j, TrainMetrics& v) {
  v.final_loss = j.at("final_loss").get<double>();
  v.train_acc = j.at("train_acc").get<double>();
  v.val_acc = j.at("val_acc").get<double>();
  v.epochs_run = j.at("epochs_run").get<int>();
  v.epoch_losses = j.value("epoch_losses", std::vector<double>{});
}

void to_json(json& j, const FilesystemRoot& v) {
  j = {{"root_id", v.root_id}, {"base_path", v.base_path}};
}

void to_json(json& j, const ImageRef& v) {
  j = {{"image_id", v.image_id},     {"root_id", v.root_id},   {"run_period", v.run_period},
       {"run_number", v.run_number}, {"plot_type", v.plot_type}, {"filename", v.filename},
       {"captured_at", v.captured_at}};
}
void from_json(const json& j, ImageRef& v) {
  v.image_id = j.at("image_id").get<ImageId>();
  v.root_id = j.at("root_id").get<std::string>();
  v.run_period = j.at("run_period").get<std::string>();
  v.run_number = j.at("run_number").get<std::int64_t>();
  v.plot_type = j.at("plot_type").get<std::string>();
  v.filename = j.at("filename").get<std::string>();
  v.captured_at = j.at("captured_at").get<Timestamp>();
}

void to_json(json& j, const ImageRow& v) {
  j = {{"image", v.image}, {"label", v.label ? json(*v.label) : json(nullptr)}};
}

void to_json(json& j, const LabelRecord& v) {
  j = {{"label_id", v.label_id},     {"image_id", v.image_id}, {"class_name", v.class_name},
       {"labeler", v.labeler},       {"labeled_at", v.labeled_at}};
}
void from_json(const json& j, LabelRecord& v) {
  v.label_id = j.at("label_id").get<LabelId>();
  v.image_id = j.at("image_id").get<ImageId>();
  v.class_name = j.at("class_name").get<std::string>();
  v.labeler = j.at("labeler").get<std::string>();
  v.labeled_at = j.at("labeled_at").get<Timestamp>();
}

void to_json(json& j, const ClassSet& v) {
  j = {{"plot_type", v.plot_type}, {"classes", v.classes}, {"alarm_classes", v.alarm_classes}};
}
void from_json(const json& j, ClassSet& v) {
  v.plot_type = j.value("plot_type", std::string());
  v.classes = j.at("classes").get<std::vector<std::string>>();
  v.alarm_classes = j.value("alarm_classes", std::vector<std::string>{});
}

void to_json(json& j, const ClassConfidence& v) {
  j = {{"class_name", v.class_name}, {"probability", v.probability}};
}
void from_json(const json& j, ClassConfidence& v) {
  v.class_name = j.at("class_name").get<std::string>();
  v.probability = j.at("probability").get<double>();
}

void to_json(json& j, const Decision& v) { j = std::string(decision_name(v)); }
void from_json(const json& j, Decision& v) { v = parse_decision(j.get<std::string>()); }

void to_json(json& j, const OperationalRecord& v) {
  j = {{"record_id", v.record_id},
       {"image_id", v.image_id},
       {"model_id", v.model_id ? json(*v.model_id) : json(nullptr)},
       {"plot_type", v.plot_type},
       {"confidence_vector", v.confidence_vector},
       {"predicted_class", v.predicted_class},
       {"confidence", v.confidence},
       {"decision", v.decision},
       {"decision_class", v.decision_class},
       {"sampled", v.sampled},
       {"decided_at", v.decided_at},
       {"note", v.note}};
}
void from_json(const json& j, OperationalRecord& v) {
  v.record_id = j.at("record_id").get<RecordId>();
  v.image_id = j.at("image_id").get<ImageId>();
  v.model_id = j.at("model_id").is_null() ? std::nullopt
                                          : std::optional(j.at("model_id").get<ModelId>());
  v.plot_type = j.at("plot_type").get<std::string>();
  v.confidence_vector = j.at("confidence_vector").get<ConfidenceVector>();
  v.predicted_class = j.at("predicted_class").get<std::string>();
  v.confidence = j.at("confidence").get<double>();
  v.decision = j.at("decision").get<Decision>();
  v.decision_class = j.at("decision_class").get<std::string>();
  v.sampled = j.at("sampled").get<bool>();
  v.decided_at = j.at("decided_at").get<Timestamp>();
  v.note = j.at("note").get<std::string>();
}

void to_json(json& j, const InferenceRecord& v) {
  j = {{"image_id", v.image_id},
       {"model_id", v.model_id},
       {"confidence_vector", v.confidence_vector},
       {"predicted_class", v.predicted_class},
       {"confidence", v.confidence},
       {"inferred_at", v.inferred_at}};
}
void from_json(const json& j, InferenceRecord& v) {
  v.image_id = j.at("image_id").get<ImageId>();
  v.model_id = j.at("model_id").get<ModelId>();
  v.confidence_vector = j.at("confidence_vector").get<ConfidenceVector>();
  v.predicted_class = j.at("predicted_class").get<std::string>();
  v.confidence = j.at("confidence").get<double>();
  v.inferred_at = j.at("inferred_at").get<Timestamp>();
}

void to_json(json& j, const ThresholdTable& v) {
  j = {{"model_id", v.model_id},
       {"target_fpr", v.target_fpr},
       {"entries", v.entries},
       {"unachievable", v.unachievable}};
}
void from_json(const json& j, ThresholdTable& v) {
  v.model_id = j.at("model_id").get<ModelId>();
  v.target_fpr = j.at("target_fpr").get<double>();
  v.entries = j.at("entries").get<std::map<std::string, double>>();
  v.unachievable = j.value("unachievable", std::vector<std::string>{});
}

void to_json(json& j, const ModelSummary& v) {
  j = {{"model_id", v.model_id},
       {"plot_type", v.plot_type},
       {"backend", v.backend},
       {"created_at", v.created_at},
       {"metrics", v.metrics_json.empty() ? json(nullptr) : json::parse(v.metrics_json)}};
  // The per-epoch loss log is bulky; listings keep the summary figures only.
  if (j["metrics"].is_object()) j["metrics"].erase("epoch_losses");
}

void to_json(json& j, const Permission& v) {
  j = {{"user", v.user}, {"plot_type", v.plot_type}};
}
void from_json(const json& j, Permission& v) {
  v.user = j.at("user").get<std::string>();
  v.plot_type = j.at("plot_type").get<std::string>();
}

void to_json(json& j, const GridItem& v) {
  j = {{"image", v.image}, {"thumbnail_url", v.thumbnail_url}};
}
void from_json(const json& j, GridItem& v) {
  v.image = j.at("image").get<ImageRef>();
  v.thumbnail_url = j.at("thumbnail_url").get<std::string>();
}

void to_json(json& j, const GridPage& v) {
  j = {{"plot_type", v.plot_type},
       {"page_index", v.page_index},
       {"page_size", v.page_size},
       {"items", v.items}};
}
void from_json(const json& j, GridPage& v) {
  v.plot_type = j.at("plot_type").get<std::string>();
  v.page_index = j.at("page_index").get<std::size_t>();
  v.page_size = j.at("page_size").get<std::size_t>();
  v.items = j.at("items").get<std::vector<GridItem>>();
}

void to_json(json& j, const ManifestRow& v) {
  j = {{"image_id", v.image_id}, {"path", v.path}, {"class_name", v.class_name}, {"weight", v.weight}};
}
void from_json(const json& j, ManifestRow& v) {
  v.image_id = j.at("image_id").get<ImageId>();
  v.path = j.at("path").get<std::string>();
  v.class_name = j.at("class_name").get<std::string>();
  v.weight = j.at("weight").get<std::int64_t>();
}

void to_json(json& j, const Disagreement& v) {
  j = {{"image_id", v.image_id},
       {"ground_truth", v.ground_truth},
       {"predicted_class", v.predicted_class},
       {"confidence", v.confidence}};
}
void from_json(const json& j, Disagreement& v) {
  v.image_id = j.at("image_id").get<ImageId>();
  v.ground_truth = j.at("ground_truth").get<std::string>();
  v.predicted_class = j.at("predicted_class").get<std::string>();
  v.confidence = j.at("confidence").get<double>();
}

void to_json(json& j, const ConfusionCell& v) {
  j = {{"count", v.count}, {"mean_confidence", v.mean_confidence}, {"histogram", v.histogram}};
}
void from_json(const json& j, ConfusionCell& v) {
  v.count = j.at("count").get<std::size_t>();
  v.mean_confidence = j.at("mean_confidence").get<double>();
  v.histogram = j.at("histogram").get<std::array<std::size_t, kHistogramBins>>();
}

void to_json(json& j, const AugmentedConfusionMatrix& v) {
  j = {{"class_names", v.class_names}, {"cells", v.cells}};
}
void from_json(const json& j, AugmentedConfusionMatrix& v) {
  v.class_names = j.at("class_names").get<std::vector<std::string>>();
  v.cells = j.at("cells").get<std::vector<std::vector<ConfusionCell>>>();
}

void to_json(json& j, const StatusEntry& v) {
  j = {{"plot_type", v.plot_type},
       {"image_id", v.image_id},
       {"predicted_class", v.predicted_class},
       {"confidence", v.confidence},
       {"decision", v.decision},
       {"decided_at", v.decided_at},
       {"highlight", v.highlight}};
}
void from_json(const json& j, StatusEntry& v) {
  v.plot_type = j.at("plot_type").get<std::string>();
  v.image_id = j.at("image_id").get<ImageId>();
  v.predicted_class = j.at("predicted_class").get<std::string>();
  v.confidence = j.at("confidence").get<double>();
  v.decision = j.at("decision").get<Decision>();
  v.decided_at = j.at("decided_at").get<Timestamp>();
  v.highlight = j.at("highlight").get<bool>();
}

void to_json(json& j, const GateDecision& v) {
  j = {{"kind", v.kind}, {"class_name", v.class_name}};
}

}  // namespace hydra
