#pragma once

// JSON forms of the domain types. Field names match the struct members.

#include <nlohmann/json.hpp>

#include "hydra/catalog.hpp"
#include "hydra/classifier.hpp"
#include "hydra/dataset.hpp"
#include "hydra/evaluation.hpp"
#include "hydra/gatekeeper.hpp"
#include "hydra/labeling.hpp"
#include "hydra/types.hpp"

namespace hydra {

using nlohmann::json;

void to_json(json& j, const InputDims& v);
void from_json(const json& j, InputDims& v);
void to_json(json& j, const TrainConfig& v);
void from_json(const json& j, TrainConfig& v);
void to_json(json& j, const SplitConfig& v);
void from_json(const json& j, SplitConfig& v);
void to_json(json& j, const TrainMetrics& v);
void from_json(const json& j, TrainMetrics& v);

void to_json(json& j, const FilesystemRoot& v);
void to_json(json& j, const ImageRef& v);
void from_json(const json& j, ImageRef& v);
void to_json(json& j, const ImageRow& v);
void to_json(json& j, const LabelRecord& v);
void from_json(const json& j, LabelRecord& v);
void to_json(json& j, const ClassSet& v);
void from_json(const json& j, ClassSet& v);
void to_json(json& j, const ClassConfidence& v);
void from_json(const json& j, ClassConfidence& v);
void to_json(json& j, const Decision& v);
void from_json(const json& j, Decision& v);
void to_json(json& j, const OperationalRecord& v);
void from_json(const json& j, OperationalRecord& v);
void to_json(json& j, const InferenceRecord& v);
void from_json(const json& j, InferenceRecord& v);
void to_json(json& j, const ThresholdTable& v);
void from_json(const json& j, ThresholdTable& v);
void to_json(json& j, const ModelSummary& v);
void to_json(json& j, const Permission& v);
void from_json(const json& j, Permission& v);
void to_json(json& j, const GridItem& v);
void from_json(const json& j, GridItem& v);
void to_json(json& j, const GridPage& v);
void from_json(const json& j, GridPage& v);
void to_json(json& j, const ManifestRow& v);
void from_json(const json& j, ManifestRow& v);
void to_json(json& j, const Disagreement& v);
void from_json(const json& j, Disagreement& v);
void to_json(json& j, const ConfusionCell& v);
void from_json(const json& j, ConfusionCell& v);
void to_json(json& j, const AugmentedConfusionMatrix& v);
void from_json(const json& j, AugmentedConfusionMatrix& v);
void to_json(json& j, const StatusEntry& v);
void from_json(const json& j, StatusEntry& v);
void to_json(json& j, const GateDecision& v);

}  // namespace hydra
