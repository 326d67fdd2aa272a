#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydra/classifier.hpp"
#include "hydra/dataset.hpp"
#include "hydra/gatekeeper.hpp"
#include "hydra/types.hpp"

namespace hydra {

// Typed view of the JSON config file. Keys:
//   catalog.db_path, roots[{root_id, base_path}],
//   gatekeeper.{poll_interval_s, sample_rate, sample_seed, log_path},
//   dataset.{train_fraction, undersample_ratio, seed, class_weight.<class>},
//   train.{learning_rate, epochs, batch_size, l2, seed, input_dims},
//   service.bind_addr, class_sets.<plot_type>.{classes, alarm_classes}
// Relative paths resolve against the config file's directory.
struct Config {
  std::string db_path = "hydra.db";
  std::vector<FilesystemRoot> roots;
  GatekeeperConfig gatekeeper{{0.05, 0}, "hydra_ops.log", std::chrono::seconds(60)};
  SplitConfig split;
  ClassWeights class_weights;
  TrainConfig train;
  std::string bind_addr = "127.0.0.1:8080";
  std::vector<ClassSet> class_sets;

  // Throws ConfigInvalid.
  static Config from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  nlohmann::json to_json() const;
};

inline constexpr const char* kConfigEnvVar = "HYDRA_CONFIG";

// $HYDRA_CONFIG when set, otherwise ./hydra.json.
std::filesystem::path default_config_path();

// Applies "dotted.key=value"; value is parsed as JSON, falling back to a
// plain string. Throws ConfigInvalid.
void apply_override(nlohmann::json& j, const std::string& assignment);

// Reads the file, applies overrides in order, validates. Throws ConfigInvalid.
Config load_config(const std::filesystem::path& path,
                   const std::vector<std::string>& overrides = {});

}  // namespace hydra
