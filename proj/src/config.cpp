#include "hydra/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "hydra/error.hpp"
#include "hydra/json_io.hpp"

namespace hydra {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(ErrorCode::ConfigInvalid, where + " must be an object");
  for (const auto& [k, _] : obj.items()) {
    if (!allowed.count(k))
      fail(ErrorCode::ConfigInvalid, "unknown config key: " + where + "." + k);
  }
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() ? path : (base / path)).lexically_normal().string();
}

}  // namespace

Config Config::from_json(const json& j, const fs::path& base_dir) {
  Config c;
  try {
    check_keys(j, "config",
               {"catalog", "roots", "gatekeeper", "dataset", "train", "service", "class_sets"});
    if (j.contains("catalog")) {
      check_keys(j["catalog"], "catalog", {"db_path"});
      c.db_path = j["catalog"].value("db_path", c.db_path);
    }
    c.db_path = c.db_path == ":memory:" ? c.db_path : resolve(base_dir, c.db_path);

    if (j.contains("roots")) {
      std::set<std::string> ids;
      for (const auto& r : j["roots"]) {
        check_keys(r, "roots[]", {"root_id", "base_path"});
        FilesystemRoot root{r.at("root_id").get<std::string>(),
                            resolve(base_dir, r.at("base_path").get<std::string>())};
        if (root.root_id.empty() || !ids.insert(root.root_id).second)
          fail(ErrorCode::ConfigInvalid, "root ids must be unique and non-empty");
        c.roots.push_back(std::move(root));
      }
    }

    if (j.contains("gatekeeper")) {
      const auto& g = j["gatekeeper"];
      check_keys(g, "gatekeeper", {"poll_interval_s", "sample_rate", "sample_seed", "log_path"});
      c.gatekeeper.poll_interval =
          std::chrono::seconds(g.value("poll_interval_s", std::int64_t{60}));
      c.gatekeeper.sample.sample_rate = g.value("sample_rate", 0.05);
      c.gatekeeper.sample.seed = g.value("sample_seed", std::uint64_t{0});
      c.gatekeeper.log_path = g.value("log_path", c.gatekeeper.log_path.string());
    }
    c.gatekeeper.log_path = resolve(base_dir, c.gatekeeper.log_path.string());
    if (c.gatekeeper.poll_interval < std::chrono::seconds(1))
      fail(ErrorCode::ConfigInvalid, "gatekeeper.poll_interval_s must be at least 1");
    if (!(c.gatekeeper.sample.sample_rate >= 0.0 && c.gatekeeper.sample.sample_rate <= 1.0))
      fail(ErrorCode::ConfigInvalid, "gatekeeper.sample_rate must lie in [0, 1]");

    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      check_keys(d, "dataset", {"train_fraction", "undersample_ratio", "seed", "class_weight"});
      c.split.train_fraction = d.value("train_fraction", c.split.train_fraction);
      c.split.undersample_ratio = d.value("undersample_ratio", c.split.undersample_ratio);
      c.split.seed = d.value("seed", c.split.seed);
      if (d.contains("class_weight"))
        c.class_weights = d["class_weight"].get<ClassWeights>();
    }
    try {
      c.split.validate();
    } catch (const Error& e) {
      fail(ErrorCode::ConfigInvalid, std::string("dataset: ") + e.what());
    }
    for (const auto& [cls, w] : c.class_weights) {
      if (w < 1) fail(ErrorCode::ConfigInvalid, "dataset.class_weight." + cls + " must be >= 1");
    }

    if (j.contains("train")) {
      check_keys(j["train"], "train",
                 {"learning_rate", "epochs", "batch_size", "l2", "seed", "input_dims"});
      c.train = j["train"].get<TrainConfig>();
    }
    try {
      c.train.validate();
    } catch (const Error& e) {
      fail(ErrorCode::ConfigInvalid, std::string("train: ") + e.what());
    }

    if (j.contains("service")) {
      check_keys(j["service"], "service", {"bind_addr"});
      c.bind_addr = j["service"].value("bind_addr", c.bind_addr);
    }
    if (c.bind_addr.rfind(':') == std::string::npos)
      fail(ErrorCode::ConfigInvalid, "service.bind_addr must be host:port");

    if (j.contains("class_sets")) {
      for (const auto& [plot_type, body] : j["class_sets"].items()) {
        check_keys(body, "class_sets." + plot_type, {"classes", "alarm_classes"});
        ClassSet set = body.get<ClassSet>();
        set.plot_type = plot_type;
        try {
          set.validate();
        } catch (const Error& e) {
          fail(ErrorCode::ConfigInvalid, "class_sets." + plot_type + ": " + e.what());
        }
        c.class_sets.push_back(std::move(set));
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("malformed config: ") + e.what());
  }
  return c;
}

json Config::to_json() const {
  json class_sets_json = json::object();
  for (const auto& s : class_sets)
    class_sets_json[s.plot_type] = {{"classes", s.classes}, {"alarm_classes", s.alarm_classes}};
  return {
      {"catalog", {{"db_path", db_path}}},
      {"roots", roots},
      {"gatekeeper",
       {{"poll_interval_s", gatekeeper.poll_interval.count()},
        {"sample_rate", gatekeeper.sample.sample_rate},
        {"sample_seed", gatekeeper.sample.seed},
        {"log_path", gatekeeper.log_path.string()}}},
      {"dataset",
       {{"train_fraction", split.train_fraction},
        {"undersample_ratio", split.undersample_ratio},
        {"seed", split.seed},
        {"class_weight", class_weights}}},
      {"train", train},
      {"service", {{"bind_addr", bind_addr}}},
      {"class_sets", class_sets_json},
  };
}

fs::path default_config_path() {
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) return env;
  return "hydra.json";
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    fail(ErrorCode::ConfigInvalid, "override must look like key=value: " + assignment);
  std::string pointer;
  std::size_t start = 0;
  const std::string key = assignment.substr(0, eq);
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) fail(ErrorCode::ConfigInvalid, "empty segment in key: " + key);
    pointer += "/" + part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  j[json::json_pointer(pointer)] = std::move(value);
}

Config load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigInvalid, "cannot read config file " + path.string());
  json j = json::parse(in, nullptr, false, true);
  if (j.is_discarded()) fail(ErrorCode::ConfigInvalid, "config is not valid JSON: " + path.string());
  for (const auto& o : overrides) apply_override(j, o);
  const fs::path base = fs::absolute(path).parent_path();
  return Config::from_json(j, base);
}

}  // namespace hydra
