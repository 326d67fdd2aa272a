#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "hydra/api_service.hpp"
#include "hydra/config.hpp"
#include "hydra/error.hpp"
#include "hydra/json_io.hpp"
#include "test_support.hpp"

using namespace hydra;
using hydra::testing::TempDir;

namespace {

ErrorCode config_error(const json& j) {
  try {
    Config::from_json(j, "/etc/hydra");
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

template <typename T>
void round_trip(const T& value) {
  const json j = value;
  const T back = json::parse(j.dump()).get<T>();
  CHECK(back == value);
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const auto c = Config::from_json(json::object(), "/etc/hydra");
  CHECK(c.db_path == "/etc/hydra/hydra.db");
  CHECK(c.gatekeeper.poll_interval == std::chrono::seconds(60));
  CHECK(c.gatekeeper.sample.sample_rate == 0.05);
  CHECK(c.split.train_fraction == 0.95);
  CHECK(c.split.undersample_ratio == 1.0);
  CHECK(c.bind_addr == "127.0.0.1:8080");
  CHECK(c.train.epochs == 200);
  CHECK(c.train.input_dims == InputDims{64, 48});
  CHECK(c.roots.empty());
}

TEST_CASE("full file") {
  const json j = json::parse(R"({
    "catalog": {"db_path": "db/hydra.db"},
    "roots": [{"root_id": "fcal", "base_path": "/data/plots"},
              {"root_id": "rel", "base_path": "plots"}],
    "gatekeeper": {"poll_interval_s": 2, "sample_rate": 0.1, "sample_seed": 9,
                   "log_path": "/var/log/hydra.log"},
    "dataset": {"train_fraction": 0.9, "undersample_ratio": 2.0, "seed": 4,
                "class_weight": {"Bad": 3}},
    "train": {"epochs": 50, "input_dims": [32, 24]},
    "service": {"bind_addr": "0.0.0.0:9000"},
    "class_sets": {"cdc": {"classes": ["Good", "Hot"], "alarm_classes": ["Hot"]}}
  })");
  const auto c = Config::from_json(j, "/etc/hydra");
  CHECK(c.db_path == "/etc/hydra/db/hydra.db");
  REQUIRE(c.roots.size() == 2);
  CHECK(c.roots[1].base_path == "/etc/hydra/plots");
  CHECK(c.gatekeeper.poll_interval == std::chrono::seconds(2));
  CHECK(c.gatekeeper.sample.seed == 9);
  CHECK(c.split.seed == 4);
  CHECK(c.class_weights.at("Bad") == 3);
  CHECK(c.train.epochs == 50);
  CHECK(c.train.learning_rate == 0.1);
  CHECK(c.train.input_dims == InputDims{32, 24});
  REQUIRE(c.class_sets.size() == 1);
  CHECK(c.class_sets[0].plot_type == "cdc");

  // to_json is a fixed point of from_json.
  const auto again = Config::from_json(c.to_json(), "/elsewhere");
  CHECK(again.to_json() == c.to_json());
}

TEST_CASE("invalid configs") {
  CHECK(config_error(json::parse(R"({"bogus": 1})")) == ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"train": {"epochs": 0}})")) == ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"train": {"epoch": 10}})")) == ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"gatekeeper": {"sample_rate": 2}})")) ==
        ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"gatekeeper": {"poll_interval_s": 0}})")) ==
        ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"dataset": {"train_fraction": 1.0}})")) ==
        ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"dataset": {"class_weight": {"Bad": 0}}})")) ==
        ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"roots": [{"root_id": "a"}]})")) ==
        ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"roots": [{"root_id": "a", "base_path": "/x"},
                                               {"root_id": "a", "base_path": "/y"}]})")) ==
        ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"train": {"learning_rate": "fast"}})")) ==
        ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"service": {"bind_addr": "nohost"}})")) ==
        ErrorCode::ConfigInvalid);
  CHECK(config_error(json::parse(R"({"class_sets": {"x": {"classes": []}}})")) ==
        ErrorCode::ConfigInvalid);
}

TEST_CASE("overrides win over the file") {
  TempDir dir;
  const auto path = dir.path() / "hydra.json";
  std::ofstream(path) << R"({"train": {"epochs": 10}, "roots": []})";
  const auto c = load_config(path, {"train.epochs=25", "gatekeeper.log_path=ops.log",
                                    "dataset.class_weight.Bad=4", "service.bind_addr=h:1"});
  CHECK(c.train.epochs == 25);
  CHECK(c.gatekeeper.log_path == dir.path() / "ops.log");
  CHECK(c.class_weights.at("Bad") == 4);
  CHECK(c.bind_addr == "h:1");
  CHECK_THROWS_AS(load_config(path, {"noequals"}), Error);
  CHECK_THROWS_AS(load_config(dir.path() / "missing.json"), Error);
  std::ofstream(dir.path() / "broken.json") << "{";
  CHECK_THROWS_AS(load_config(dir.path() / "broken.json"), Error);
}

TEST_CASE("environment selects the default path") {
  ::setenv(kConfigEnvVar, "/tmp/custom.json", 1);
  CHECK(default_config_path() == "/tmp/custom.json");
  ::unsetenv(kConfigEnvVar);
  CHECK(default_config_path() == "hydra.json");
}

TEST_CASE("the shipped example config loads") {
  const auto c = load_config(std::filesystem::path(HYDRA_SOURCE_DIR) / "config/hydra.example.json");
  CHECK(c.roots.size() == 1);
  CHECK(c.gatekeeper.poll_interval == std::chrono::seconds(60));
  CHECK(c.class_sets.size() == 1);
}

TEST_CASE("bind address parsing") {
  CHECK(parse_bind_addr("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
  CHECK_THROWS_AS(parse_bind_addr("localhost"), Error);
  CHECK_THROWS_AS(parse_bind_addr("localhost:http"), Error);
  CHECK_THROWS_AS(parse_bind_addr("localhost:70000"), Error);
}

}  // TEST_SUITE

TEST_SUITE("json") {

TEST_CASE("domain types round-trip") {
  round_trip(ImageRef{3, "r", "RunPeriod-2020-08", 70000, "occ", "occ.png", 1598486400});
  round_trip(LabelRecord{1, 3, "Bad", "ann", 1598486400});
  round_trip(OperationalRecord{5, 3, 2, "occ", {{"Good", 0.25}, {"Bad", 0.75}}, "Bad", 0.75,
                               Decision::Alarm, "Bad", true, 1598486400, ""});
  round_trip(OperationalRecord{6, 3, std::nullopt, "occ", {}, "", 0.0, Decision::NoModel, "",
                               false, 1, "no trained model"});
  round_trip(InferenceRecord{3, 2, {{"Good", 1.0}}, "Good", 1.0, 9});
  round_trip(ThresholdTable{2, 0.05, {{"Bad", 0.9}, {"Good", 0.0}}, {"Bad"}});
  round_trip(StatusEntry{"occ", 3, "Bad", 0.9, Decision::Flagged, 10, false});
  round_trip(Disagreement{3, "Good", "Bad", 0.8});
  round_trip(Permission{"ann", "occ"});
  round_trip(ManifestRow{3, "/a.png", "Bad", 2});
  round_trip(GridPage{"occ", 1, 2, {{ImageRef{3, "r", "P", 1, "occ", "a.png", 5}, "/images/3/thumb"}}});

  const TrainConfig t{0.05, 30, 16, 0.0, 7, {32, 24}};
  const auto back = json(t).get<TrainConfig>();
  CHECK(json(back) == json(t));

  AugmentedConfusionMatrix m{{"Good", "Bad"}, {{{2, {}, 0.9}, {0, {}, 0.0}}, {{1, {}, 0.6}, {0, {}, 0.0}}}};
  m.cells[0][0].histogram[18] = 2;
  m.cells[1][0].histogram[12] = 1;
  const auto mb = json::parse(json(m).dump()).get<AugmentedConfusionMatrix>();
  CHECK(json(mb) == json(m));
  CHECK(json(m)["cells"][1][0]["count"] == 1);
}

TEST_CASE("field names are the snake_case member names") {
  const json j = OperationalRecord{};
  for (const char* key : {"record_id", "image_id", "model_id", "plot_type", "confidence_vector",
                          "predicted_class", "confidence", "decision", "decision_class",
                          "sampled", "decided_at", "note"})
    CHECK(j.contains(key));
  CHECK(json(Decision::Flagged) == "Flagged");
}

}  // TEST_SUITE
