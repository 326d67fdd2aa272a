// hydra: operator entry point. Every subcommand delegates to one library
// operation; --json prints the operation's result in its JSON schema.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hydra/api_service.hpp"
#include "hydra/backend.hpp"
#include "hydra/catalog.hpp"
#include "hydra/config.hpp"
#include "hydra/error.hpp"
#include "hydra/evaluation.hpp"
#include "hydra/gatekeeper.hpp"
#include "hydra/json_io.hpp"
#include "hydra/labeling.hpp"
#include "hydra/synthgen.hpp"
#include "hydra/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hydra;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

void wait_for_signal() {
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  bool json = false;
};

// Config plus an opened catalog with the configured roots and class sets.
struct Session {
  Config config;
  Catalog catalog;
  BackendRegistry backends;

  explicit Session(Config c) : config(std::move(c)), catalog(config.db_path) {
    for (const auto& r : config.roots) catalog.add_root(r.root_id, r.base_path);
    for (const auto& s : config.class_sets) catalog.set_class_set(s);
  }

  std::vector<std::string> root_ids() const {
    std::vector<std::string> ids;
    for (const auto& r : config.roots) ids.push_back(r.root_id);
    return ids;
  }
};

Config read_config(const Globals& g) {
  const fs::path path = g.config_path.empty() ? default_config_path() : fs::path(g.config_path);
  return load_config(path, g.overrides);
}

void emit(const Globals& g, const json& j, const std::string& human) {
  if (g.json)
    std::cout << j.dump() << '\n';
  else
    std::cout << human << '\n';
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

json metrics_json(const TrainMetrics& m) {
  json j = m;
  j.erase("epoch_losses");
  return j;
}

int cmd_scan(const Globals& g) {
  Session s(read_config(g));
  json roots = json::array();
  std::string human;
  for (const auto& id : s.root_ids()) {
    const auto added = s.catalog.scan(id);
    roots.push_back({{"root_id", id}, {"new_images", added.size()}});
    human += id + ": " + std::to_string(added.size()) + " new\n";
  }
  const auto total = s.catalog.image_count();
  emit(g, {{"roots", roots}, {"image_count", total}},
       human + "catalog: " + std::to_string(total) + " images");
  return 0;
}

int cmd_synth(const Globals& g, std::size_t per_class, std::uint64_t seed,
              const std::string& root_id) {
  Session s(read_config(g));
  std::optional<FilesystemRoot> root;
  if (root_id.empty()) {
    if (s.config.roots.empty()) fail(ErrorCode::ConfigInvalid, "no roots configured");
    root = s.config.roots.front();
  } else {
    root = s.catalog.find_root(root_id);
    if (!root) fail(ErrorCode::UnknownRoot, root_id);
  }
  const auto entries = generate_corpus(root->base_path, CorpusOptions::balanced(per_class, seed));
  const auto csv = fs::path(root->base_path) / kTruthCsv;
  emit(g, {{"root_id", root->root_id}, {"written", entries.size()}, {"truth_csv", csv.string()}},
       "wrote " + std::to_string(entries.size()) + " images under " + root->base_path +
           " (truth: " + csv.string() + ")");
  return 0;
}

int cmd_import_labels(const Globals& g, const std::string& csv_path,
                      const std::string& labeler) {
  Session s(read_config(g));
  const fs::path csv = fs::absolute(csv_path);
  std::size_t labeled = 0, missing = 0;
  for (const auto& row : read_truth_csv(csv)) {
    fs::path p(row.path);
    if (p.is_relative()) p = csv.parent_path() / p;
    const auto ref = s.catalog.find_image_by_path(p);
    if (!ref) {
      ++missing;
      continue;
    }
    s.catalog.record_label(ref->image_id, row.class_name, labeler);
    ++labeled;
  }
  emit(g, {{"labeled", labeled}, {"not_in_catalog", missing}},
       "labeled " + std::to_string(labeled) + " images (" + std::to_string(missing) +
           " not in catalog)");
  return 0;
}

int cmd_train(const Globals& g, const std::string& plot_type, bool no_undersample,
              bool verbose) {
  Session s(read_config(g));
  TrainingRequest req;
  req.plot_type = plot_type;
  req.split = s.config.split;
  req.train = s.config.train;
  req.class_weights = s.config.class_weights;
  req.undersample = !no_undersample;
  EpochLogger log;
  if (verbose)
    log = [](int epoch, double loss) {
      std::cerr << "epoch " << epoch << " loss " << fmt(loss, 6) << '\n';
    };
  const auto out = train_plot_type(s.catalog, req, log);
  json j = {{"model_id", out.model_id},
            {"plot_type", plot_type},
            {"train_rows", out.train_rows},
            {"validation_rows", out.validation_rows},
            {"metrics", metrics_json(out.metrics)}};
  emit(g, j,
       "model " + std::to_string(out.model_id) + ": train_acc " + fmt(out.metrics.train_acc) +
           " val_acc " + fmt(out.metrics.val_acc) + " (" + std::to_string(out.train_rows) +
           " train / " + std::to_string(out.validation_rows) + " validation rows)");
  return 0;
}

int cmd_evaluate(const Globals& g, ModelId model_id) {
  Session s(read_config(g));
  const auto n = infer_all(s.catalog, s.backends, model_id);
  const auto preds = labeled_predictions(s.catalog, model_id);
  const auto dis = disagreements(preds);
  const double acc = preds.empty() ? 0.0 : 1.0 - double(dis.size()) / double(preds.size());
  emit(g,
       {{"model_id", model_id},
        {"inferred", n},
        {"labeled", preds.size()},
        {"disagreements", dis.size()},
        {"accuracy", acc}},
       "inferred " + std::to_string(n) + " images; " + std::to_string(dis.size()) + " of " +
           std::to_string(preds.size()) + " labeled disagree (accuracy " + fmt(acc) + ")");
  return 0;
}

int cmd_calibrate(const Globals& g, ModelId model_id, double target_fpr,
                  std::vector<std::string> alarm_classes) {
  Session s(read_config(g));
  const auto model = s.catalog.model(model_id);
  if (alarm_classes.empty()) alarm_classes = s.catalog.class_set(model.plot_type).alarm_classes;
  if (s.catalog.inference_count(model_id) == 0) infer_all(s.catalog, s.backends, model_id);
  const auto table = calibrate_thresholds(s.catalog, model_id, alarm_classes, target_fpr);
  const auto replay = replay_fpr(labeled_predictions(s.catalog, model_id), table, alarm_classes);
  std::string human = "model " + std::to_string(model_id) + " target FPR " + fmt(target_fpr);
  for (const auto& [cls, t] : table.entries) {
    human += "\n  " + cls + ": threshold " + fmt(t, 6);
    if (auto it = replay.find(cls); it != replay.end())
      human += ", replayed FPR " + fmt(it->second);
  }
  for (const auto& cls : table.unachievable) human += "\n  " + cls + ": target unachievable";
  emit(g, {{"thresholds", table}, {"replay_fpr", replay}}, human);
  return 0;
}

int cmd_report(const Globals& g, ModelId model_id) {
  Session s(read_config(g));
  const auto report = disagreement_report(s.catalog, model_id);
  const auto confusion = confusion_with_confidence(s.catalog, model_id);
  std::string human = "confusion (rows: truth, columns: predicted)\n";
  for (std::size_t t = 0; t < confusion.class_names.size(); ++t) {
    human += "  " + confusion.class_names[t] + ":";
    for (const auto& cell : confusion.cells[t]) human += " " + std::to_string(cell.count);
    human += '\n';
  }
  human += std::to_string(report.size()) + " disagreements";
  for (const auto& d : report)
    human += "\n  image " + std::to_string(d.image_id) + ": truth " + d.ground_truth +
             ", predicted " + d.predicted_class + " @ " + fmt(d.confidence);
  emit(g, {{"model_id", model_id}, {"confusion", confusion}, {"disagreements", report}}, human);
  return 0;
}

int cmd_watch(const Globals& g, bool once) {
  Session s(read_config(g));
  Gatekeeper gk(s.catalog, s.backends, s.config.gatekeeper);
  const auto print = [&](const OperationalRecord& r) {
    if (g.json)
      std::cout << json(r).dump() << std::endl;
    else
      std::cout << status_line(r) << std::endl;
  };
  if (once) {
    for (const auto& r : gk.poll_once(s.root_ids())) print(r);
    return 0;
  }
  install_signal_handlers();
  std::jthread worker([&](std::stop_token st) { gk.watch(s.root_ids(), st, print); });
  wait_for_signal();
  worker.request_stop();
  worker.join();
  return 0;
}

int cmd_serve(const Globals& g, bool with_watch) {
  Session s(read_config(g));
  Gatekeeper gk(s.catalog, s.backends, s.config.gatekeeper);
  ApiService api(s.catalog, s.backends, gk,
                 ApiDefaults{s.config.train, s.config.split, s.config.class_weights});
  const auto [host, port] = parse_bind_addr(s.config.bind_addr);
  install_signal_handlers();
  const int bound = api.start(host, port);
  std::cerr << "listening on " << host << ':' << bound << std::endl;
  std::optional<std::jthread> worker;
  if (with_watch)
    worker.emplace([&](std::stop_token st) { gk.watch(s.root_ids(), st); });
  wait_for_signal();
  if (worker) {
    worker->request_stop();
    worker->join();
  }
  api.stop();
  return 0;
}

int cmd_user_add(const Globals& g, const std::string& user, bool admin) {
  Session s(read_config(g));
  s.catalog.upsert_user(user, admin);
  const auto token = s.catalog.issue_token(user);
  emit(g, {{"user", user}, {"admin", admin}, {"token", token}}, token);
  return 0;
}

int cmd_grant(const Globals& g, const std::string& admin, const std::string& user,
              const std::string& plot_type) {
  Session s(read_config(g));
  Labeling labeling(s.catalog);
  const auto p = labeling.grant_permission(admin, user, plot_type);
  emit(g, p, user + " may label " + plot_type);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hydra: image-based data quality monitoring"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Globals g;
  app.add_option("-c,--config", g.config_path,
                 std::string("config file (default: $") + kConfigEnvVar + " or ./hydra.json)");
  app.add_option("--set", g.overrides, "override a config key, e.g. --set train.epochs=50")
      ->take_all();
  app.add_flag("--json", g.json, "print machine-readable JSON");

  std::function<int()> run;

  auto* scan = app.add_subcommand("scan", "register new images under every configured root");
  scan->callback([&] { run = [&] { return cmd_scan(g); }; });

  std::size_t per_class = 0;
  std::uint64_t synth_seed = 0;
  std::string synth_root;
  auto* synth = app.add_subcommand("synth", "write a labeled synthetic occupancy corpus");
  synth->add_option("--per-class", per_class, "images per class")->required();
  synth->add_option("--seed", synth_seed, "corpus seed");
  synth->add_option("--root", synth_root, "target root id (default: first configured)");
  synth->callback([&] { run = [&] { return cmd_synth(g, per_class, synth_seed, synth_root); }; });

  std::string csv_path, labeler = "truth";
  auto* import = app.add_subcommand("import-labels", "record labels from a path,class CSV");
  import->add_option("csv", csv_path)->required();
  import->add_option("--labeler", labeler, "labeler name recorded with each label");
  import->callback([&] { run = [&] { return cmd_import_labels(g, csv_path, labeler); }; });

  std::string plot_type;
  bool no_undersample = false, verbose = false;
  auto* train = app.add_subcommand("train", "train the reference model for a plot type");
  train->add_option("plot_type", plot_type)->required();
  train->add_flag("--no-undersample", no_undersample, "train on the full weighted manifest");
  train->add_flag("-v,--verbose", verbose, "log epoch losses to stderr");
  train->callback([&] { run = [&] { return cmd_train(g, plot_type, no_undersample, verbose); }; });

  ModelId model_id = 0;
  auto* evaluate = app.add_subcommand("evaluate", "infer every image of the model's plot type");
  evaluate->add_option("model_id", model_id)->required();
  evaluate->callback([&] { run = [&] { return cmd_evaluate(g, model_id); }; });

  double target_fpr = 0.05;
  std::vector<std::string> alarm_classes;
  auto* calibrate = app.add_subcommand("calibrate", "fit per-class alarm thresholds");
  calibrate->add_option("model_id", model_id)->required();
  calibrate->add_option("--target-fpr", target_fpr, "tolerated false-positive rate")
      ->required();
  calibrate->add_option("--alarm-class", alarm_classes,
                        "alarm class (repeatable; default: the plot type's class set)");
  calibrate->callback(
      [&] { run = [&] { return cmd_calibrate(g, model_id, target_fpr, alarm_classes); }; });

  auto* report = app.add_subcommand("report", "confusion matrix and disagreement report");
  report->add_option("model_id", model_id)->required();
  report->callback([&] { run = [&] { return cmd_report(g, model_id); }; });

  bool once = false;
  auto* watch = app.add_subcommand("watch", "classify new images until interrupted");
  watch->add_flag("--once", once, "run a single poll cycle and exit");
  watch->callback([&] { run = [&] { return cmd_watch(g, once); }; });

  bool serve_watch = false;
  auto* serve = app.add_subcommand("serve", "run the HTTP API until interrupted");
  serve->add_flag("--watch", serve_watch, "also run the gatekeeper in-process");
  serve->callback([&] { run = [&] { return cmd_serve(g, serve_watch); }; });

  std::string user, grant_user, admin_user;
  bool is_admin = false;
  auto* user_cmd = app.add_subcommand("user", "manage users");
  user_cmd->require_subcommand(1);
  auto* user_add = user_cmd->add_subcommand("add", "create a user and print an API token");
  user_add->add_option("name", user)->required();
  user_add->add_flag("--admin", is_admin);
  user_add->callback([&] { run = [&] { return cmd_user_add(g, user, is_admin); }; });

  auto* grant = app.add_subcommand("grant", "allow a user to label a plot type");
  grant->add_option("user", grant_user)->required();
  grant->add_option("plot_type", plot_type)->required();
  grant->add_option("--as", admin_user, "granting admin")->required();
  grant->callback([&] { run = [&] { return cmd_grant(g, admin_user, grant_user, plot_type); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return run();
  } catch (const Error& e) {
    std::cerr << e.name() << ": " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigInvalid ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "IoFailure: " << e.what() << '\n';
    return 1;
  }
}
