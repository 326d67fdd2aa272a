#include "hydra/catalog.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "hydra/error.hpp"
#include "hydra/layout.hpp"
#include "sqlite_util.hpp"

namespace hydra {

namespace fs = std::filesystem;
using json = nlohmann::json;
using sql::Statement;

namespace {

constexpr const char* kSchema = R"sql(
PRAGMA foreign_keys = ON;

-- Arm A: image and label record.
CREATE TABLE IF NOT EXISTS roots (
  root_id   TEXT PRIMARY KEY,
  base_path TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS class_sets (
  plot_type     TEXT PRIMARY KEY,
  classes       TEXT NOT NULL,
  alarm_classes TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS images (
  image_id    INTEGER PRIMARY KEY AUTOINCREMENT,
  root_id     TEXT NOT NULL REFERENCES roots(root_id),
  run_period  TEXT NOT NULL,
  run_number  INTEGER NOT NULL CHECK (run_number >= 1),
  plot_type   TEXT NOT NULL,
  filename    TEXT NOT NULL,
  captured_at INTEGER NOT NULL,
  UNIQUE (root_id, run_period, run_number, plot_type, filename)
);
CREATE INDEX IF NOT EXISTS images_by_type_time
  ON images (plot_type, captured_at, image_id);
CREATE TABLE IF NOT EXISTS labels (
  label_id   INTEGER PRIMARY KEY AUTOINCREMENT,
  image_id   INTEGER NOT NULL REFERENCES images(image_id),
  class_name TEXT NOT NULL,
  labeler    TEXT NOT NULL,
  labeled_at INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS labels_by_image
  ON labels (image_id, labeled_at, label_id);
CREATE TRIGGER IF NOT EXISTS labels_no_update BEFORE UPDATE ON labels
  BEGIN SELECT RAISE(ABORT, 'labels are append-only'); END;
CREATE TRIGGER IF NOT EXISTS labels_no_delete BEFORE DELETE ON labels
  BEGIN SELECT RAISE(ABORT, 'labels are append-only'); END;

CREATE TABLE IF NOT EXISTS users (
  user     TEXT PRIMARY KEY,
  is_admin INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS permissions (
  user      TEXT NOT NULL,
  plot_type TEXT NOT NULL,
  PRIMARY KEY (user, plot_type)
);
CREATE TABLE IF NOT EXISTS tokens (
  token TEXT PRIMARY KEY,
  user  TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS models (
  model_id       INTEGER PRIMARY KEY AUTOINCREMENT,
  plot_type      TEXT NOT NULL,
  backend        TEXT NOT NULL,
  class_names    TEXT NOT NULL,
  blob           BLOB NOT NULL,
  created_at     INTEGER NOT NULL,
  train_config   TEXT NOT NULL,
  split_config   TEXT NOT NULL,
  metrics        TEXT NOT NULL,
  validation_ids TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS inferences (
  model_id        INTEGER NOT NULL REFERENCES models(model_id),
  image_id        INTEGER NOT NULL REFERENCES images(image_id),
  confidences     TEXT NOT NULL,
  predicted_class TEXT NOT NULL,
  confidence      REAL NOT NULL,
  inferred_at     INTEGER NOT NULL,
  PRIMARY KEY (model_id, image_id)
);
CREATE TABLE IF NOT EXISTS thresholds (
  model_id    INTEGER PRIMARY KEY REFERENCES models(model_id),
  target_fpr  REAL NOT NULL,
  entries     TEXT NOT NULL,
  unachievable TEXT NOT NULL
);

-- Arm B: operational record.
CREATE TABLE IF NOT EXISTS ops_records (
  record_id       INTEGER PRIMARY KEY AUTOINCREMENT,
  image_id        INTEGER NOT NULL REFERENCES images(image_id),
  model_id        INTEGER,
  plot_type       TEXT NOT NULL,
  confidences     TEXT NOT NULL,
  predicted_class TEXT NOT NULL,
  confidence      REAL NOT NULL,
  decision        TEXT NOT NULL,
  decision_class  TEXT NOT NULL,
  sampled         INTEGER NOT NULL,
  decided_at      INTEGER NOT NULL,
  note            TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS ops_by_time ON ops_records (decided_at, record_id);
CREATE INDEX IF NOT EXISTS ops_by_image ON ops_records (image_id);
)sql";

constexpr const char* kImageColumns =
    "i.image_id, i.root_id, i.run_period, i.run_number, i.plot_type, "
    "i.filename, i.captured_at";

constexpr const char* kEffectiveLabel =
    "(SELECT l.class_name FROM labels l WHERE l.image_id = i.image_id "
    "ORDER BY l.labeled_at DESC, l.label_id DESC LIMIT 1)";

ImageRef read_image(const Statement& s, int c = 0) {
  return {s.i64(c), s.text(c + 1), s.text(c + 2), s.i64(c + 3),
          s.text(c + 4), s.text(c + 5), s.i64(c + 6)};
}

json confidences_to_json(const ConfidenceVector& v) {
  json arr = json::array();
  for (const auto& e : v) arr.push_back({e.class_name, e.probability});
  return arr;
}

ConfidenceVector confidences_from_json(const std::string& text) {
  ConfidenceVector v;
  for (const auto& e : json::parse(text))
    v.push_back({e.at(0).get<std::string>(), e.at(1).get<double>()});
  return v;
}

constexpr const char* kOpsColumns =
    "record_id, image_id, model_id, plot_type, confidences, predicted_class, "
    "confidence, decision, decision_class, sampled, decided_at, note";

OperationalRecord read_ops(const Statement& s) {
  OperationalRecord r;
  r.record_id = s.i64(0);
  r.image_id = s.i64(1);
  if (!s.is_null(2)) r.model_id = s.i64(2);
  r.plot_type = s.text(3);
  r.confidence_vector = confidences_from_json(s.text(4));
  r.predicted_class = s.text(5);
  r.confidence = s.f64(6);
  r.decision = parse_decision(s.text(7));
  r.decision_class = s.text(8);
  r.sampled = s.i64(9) != 0;
  r.decided_at = s.i64(10);
  r.note = s.text(11);
  return r;
}

}  // namespace

Catalog::Catalog(const std::string& db_path, Clock clock)
    : clock_(std::move(clock)) {
  if (db_path != ":memory:") {
    const fs::path parent = fs::path(db_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
  }
  const int rc = sqlite3_open_v2(
      db_path.c_str(), &db_,
      SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX, nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    fail(ErrorCode::StoreFailure, "cannot open catalog " + db_path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  migrate();
}

Catalog::~Catalog() { sqlite3_close(db_); }

void Catalog::migrate() {
  std::lock_guard lock(mu_);
  sql::exec(db_, "PRAGMA journal_mode = WAL");
  sql::exec(db_, kSchema);
}

// ---- roots -----------------------------------------------------------------

FilesystemRoot Catalog::add_root(const std::string& root_id,
                                 const std::string& base_path) {
  if (root_id.empty()) fail(ErrorCode::InvalidArgument, "empty root id");
  if (!fs::path(base_path).is_absolute())
    fail(ErrorCode::InvalidArgument, "root base path must be absolute: " + base_path);
  std::lock_guard lock(mu_);
  if (auto existing = find_root(root_id)) {
    if (existing->base_path != base_path)
      fail(ErrorCode::InvalidArgument,
           "root " + root_id + " already bound to " + existing->base_path);
    return *existing;
  }
  Statement(db_, "INSERT INTO roots (root_id, base_path) VALUES (?, ?)")
      .bind(1, root_id)
      .bind(2, base_path)
      .run();
  return {root_id, base_path};
}

std::optional<FilesystemRoot> Catalog::find_root(const std::string& root_id) const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT root_id, base_path FROM roots WHERE root_id = ?");
  s.bind(1, root_id);
  if (!s.step()) return std::nullopt;
  return FilesystemRoot{s.text(0), s.text(1)};
}

std::vector<FilesystemRoot> Catalog::roots() const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT root_id, base_path FROM roots ORDER BY root_id");
  std::vector<FilesystemRoot> out;
  while (s.step()) out.push_back({s.text(0), s.text(1)});
  return out;
}

// ---- class sets ------------------------------------------------------------

void Catalog::set_class_set(const ClassSet& set) {
  set.validate();
  std::lock_guard lock(mu_);
  Statement(db_,
            "INSERT INTO class_sets (plot_type, classes, alarm_classes) VALUES (?, ?, ?) "
            "ON CONFLICT(plot_type) DO UPDATE SET classes = excluded.classes, "
            "alarm_classes = excluded.alarm_classes")
      .bind(1, set.plot_type)
      .bind(2, json(set.classes).dump())
      .bind(3, json(set.alarm_classes).dump())
      .run();
}

ClassSet Catalog::class_set(const std::string& plot_type) const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT classes, alarm_classes FROM class_sets WHERE plot_type = ?");
  s.bind(1, plot_type);
  if (!s.step()) return ClassSet::defaults(plot_type);
  return {plot_type, json::parse(s.text(0)).get<std::vector<std::string>>(),
          json::parse(s.text(1)).get<std::vector<std::string>>()};
}

bool Catalog::has_plot_type(const std::string& plot_type) const {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT EXISTS (SELECT 1 FROM class_sets WHERE plot_type = ?1) "
              "OR EXISTS (SELECT 1 FROM images WHERE plot_type = ?1)");
  s.bind(1, plot_type);
  s.step();
  return s.i64(0) != 0;
}

std::vector<std::string> Catalog::plot_types() const {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT plot_type FROM class_sets UNION "
              "SELECT DISTINCT plot_type FROM images ORDER BY 1");
  std::vector<std::string> out;
  while (s.step()) out.push_back(s.text(0));
  return out;
}

// ---- images ----------------------------------------------------------------

ImageRef Catalog::register_image(const std::string& root_id,
                                 const std::string& run_period,
                                 std::int64_t run_number,
                                 const std::string& plot_type,
                                 const std::string& filename,
                                 Timestamp captured_at) {
  return ensure_image(root_id, run_period, run_number, plot_type, filename,
                      captured_at)
      .first;
}

std::pair<ImageRef, bool> Catalog::ensure_image(const std::string& root_id,
                                                const std::string& run_period,
                                                std::int64_t run_number,
                                                const std::string& plot_type,
                                                const std::string& filename,
                                                Timestamp captured_at) {
  if (run_number < 1)
    fail(ErrorCode::MalformedRunNumber,
         "run number must be positive: " + std::to_string(run_number));
  if (filename.empty()) fail(ErrorCode::InvalidArgument, "empty filename");
  if (plot_type.empty()) fail(ErrorCode::InvalidArgument, "empty plot type");
  std::lock_guard lock(mu_);
  if (!find_root(root_id)) fail(ErrorCode::UnknownRoot, "unknown root: " + root_id);

  if (auto existing = find_image(root_id, run_period, run_number, plot_type, filename))
    return {std::move(*existing), false};

  Statement ins(db_,
                "INSERT INTO images (root_id, run_period, run_number, plot_type, "
                "filename, captured_at) VALUES (?, ?, ?, ?, ?, ?)");
  ins.bind(1, root_id)
      .bind(2, run_period)
      .bind(3, run_number)
      .bind(4, plot_type)
      .bind(5, filename)
      .bind(6, captured_at)
      .run();
  return {ImageRef{sqlite3_last_insert_rowid(db_), root_id, run_period, run_number,
                   plot_type, filename, captured_at},
          true};
}

ImageRef Catalog::image(ImageId id) const {
  std::lock_guard lock(mu_);
  Statement s(db_, std::string("SELECT ") + kImageColumns +
                       " FROM images i WHERE image_id = ?");
  s.bind(1, id);
  if (!s.step()) fail(ErrorCode::UnknownImage, "unknown image: " + std::to_string(id));
  return read_image(s);
}

std::optional<ImageRef> Catalog::find_image(const std::string& root_id,
                                            const std::string& run_period,
                                            std::int64_t run_number,
                                            const std::string& plot_type,
                                            const std::string& filename) const {
  std::lock_guard lock(mu_);
  Statement s(db_, std::string("SELECT ") + kImageColumns +
                       " FROM images i WHERE root_id = ? AND run_period = ? "
                       "AND run_number = ? AND plot_type = ? AND filename = ?");
  s.bind(1, root_id).bind(2, run_period).bind(3, run_number).bind(4, plot_type).bind(5,
                                                                                     filename);
  if (!s.step()) return std::nullopt;
  return read_image(s);
}

std::optional<ImageRef> Catalog::find_image_by_path(const fs::path& path) const {
  std::lock_guard lock(mu_);
  const fs::path target = path.lexically_normal();
  for (const auto& root : roots()) {
    const fs::path rel = target.lexically_relative(fs::path(root.base_path).lexically_normal());
    if (rel.empty() || *rel.begin() == "..") continue;
    const auto entry = parse_layout(rel);
    if (!entry) continue;
    Statement s(db_, std::string("SELECT ") + kImageColumns +
                         " FROM images i WHERE root_id = ? AND run_period = ? "
                         "AND run_number = ? AND filename = ? ORDER BY image_id LIMIT 1");
    s.bind(1, root.root_id).bind(2, entry->run_period).bind(3, entry->run_number).bind(
        4, entry->filename);
    if (s.step()) return read_image(s);
  }
  return std::nullopt;
}

fs::path Catalog::resolve_path(ImageId id) const {
  std::lock_guard lock(mu_);
  const ImageRef ref = image(id);
  const auto root = find_root(ref.root_id);
  if (!root) fail(ErrorCode::UnknownRoot, "unknown root: " + ref.root_id);
  return layout_path(root->base_path, ref.run_period, ref.run_number, ref.filename);
}

std::vector<ImageRow> Catalog::query_images(const ImageQuery& q) const {
  std::string text = std::string("SELECT ") + kImageColumns + ", " + kEffectiveLabel +
                     " FROM images i WHERE 1";
  int n = 0;
  std::vector<std::function<void(Statement&)>> binders;
  auto add = [&](const std::string& clause, auto value) {
    const int idx = ++n;
    text += " AND " + clause + " ?" + std::to_string(idx);
    binders.push_back([idx, value](Statement& s) { s.bind(idx, value); });
  };
  if (q.plot_type) add("i.plot_type =", *q.plot_type);
  if (q.run_period) add("i.run_period =", *q.run_period);
  if (q.root_id) add("i.root_id =", *q.root_id);
  if (q.run_range) {
    add("i.run_number >=", q.run_range->first);
    add("i.run_number <=", q.run_range->second);
  }
  if (q.time_range) {
    add("i.captured_at >=", q.time_range->first);
    add("i.captured_at <=", q.time_range->second);
  }
  if (q.labeled) {
    text += *q.labeled ? " AND EXISTS" : " AND NOT EXISTS";
    text += " (SELECT 1 FROM labels l WHERE l.image_id = i.image_id)";
  }
  text += q.descending ? " ORDER BY i.captured_at DESC, i.image_id DESC"
                       : " ORDER BY i.captured_at ASC, i.image_id ASC";
  if (q.page_size > 0) {
    text += " LIMIT " + std::to_string(q.page_size) + " OFFSET " +
            std::to_string(q.page_index * q.page_size);
  }

  std::lock_guard lock(mu_);
  Statement s(db_, text);
  for (auto& b : binders) b(s);
  std::vector<ImageRow> out;
  while (s.step()) {
    ImageRow row{read_image(s), std::nullopt};
    if (!s.is_null(7)) row.label = s.text(7);
    out.push_back(std::move(row));
  }
  return out;
}

std::size_t Catalog::image_count() const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT COUNT(*) FROM images");
  s.step();
  return std::size_t(s.i64(0));
}

std::vector<ImageRef> Catalog::scan(const std::string& root_id) {
  std::lock_guard lock(mu_);
  const auto root = find_root(root_id);
  if (!root) fail(ErrorCode::UnknownRoot, "unknown root: " + root_id);
  const fs::path base(root->base_path);
  std::error_code ec;
  if (!fs::is_directory(base, ec))
    fail(ErrorCode::RootUnreachable, "root not reachable: " + root->base_path);

  // Sorted so registration order (and thus image ids) is reproducible.
  std::vector<fs::path> files;
  fs::recursive_directory_iterator it(base, fs::directory_options::skip_permission_denied,
                                      ec);
  if (ec) fail(ErrorCode::RootUnreachable, root->base_path + ": " + ec.message());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (it->is_regular_file(ec)) files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());

  std::vector<ImageRef> added;
  sql::Transaction tx(db_);
  for (const auto& file : files) {
    const auto entry = parse_layout(file.lexically_relative(base));
    if (!entry) continue;
    Timestamp captured = 0;
    if (entry->captured_at) {
      captured = *entry->captured_at;
    } else {
      const auto mtime = fs::last_write_time(file, ec);
      if (ec) continue;
      const auto sys = std::chrono::file_clock::to_sys(mtime);
      captured = std::chrono::duration_cast<std::chrono::seconds>(sys.time_since_epoch())
                     .count();
    }
    auto [ref, inserted] = ensure_image(root_id, entry->run_period, entry->run_number,
                                        entry->plot_type, entry->filename, captured);
    if (inserted) added.push_back(std::move(ref));
  }
  tx.commit();
  return added;
}

// ---- labels ----------------------------------------------------------------

LabelRecord Catalog::record_label(ImageId image_id, const std::string& class_name,
                                  const std::string& labeler) {
  const ImageId ids[] = {image_id};
  return record_labels(ids, class_name, labeler).front();
}

std::vector<LabelRecord> Catalog::record_labels(std::span<const ImageId> image_ids,
                                                const std::string& class_name,
                                                const std::string& labeler) {
  std::lock_guard lock(mu_);
  std::vector<LabelRecord> out;
  if (image_ids.empty()) return out;
  // Validate everything first; the batch is all-or-nothing.
  std::map<std::string, ClassSet> sets;
  for (ImageId id : image_ids) {
    const ImageRef ref = image(id);
    auto it = sets.find(ref.plot_type);
    if (it == sets.end()) it = sets.emplace(ref.plot_type, class_set(ref.plot_type)).first;
    if (!it->second.contains(class_name))
      fail(ErrorCode::UnknownClass,
           "class '" + class_name + "' not declared for plot type " + ref.plot_type);
  }
  const Timestamp t = now();
  sql::Transaction tx(db_);
  Statement ins(db_,
                "INSERT INTO labels (image_id, class_name, labeler, labeled_at) "
                "VALUES (?, ?, ?, ?)");
  for (ImageId id : image_ids) {
    ins.reset();
    ins.bind(1, id).bind(2, class_name).bind(3, labeler).bind(4, t).run();
    out.push_back({sqlite3_last_insert_rowid(db_), id, class_name, labeler, t});
  }
  tx.commit();
  return out;
}

std::optional<std::string> Catalog::effective_label(ImageId image_id) const {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT class_name FROM labels WHERE image_id = ? "
              "ORDER BY labeled_at DESC, label_id DESC LIMIT 1");
  s.bind(1, image_id);
  if (!s.step()) return std::nullopt;
  return s.text(0);
}

std::vector<LabelRecord> Catalog::labels_for(ImageId image_id) const {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT label_id, image_id, class_name, labeler, labeled_at FROM labels "
              "WHERE image_id = ? ORDER BY label_id");
  s.bind(1, image_id);
  std::vector<LabelRecord> out;
  while (s.step()) out.push_back({s.i64(0), s.i64(1), s.text(2), s.text(3), s.i64(4)});
  return out;
}

std::size_t Catalog::label_count() const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT COUNT(*) FROM labels");
  s.step();
  return std::size_t(s.i64(0));
}

// ---- users -----------------------------------------------------------------

void Catalog::upsert_user(const std::string& user, bool is_admin) {
  if (user.empty()) fail(ErrorCode::InvalidArgument, "empty user name");
  std::lock_guard lock(mu_);
  Statement(db_,
            "INSERT INTO users (user, is_admin) VALUES (?, ?) "
            "ON CONFLICT(user) DO UPDATE SET is_admin = excluded.is_admin")
      .bind(1, user)
      .bind(2, is_admin)
      .run();
}

bool Catalog::user_exists(const std::string& user) const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT 1 FROM users WHERE user = ?");
  s.bind(1, user);
  return s.step();
}

bool Catalog::is_admin(const std::string& user) const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT is_admin FROM users WHERE user = ?");
  s.bind(1, user);
  return s.step() && s.i64(0) != 0;
}

bool Catalog::add_permission(const std::string& user, const std::string& plot_type) {
  std::lock_guard lock(mu_);
  Statement(db_, "INSERT OR IGNORE INTO permissions (user, plot_type) VALUES (?, ?)")
      .bind(1, user)
      .bind(2, plot_type)
      .run();
  return sqlite3_changes(db_) > 0;
}

bool Catalog::has_permission(const std::string& user,
                             const std::string& plot_type) const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT 1 FROM permissions WHERE user = ? AND plot_type = ?");
  s.bind(1, user).bind(2, plot_type);
  return s.step();
}

std::size_t Catalog::permission_count() const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT COUNT(*) FROM permissions");
  s.step();
  return std::size_t(s.i64(0));
}

std::string Catalog::issue_token(const std::string& user) {
  std::random_device rd;
  static constexpr char kHex[] = "0123456789abcdef";
  std::string token;
  for (int i = 0; i < 32; ++i) token.push_back(kHex[rd() % 16]);
  add_token(token, user);
  return token;
}

void Catalog::add_token(const std::string& token, const std::string& user) {
  std::lock_guard lock(mu_);
  if (!user_exists(user)) fail(ErrorCode::InvalidArgument, "unknown user: " + user);
  Statement(db_, "INSERT OR REPLACE INTO tokens (token, user) VALUES (?, ?)")
      .bind(1, token)
      .bind(2, user)
      .run();
}

std::optional<std::string> Catalog::user_for_token(const std::string& token) const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT user FROM tokens WHERE token = ?");
  s.bind(1, token);
  if (!s.step()) return std::nullopt;
  return s.text(0);
}

// ---- models ----------------------------------------------------------------

ModelId Catalog::insert_model(const ModelRecord& m) {
  std::lock_guard lock(mu_);
  Statement(db_,
            "INSERT INTO models (plot_type, backend, class_names, blob, created_at, "
            "train_config, split_config, metrics, validation_ids) "
            "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)")
      .bind(1, m.plot_type)
      .bind(2, m.backend)
      .bind(3, json(m.class_names).dump())
      .bind_blob(4, m.blob)
      .bind(5, m.created_at ? m.created_at : now())
      .bind(6, m.train_config_json)
      .bind(7, m.split_config_json)
      .bind(8, m.metrics_json)
      .bind(9, json(m.validation_image_ids).dump())
      .run();
  return sqlite3_last_insert_rowid(db_);
}

ModelRecord Catalog::model(ModelId id) const {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT model_id, plot_type, backend, class_names, blob, created_at, "
              "train_config, split_config, metrics, validation_ids FROM models "
              "WHERE model_id = ?");
  s.bind(1, id);
  if (!s.step()) fail(ErrorCode::UnknownModel, "unknown model: " + std::to_string(id));
  ModelRecord m;
  m.model_id = s.i64(0);
  m.plot_type = s.text(1);
  m.backend = s.text(2);
  m.class_names = json::parse(s.text(3)).get<std::vector<std::string>>();
  m.blob = s.blob(4);
  m.created_at = s.i64(5);
  m.train_config_json = s.text(6);
  m.split_config_json = s.text(7);
  m.metrics_json = s.text(8);
  m.validation_image_ids = json::parse(s.text(9)).get<std::vector<ImageId>>();
  return m;
}

bool Catalog::has_model(ModelId id) const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT 1 FROM models WHERE model_id = ?");
  s.bind(1, id);
  return s.step();
}

std::vector<ModelSummary> Catalog::models() const {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT model_id, plot_type, backend, created_at, metrics FROM models "
              "ORDER BY created_at DESC, model_id DESC");
  std::vector<ModelSummary> out;
  while (s.step()) out.push_back({s.i64(0), s.text(1), s.text(2), s.i64(3), s.text(4)});
  return out;
}

std::optional<ModelId> Catalog::latest_model(const std::string& plot_type) const {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT model_id FROM models WHERE plot_type = ? "
              "ORDER BY created_at DESC, model_id DESC LIMIT 1");
  s.bind(1, plot_type);
  if (!s.step()) return std::nullopt;
  return s.i64(0);
}

// ---- inferences ------------------------------------------------------------

void Catalog::upsert_inferences(std::span<const InferenceRecord> records) {
  std::lock_guard lock(mu_);
  sql::Transaction tx(db_);
  Statement s(db_,
              "INSERT OR REPLACE INTO inferences (model_id, image_id, confidences, "
              "predicted_class, confidence, inferred_at) VALUES (?, ?, ?, ?, ?, ?)");
  for (const auto& r : records) {
    s.reset();
    s.bind(1, r.model_id)
        .bind(2, r.image_id)
        .bind(3, confidences_to_json(r.confidence_vector).dump())
        .bind(4, r.predicted_class)
        .bind(5, r.confidence)
        .bind(6, r.inferred_at)
        .run();
  }
  tx.commit();
}

std::vector<InferenceRecord> Catalog::inferences(ModelId model_id) const {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT image_id, model_id, confidences, predicted_class, confidence, "
              "inferred_at FROM inferences WHERE model_id = ? ORDER BY image_id");
  s.bind(1, model_id);
  std::vector<InferenceRecord> out;
  while (s.step()) {
    out.push_back({s.i64(0), s.i64(1), confidences_from_json(s.text(2)), s.text(3),
                   s.f64(4), s.i64(5)});
  }
  return out;
}

std::size_t Catalog::inference_count(ModelId model_id) const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT COUNT(*) FROM inferences WHERE model_id = ?");
  s.bind(1, model_id);
  s.step();
  return std::size_t(s.i64(0));
}

// ---- thresholds ------------------------------------------------------------

void Catalog::put_thresholds(const ThresholdTable& table) {
  std::lock_guard lock(mu_);
  if (!has_model(table.model_id))
    fail(ErrorCode::UnknownModel, "unknown model: " + std::to_string(table.model_id));
  Statement(db_,
            "INSERT OR REPLACE INTO thresholds (model_id, target_fpr, entries, "
            "unachievable) VALUES (?, ?, ?, ?)")
      .bind(1, table.model_id)
      .bind(2, table.target_fpr)
      .bind(3, json(table.entries).dump())
      .bind(4, json(table.unachievable).dump())
      .run();
}

std::optional<ThresholdTable> Catalog::thresholds(ModelId model_id) const {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT target_fpr, entries, unachievable FROM thresholds "
              "WHERE model_id = ?");
  s.bind(1, model_id);
  if (!s.step()) return std::nullopt;
  ThresholdTable t;
  t.model_id = model_id;
  t.target_fpr = s.f64(0);
  t.entries = json::parse(s.text(1)).get<std::map<std::string, double>>();
  t.unachievable = json::parse(s.text(2)).get<std::vector<std::string>>();
  return t;
}

// ---- arm B -----------------------------------------------------------------

OperationalRecord Catalog::insert_operational(OperationalRecord rec) {
  std::lock_guard lock(mu_);
  Statement(db_,
            "INSERT INTO ops_records (image_id, model_id, plot_type, confidences, "
            "predicted_class, confidence, decision, decision_class, sampled, "
            "decided_at, note) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)")
      .bind(1, rec.image_id)
      .bind(2, rec.model_id)
      .bind(3, rec.plot_type)
      .bind(4, confidences_to_json(rec.confidence_vector).dump())
      .bind(5, rec.predicted_class)
      .bind(6, rec.confidence)
      .bind(7, decision_name(rec.decision))
      .bind(8, rec.decision_class)
      .bind(9, rec.sampled)
      .bind(10, rec.decided_at)
      .bind(11, rec.note)
      .run();
  rec.record_id = sqlite3_last_insert_rowid(db_);
  return rec;
}

std::vector<OperationalRecord> Catalog::operational_records(
    const OperationalQuery& q) const {
  std::string text = std::string("SELECT ") + kOpsColumns + " FROM ops_records WHERE 1";
  if (q.decided_range) text += " AND decided_at >= ?1 AND decided_at <= ?2";
  if (!q.decisions.empty()) {
    text += " AND decision IN (";
    for (std::size_t i = 0; i < q.decisions.size(); ++i) {
      text += (i ? ", '" : "'") + std::string(decision_name(q.decisions[i])) + "'";
    }
    text += ")";
  }
  text += q.newest_first ? " ORDER BY decided_at DESC, record_id DESC"
                         : " ORDER BY decided_at ASC, record_id ASC";
  std::lock_guard lock(mu_);
  Statement s(db_, text);
  if (q.decided_range) s.bind(1, q.decided_range->first).bind(2, q.decided_range->second);
  std::vector<OperationalRecord> out;
  while (s.step()) out.push_back(read_ops(s));
  return out;
}

std::vector<OperationalRecord> Catalog::latest_per_plot_type() const {
  std::lock_guard lock(mu_);
  Statement s(db_, std::string("SELECT ") + kOpsColumns +
                       " FROM ops_records o WHERE record_id = ("
                       "SELECT record_id FROM ops_records p WHERE p.plot_type = o.plot_type "
                       "ORDER BY decided_at DESC, record_id DESC LIMIT 1) "
                       "ORDER BY plot_type");
  std::vector<OperationalRecord> out;
  while (s.step()) out.push_back(read_ops(s));
  return out;
}

std::vector<ImageId> Catalog::sampled_unlabeled() const {
  std::lock_guard lock(mu_);
  Statement s(db_,
              "SELECT o.image_id FROM ops_records o JOIN images i "
              "ON i.image_id = o.image_id WHERE o.sampled = 1 AND NOT EXISTS "
              "(SELECT 1 FROM labels l WHERE l.image_id = o.image_id) "
              "GROUP BY o.image_id ORDER BY MIN(i.captured_at), o.image_id");
  std::vector<ImageId> out;
  while (s.step()) out.push_back(s.i64(0));
  return out;
}

std::vector<ImageRef> Catalog::unprocessed_images(const std::string& root_id) const {
  std::lock_guard lock(mu_);
  Statement s(db_, std::string("SELECT ") + kImageColumns +
                       " FROM images i WHERE i.root_id = ? AND NOT EXISTS "
                       "(SELECT 1 FROM ops_records o WHERE o.image_id = i.image_id) "
                       "ORDER BY i.captured_at, i.image_id");
  s.bind(1, root_id);
  std::vector<ImageRef> out;
  while (s.step()) out.push_back(read_image(s));
  return out;
}

std::size_t Catalog::operational_count() const {
  std::lock_guard lock(mu_);
  Statement s(db_, "SELECT COUNT(*) FROM ops_records");
  s.step();
  return std::size_t(s.i64(0));
}

}  // namespace hydra
