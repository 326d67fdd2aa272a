#include "hydra/layout.hpp"

#include <cstdio>
#include <vector>

#include "hydra/error.hpp"

namespace hydra {

namespace fs = std::filesystem;

std::string run_directory(std::int64_t run_number) {
  if (run_number < 1)
    fail(ErrorCode::MalformedRunNumber,
         "run number must be positive: " + std::to_string(run_number));
  char buf[32];
  std::snprintf(buf, sizeof buf, "Run%06lld",
                static_cast<long long>(run_number));
  return buf;
}

fs::path layout_path(const fs::path& base, std::string_view run_period,
                     std::int64_t run_number, std::string_view filename) {
  return base / std::string(run_period) / run_directory(run_number) /
         std::string(filename);
}

std::string layout_filename(std::string_view plot_name, Timestamp t) {
  return std::string(plot_name) + "_" + format_iso_basic(t) + ".png";
}

std::pair<std::string, std::optional<Timestamp>> split_plot_filename(
    std::string_view filename) {
  std::string_view stem = filename;
  if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".png")
    stem.remove_suffix(4);
  const auto us = stem.rfind('_');
  if (us != std::string_view::npos && us > 0) {
    if (auto t = parse_iso_basic(stem.substr(us + 1)))
      return {std::string(stem.substr(0, us)), t};
  }
  return {std::string(stem), std::nullopt};
}

std::optional<LayoutEntry> parse_layout(const fs::path& relative) {
  std::vector<std::string> parts;
  for (const auto& p : relative) parts.push_back(p.string());
  if (parts.size() != 3) return std::nullopt;
  const std::string& run_dir = parts[1];
  if (run_dir.size() != 9 || run_dir.compare(0, 3, "Run") != 0)
    return std::nullopt;
  std::int64_t run = 0;
  for (std::size_t i = 3; i < run_dir.size(); ++i) {
    const char c = run_dir[i];
    if (c < '0' || c > '9') return std::nullopt;
    run = run * 10 + (c - '0');
  }
  if (run < 1) return std::nullopt;
  const std::string& filename = parts[2];
  if (filename.size() <= 4 || filename.substr(filename.size() - 4) != ".png")
    return std::nullopt;
  auto [plot, t] = split_plot_filename(filename);
  return LayoutEntry{parts[0], run, filename, std::move(plot), t};
}

}  // namespace hydra
