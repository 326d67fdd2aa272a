#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "hydra/time_util.hpp"

namespace hydra {

// On-disk image layout:
//   <base_path>/<run_period>/Run<NNNNNN>/<plot_name>_<YYYYMMDDTHHMMSSZ>.png

// "Run012345"
std::string run_directory(std::int64_t run_number);

std::filesystem::path layout_path(const std::filesystem::path& base,
                                  std::string_view run_period,
                                  std::int64_t run_number,
                                  std::string_view filename);

// "<plot_name>_<iso>.png"
std::string layout_filename(std::string_view plot_name, Timestamp t);

struct LayoutEntry {
  std::string run_period;
  std::int64_t run_number = 0;
  std::string filename;
  std::string plot_type;
  // Only when the filename carries a trailing timestamp token.
  std::optional<Timestamp> captured_at;
};

// Parses a path relative to a root. nullopt when it does not follow the layout.
std::optional<LayoutEntry> parse_layout(const std::filesystem::path& relative);

// Splits "<plot>_<iso>.png" into plot name and timestamp; a filename without a
// valid token yields the bare stem and no timestamp.
std::pair<std::string, std::optional<Timestamp>> split_plot_filename(
    std::string_view filename);

}  // namespace hydra
