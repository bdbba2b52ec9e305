#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "lgspdc/biphoton.hpp"

namespace lgspdc::cli {

/// Parses "142", "142um", "0.142 mm", "809.66nm" into meters; a bare number
/// is read in `default_unit` ("nm", "um", "mm" or "m").
double parse_length(std::string_view text, std::string_view default_unit);

/// Flat dotted-key run configuration. Every key has a default; files and
/// --set overrides may only touch known keys.
class RunConfig {
 public:
  RunConfig();

  /// `key = value` lines, '#' comments. Errors name the key and line.
  void parse_text(std::string_view text, std::string_view origin = "config");
  void load_file(const std::filesystem::path& path);
  /// One "key=value" override.
  void apply_override(std::string_view assignment);
  void set(const std::string& key, const std::string& value, std::string_view where = "");

  const std::string& get(const std::string& key) const;
  bool is_auto(const std::string& key) const;
  /// Length in meters using the unit implied by the key suffix.
  double length(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;

  /// Source, grid and sweep settings resolved to library types.
  SpdcConfig spdc() const;
  DetuningGrid grid(const SpdcConfig& config) const;
  SpdcConfig sweep_spdc() const;
  DetuningGrid sweep_grid(const SpdcConfig& config) const;
  ProbabilityOptions probability_options() const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  nlohmann::json echo() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace lgspdc::cli
