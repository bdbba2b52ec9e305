#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace lgspdc::cli {

enum class Format { csv, json, both };

Format parse_format(const std::string& text);

/// %.17g, so CSV and JSON emissions round-trip to the same double.
std::string number(double v);

/// UTC ISO-8601 wall-clock time, used only inside `meta`.
std::string utc_timestamp();

/// {"labels": [...], "re": [[...]], "im": [[...]]}
nlohmann::json complex_matrix_json(const std::vector<std::string>& labels, const Eigen::MatrixXcd& m);

/// Writes datasets into one output directory. Every dataset carries a
/// `meta` block (inline for JSON, `<stem>.meta.json` sidecar for CSV); the
/// payload itself never contains wall-clock data.
class Emitter {
 public:
  Emitter(std::filesystem::path directory, Format format, nlohmann::json meta, std::ostream& log);

  bool wants_csv() const { return format_ != Format::json; }
  bool wants_json() const { return format_ != Format::csv; }

  /// Marks every dataset written from now on (and the ones already written
  /// are rewritten on finish()) as partial.
  void mark_partial(const std::string& reason);
  bool partial() const { return partial_; }

  void write_csv(const std::string& stem, const std::string& kind, const std::string& header,
           const std::vector<std::string>& rows, const nlohmann::json& extra_meta = {});
  void write_json(const std::string& stem, const std::string& kind, nlohmann::json payload,
            const nlohmann::json& extra_meta = {});
  /// Raw text file (e.g. a counts table in its own schema) with a meta sidecar.
  void write_text(const std::string& file_name, const std::string& kind, const std::string& content,
            const nlohmann::json& extra_meta = {});

  /// Rewrites meta of already-emitted datasets if the run turned partial.
  void finish();

  const std::vector<std::filesystem::path>& written() const { return written_; }

 private:
  struct Record {
    std::filesystem::path path;
    std::string kind;
    nlohmann::json extra;
    bool inline_meta;
    nlohmann::json payload;  // only for inline meta
  };

  nlohmann::json meta_for(const std::string& kind, const nlohmann::json& extra) const;
  void write_record(const Record& record) const;

  std::filesystem::path directory_;
  Format format_;
  nlohmann::json meta_;
  std::ostream& log_;
  bool partial_ = false;
  std::vector<std::string> partial_reasons_;
  std::vector<Record> records_;
  std::vector<std::filesystem::path> written_;
};

}  // namespace lgspdc::cli
