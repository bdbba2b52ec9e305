#include "emit.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "lgspdc/error.hpp"

namespace lgspdc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

Format parse_format(const std::string& text) {
  if (text == "csv") return Format::csv;
  if (text == "json") return Format::json;
  if (text == "both") return Format::both;
  throw Error(ErrorCode::ParseError, "--format must be csv, json or both, got '" + text + "'");
}

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json complex_matrix_json(const std::vector<std::string>& labels, const Eigen::MatrixXcd& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json rr = json::array(), ii = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
  }
  return {{"labels", labels}, {"re", std::move(re)}, {"im", std::move(im)}};
}

Emitter::Emitter(fs::path directory, Format format, json meta, std::ostream& log)
    : directory_(std::move(directory)), format_(format), meta_(std::move(meta)), log_(log) {
  std::error_code ec;
  fs::create_directories(directory_, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create output directory '" + directory_.string() + "'");
}

void Emitter::mark_partial(const std::string& reason) {
  partial_ = true;
  partial_reasons_.push_back(reason);
}

json Emitter::meta_for(const std::string& kind, const json& extra) const {
  json meta = meta_;
  meta["kind"] = kind;
  meta["partial"] = partial_;
  if (partial_) meta["partial_reasons"] = partial_reasons_;
  if (extra.is_object())
    for (const auto& [k, v] : extra.items()) meta[k] = v;
  return meta;
}

void Emitter::write_record(const Record& record) const {
  if (record.inline_meta) {
    json doc = record.payload;
    doc["meta"] = meta_for(record.kind, record.extra);
    std::ofstream out(record.path);
    out << doc.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + record.path.string() + "'");
  } else {
    fs::path sidecar = record.path;
    sidecar.replace_extension(".meta.json");
    std::ofstream out(sidecar);
    out << json{{"meta", meta_for(record.kind, record.extra)}}.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + sidecar.string() + "'");
  }
}

void Emitter::write_text(const std::string& file_name, const std::string& kind, const std::string& content,
                   const json& extra_meta) {
  const fs::path path = directory_ / file_name;
  std::ofstream out(path);
  out << content;
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  out.close();
  Record record{path, kind, extra_meta, false, {}};
  write_record(record);
  records_.push_back(std::move(record));
  written_.push_back(path);
  log_ << "wrote " << path.string() << '\n';
}

void Emitter::write_csv(const std::string& stem, const std::string& kind, const std::string& header,
                  const std::vector<std::string>& rows, const json& extra_meta) {
  std::string content = header + '\n';
  for (const auto& row : rows) content += row + '\n';
  write_text(stem + ".csv", kind, content, extra_meta);
}

void Emitter::write_json(const std::string& stem, const std::string& kind, nlohmann::json payload,
                   const nlohmann::json& extra_meta) {
  const fs::path path = directory_ / (stem + ".json");
  Record record{path, kind, extra_meta, true, std::move(payload)};
  write_record(record);
  records_.push_back(std::move(record));
  written_.push_back(path);
  log_ << "wrote " << path.string() << '\n';
}

void Emitter::finish() {
  if (!partial_) return;
  for (const auto& record : records_) write_record(record);
}

}  // namespace lgspdc::cli
