#pragma once

// Run outputs: JSONL run records (one object per line, digest on every
// record) and RFC 4180 CSV. CSV files carry the digest in their filename;
// appending records with a different digest to an existing JSONL file is
// refused so reports never mix scenarios.

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "latqueue/stats.hpp"
#include "latqueue/version.hpp"

namespace latqueue {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    row(header);
  }

  template <typename... Ts>
  void row_of(const Ts&... fields) {
    std::vector<std::string> r;
    (r.push_back(to_field(fields)), ...);
    row(r);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << quoted(fields[i]);
    }
    out_ << "\r\n";
  }

 private:
  static std::string to_field(const std::string& s) { return s; }
  static std::string to_field(const char* s) { return s; }
  template <typename T>
  static std::string to_field(const T& v) {
    nlohmann::json j = v;  // shortest round-trip numerics
    return j.dump();
  }
  static std::string quoted(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    q += '"';
    return q;
  }

  std::ofstream out_;
};

inline nlohmann::json stats_to_json(const TrajectoryStats& ts) {
  nlohmann::json j;
  j["nodes"] = ts.nodes;
  j["span"] = ts.span;
  j["burn_in"] = ts.burn_in;
  j["mean_queue"] = ts.mean_x;
  j["mean_queue_sq"] = ts.mean_x2;
  j["mean_weight"] = ts.mean_g;
  j["mean_weight_step"] = ts.mean_delta;
  j["service_rate"] = ts.service_rate;
  j["window_first"] = ts.window_first;
  j["window_second"] = ts.window_second;
  if (ts.events > 0) {
    j["events"] = ts.events;
    j["self_loop_fraction"] = ts.self_loop_fraction;
  }
  return j;
}

// Appends one record per call; first use of an existing file checks that its
// records carry the same digest.
class RunRecordWriter {
 public:
  RunRecordWriter(const std::filesystem::path& path, std::string digest)
      : path_(path), digest_(std::move(digest)) {
    if (std::filesystem::exists(path)) {
      std::ifstream in(path);
      std::string line;
      if (std::getline(in, line) && !line.empty()) {
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("digest") || j["digest"] != digest_)
          throw std::runtime_error("refusing to mix run records across digests in " +
                                   path.string());
      }
    }
    out_.open(path, std::ios::app);
    if (!out_) throw std::runtime_error("cannot open " + path.string());
  }

  void write(nlohmann::json record) {
    record["digest"] = digest_;
    record["version"] = kVersion;
    out_ << record.dump() << '\n';
  }

 private:
  std::filesystem::path path_;
  std::string digest_;
  std::ofstream out_;
};

}  // namespace latqueue
