#pragma once

// Artifact serialization: CSV with 17-significant-digit reals (doubles
// round-trip exactly) and the per-command run manifest.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "relu_lab/common.hpp"

namespace relu_lab::io {

/// Shortest-exact decimal is overkill; %.17g always round-trips doubles.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw ParamError("cannot open output file: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
    columns_ = header.size();
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw ParamError("CSV row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].find_first_of(",\n\"") != std::string::npos) {
        throw ParamError("CSV cell contains a delimiter: " + cells[i]);
      }
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void row_reals(const std::vector<double>& cells) {
    std::vector<std::string> formatted;
    formatted.reserve(cells.size());
    for (double v : cells) formatted.push_back(format_real(v));
    row(formatted);
  }

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
};

/// Record of one CLI invocation: command, full parameter set, emitted files,
/// wall-clock duration. Replaying the recorded parameters reproduces every
/// listed artifact bit for bit.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> parameters;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  double duration_seconds = 0.0;

  void write(const std::string& path) const;
};

class ManifestTimer {
 public:
  ManifestTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace relu_lab::io
