#pragma once
#include <cstdio>
#include <fstream>
#include <string>

#include "ringspdc/config.hpp"
#include "ringspdc/errors.hpp"

// Artifact plumbing shared by the command-line tools: fixed number
// formatting so reruns are byte-identical, and temp+rename writes so a
// crash never leaves a half-written file behind.

namespace ringspdc {

// scientific, 9 significant digits, '.' decimal
inline std::string fmt_sci9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", x);
  return buf;
}

// every emitted table starts with this line
inline std::string artifact_comment(const RunConfig& cfg) {
  return "# config=" + config_hash(cfg) + " tool=ringspdc " + tool_version +
         "\n";
}

inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out.good())
      throw ComputationError("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out.good()) throw ComputationError("short write to '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ComputationError("cannot rename '" + tmp + "' onto '" + path + "'");
  }
}

}  // namespace ringspdc
