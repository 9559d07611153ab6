#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <ostream>
#include <string>

#include "grk/errors.hpp"

namespace grk {

// 17 significant digits round-trips every finite 64-bit float exactly; all
// CSV numbers go through here so output bytes are reproducible.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Output sink: a file when a path is given, stdout otherwise. Files are
// written with LF line endings regardless of platform (binary mode).
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw usage_error("cannot open output path: " + path);
    }
  }

  std::ostream& stream() { return file_ ? *file_ : std::cout; }

  void finish() {
    stream().flush();
    if (file_ && !*file_) throw usage_error("write failed on output path");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

}  // namespace grk
