#include "qlqg/csv.hpp"

#include <cstdio>
#include <fstream>

#include "qlqg/types.hpp"

namespace qlqg {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_row(const std::vector<double>& values) {
  std::string row;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) row += ',';
    row += format_double(values[i]);
  }
  row += '\n';
  return row;
}

void write_text_file(const std::string& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::ConfigError, "cannot open " + file + " for writing");
  out << content;
  require(static_cast<bool>(out), ErrorKind::ConfigError, "failed writing " + file);
}

}  // namespace qlqg
