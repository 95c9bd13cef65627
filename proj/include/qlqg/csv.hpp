#pragma once

#include <string>
#include <vector>

namespace qlqg {

/// Round-trip exact formatting (%.17g) used by every text output so that
/// files are byte-identical for identical inputs.
std::string format_double(double v);

std::string csv_row(const std::vector<double>& values);

void write_text_file(const std::string& file, const std::string& content);

}  // namespace qlqg
