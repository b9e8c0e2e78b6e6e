#pragma once

#include <string>
#include <vector>

#include "epimi/core.hpp"

namespace epimi {

// Parses a dataset CSV: a header naming one column `label` (any position),
// every other column a numeric feature.  Labels must be nonnegative integers;
// class_count becomes max(label) + 1.  Malformed content raises
// ValidationError with the offending 1-based line number.  Classes that end
// up empty are reported through `warnings` (when given), not as errors.
LabeledDataset parse_dataset_csv(const std::string& path,
                                 std::vector<std::string>* warnings = nullptr);

// Shortest-ish decimal rendering that round-trips a double exactly ("%.17g").
std::string format_double(double value);

// Writes `header` + `rows` to a temporary file in the target directory and
// renames it into place, so a crash or error never leaves a partial file.
void write_csv_atomic(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);

void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace epimi
