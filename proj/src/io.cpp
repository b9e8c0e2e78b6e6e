#include "epimi/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace epimi {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail_at(const std::string& path, std::size_t line_no, const std::string& what) {
    std::ostringstream msg;
    msg << path << ":" << line_no << ": " << what;
    throw ValidationError(msg.str());
}

double parse_feature(const std::string& raw, const std::string& path, std::size_t line_no,
                     const std::string& column) {
    const std::string text = trim(raw);
    if (text.empty()) fail_at(path, line_no, "empty value in column '" + column + "'");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (errno != 0 || end != text.c_str() + text.size())
        fail_at(path, line_no, "non-numeric value '" + text + "' in column '" + column + "'");
    if (!std::isfinite(v))
        fail_at(path, line_no, "non-finite value '" + text + "' in column '" + column + "'");
    return v;
}

}  // namespace

LabeledDataset parse_dataset_csv(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": file is empty");
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);

    std::ptrdiff_t label_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "label") {
            if (label_col >= 0) fail_at(path, 1, "duplicate 'label' column");
            label_col = static_cast<std::ptrdiff_t>(c);
        }
    }
    if (label_col < 0) fail_at(path, 1, "missing required 'label' column");
    if (header.size() < 2) fail_at(path, 1, "no feature columns besides 'label'");
    const std::size_t dim = header.size() - 1;

    std::vector<std::vector<double>> feature_rows;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;  // ignore blank lines
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << "expected " << header.size() << " fields, found " << fields.size();
            fail_at(path, line_no, msg.str());
        }
        std::vector<double> row;
        row.reserve(dim);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (static_cast<std::ptrdiff_t>(c) == label_col) continue;
            row.push_back(parse_feature(fields[c], path, line_no, header[c]));
        }
        const double raw_label = parse_feature(fields[label_col], path, line_no, "label");
        if (raw_label != std::floor(raw_label))
            fail_at(path, line_no, "label must be an integer");
        if (raw_label < 0) fail_at(path, line_no, "label must be nonnegative");
        if (raw_label > 1e6) fail_at(path, line_no, "label is implausibly large");
        labels.push_back(static_cast<int>(raw_label));
        feature_rows.push_back(std::move(row));
    }
    if (feature_rows.empty()) throw ValidationError(path + ": no data rows");

    LabeledDataset data;
    data.features.resize(static_cast<Eigen::Index>(feature_rows.size()),
                         static_cast<Eigen::Index>(dim));
    data.labels.resize(static_cast<Eigen::Index>(labels.size()));
    int max_label = 0;
    for (std::size_t i = 0; i < feature_rows.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) data.features(i, j) = feature_rows[i][j];
        data.labels[static_cast<Eigen::Index>(i)] = labels[i];
        max_label = std::max(max_label, labels[i]);
    }
    data.class_count = std::max(2, max_label + 1);
    data.validate();

    if (warnings != nullptr) {
        std::vector<int> counts(data.class_count, 0);
        for (int y : labels) ++counts[y];
        for (int k = 0; k < data.class_count; ++k) {
            if (counts[k] == 0) {
                std::ostringstream msg;
                msg << path << ": class " << k << " has no rows (classes run 0.."
                    << data.class_count - 1 << ")";
                warnings->push_back(msg.str());
            }
        }
    }
    return data;
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open '" + tmp + "' for writing");
        out << content;
        out.flush();
        if (!out) throw ValidationError("write to '" + tmp + "' failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw ValidationError("cannot move '" + tmp + "' into place: " +
                              std::string(std::strerror(errno)));
    }
}

void write_csv_atomic(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out << ',';
        out << header[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw ValidationError("csv row width does not match header");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << row[c];
        }
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

}  // namespace epimi
