#include "imbens/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "imbens/error.hpp"
#include "imbens/model_io.hpp"

namespace imbens {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(std::string_view(line).substr(start)));
      return out;
    }
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
}

[[noreturn]] void bad_line(std::size_t line_no, const std::string& msg) {
  fail("InvalidCsv", ErrorKind::Data, "line " + std::to_string(line_no) + ": " + msg);
}

std::optional<long long> as_integer(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& label_column) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_line(line);
      break;
    }
  }
  if (header.empty()) fail("InvalidCsv", ErrorKind::Data, "missing header row");
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    fail("InvalidCsv", ErrorKind::Data, "no column named '" + label_column + "'");
  }
  const auto label_pos = static_cast<std::size_t>(label_it - header.begin());

  CsvTable table;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_pos) table.feature_names.push_back(header[c]);
  }
  std::vector<double> row(table.feature_names.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      bad_line(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(cells.size()));
    }
    std::size_t j = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_pos) continue;
      const std::string& cell = cells[c];
      char* end = nullptr;
      const double v = cell.empty() ? 0.0 : std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        bad_line(line_no, "non-numeric or non-finite value '" + cell + "' in column " + header[c]);
      }
      row[j++] = v;
    }
    if (cells[label_pos].empty()) bad_line(line_no, "empty label");
    if (table.features.rows() == 0 && table.features.cols() == 0) table.features = Matrix(0, row.size());
    table.features.append_row(row);
    table.raw_labels.push_back(cells[label_pos]);
  }
  if (table.raw_labels.empty()) fail("EmptyDataset", ErrorKind::Data, "CSV has no data rows");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path, const std::string& label_column) {
  return parse_csv(read_file(path), label_column);
}

std::vector<std::string> infer_class_names(const std::vector<std::string>& raw_labels) {
  std::vector<std::string> names(raw_labels.begin(), raw_labels.end());
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  const bool numeric = std::all_of(names.begin(), names.end(), [](const std::string& s) { return as_integer(s).has_value(); });
  if (numeric) {
    std::stable_sort(names.begin(), names.end(),
                     [](const std::string& a, const std::string& b) { return *as_integer(a) < *as_integer(b); });
  }
  return names;
}

Dataset encode_labels(const CsvTable& table, std::vector<std::string> class_names) {
  if (class_names.empty()) class_names = infer_class_names(table.raw_labels);
  std::map<std::string, int> index;
  for (std::size_t k = 0; k < class_names.size(); ++k) index.emplace(class_names[k], static_cast<int>(k));
  std::vector<int> labels;
  labels.reserve(table.raw_labels.size());
  for (const auto& raw : table.raw_labels) {
    const auto it = index.find(raw);
    if (it == index.end()) fail("UnknownLabel", ErrorKind::Data, "label '" + raw + "' is not a known class");
    labels.push_back(it->second);
  }
  const std::size_t k = class_names.size();
  return Dataset(table.features, std::move(labels), k, std::move(class_names));
}

std::string dataset_to_csv(const Dataset& dataset) {
  std::string out;
  for (std::size_t j = 0; j < dataset.n_features(); ++j) out += "f" + std::to_string(j) + ",";
  out += "label\n";
  char buf[32];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t j = 0; j < dataset.n_features(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", dataset.features()(i, j));
      out += buf;
    }
    out += dataset.class_name(dataset.labels()[i]);
    out += '\n';
  }
  return out;
}

void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_csv(dataset));
}

}  // namespace imbens
