#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "imbens/dataset.hpp"

namespace imbens {

/// Parsed CSV before label encoding.
struct CsvTable {
  std::vector<std::string> feature_names;
  Matrix features;
  std::vector<std::string> raw_labels;
};

/// Header required; `label_column` names the label. Plain comma separation,
/// no quoting. Throws InvalidCsv naming the offending line.
CsvTable parse_csv(const std::string& text, const std::string& label_column = "label");
CsvTable read_csv(const std::filesystem::path& path, const std::string& label_column = "label");

/// Distinct labels in encoding order: numeric order if every label is an
/// integer, lexicographic otherwise.
std::vector<std::string> infer_class_names(const std::vector<std::string>& raw_labels);

/// Maps raw labels onto [0, K) via `class_names` (inferred when empty).
/// Throws UnknownLabel for labels outside a given mapping.
Dataset encode_labels(const CsvTable& table, std::vector<std::string> class_names = {});

/// `f0,...,f{d-1},label` with 17 significant digits; labels written by class name.
std::string dataset_to_csv(const Dataset& dataset);
void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace imbens
