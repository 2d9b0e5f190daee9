#pragma once

#include <filesystem>
#include <string>

#include "imbens/ensemble.hpp"

namespace imbens {

inline constexpr int kModelFormatVersion = 1;

/// JSON model document; grammar in docs/model_format.md. Output is
/// deterministic (sorted keys, shortest round-trip doubles).
std::string serialize_model(const EnsembleModel& model);

/// Throws UnsupportedFormatVersion for any version other than 1 and
/// InvalidModelFile for malformed documents. Nothing is partially read.
EnsembleModel deserialize_model(const std::string& text);

void save_model(const EnsembleModel& model, const std::filesystem::path& path);
EnsembleModel load_model(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace imbens
