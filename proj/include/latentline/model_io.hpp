// Binary model files: little-endian IEEE-754 binary64 arrays (row-major)
// behind a magic string and a format version.
#pragma once

#include "latentline/core.hpp"
#include "latentline/longitudinal.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace latentline {

inline constexpr char kModelMagic[8] = {'L', 'T', 'N', 'L', 'M', 'O', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Data-side context needed to rebuild windows for a stored model.
struct ModelContext {
  Catalog catalog;
  WindowLayout layout;
  std::vector<std::string> subjects;  // sorted, as seen at fit time
};

struct ModelFile {
  ModelState state;
  std::optional<ModelContext> context;
};

void write_model(std::ostream& out, const ModelFile& model);
/// Throws InputError on a bad magic, unknown version, truncation or a state
/// that breaks an invariant.
ModelFile read_model(std::istream& in);

void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace latentline
