#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace taplab::cli {

/// Reads a `key = value` file (blank lines and `#` comments ignored, values
/// may be double-quoted, keys may repeat) and returns it as `--key=value`
/// arguments. Throws std::runtime_error on unreadable files or lines without `=`.
std::vector<std::string> config_arguments(const std::filesystem::path& path);

/// Replaces `--config FILE` / `--config=FILE` in `args` by the file's
/// arguments, inserted directly after the subcommand name so explicit flags
/// given on the command line take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args);

}  // namespace taplab::cli
