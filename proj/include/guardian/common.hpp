#pragma once

// Shared vocabulary for the guardian pipeline: the JSON alias, the
// enumerations that appear in records and configs, and the error types.

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace guardian {

using Json = nlohmann::ordered_json;

enum class SourceFamily { registry_form, bulletin, narrative_profile, unknown };
enum class ExtractionPath { rule, llm };
enum class Engine { layout, basic, ocr, plaintext };

std::string_view to_string(SourceFamily f);
std::string_view to_string(ExtractionPath p);
std::string_view to_string(Engine e);

std::optional<SourceFamily> parse_source_family(std::string_view s);
std::optional<ExtractionPath> parse_extraction_path(std::string_view s);
std::optional<Engine> parse_engine(std::string_view s);

/// Base for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration file, bad pattern, duplicate label, missing path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class PathSyntaxError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// string helpers

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string collapse_spaces(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with_icase(std::string_view s, std::string_view prefix);

/// Case-fold and collapse whitespace; used for canonical string comparison.
std::string canonical_text(std::string_view s);

/// Reads a whole file; throws IoError.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// Parses a JSONL file; blank lines are skipped. Throws ConfigError with
/// the line number on malformed input.
std::vector<Json> read_jsonl(const std::string& path);

/// Shortest round-trip decimal representation.
std::string format_decimal(double v);

}  // namespace guardian
