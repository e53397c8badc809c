#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace advfront {

using Json = nlohmann::ordered_json;

/// Shortest round-trip form is not required; 17 significant digits always round-trip.
std::string format_double(double x);

/// Parses a double written by format_double (also accepts inf/nan spellings).
double parse_double(std::string_view s);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Writes through a temporary file and renames it into place.
void write_file(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

/// Creates the directory (and parents) when missing.
void ensure_directory(const std::string& path);

/// CSV with a leading "# {json}" header line. The header gains a "content_sha256"
/// entry computed over the data rows.
void write_csv(const std::string& path, Json header, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

struct CsvTable {
  Json header;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path);

/// Column-major binary array (little-endian float64) plus a JSON sidecar at path + ".json".
void write_binary_array(const std::string& path, const std::vector<double>& data, Json sidecar);

}  // namespace advfront
