#include "advfront/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "advfront/kinetics.hpp"

namespace advfront {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError("not a number: '" + std::string(s) + "'");
  }
  return x;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

void ensure_directory(const std::string& path) {
  if (path.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw InputError("cannot create directory " + path + ": " + ec.message());
}

void write_file(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) ensure_directory(p.parent_path().string());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot open " + tmp + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw InputError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_csv(const std::string& path, Json header, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::string body;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) body += ',';
    body += columns[i];
  }
  body += '\n';
  for (const auto& r : rows) {
    if (r.size() != columns.size()) throw InputError("CSV row width does not match the columns");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) body += ',';
      body += format_double(r[i]);
    }
    body += '\n';
  }
  header["content_sha256"] = sha256_hex(body);
  write_file(path, "# " + header.dump() + "\n" + body);
}

CsvTable read_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream is(text);
  std::string line;
  CsvTable t;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
    throw InputError(path + ": missing JSON header line");
  }
  try {
    t.header = Json::parse(line.substr(2));
  } catch (const std::exception& e) {
    throw InputError(path + ": bad JSON header: " + e.what());
  }
  if (!std::getline(is, line)) throw InputError(path + ": missing column line");
  {
    std::istringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) t.columns.push_back(col);
  }
  std::size_t lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view cell(line.data() + start,
                                  (comma == std::string::npos ? line.size() : comma) - start);
      try {
        row.push_back(parse_double(cell));
      } catch (const InputError& e) {
        throw InputError(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != t.columns.size()) {
      throw InputError(path + ":" + std::to_string(lineno) + ": wrong number of fields");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_binary_array(const std::string& path, const std::vector<double>& data, Json sidecar) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  const std::string_view bytes(reinterpret_cast<const char*>(data.data()),
                               data.size() * sizeof(double));
  sidecar["dtype"] = "float64-le";
  sidecar["count"] = data.size();
  sidecar["content_sha256"] = sha256_hex(bytes);
  write_file(path, bytes);
  write_file(path + ".json", sidecar.dump(2) + "\n");
}

}  // namespace advfront
