#pragma once

#include <string>
#include <vector>

#include "nsbi/core/types.hpp"

namespace nsbi {

struct Table {
  std::vector<std::string> header;
  Mat values;
};

/// Numbers are written with 17 significant digits so a read round-trips exactly.
std::string format_table(const Table& table);
void write_table(const std::string& path, const Table& table);

/// Parses a header line plus numeric rows; errors name the file and line number.
Table parse_table(const std::string& text, const std::string& source = "<string>");
Table read_table(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Column names theta_0..theta_{d-1}, or the given parameter names.
std::vector<std::string> theta_header(std::size_t d, const std::vector<std::string>& names = {});

}  // namespace nsbi
