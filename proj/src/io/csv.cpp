#include "nsbi/io/csv.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace nsbi {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string format_table(const Table& table) {
  if (static_cast<Eigen::Index>(table.header.size()) != table.values.cols()) {
    throw std::invalid_argument("table header has " + std::to_string(table.header.size()) + " names for " +
                                std::to_string(table.values.cols()) + " columns");
  }
  std::string out;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j) out += ',';
    out += table.header[j];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
      if (j) out += ',';
      out += format_double(table.values(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_table(const std::string& path, const Table& table) { write_file(path, format_table(table)); }

Table parse_table(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Table t;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_commas(line);
    if (t.header.empty()) {
      for (auto& c : cells) t.header.push_back(trim(c));
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                               " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string cell = trim(cells[j]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw std::runtime_error(source + ":" + std::to_string(line_no) + ": field " + std::to_string(j + 1) + " ('" +
                                 cell + "') is not a number");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw std::runtime_error(source + ": missing header line");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

Table read_table(const std::string& path) { return parse_table(read_file(path), path); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::vector<std::string> theta_header(std::size_t d, const std::vector<std::string>& names) {
  if (names.size() == d) return names;
  std::vector<std::string> h;
  for (std::size_t i = 0; i < d; ++i) h.push_back("theta_" + std::to_string(i));
  return h;
}

}  // namespace nsbi
