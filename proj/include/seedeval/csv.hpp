#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "seedeval/errors.hpp"

namespace seedeval::csv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Splits one line on commas; double-quoted fields may contain commas and
/// escaped quotes ("").
inline std::vector<std::string> split_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw InputError("line " + std::to_string(line_no) + ": unterminated quoted field");
  out.push_back(was_quoted ? cur : trim(cur));
  return out;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos && trim(field) == field) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// Reads a CSV with a mandatory header. Blank lines and lines starting with
/// '#' are skipped. Returns data rows; `header` receives the header fields.
inline std::vector<Row> read(std::istream& in, std::vector<std::string>& header) {
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
      line.erase(0, 3);
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split_line(line, line_no);
    if (!have_header) {
      header = std::move(fields);
      have_header = true;
      continue;
    }
    rows.push_back({std::move(fields), line_no});
  }
  if (!have_header) throw InputError("CSV input is empty");
  return rows;
}

/// Position of `name` in the header, or -1.
inline int column(const std::vector<std::string>& header, std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace seedeval::csv
