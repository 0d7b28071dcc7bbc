// RFC 4180 style CSV reading and writing for Dataset.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "surplus/dataset.h"
#include "surplus/errors.h"

namespace surplus {
namespace {

using Record = std::vector<std::string>;

// Splits text into records, honoring quoted fields (embedded commas, quotes
// and line breaks). Accepts LF or CRLF line endings.
std::vector<Record> tokenize(std::string_view text) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A lone empty field is a blank line.
    if (!(current.size() == 1 && current[0].empty())) {
      records.push_back(std::move(current));
    }
    current.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started || !field.empty()) {
          throw ValidationError("CSV line " + std::to_string(line) +
                                ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(ch);
    }
  }
  if (in_quotes) throw ValidationError("CSV: unterminated quoted field");
  if (!field.empty() || field_started || !current.empty()) end_record();
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string quote_if_needed(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

Dataset parse_csv(std::string_view text, std::string_view target) {
  // Strip a UTF-8 byte order mark.
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  auto records = tokenize(text);
  if (records.empty()) throw ValidationError("CSV: missing header row");
  const Record& header = records.front();

  std::size_t target_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (trim(header[c]) == target) {
      target_col = c;
      break;
    }
  }
  if (target_col == header.size()) {
    throw ValidationError("CSV: target column '" + std::string(target) +
                          "' not found in header");
  }

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != target_col) names.emplace_back(trim(header[c]));
  }
  const std::size_t n = records.size() - 1;
  std::vector<std::vector<double>> columns(names.size(),
                                           std::vector<double>(n));
  std::vector<double> y(n);

  for (std::size_t r = 1; r < records.size(); ++r) {
    const Record& rec = records[r];
    if (rec.size() != header.size()) {
      throw ValidationError("CSV row " + std::to_string(r) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(rec.size()));
    }
    std::size_t feature = 0;
    for (std::size_t c = 0; c < rec.size(); ++c) {
      const std::string_view cell = trim(rec[c]);
      const std::string where = "CSV row " + std::to_string(r) +
                                ", column '" + std::string(trim(header[c])) +
                                "'";
      if (cell.empty()) throw ValidationError(where + ": missing value");
      double v = 0.0;
      const char* first = cell.data();
      if (cell.front() == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(v)) {
        throw ValidationError(where + ": '" + std::string(cell) +
                              "' is not a finite number");
      }
      if (c == target_col) {
        y[r - 1] = v;
      } else {
        columns[feature++][r - 1] = v;
      }
    }
  }
  if (names.empty()) throw ValidationError("CSV: no feature columns");
  return Dataset(std::move(names), Matrix::from_columns(columns), std::move(y));
}

Dataset load_csv(const std::filesystem::path& path, std::string_view target) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open CSV file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), target);
}

std::string format_csv(const Dataset& ds, std::string_view target_name) {
  std::string out;
  for (const auto& name : ds.feature_names()) {
    out += quote_if_needed(name);
    out.push_back(',');
  }
  out += quote_if_needed(target_name);
  out.push_back('\n');
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.p(); ++j) {
      append_number(out, ds.x()(i, j));
      out.push_back(',');
    }
    append_number(out, ds.y()[i]);
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path,
               std::string_view target_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write CSV file " + path.string());
  out << format_csv(ds, target_name);
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace surplus
