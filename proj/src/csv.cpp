#include "casekin/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace casekin {

std::string format_double(double x) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

namespace {

constexpr const char* kHeader = "family_id,role,time,status";

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  return line;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void fail(const std::string& source, std::size_t line_no, const std::string& what) {
  throw ParseError(source + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

Dataset parse_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ParseError(source_name + ": empty input, expected header '" + kHeader + "'");
  }
  ++line_no;
  if (strip_cr(line) != kHeader) {
    fail(source_name, line_no, "expected header '" + std::string(kHeader) + "'");
  }

  std::vector<RawRecord> rows;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 4) {
      fail(source_name, line_no, "expected 4 comma-separated fields, got " +
                                     std::to_string(fields.size()));
    }
    RawRecord rec;
    rec.family_id = fields[0];
    if (rec.family_id.empty()) {
      fail(source_name, line_no, "family_id must be nonempty");
    }
    if (fields[1] == "P") {
      rec.role = 'P';
    } else if (fields[1] == "R") {
      rec.role = 'R';
    } else {
      fail(source_name, line_no, "role must be P or R, got '" + fields[1] + "'");
    }
    const std::string& ts = fields[2];
    const auto time_res = std::from_chars(ts.data(), ts.data() + ts.size(), rec.time);
    if (time_res.ec != std::errc() || time_res.ptr != ts.data() + ts.size()) {
      fail(source_name, line_no, "time '" + ts + "' is not a number");
    }
    if (!(rec.time >= 0.0)) {
      fail(source_name, line_no, "time must be >= 0, got " + ts);
    }
    if (fields[3] == "0") {
      rec.status = 0;
    } else if (fields[3] == "1") {
      rec.status = 1;
    } else {
      fail(source_name, line_no, "status must be 0 or 1, got '" + fields[3] + "'");
    }
    rows.push_back(std::move(rec));
  }
  if (rows.empty()) {
    throw EmptyDataset(source_name + ": no data rows");
  }
  return validate_dataset(rows);
}

Dataset parse_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open " + path.string());
  }
  return parse_csv(in, path.string());
}

void write_csv(const Dataset& ds, std::ostream& out) {
  out << kHeader << '\n';
  for (const auto& fam : ds.families) {
    out << fam.family_id << ",P," << format_double(fam.proband.time) << ','
        << fam.proband.status << '\n';
    for (const auto& rel : fam.relatives) {
      out << fam.family_id << ",R," << format_double(rel.time) << ',' << rel.status << '\n';
    }
  }
}

void write_csv_file(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  write_csv(ds, out);
}

void write_tsv(std::ostream& out, const std::string& fingerprint,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  out << "# " << fingerprint << '\n';
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << columns[c] << (c + 1 < columns.size() ? '\t' : '\n');
  }
  for (const auto& row : rows) {
    if (row.size() != columns.size()) {
      throw Error("tsv row width does not match header");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << format_double(row[c]) << (c + 1 < row.size() ? '\t' : '\n');
    }
  }
}

void write_tsv_file(const std::filesystem::path& path, const std::string& fingerprint,
                    const std::vector<std::string>& columns,
                    const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  write_tsv(out, fingerprint, columns, rows);
}

}  // namespace casekin
