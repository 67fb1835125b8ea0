#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "casekin/types.hpp"

namespace casekin {

class ParseError : public Error { public: using Error::Error; };

//! Shortest decimal form that parses back to the identical double.
std::string format_double(double x);

//! Reads "family_id,role,time,status" rows and validates them into a
//! Dataset. Malformed content reports the 1-based line number.
Dataset parse_csv(std::istream& in, const std::string& source_name = "<stream>");
Dataset parse_csv_file(const std::filesystem::path& path);

//! Inverse of parse_csv: one proband row then the relative rows per family,
//! families in dataset order. Reparsing yields an identical dataset.
void write_csv(const Dataset& ds, std::ostream& out);
void write_csv_file(const Dataset& ds, const std::filesystem::path& path);

//! Tab-separated table with a leading "# " configuration fingerprint line.
//! Output is deterministic: no timestamps, shortest-round-trip numbers.
void write_tsv(std::ostream& out, const std::string& fingerprint,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);
void write_tsv_file(const std::filesystem::path& path, const std::string& fingerprint,
                    const std::vector<std::string>& columns,
                    const std::vector<std::vector<double>>& rows);

}  // namespace casekin
