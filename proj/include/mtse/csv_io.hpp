#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mtse::csv {

/// Splits one line on commas and trims surrounding blanks from each field.
/// Quoting is not supported.
std::vector<std::string> split_line(std::string_view line);

/// Parses a double; throws InputError naming `where` on failure.
double parse_number(std::string_view field, const std::string& where);

/// Numeric matrix, one row per non-empty line. Lines starting with '#' are
/// skipped; a first line that does not parse as numbers is treated as a header.
Eigen::MatrixXd read_matrix(std::istream& in, const std::string& source);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);

}  // namespace mtse::csv
