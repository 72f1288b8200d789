#ifndef MDPP_IO_HPP
#define MDPP_IO_HPP

#include <string>
#include <string_view>
#include <vector>

#include "mdpp/kernel.hpp"
#include "mdpp/oracle.hpp"

namespace mdpp {

/// Whole-file helpers; failures throw Io.
std::string read_file(const std::string &path);
void write_file(const std::string &path, std::string_view content);

/// Plain CSV of decimal floats, one row per line, no header. Blank lines
/// are ignored; every row must have the same width.
Matrix parse_matrix_csv(std::string_view text);
std::string format_matrix_csv(const Matrix &m);
Matrix read_matrix_csv(const std::string &path);

/// Comma-separated zero-based indices; the empty set is an empty line.
std::string format_subset(const Subset &s);
Subset parse_subset(std::string_view line, std::size_t ground_size);

/// One subset per line, in order.
std::string format_subsets(const std::vector<Subset> &sets);

/// "mask,probability" header, then one row per subset in mask order.
std::string format_distribution(const SetDistribution &d);

}  // namespace mdpp

#endif  // MDPP_IO_HPP
