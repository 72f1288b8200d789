#include "mdpp/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mdpp/error.hpp"
#include "mdpp/experiment.hpp"

namespace mdpp {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = s.find(sep);
    out.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) return out;
    s.remove_prefix(pos + 1);
  }
}

}  // namespace

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "': " + std::strerror(errno));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) fail(ErrorKind::Io, "error reading '" + path + "'");
  return buffer.str();
}

void write_file(const std::string &path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "': " + std::strerror(errno));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) fail(ErrorKind::Io, "error writing '" + path + "'");
}

Matrix parse_matrix_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (std::string_view cell : split(line, ',')) {
      cell = trim(cell);
      double value = 0.0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || end != cell.data() + cell.size() || cell.empty())
        fail(ErrorKind::InvalidArgument,
             "line " + std::to_string(line_no) + ": '" + std::string(cell) + "' is not a number");
      row.push_back(value);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorKind::InvalidArgument, "line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                                           " columns, expected " + std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

std::string format_matrix_csv(const Matrix &m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix read_matrix_csv(const std::string &path) {
  try {
    return parse_matrix_csv(read_file(path));
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::Io) throw;
    fail(ErrorKind::Io, path + ": " + e.what());
  }
}

std::string format_subset(const Subset &s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  return out;
}

Subset parse_subset(std::string_view line, std::size_t ground_size) {
  line = trim(line);
  std::vector<std::size_t> items;
  if (!line.empty()) {
    for (std::string_view cell : split(line, ',')) {
      cell = trim(cell);
      std::size_t value = 0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || end != cell.data() + cell.size() || cell.empty())
        fail(ErrorKind::InvalidArgument, "'" + std::string(cell) + "' is not an item index");
      items.push_back(value);
    }
  }
  return Subset(ground_size, std::move(items));
}

std::string format_subsets(const std::vector<Subset> &sets) {
  std::string out;
  for (const auto &s : sets) {
    out += format_subset(s);
    out += '\n';
  }
  return out;
}

std::string format_distribution(const SetDistribution &d) {
  std::string out = "mask,probability\n";
  for (const auto &[mask, p] : d.probabilities) {
    out += std::to_string(mask);
    out += ',';
    out += format_double(p);
    out += '\n';
  }
  return out;
}

}  // namespace mdpp
