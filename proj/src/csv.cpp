#include "seqmon/csv.hpp"

#include "seqmon/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace seqmon {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto res = std::from_chars(cell.data(), end, v);
  if (cell.empty() || res.ec != std::errc{} || res.ptr != end || !std::isfinite(v)) {
    throw CsvError("line " + std::to_string(line_no) + ": '" + cell + "' is not a finite number");
  }
  return v;
}

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path.string());
  return in;
}

}  // namespace

NumericTable read_numeric_csv(std::istream& in) {
  NumericTable out;
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty CSV");
  out.header = split_commas(line);
  const auto d = static_cast<Index>(out.header.size());
  if (d == 0) throw CsvError("CSV header has no columns");
  out.rows = Series(d);
  Eigen::VectorXd row(d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (static_cast<Index>(cells.size()) != d) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " + std::to_string(d) + " columns");
    }
    for (Index c = 0; c < d; ++c) row[c] = parse_cell(cells[static_cast<std::size_t>(c)], line_no);
    out.rows.append(row);
  }
  return out;
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_numeric_csv(in);
}

void write_numeric_csv(const std::filesystem::path& path, const Series& rows, std::vector<std::string> header) {
  if (header.empty()) {
    for (Index c = 0; c < rows.dim(); ++c) header.push_back("x" + std::to_string(c + 1));
  }
  if (static_cast<Index>(header.size()) != rows.dim()) throw CsvError("header does not match the column count");
  std::ofstream os(path);
  if (!os) throw CsvError("cannot write " + path.string());
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index t = 0; t < rows.size(); ++t) {
    for (Index c = 0; c < rows.dim(); ++c) os << (c ? "," : "") << rows(t, c);
    os << '\n';
  }
}

DatedSeries read_dated_csv(std::istream& in) {
  DatedSeries out;
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty CSV");
  auto header = split_commas(line);
  if (header.size() < 2) throw CsvError("dated CSV needs a date column and at least one value column");
  out.header.assign(header.begin() + 1, header.end());
  const auto d = static_cast<Index>(out.header.size());
  out.values = Series(d);
  Eigen::VectorXd row(d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (static_cast<Index>(cells.size()) != d + 1) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) + " columns");
    }
    if (!is_iso_date(cells[0])) throw CsvError("line " + std::to_string(line_no) + ": bad date '" + cells[0] + "'");
    if (!out.dates.empty() && !(out.dates.back() < cells[0])) {
      throw CsvError("line " + std::to_string(line_no) + ": dates are not strictly increasing");
    }
    out.dates.push_back(cells[0]);
    for (Index c = 0; c < d; ++c) row[c] = parse_cell(cells[static_cast<std::size_t>(c + 1)], line_no);
    out.values.append(row);
  }
  return out;
}

DatedSeries read_dated_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_dated_csv(in);
}

DatedSeries to_log_returns(const DatedSeries& prices) {
  DatedSeries out;
  out.header = prices.header;
  const Index d = prices.values.dim();
  out.values = Series(d);
  Eigen::VectorXd row(d);
  for (Index t = 1; t < prices.values.size(); ++t) {
    for (Index c = 0; c < d; ++c) {
      const double a = prices.values(t - 1, c), b = prices.values(t, c);
      if (!(a > 0.0 && b > 0.0)) throw CsvError("log-returns need positive prices (row " + std::to_string(t + 1) + ")");
      row[c] = std::log(b / a);
    }
    out.values.append(row);
    out.dates.push_back(prices.dates[static_cast<std::size_t>(t)]);
  }
  return out;
}

}  // namespace seqmon
