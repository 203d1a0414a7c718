#pragma once

#include "seqmon/series.hpp"

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace seqmon {

/// Comma-separated file with a header row and numeric columns only.
struct NumericTable {
  std::vector<std::string> header;
  Series rows;
};

NumericTable read_numeric_csv(std::istream& in);
NumericTable read_numeric_csv(const std::filesystem::path& path);
void write_numeric_csv(const std::filesystem::path& path, const Series& rows, std::vector<std::string> header = {});

/// First column an ISO date (YYYY-MM-DD), remaining columns numeric. Dates
/// must be strictly increasing.
struct DatedSeries {
  std::vector<std::string> dates;
  std::vector<std::string> header;  // value columns
  Series values;
};

DatedSeries read_dated_csv(std::istream& in);
DatedSeries read_dated_csv(const std::filesystem::path& path);

/// ln(p_t / p_{t-1}) column by column; the first date is dropped. Prices must be positive.
DatedSeries to_log_returns(const DatedSeries& prices);

}  // namespace seqmon
