#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace foliated {

/// Shortest round-trip decimal form, '.' separator, locale independent.
std::string format_double(double value);

std::vector<std::string> split_csv_line(std::string_view line);
double parse_double(std::string_view text);

/// Line-buffered CSV output: header row, ',' separators, '\n' terminators.
class CsvWriter
{
  public:
    CsvWriter(std::filesystem::path path, std::vector<std::string> header);

    CsvWriter& cell(double value);
    CsvWriter& cell(std::size_t value);
    CsvWriter& cell(std::string_view value);
    /// Terminate the row and flush, so partial results survive a failure.
    void end_row();

    std::filesystem::path const& path() const noexcept { return path_; }

  private:
    void separator();

    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

}  // namespace foliated
