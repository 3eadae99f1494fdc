#include "foliated/csv.hpp"

#include "foliated/errors.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

namespace foliated {

std::string format_double(double value)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buffer[64];
    auto const [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{})
        throw Error("failed to format double");
    return std::string(buffer, end);
}

std::vector<std::string> split_csv_line(std::string_view line)
{
    if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;)
    {
        std::size_t const comma = line.find(',', start);
        cells.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return cells;
}

double parse_double(std::string_view text)
{
    while (!text.empty() && text.front() == ' ')
        text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ')
        text.remove_suffix(1);
    double value = 0.0;
    auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error("not a number: '" + std::string(text) + "'");
    return value;
}

CsvWriter::CsvWriter(std::filesystem::path path, std::vector<std::string> header)
    : path_(std::move(path)), out_(path_, std::ios::binary | std::ios::trunc), columns_(header.size())
{
    if (!out_)
        throw Error("cannot open " + path_.string() + " for writing");
    for (auto const& name : header)
        cell(std::string_view(name));
    end_row();
}

void CsvWriter::separator()
{
    if (filled_++ > 0)
        out_ << ',';
}

CsvWriter& CsvWriter::cell(double value)
{
    separator();
    out_ << format_double(value);
    return *this;
}

CsvWriter& CsvWriter::cell(std::size_t value)
{
    separator();
    out_ << value;
    return *this;
}

CsvWriter& CsvWriter::cell(std::string_view value)
{
    separator();
    out_ << value;
    return *this;
}

void CsvWriter::end_row()
{
    if (filled_ != columns_)
        throw Error("CSV row has " + std::to_string(filled_) + " cells, expected "
                    + std::to_string(columns_));
    out_ << '\n';
    out_.flush();
    filled_ = 0;
}

}  // namespace foliated
