#include "foliated/q_table.hpp"

#include "foliated/csv.hpp"
#include "foliated/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace foliated {

QTable::QTable(std::vector<Row> rows) : rows_(std::move(rows))
{
    if (rows_.size() < 2)
        throw PreconditionError("Q table needs at least two rows");
    for (std::size_t i = 1; i < rows_.size(); ++i)
        if (!(rows_[i].v > rows_[i - 1].v))
            throw PreconditionError("Q table grid must be strictly increasing in v");
}

Vec QTable::evaluate(Vec const& v) const
{
    if (v.size() != 1)
        throw PreconditionError("Q table interpolation is one-dimensional");
    double const x = v[0];
    if (rows_.empty() || x < rows_.front().v || x > rows_.back().v)
        throw ExtrapolationError("Q table queried at v = " + format_double(x)
                                 + " outside its grid");

    auto const upper = std::upper_bound(rows_.begin(), rows_.end(), x,
                                        [](double value, Row const& r) { return value < r.v; });
    Vec out(1);
    if (upper == rows_.end())
    {
        out[0] = rows_.back().q;
        return out;
    }
    auto const lower = std::prev(upper);
    double const w = (x - lower->v) / (upper->v - lower->v);
    out[0] = (1.0 - w) * lower->q + w * upper->q;
    return out;
}

std::string QTable::to_csv() const
{
    std::ostringstream os;
    os << "v,Q,std_error,horizon,reps\n";
    for (auto const& r : rows_)
        os << format_double(r.v) << ',' << format_double(r.q) << ',' << format_double(r.std_error)
           << ',' << format_double(r.horizon) << ',' << r.replications << '\n';
    return os.str();
}

QTable QTable::from_csv(std::string const& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line)
                                       != std::vector<std::string>{"v", "Q", "std_error",
                                                                   "horizon", "reps"})
        throw Error("Q table CSV must start with header v,Q,std_error,horizon,reps");

    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty())
            continue;
        auto const cells = split_csv_line(line);
        if (cells.size() != 5)
            throw Error("Q table CSV line " + std::to_string(line_no) + ": expected 5 columns");
        Row r;
        r.v = parse_double(cells[0]);
        r.q = parse_double(cells[1]);
        r.std_error = parse_double(cells[2]);
        r.horizon = parse_double(cells[3]);
        r.replications = static_cast<std::size_t>(parse_double(cells[4]));
        rows.push_back(r);
    }
    return QTable(std::move(rows));
}

QTable QTable::read(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read Q table " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_csv(buffer.str());
}

}  // namespace foliated
