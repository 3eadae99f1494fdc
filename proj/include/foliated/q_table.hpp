#pragma once

#include "foliated/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace foliated {

/// Cached leafwise averages on a one-dimensional transversal grid.
class QTable
{
  public:
    struct Row
    {
        double v = 0.0;
        double q = 0.0;
        double std_error = 0.0;
        double horizon = 0.0;
        std::size_t replications = 0;
    };

    QTable() = default;
    explicit QTable(std::vector<Row> rows);

    std::vector<Row> const& rows() const noexcept { return rows_; }
    bool empty() const noexcept { return rows_.empty(); }

    /// Piecewise-linear interpolation; throws ExtrapolationError outside the grid.
    Vec evaluate(Vec const& v) const;

    /// CSV header: v,Q,std_error,horizon,reps
    std::string to_csv() const;
    static QTable from_csv(std::string const& text);
    static QTable read(std::filesystem::path const& path);

  private:
    std::vector<Row> rows_;
};

}  // namespace foliated
