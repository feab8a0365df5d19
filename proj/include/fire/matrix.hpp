#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fire {

/// Dense N x n matrix of per-document ratings, stored by rater column.
/// Row order is corpus order.
struct RatingMatrix {
    std::vector<std::string> rater_ids;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    std::size_t cols() const { return columns.size(); }
    double at(std::size_t row, std::size_t col) const { return columns[col][row]; }

    std::vector<double> row(std::size_t i) const {
        std::vector<double> out(cols());
        for (std::size_t j = 0; j < cols(); ++j) out[j] = columns[j][i];
        return out;
    }

    RatingMatrix select_rows(std::span<const std::size_t> rows_to_keep) const {
        RatingMatrix out;
        out.rater_ids = rater_ids;
        out.columns.resize(cols());
        for (std::size_t j = 0; j < cols(); ++j) {
            out.columns[j].reserve(rows_to_keep.size());
            for (auto r : rows_to_keep) out.columns[j].push_back(columns[j][r]);
        }
        return out;
    }

    RatingMatrix select_columns(std::span<const std::size_t> cols_to_keep) const {
        RatingMatrix out;
        for (auto c : cols_to_keep) {
            out.rater_ids.push_back(rater_ids[c]);
            out.columns.push_back(columns[c]);
        }
        return out;
    }
};

} // namespace fire
