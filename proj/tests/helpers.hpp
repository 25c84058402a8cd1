#pragma once

#include <string>
#include <vector>

#include "exalt/dataset.hpp"
#include "exalt/matrix.hpp"

inline exalt::Dataset make_ds(const std::vector<std::vector<double>>& rows) {
    exalt::Dataset ds;
    ds.features = exalt::Matrix::from_rows(rows);
    for (std::size_t j = 0; j < ds.dim(); ++j)
        ds.feature_names.push_back("f" + std::to_string(j));
    return ds;
}

inline std::vector<std::vector<double>> rows_of(const exalt::Dataset& ds) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < ds.n(); ++i) rows.push_back(ds.features.row_copy(i));
    return rows;
}

inline std::vector<std::vector<double>> rows_of(const exalt::Matrix& m) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row_copy(i));
    return rows;
}
