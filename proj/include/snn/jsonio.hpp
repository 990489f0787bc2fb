#pragma once

#include <json.hpp>

#include "snn/signal.hpp"

namespace snn {

using Json = nlohmann::json;

inline Json mat_to_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Mat json_to_mat(const Json& j) {
    if (!j.is_array() || j.empty()) throw IoError("json matrix: expected non-empty array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols)
            throw IoError("json matrix: ragged rows");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

inline Json vec_to_json(const Vec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Vec json_to_vec(const Json& j) {
    if (!j.is_array()) throw IoError("json vector: expected array");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

}  // namespace snn
