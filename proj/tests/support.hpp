#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "vlodtta/linalg.hpp"

namespace test {

inline nlohmann::json fixture(const std::string& name) {
  std::ifstream in(std::string(VLODTTA_FIXTURE_DIR) + "/" + name);
  return nlohmann::json::parse(in);
}

inline vlodtta::Matrix to_matrix(const nlohmann::json& rows) {
  vlodtta::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.at(0).size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
  return m;
}

}  // namespace test
