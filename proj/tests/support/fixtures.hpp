#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "wavesmooth/analysis.hpp"

#ifndef WAVESMOOTH_SOURCE_DIR
#error "WAVESMOOTH_SOURCE_DIR must be defined by the build"
#endif

namespace fixtures {

inline std::string path(const std::string& relative) { return std::string(WAVESMOOTH_SOURCE_DIR) + "/" + relative; }

inline std::string slurp(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open fixture " + file);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// The published percentage matrix as a VarianceGrid on the table axes.
inline wavesmooth::VarianceGrid table1_grid() {
  wavesmooth::VarianceGrid g;
  g.front = wavesmooth::table_front_axis();
  g.behind = wavesmooth::table_behind_axis();
  g.percent.resize(7, 7);
  std::ifstream in(path("tests/fixtures/table1_matrix.txt"));
  if (!in) throw std::runtime_error("cannot open table1_matrix.txt");
  std::string line;
  Eigen::Index r = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    for (Eigen::Index c = 0; c < 7; ++c) row >> g.percent(r, c);
    ++r;
  }
  if (r != 7) throw std::runtime_error("table1_matrix.txt must have 7 rows");
  return g;
}

}  // namespace fixtures
