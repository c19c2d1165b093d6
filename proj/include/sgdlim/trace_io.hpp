#pragma once

// Trace CSV schema shared by every simulator:
//
//   t,f,seed,n,d,gamma,beta,model
//
// one row per recorded time, floats at 17 significant digits so values
// round-trip exactly. beta is 0 for the diffusion baselines, where no batch
// size exists.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdlim/sgd.hpp"

namespace sgdlim::trace_io {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_trace_csv(const std::string& path, const sgd::Trace& tr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace_io: cannot open " + path);
  out << "t,f,seed,n,d,gamma,beta,model\n";
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    out << fmt17(tr.times[i]) << ',' << fmt17(tr.values[i]) << ',' << tr.meta.seed << ','
        << tr.meta.n << ',' << tr.meta.d << ',' << fmt17(tr.meta.gamma) << ',' << tr.meta.beta
        << ',' << tr.meta.model << '\n';
  if (!out) throw std::runtime_error("trace_io: write failed on " + path);
}

inline sgd::Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace_io: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "t,f,seed,n,d,gamma,beta,model")
    throw std::runtime_error("trace_io: bad header in " + path);
  sgd::Trace tr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw std::runtime_error("trace_io: bad row in " + path);
    tr.times.push_back(std::stod(cells[0]));
    tr.values.push_back(std::stod(cells[1]));
    tr.meta.seed = std::stoull(cells[2]);
    tr.meta.n = std::stoi(cells[3]);
    tr.meta.d = std::stoi(cells[4]);
    tr.meta.gamma = std::stod(cells[5]);
    tr.meta.beta = std::stoi(cells[6]);
    tr.meta.model = cells[7];
  }
  return tr;
}

} // namespace sgdlim::trace_io
