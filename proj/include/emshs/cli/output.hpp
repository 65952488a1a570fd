// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_CLI_OUTPUT_HPP
#define EMSHS_CLI_OUTPUT_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>
#include <json.hpp>
#include "emshs/common.hpp"
#include "emshs/krylov.hpp"

namespace emshs::cli
{

// Binary field dump: int64 dim, int64 nodes per axis, then (n^dim) complex doubles in
// lexicographic node order (x fastest).
inline void write_solution(const std::string &path, int dim, int nodes_per_axis,
                           const ComplexVector &u)
{
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), "cannot open '" + path + "' for writing");
  const std::int64_t header[2] = {dim, nodes_per_axis};
  out.write(reinterpret_cast<const char *>(header), sizeof(header));
  out.write(reinterpret_cast<const char *>(u.data()),
            static_cast<std::streamsize>(u.size() * sizeof(Complex)));
}

inline ComplexVector read_solution(const std::string &path, int *dim = nullptr,
                                   int *nodes_per_axis = nullptr)
{
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), "cannot open '" + path + "'");
  std::int64_t header[2] = {0, 0};
  in.read(reinterpret_cast<char *>(header), sizeof(header));
  Require(in.good() && (header[0] == 2 || header[0] == 3) && header[1] > 0,
          "'" + path + "' is not a solution file");
  std::int64_t n = 1;
  for (int d = 0; d < header[0]; d++)
  {
    n *= header[1];
  }
  ComplexVector u(n);
  in.read(reinterpret_cast<char *>(u.data()), static_cast<std::streamsize>(n * sizeof(Complex)));
  Require(in.gcount() == static_cast<std::streamsize>(n * sizeof(Complex)),
          "'" + path + "' is truncated");
  if (dim)
  {
    *dim = static_cast<int>(header[0]);
  }
  if (nodes_per_axis)
  {
    *nodes_per_axis = static_cast<int>(header[1]);
  }
  return u;
}

inline std::string format_double(double v, int digits = 6)
{
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

// key=value lines, one per field; the residual history goes on one comma-separated line.
inline std::string format_report(const SolveReport &r)
{
  std::ostringstream s;
  s << std::setprecision(17);
  s << "converged=" << (r.converged ? "true" : "false") << '\n';
  s << "iterations=" << r.iterations << '\n';
  s << "final_relative_residual=" << r.final_relative_residual << '\n';
  s << "restarts=" << r.restarts << '\n';
  s << "breakdown=" << (r.breakdown ? "true" : "false") << '\n';
  s << "growth_factor=" << r.growth_factor << '\n';
  s << "wall_time=" << r.wall_time << '\n';
  s << "message=" << r.message << '\n';
  s << "residual_history=";
  for (std::size_t i = 0; i < r.residual_history.size(); i++)
  {
    s << (i ? "," : "") << r.residual_history[i];
  }
  s << '\n';
  return s.str();
}

inline void write_text(const std::string &path, const std::string &text)
{
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), "cannot open '" + path + "' for writing");
  out << text;
}

inline void write_json(const std::string &path, const nlohmann::json &j)
{
  write_text(path, j.dump(2) + "\n");
}

inline void ensure_directory(const std::string &dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  Require(!ec, "cannot create output directory '" + dir + "': " + ec.message());
}

//
// A rectangular table of preformatted cells, written as CSV and as a Markdown pipe table.
//
struct Table
{
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row)
  {
    Require(row.size() == columns.size(), "table row has " + std::to_string(row.size()) +
                                              " cells, expected " + std::to_string(columns.size()));
    rows.push_back(std::move(row));
  }

  std::string csv() const
  {
    auto quote = [](const std::string &c)
    {
      if (c.find_first_of(",\"\n") == std::string::npos)
      {
        return c;
      }
      std::string q = "\"";
      for (char ch : c)
      {
        q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      }
      return q + "\"";
    };
    std::ostringstream s;
    for (std::size_t c = 0; c < columns.size(); c++)
    {
      s << (c ? "," : "") << quote(columns[c]);
    }
    s << '\n';
    for (const auto &row : rows)
    {
      for (std::size_t c = 0; c < row.size(); c++)
      {
        s << (c ? "," : "") << quote(row[c]);
      }
      s << '\n';
    }
    return s.str();
  }

  std::string markdown() const
  {
    std::ostringstream s;
    s << '|';
    for (const auto &c : columns)
    {
      s << ' ' << c << " |";
    }
    s << "\n|";
    for (std::size_t c = 0; c < columns.size(); c++)
    {
      s << "---|";
    }
    s << '\n';
    for (const auto &row : rows)
    {
      s << '|';
      for (const auto &c : row)
      {
        s << ' ' << c << " |";
      }
      s << '\n';
    }
    return s.str();
  }
};

// "1/40" for a grid size 1/n.
inline std::string inverse_label(int n) { return "1/" + std::to_string(n); }

}  // namespace emshs::cli

#endif  // EMSHS_CLI_OUTPUT_HPP
