// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_CLI_RASTER_HPP
#define EMSHS_CLI_RASTER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>
#include "emshs/common.hpp"
#include "emshs/fem.hpp"

namespace emshs::cli
{

//
// Velocity raster text format:
//
//   # optional comment lines
//   dim nx ny [nz] omega
//   c_0 c_1 ...            (nx*ny[*nz] values, x fastest, any line breaks)
//
// Everything after '#' on a line is ignored.
//

class RasterParseError : public Error
{
public:
  RasterParseError(const std::string &source, int line, const std::string &what)
    : Error(source + ":" + std::to_string(line) + ": " + what), line_(line)
  {
  }
  int line() const { return line_; }

private:
  int line_;
};

namespace detail
{

struct Token
{
  std::string text;
  int line;
};

inline std::vector<Token> tokenize(std::istream &in)
{
  std::vector<Token> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    lineno++;
    if (auto hash = line.find('#'); hash != std::string::npos)
    {
      line.erase(hash);
    }
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok)
    {
      out.push_back({tok, lineno});
    }
  }
  return out;
}

inline double parse_number(const Token &t, const std::string &source)
{
  std::size_t used = 0;
  double v = 0.0;
  try
  {
    v = std::stod(t.text, &used);
  }
  catch (const std::exception &)
  {
    used = 0;
  }
  if (used != t.text.size())
  {
    throw RasterParseError(source, t.line, "expected a number, got '" + t.text + "'");
  }
  return v;
}

inline int parse_count(const Token &t, const std::string &source, const char *what)
{
  const double v = parse_number(t, source);
  if (v < 1.0 || v != std::floor(v) || v > std::numeric_limits<int>::max())
  {
    throw RasterParseError(source, t.line,
                           std::string(what) + " must be a positive integer, got '" + t.text + "'");
  }
  return static_cast<int>(v);
}

}  // namespace detail

inline VelocityRaster parse_velocity_raster(std::istream &in, const std::string &source = "<raster>")
{
  const auto tokens = detail::tokenize(in);
  if (tokens.empty())
  {
    throw RasterParseError(source, 1, "empty raster file (expected header 'dim nx ny [nz] omega')");
  }
  std::size_t pos = 0;
  VelocityRaster r;
  const auto &dtok = tokens[pos++];
  const double dim = detail::parse_number(dtok, source);
  if (dim != 2.0 && dim != 3.0)
  {
    throw RasterParseError(source, dtok.line, "dimension must be 2 or 3, got '" + dtok.text + "'");
  }
  r.dim = static_cast<int>(dim);
  const int header_line = dtok.line;
  for (int d = 0; d < r.dim; d++)
  {
    if (pos >= tokens.size() || tokens[pos].line != header_line)
    {
      throw RasterParseError(source, header_line, "truncated header: missing cell count for axis " +
                                                      std::to_string(d));
    }
    r.cells[d] = detail::parse_count(tokens[pos++], source, "cell count");
  }
  if (pos >= tokens.size() || tokens[pos].line != header_line)
  {
    throw RasterParseError(source, header_line, "truncated header: missing omega");
  }
  const auto &otok = tokens[pos++];
  r.omega = detail::parse_number(otok, source);
  if (!(r.omega > 0.0) || !std::isfinite(r.omega))
  {
    throw RasterParseError(source, otok.line, "omega must be positive, got '" + otok.text + "'");
  }
  if (pos < tokens.size() && tokens[pos].line == header_line)
  {
    throw RasterParseError(source, header_line, "unexpected extra header field '" +
                                                    tokens[pos].text + "'");
  }
  const std::size_t expected = static_cast<std::size_t>(r.num_cells());
  r.velocity.reserve(expected);
  while (pos < tokens.size())
  {
    const auto &t = tokens[pos++];
    if (r.velocity.size() == expected)
    {
      throw RasterParseError(source, t.line, "more than the " + std::to_string(expected) +
                                                 " velocities announced by the header");
    }
    const double c = detail::parse_number(t, source);
    if (!(c > 0.0) || !std::isfinite(c))
    {
      throw RasterParseError(source, t.line, "velocity must be positive, got '" + t.text + "'");
    }
    r.velocity.push_back(c);
  }
  if (r.velocity.size() != expected)
  {
    const int last = tokens.back().line;
    throw RasterParseError(source, last, "expected " + std::to_string(expected) +
                                             " velocities, found " +
                                             std::to_string(r.velocity.size()));
  }
  return r;
}

inline VelocityRaster read_velocity_raster(const std::string &path)
{
  std::ifstream in(path);
  Require(static_cast<bool>(in), "cannot open velocity raster '" + path + "'");
  return parse_velocity_raster(in, path);
}

inline void write_velocity_raster(std::ostream &out, const VelocityRaster &r)
{
  r.validate();
  out << r.dim;
  for (int d = 0; d < r.dim; d++)
  {
    out << ' ' << r.cells[d];
  }
  out << ' ' << std::setprecision(17) << r.omega << '\n';
  for (std::size_t i = 0; i < r.velocity.size(); i++)
  {
    out << r.velocity[i] << ((i + 1) % r.cells[0] == 0 ? '\n' : ' ');
  }
}

inline void write_velocity_raster(const std::string &path, const VelocityRaster &r)
{
  std::ofstream out(path);
  Require(static_cast<bool>(out), "cannot open '" + path + "' for writing");
  write_velocity_raster(out, r);
}

inline constexpr std::uint64_t fnv1a_offset = 14695981039346656037ull;

// 64-bit FNV-1a, continuing from `h`.
inline std::uint64_t fnv1a64(const void *data, std::size_t n, std::uint64_t h = fnv1a_offset)
{
  const auto *p = static_cast<const unsigned char *>(data);
  for (std::size_t i = 0; i < n; i++)
  {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

// FNV-1a over the header (as int32 dim, nx, ny, nz and double omega) and the raw velocities.
inline std::uint64_t raster_hash(const VelocityRaster &r)
{
  const std::int32_t head[4] = {r.dim, r.cells[0], r.cells[1], r.dim == 3 ? r.cells[2] : 1};
  std::uint64_t h = fnv1a64(head, sizeof(head));
  h = fnv1a64(&r.omega, sizeof(r.omega), h);
  return fnv1a64(r.velocity.data(), r.velocity.size() * sizeof(double), h);
}

inline std::string hex64(std::uint64_t v)
{
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

struct InclusionModel
{
  int dim = 2;
  int cells = 64;                 // raster cells per axis
  double omega = 20.0;
  double background = 1.0;
  double inclusion = 1.4;
  int count = 8;
  double min_size = 0.05;         // side length range, fraction of the unit cube
  double max_size = 0.25;
  std::uint64_t seed = 42;
};

//
// Random axis-aligned rectangular inclusions over a constant background. Uniform variates
// come straight from the 53 high bits of mt19937_64 so the field is identical on every
// standard library.
//
inline VelocityRaster generate_inclusion_model(const InclusionModel &m)
{
  Require(m.dim == 2 || m.dim == 3, "inclusion model: dimension must be 2 or 3");
  Require(m.cells >= 1 && m.count >= 0, "inclusion model: cells must be positive, count nonnegative");
  Require(m.background > 0.0 && m.inclusion > 0.0, "inclusion model: velocities must be positive");
  Require(0.0 < m.min_size && m.min_size <= m.max_size && m.max_size <= 1.0,
          "inclusion model: need 0 < min_size <= max_size <= 1");
  std::mt19937_64 rng(m.seed);
  auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  VelocityRaster r;
  r.dim = m.dim;
  r.omega = m.omega;
  r.cells = {m.cells, m.cells, m.dim == 3 ? m.cells : 1};
  r.velocity.assign(r.num_cells(), m.background);
  for (int n = 0; n < m.count; n++)
  {
    std::array<int, 3> lo = {0, 0, 0}, hi = {0, 0, 0};
    for (int d = 0; d < m.dim; d++)
    {
      const double size = m.min_size + (m.max_size - m.min_size) * uniform();
      const double start = (1.0 - size) * uniform();
      lo[d] = static_cast<int>(std::floor(start * m.cells));
      hi[d] = std::max(lo[d] + 1, static_cast<int>(std::ceil((start + size) * m.cells)));
      hi[d] = std::min(hi[d], m.cells);
    }
    const int zhi = m.dim == 3 ? hi[2] : 1;
    for (int z = lo[2]; z < zhi; z++)
    {
      for (int y = lo[1]; y < hi[1]; y++)
      {
        for (int x = lo[0]; x < hi[0]; x++)
        {
          r.velocity[(static_cast<std::size_t>(z) * m.cells + y) * m.cells + x] = m.inclusion;
        }
      }
    }
  }
  return r;
}

}  // namespace emshs::cli

#endif  // EMSHS_CLI_RASTER_HPP
