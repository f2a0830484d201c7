#include "semshare/semantic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "semshare/errors.hpp"

namespace semshare {

void SemanticConfig::validate() const {
  if (!(bandwidth_hz > 0)) throw ConfigError("semantic: bandwidth_hz must be > 0");
  if (!(u_min >= 1)) throw ConfigError("semantic: u_min must be >= 1");
  if (!(u_max >= u_min)) throw ConfigError("semantic: u_max must be >= u_min");
  if (!(info_per_sentence_ratio > 0)) throw ConfigError("semantic: info_per_sentence_ratio must be > 0");
}

namespace {

void check_increasing(const std::vector<double>& g, const char* name) {
  if (g.empty()) throw ConfigError(std::string("similarity: empty ") + name + " grid");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) throw ConfigError(std::string("similarity: non-finite ") + name + " grid value");
    if (i > 0 && !(g[i] > g[i - 1])) {
      throw ConfigError(std::string("similarity: ") + name + " grid must be strictly increasing");
    }
  }
}

// Returns an empty string when the table is valid, otherwise a description
// with the (row, column) index of the first violation.
std::string find_violation(const std::vector<double>& xi, std::size_t rows, std::size_t cols,
                           std::size_t* bad_row, std::size_t* bad_col) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = xi[r * cols + c];
      *bad_row = r;
      *bad_col = c;
      if (!(v >= 0.0 && v <= 1.0)) return "value outside [0, 1]";
      if (c > 0 && v < xi[r * cols + c - 1]) return "decreasing in SINR";
      if (r > 0 && v < xi[(r - 1) * cols + c]) return "decreasing in u";
    }
  }
  return {};
}

std::size_t upper_cell(const std::vector<double>& grid, double x) {
  // Index i such that grid[i-1] <= x <= grid[i], i in [1, n-1].
  auto it = std::upper_bound(grid.begin(), grid.end(), x);
  std::size_t i = static_cast<std::size_t>(it - grid.begin());
  return std::clamp<std::size_t>(i, 1, grid.size() - 1);
}

}  // namespace

SimilarityModel::SimilarityModel(std::vector<double> u_grid, std::vector<double> sinr_grid_db,
                                 std::vector<double> xi)
    : u_grid_(std::move(u_grid)), sinr_grid_db_(std::move(sinr_grid_db)), xi_(std::move(xi)) {
  check_increasing(u_grid_, "u");
  check_increasing(sinr_grid_db_, "SINR");
  if (xi_.size() != u_grid_.size() * sinr_grid_db_.size()) {
    throw ConfigError("similarity: table size does not match the grids");
  }
  std::size_t r = 0;
  std::size_t c = 0;
  const std::string why = find_violation(xi_, u_grid_.size(), sinr_grid_db_.size(), &r, &c);
  if (!why.empty()) {
    throw ConfigError("similarity: " + why + " at u index " + std::to_string(r) + ", SINR index " +
                      std::to_string(c));
  }
}

double similarity(const SimilarityModel& model, double u, double sinr_db) {
  const auto& ug = model.u_grid();
  const auto& sg = model.sinr_grid_db();
  if (ug.empty()) throw UsageError("similarity: empty model");
  if (!(u >= ug.front() && u <= ug.back())) {
    throw DomainError("similarity: u = " + std::to_string(u) + " outside [" + std::to_string(ug.front()) +
                      ", " + std::to_string(ug.back()) + "]");
  }
  if (std::isnan(sinr_db)) throw DomainError("similarity: SINR is NaN");
  const double s = std::clamp(sinr_db, sg.front(), sg.back());

  double tu = 0.0;
  std::size_t u0 = 0;
  std::size_t u1 = 0;
  if (ug.size() > 1) {
    u1 = upper_cell(ug, u);
    u0 = u1 - 1;
    tu = (u - ug[u0]) / (ug[u1] - ug[u0]);
  }
  double ts = 0.0;
  std::size_t s0 = 0;
  std::size_t s1 = 0;
  if (sg.size() > 1) {
    s1 = upper_cell(sg, s);
    s0 = s1 - 1;
    ts = (s - sg[s0]) / (sg[s1] - sg[s0]);
  }
  const double v00 = model.at(u0, s0);
  const double v01 = model.at(u0, s1);
  const double v10 = model.at(u1, s0);
  const double v11 = model.at(u1, s1);
  const double v = (1 - tu) * ((1 - ts) * v00 + ts * v01) + tu * ((1 - ts) * v10 + ts * v11);
  return std::clamp(v, 0.0, 1.0);
}

double surrogate_similarity(const SurrogateParams& p, double u, double sinr_db) {
  const double saturation = 1.0 - std::exp2(-p.c * u);
  return saturation / (1.0 + std::exp(-p.a * (sinr_db - p.b)));
}

SimilarityModel default_similarity_model(const SurrogateParams& params, const SimilarityGrid& grid) {
  std::vector<double> ug;
  for (int i = 0;; ++i) {
    const double u = grid.u_min + i * grid.u_step;
    if (u > grid.u_max + 1e-9) break;
    ug.push_back(u);
  }
  std::vector<double> sg;
  for (int i = 0;; ++i) {
    const double s = grid.sinr_min_db + i * grid.sinr_step_db;
    if (s > grid.sinr_max_db + 1e-9) break;
    sg.push_back(s);
  }
  std::vector<double> xi;
  xi.reserve(ug.size() * sg.size());
  for (double u : ug) {
    for (double s : sg) xi.push_back(surrogate_similarity(params, u, s));
  }
  return SimilarityModel(std::move(ug), std::move(sg), std::move(xi));
}

double hsse(const SemanticConfig& cfg, double u, double xi) { return cfg.info_per_sentence_ratio / u * xi; }

double hsr(const SemanticConfig& cfg, double u, double xi) { return hsse(cfg, u, xi) * cfg.bandwidth_hz; }

double bit_equivalent_hsse(double sinr_linear, double u_bits, double ratio) {
  // xi = 1: no residual bit errors.
  return std::log2(1.0 + sinr_linear) * ratio / u_bits;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, const std::string& source, std::size_t line, std::size_t col) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": not a number: '" +
                      s + "'");
  }
  return v;
}

}  // namespace

SimilarityModel read_similarity_csv(std::istream& is, const std::string& source) {
  auto where = [&](std::size_t line, std::size_t col) {
    return source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": ";
  };
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> sg;
  std::vector<double> ug;
  std::vector<double> xi;
  std::vector<std::size_t> row_lines;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (sg.empty()) {
      if (cells.size() < 2) throw ConfigError(where(line_no, 1) + "header needs at least one SINR column");
      for (std::size_t c = 1; c < cells.size(); ++c) {
        sg.push_back(parse_cell(cells[c], source, line_no, c + 1));
        if (c > 1 && !(sg.back() > sg[sg.size() - 2])) {
          throw ConfigError(where(line_no, c + 1) + "SINR grid must be strictly increasing");
        }
      }
      continue;
    }
    if (cells.size() != sg.size() + 1) {
      throw ConfigError(where(line_no, 1) + "expected " + std::to_string(sg.size() + 1) + " columns, got " +
                        std::to_string(cells.size()));
    }
    ug.push_back(parse_cell(cells[0], source, line_no, 1));
    if (ug.size() > 1 && !(ug.back() > ug[ug.size() - 2])) {
      throw ConfigError(where(line_no, 1) + "u grid must be strictly increasing");
    }
    for (std::size_t c = 1; c < cells.size(); ++c) xi.push_back(parse_cell(cells[c], source, line_no, c + 1));
    row_lines.push_back(line_no);
  }
  if (sg.empty() || ug.empty()) throw ConfigError(source + ": similarity table is empty");

  std::size_t r = 0;
  std::size_t c = 0;
  const std::string why = find_violation(xi, ug.size(), sg.size(), &r, &c);
  if (!why.empty()) throw ConfigError(where(row_lines[r], c + 2) + why);
  return SimilarityModel(std::move(ug), std::move(sg), std::move(xi));
}

SimilarityModel load_similarity_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open similarity table '" + path + "'");
  return read_similarity_csv(in, path);
}

void write_similarity_csv(std::ostream& os, const SimilarityModel& model) {
  const auto old = os.precision(17);
  os << "u\\sinr_db";
  for (double s : model.sinr_grid_db()) os << ',' << s;
  os << '\n';
  for (std::size_t r = 0; r < model.u_grid().size(); ++r) {
    os << model.u_grid()[r];
    for (std::size_t c = 0; c < model.sinr_grid_db().size(); ++c) os << ',' << model.at(r, c);
    os << '\n';
  }
  os.precision(old);
}

}  // namespace semshare
