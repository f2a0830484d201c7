#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace semshare {

struct SemanticConfig {
  double bandwidth_hz = 1e6;  // per sub-band; also the symbol rate in HSR
  double u_min = 5.0;
  double u_max = 40.0;
  double info_per_sentence_ratio = 1.0;  // I / L

  void validate() const;
};

// Similarity table xi = Psi(u, SINR) on a rectangular grid. Rows are u values,
// columns SINR values in dB.
class SimilarityModel {
 public:
  SimilarityModel() = default;
  // Throws ConfigError unless the grids are strictly increasing, every value
  // lies in [0, 1] and the table is non-decreasing along both axes.
  SimilarityModel(std::vector<double> u_grid, std::vector<double> sinr_grid_db, std::vector<double> xi);

  const std::vector<double>& u_grid() const { return u_grid_; }
  const std::vector<double>& sinr_grid_db() const { return sinr_grid_db_; }
  const std::vector<double>& values() const { return xi_; }
  double at(std::size_t ui, std::size_t si) const { return xi_[ui * sinr_grid_db_.size() + si]; }
  double u_lo() const { return u_grid_.front(); }
  double u_hi() const { return u_grid_.back(); }

 private:
  std::vector<double> u_grid_;
  std::vector<double> sinr_grid_db_;
  std::vector<double> xi_;
};

// Bilinear interpolation; SINR clamps to the grid edges, u outside the grid
// is a DomainError.
double similarity(const SimilarityModel& model, double u, double sinr_db);

struct SurrogateParams {
  double a = 0.3;  // logistic slope per dB
  double b = 0.0;  // logistic midpoint, dB
  double c = 0.2;  // saturation rate in u
};

// (1 - 2^(-c u)) / (1 + exp(-a (sinr_db - b)))
double surrogate_similarity(const SurrogateParams& p, double u, double sinr_db);

struct SimilarityGrid {
  double u_min = 5.0;
  double u_max = 40.0;
  double u_step = 1.0;
  double sinr_min_db = -30.0;
  double sinr_max_db = 50.0;
  double sinr_step_db = 1.0;
};

SimilarityModel default_similarity_model(const SurrogateParams& params = {}, const SimilarityGrid& grid = {});

// Semantic transmission rate in suts/s: bandwidth * (I/L) / u * xi.
double hsr(const SemanticConfig& cfg, double u, double xi);
// Semantic spectral efficiency in suts/s/Hz: (I/L) / u * xi.
double hsse(const SemanticConfig& cfg, double u, double xi);
// Bit-based equivalent: log2(1 + sinr) * ratio / u_bits, with xi = 1.
double bit_equivalent_hsse(double sinr_linear, double u_bits, double ratio);

// CSV: header "u\sinr_db,<sinr_0>,...", then one row per u value.
SimilarityModel read_similarity_csv(std::istream& is, const std::string& source = "<stream>");
SimilarityModel load_similarity_csv(const std::string& path);
void write_similarity_csv(std::ostream& os, const SimilarityModel& model);

}  // namespace semshare
