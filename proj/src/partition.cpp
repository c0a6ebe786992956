#include "safenet/partition.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace safenet {

namespace {

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

Vector vector_from_json(const nlohmann::json& j) {
  Vector v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = j.at(k).get<double>();
  return v;
}

}  // namespace

std::vector<Vector> Partition::seeds() const {
  std::vector<Vector> out;
  out.reserve(regions.size());
  for (const Region& r : regions) out.push_back(r.seed);
  return out;
}

nlohmann::json Partition::to_json() const {
  nlohmann::json cells = nlohmann::json::array();
  for (const Region& r : regions) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index l = 0; l < r.A.rows(); ++l) rows.push_back(vector_to_json(r.A.row(l).transpose()));
    cells.push_back(nlohmann::json{{"index", r.index},
                                   {"seed", vector_to_json(r.seed)},
                                   {"rows", std::move(rows)},
                                   {"offsets", vector_to_json(r.b)}});
  }
  return nlohmann::json{{"format", "safenet-partition-v1"},
                        {"model_fingerprint", to_hex(model_fingerprint)},
                        {"seed", seed},
                        {"regions", std::move(cells)}};
}

Partition Partition::from_json(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "safenet-partition-v1")
    throw std::invalid_argument("Partition::from_json: unknown format tag");
  Partition p;
  p.model_fingerprint = std::stoull(j.at("model_fingerprint").get<std::string>(), nullptr, 16);
  p.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& cell : j.at("regions")) {
    Region r;
    r.index = cell.at("index").get<int>();
    r.seed = vector_from_json(cell.at("seed"));
    r.b = vector_from_json(cell.at("offsets"));
    const auto& rows = cell.at("rows");
    r.A = Matrix(rows.size(), r.seed.size());
    for (std::size_t l = 0; l < rows.size(); ++l) r.A.row(static_cast<Eigen::Index>(l)) = vector_from_json(rows.at(l)).transpose();
    p.regions.push_back(std::move(r));
  }
  return p;
}

std::vector<Vector> sample_seeds(const NetworkModel& model, int count, Rng& rng) {
  if (count <= 0) throw std::invalid_argument("sample_seeds: count must be positive");
  std::vector<Vector> seeds;
  seeds.reserve(count);
  for (int k = 0; k < count; ++k) seeds.push_back(model.sample_state(rng));
  return seeds;
}

std::vector<Region> voronoi_cells(const std::vector<Vector>& seeds, const NetworkModel& model) {
  if (seeds.empty()) throw std::invalid_argument("voronoi_cells: need at least one seed");
  const int n = model.state_dim();
  for (const Vector& s : seeds) {
    if (s.size() != n) throw std::invalid_argument("voronoi_cells: seed dimension mismatch");
  }

  // Shared rows: sampling-box faces, then state-constraint rows per agent.
  int shared_rows = 2 * n;
  for (int i = 0; i < model.num_agents(); ++i) shared_rows += model.agent(i).state_set.rows();
  Matrix shared_A = Matrix::Zero(shared_rows, n);
  Vector shared_b(shared_rows);
  int row = 0;
  for (int d = 0; d < n; ++d) {
    shared_A(row, d) = 1.0;
    shared_b[row] = model.sampling_hi()[d];
    ++row;
    shared_A(row, d) = -1.0;
    shared_b[row] = -model.sampling_lo()[d];
    ++row;
  }
  for (int i = 0; i < model.num_agents(); ++i) {
    const PolytopicSet& set = model.agent(i).state_set;
    shared_A.middleRows(row, set.rows()) = set.A * model.W(i);
    shared_b.segment(row, set.rows()) = set.b;
    row += set.rows();
  }

  const int M = static_cast<int>(seeds.size());
  std::vector<Region> regions;
  regions.reserve(M);
  for (int l = 0; l < M; ++l) {
    Region r;
    r.index = l;
    r.seed = seeds[l];
    r.A = Matrix::Zero(M - 1 + shared_rows, n);
    r.b = Vector(M - 1 + shared_rows);
    int k = 0;
    for (int j = 0; j < M; ++j) {
      if (j == l) continue;
      // ||x - s_l|| <= ||x - s_j||  <=>  2 (s_j - s_l)ᵀ x <= |s_j|² - |s_l|²
      r.A.row(k) = 2.0 * (seeds[j] - seeds[l]).transpose();
      r.b[k] = seeds[j].squaredNorm() - seeds[l].squaredNorm();
      ++k;
    }
    r.A.middleRows(k, shared_rows) = shared_A;
    r.b.segment(k, shared_rows) = shared_b;
    if (!r.contains(r.seed, 1e-9)) {
      throw std::logic_error("voronoi_cells: cell " + std::to_string(l) + " does not contain its own seed");
    }
    regions.push_back(std::move(r));
  }
  return regions;
}

int locate(const Vector& x, const std::vector<Vector>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("locate: no seeds");
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    if (seeds[k].size() != x.size()) throw std::invalid_argument("locate: dimension mismatch");
    const double d = (x - seeds[k]).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

int locate(const Vector& x, const Partition& partition) { return locate(x, partition.seeds()); }

Partition make_partition(const NetworkModel& model, int count, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, 0x7061727469746eull);  // stream tag for partitioning
  Partition p;
  p.model_fingerprint = model.fingerprint();
  p.seed = seed;
  p.regions = voronoi_cells(sample_seeds(model, count, rng), model);
  return p;
}

}  // namespace safenet
