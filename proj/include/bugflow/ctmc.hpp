#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bugflow/stats.hpp"
#include "bugflow/types.hpp"

namespace bugflow {

class ModelError : public Error {
 public:
  using Error::Error;
};

/// A workflow transition viewed as a CTMC state. The bug sits here for an
/// exponential time with rate `rate_per_hour`, then moves on.
struct DualNode {
  std::string from_state;
  std::string to_state;
  double rate_per_hour = 0.0;
  // Provenance kept for diagnostics; zero when unknown.
  std::size_t count = 0;
  double mean_hours = 0.0;
  double median_hours = 0.0;
};

/// Dual-model CTMC. Node i in [0, m) is nodes[i]; index m is the absorbing
/// destination. The source is not a state: a new bug starts directly in the
/// entry nodes according to entry_distribution.
class CtmcModel {
 public:
  CtmcModel(std::vector<DualNode> nodes, std::vector<std::vector<double>> routing,
            std::vector<double> entry_distribution, std::string initial_state = "Open",
            std::string terminal_state = "Closed");

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t dst_index() const { return nodes_.size(); }
  std::size_t dimension() const { return nodes_.size() + 1; }

  const std::vector<DualNode>& nodes() const { return nodes_; }
  /// routing(i, j) for node i and target j in [0, m]; j == m is the exit.
  double routing(std::size_t i, std::size_t j) const { return routing_[i][j]; }
  const std::vector<std::vector<double>>& routing_rows() const { return routing_; }
  const std::vector<double>& entry_distribution() const { return entry_; }
  const std::string& initial_state() const { return initial_; }
  const std::string& terminal_state() const { return terminal_; }

  /// Initial probability vector over all dimension() states.
  std::vector<double> initial_vector() const;

 private:
  void check() const;

  std::vector<DualNode> nodes_;
  std::vector<std::vector<double>> routing_;
  std::vector<double> entry_;
  std::string initial_;
  std::string terminal_;
};

/// One node per observed (from, to) pair with rate 1/mean sojourn, routing
/// from (i->j) to (j->k) by n_jk / sum_x n_jx, exit after every (i->terminal).
CtmcModel build_dual_model(const std::map<TransitionKey, DurationStat>& stats, const WorkflowSpec& spec);

/// Dense generator over the model's dimension(), rows indexed like the model.
struct Generator {
  std::size_t dimension = 0;
  std::vector<double> q;  // row-major

  double operator()(std::size_t i, std::size_t j) const { return q[i * dimension + j]; }
  double& operator()(std::size_t i, std::size_t j) { return q[i * dimension + j]; }
};

Generator build_generator(const CtmcModel& model);

struct TransientSolution {
  std::vector<double> grid_hours;
  std::vector<std::vector<double>> probabilities;  // one vector per grid point
};

inline constexpr double kUniformizationTail = 1e-12;

/// Uniformization with rate 1.1 * max |Q_ii|; each grid point's Poisson series
/// is cut once the remaining tail mass drops below kUniformizationTail.
TransientSolution transient_solve(const Generator& q, const std::vector<double>& init,
                                  const std::vector<double>& grid_hours);

struct CdfPoint {
  double t_hours = 0.0;
  double probability = 0.0;
};

std::vector<CdfPoint> resolution_cdf(const CtmcModel& model, const std::vector<double>& grid_hours);

struct MonteCarloCdf {
  std::vector<CdfPoint> cdf;
  double sample_mean_hours = 0.0;
  std::size_t samples = 0;
};

/// Simulates lifecycles through the model. Sample i draws from its own
/// generator seeded with seed + i, so the result is independent of scheduling.
MonteCarloCdf monte_carlo_cdf(const CtmcModel& model, std::size_t n_samples, std::uint64_t seed,
                              const std::vector<double>& grid_hours);

/// Mean resolution time as the integral of 1 - F(t), by composite Simpson
/// over a horizon where the survival probability is below 1e-10.
double mean_resolution_by_quadrature(const CtmcModel& model);

void write_model(const CtmcModel& model, std::ostream& out);
CtmcModel read_model(std::istream& in);

}  // namespace bugflow
