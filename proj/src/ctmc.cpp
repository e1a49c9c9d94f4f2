#include "bugflow/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"

namespace bugflow {

namespace {

std::string node_name(const DualNode& n) { return n.from_state + " -> " + n.to_state; }

}  // namespace

CtmcModel::CtmcModel(std::vector<DualNode> nodes, std::vector<std::vector<double>> routing,
                     std::vector<double> entry_distribution, std::string initial_state, std::string terminal_state)
    : nodes_(std::move(nodes)),
      routing_(std::move(routing)),
      entry_(std::move(entry_distribution)),
      initial_(std::move(initial_state)),
      terminal_(std::move(terminal_state)) {
  check();
}

void CtmcModel::check() const {
  const std::size_t m = nodes_.size();
  if (m == 0) throw ModelError("model has no nodes");
  if (routing_.size() != m || entry_.size() != m) throw ModelError("routing/entry size mismatch");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(nodes_[i].rate_per_hour > 0.0) || !std::isfinite(nodes_[i].rate_per_hour)) {
      throw ModelError("node " + node_name(nodes_[i]) + " has a non-positive or non-finite rate");
    }
    if (routing_[i].size() != m + 1) throw ModelError("routing row size mismatch");
    double sum = 0.0;
    for (double r : routing_[i]) {
      if (r < 0.0 || r > 1.0) throw ModelError("routing probability outside [0,1] at node " + node_name(nodes_[i]));
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ModelError("routing row of node " + node_name(nodes_[i]) + " does not sum to 1");
  }
  double entry_sum = 0.0;
  for (double p : entry_) {
    if (p < 0.0) throw ModelError("negative entry probability");
    entry_sum += p;
  }
  if (std::abs(entry_sum - 1.0) > 1e-12) throw ModelError("entry distribution does not sum to 1");

  // every node reachable from the entry nodes
  std::vector<bool> seen(m, false);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < m; ++i) {
    if (entry_[i] > 0.0) {
      seen[i] = true;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    for (std::size_t j = 0; j < m; ++j) {
      if (routing_[i][j] > 0.0 && !seen[j]) {
        seen[j] = true;
        queue.push_back(j);
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!seen[i]) throw ModelError("node " + node_name(nodes_[i]) + " is unreachable from the entry nodes");
  }

  // exit reachable from every node
  std::vector<bool> exits(m, false);
  for (std::size_t i = 0; i < m; ++i) exits[i] = routing_[i][m] > 0.0;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (exits[i]) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (routing_[i][j] > 0.0 && exits[j]) {
          exits[i] = changed = true;
          break;
        }
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!exits[i]) throw ModelError("destination unreachable from node " + node_name(nodes_[i]));
  }
}

std::vector<double> CtmcModel::initial_vector() const {
  std::vector<double> v(dimension(), 0.0);
  std::copy(entry_.begin(), entry_.end(), v.begin());
  return v;
}

CtmcModel build_dual_model(const std::map<TransitionKey, DurationStat>& stats, const WorkflowSpec& spec) {
  if (stats.empty()) throw ModelError("no transition statistics");
  std::vector<DualNode> nodes;
  std::map<std::string, double> out_count;
  bool reaches_terminal = false;
  for (const auto& [key, stat] : stats) {
    const auto& [from, to] = key;
    if (!spec.has_state(from) || !spec.has_state(to)) {
      throw ModelError("transition " + from + " -> " + to + " is not within workflow " + spec.name);
    }
    if (!(stat.mean_hours > 0.0) || !std::isfinite(stat.mean_hours)) {
      throw ModelError("transition " + from + " -> " + to + " has zero or undefined mean sojourn");
    }
    if (stat.count == 0) throw ModelError("transition " + from + " -> " + to + " has no observations");
    nodes.push_back({from, to, 1.0 / stat.mean_hours, stat.count, stat.mean_hours, stat.median_hours});
    out_count[from] += static_cast<double>(stat.count);
    reaches_terminal = reaches_terminal || to == spec.terminal;
  }
  if (!reaches_terminal) throw ModelError("no observed transition enters " + spec.terminal);

  const std::size_t m = nodes.size();
  std::vector<std::vector<double>> routing(m, std::vector<double>(m + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const std::string& via = nodes[i].to_state;
    if (via == spec.terminal) {
      routing[i][m] = 1.0;
      continue;
    }
    auto it = out_count.find(via);
    if (it == out_count.end()) {
      throw ModelError("destination unreachable from node " + node_name(nodes[i]) + ": no transitions leave " + via);
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (nodes[j].from_state == via) routing[i][j] = static_cast<double>(nodes[j].count) / it->second;
    }
  }

  std::vector<double> entry(m, 0.0);
  auto init = out_count.find(spec.initial);
  if (init == out_count.end()) throw ModelError("no observed transition leaves " + spec.initial);
  for (std::size_t j = 0; j < m; ++j) {
    if (nodes[j].from_state == spec.initial) entry[j] = static_cast<double>(nodes[j].count) / init->second;
  }
  return CtmcModel(std::move(nodes), std::move(routing), std::move(entry), spec.initial, spec.terminal);
}

Generator build_generator(const CtmcModel& model) {
  const std::size_t n = model.dimension();
  const std::size_t m = model.node_count();
  Generator g{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < m; ++i) {
    const double mu = model.nodes()[i].rate_per_hour;
    double out = 0.0;
    for (std::size_t j = 0; j <= m; ++j) {
      if (j == i) continue;
      g(i, j) = mu * model.routing(i, j);
      out += g(i, j);
    }
    g(i, i) = -out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += g(i, j);
    if (std::abs(sum) > 1e-12) throw ModelError("generator row " + std::to_string(i) + " does not sum to zero");
  }
  return g;
}

namespace {

double log_poisson(std::size_t k, double lambda_t) {
  return -lambda_t + static_cast<double>(k) * std::log(lambda_t) - std::lgamma(static_cast<double>(k) + 1.0);
}

// Smallest K with sum_{k<=K} Poisson(k; lt) >= 1 - tail.
std::size_t truncation_point(double lambda_t, double tail) {
  if (lambda_t == 0.0) return 0;
  const std::size_t cap = static_cast<std::size_t>(lambda_t + 60.0 * std::sqrt(lambda_t) + 200.0);
  double cumulative = 0.0;
  for (std::size_t k = 0; k <= cap; ++k) {
    cumulative += std::exp(log_poisson(k, lambda_t));
    if (1.0 - cumulative < tail) return k;
  }
  return cap;
}

}  // namespace

TransientSolution transient_solve(const Generator& q, const std::vector<double>& init,
                                  const std::vector<double>& grid_hours) {
  const std::size_t n = q.dimension;
  if (init.size() != n) throw ModelError("initial vector has wrong dimension");
  const double init_sum = std::accumulate(init.begin(), init.end(), 0.0);
  if (std::abs(init_sum - 1.0) > 1e-9) throw ModelError("initial vector does not sum to 1");
  for (std::size_t i = 0; i < grid_hours.size(); ++i) {
    if (grid_hours[i] < 0.0 || (i > 0 && grid_hours[i] < grid_hours[i - 1])) {
      throw ModelError("time grid must be ascending and non-negative");
    }
  }

  TransientSolution sol;
  sol.grid_hours = grid_hours;
  double max_exit = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_exit = std::max(max_exit, std::abs(q(i, i)));
  if (max_exit == 0.0) {
    sol.probabilities.assign(grid_hours.size(), init);
    return sol;
  }

  const double uniform_rate = 1.1 * max_exit;
  // M = I + Q / rate is a stochastic matrix
  std::vector<double> step(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) step[i * n + j] = q(i, j) / uniform_rate + (i == j ? 1.0 : 0.0);
  }

  std::vector<std::size_t> cut(grid_hours.size());
  std::size_t max_cut = 0;
  for (std::size_t g = 0; g < grid_hours.size(); ++g) {
    cut[g] = truncation_point(uniform_rate * grid_hours[g], kUniformizationTail);
    max_cut = std::max(max_cut, cut[g]);
  }

  sol.probabilities.assign(grid_hours.size(), std::vector<double>(n, 0.0));
  std::vector<double> v = init;  // init * M^k
  std::vector<double> next(n);
  for (std::size_t k = 0; k <= max_cut; ++k) {
    for (std::size_t g = 0; g < grid_hours.size(); ++g) {
      if (k > cut[g]) continue;
      const double lt = uniform_rate * grid_hours[g];
      const double w = lt == 0.0 ? (k == 0 ? 1.0 : 0.0) : std::exp(log_poisson(k, lt));
      if (w == 0.0) continue;
      auto& p = sol.probabilities[g];
      for (std::size_t i = 0; i < n; ++i) p[i] += w * v[i];
    }
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = v[i];
      if (vi == 0.0) continue;
      const double* row = &step[i * n];
      for (std::size_t j = 0; j < n; ++j) next[j] += vi * row[j];
    }
    v.swap(next);
  }
  return sol;
}

std::vector<CdfPoint> resolution_cdf(const CtmcModel& model, const std::vector<double>& grid_hours) {
  const auto sol = transient_solve(build_generator(model), model.initial_vector(), grid_hours);
  std::vector<CdfPoint> out;
  out.reserve(grid_hours.size());
  double running = 0.0;
  for (std::size_t g = 0; g < grid_hours.size(); ++g) {
    // clamp round-off so the reported CDF stays monotone and within [0,1]
    running = std::clamp(std::max(running, sol.probabilities[g][model.dst_index()]), 0.0, 1.0);
    out.push_back({grid_hours[g], running});
  }
  return out;
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t pick(const std::vector<double>& cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<double> cumulate(const std::vector<double>& p) {
  std::vector<double> c(p.size());
  std::partial_sum(p.begin(), p.end(), c.begin());
  return c;
}

}  // namespace

MonteCarloCdf monte_carlo_cdf(const CtmcModel& model, std::size_t n_samples, std::uint64_t seed,
                              const std::vector<double>& grid_hours) {
  if (n_samples == 0) throw ModelError("need at least one sample");
  const std::size_t m = model.node_count();
  const auto entry = cumulate(model.entry_distribution());
  std::vector<std::vector<double>> rows;
  rows.reserve(m);
  for (const auto& r : model.routing_rows()) rows.push_back(cumulate(r));

  constexpr std::size_t kMaxSteps = 1'000'000;
  std::vector<double> finish(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::mt19937_64 rng(seed + s);
    std::size_t node = pick(entry, unit_uniform(rng));
    double t = 0.0;
    for (std::size_t steps = 0;; ++steps) {
      if (steps == kMaxSteps) throw ModelError("sample did not reach the destination");
      t += -std::log1p(-unit_uniform(rng)) / model.nodes()[node].rate_per_hour;
      node = pick(rows[node], unit_uniform(rng));
      if (node == m) break;
    }
    finish[s] = t;
  }

  MonteCarloCdf out;
  out.samples = n_samples;
  out.sample_mean_hours = std::accumulate(finish.begin(), finish.end(), 0.0) / static_cast<double>(n_samples);
  std::sort(finish.begin(), finish.end());
  for (double t : grid_hours) {
    const auto done = std::upper_bound(finish.begin(), finish.end(), t) - finish.begin();
    out.cdf.push_back({t, static_cast<double>(done) / static_cast<double>(n_samples)});
  }
  return out;
}

double mean_resolution_by_quadrature(const CtmcModel& model) {
  double slowest_mean = 0.0;
  for (const auto& n : model.nodes()) slowest_mean = std::max(slowest_mean, 1.0 / n.rate_per_hour);
  double horizon = 20.0 * slowest_mean;
  constexpr int kIntervals = 4000;  // even, for Simpson
  for (int attempt = 0; attempt < 40; ++attempt, horizon *= 2.0) {
    const auto cdf = resolution_cdf(model, {horizon});
    if (1.0 - cdf.front().probability > 1e-10) continue;
    std::vector<double> grid(kIntervals + 1);
    for (int i = 0; i <= kIntervals; ++i) grid[i] = horizon * i / kIntervals;
    const auto f = resolution_cdf(model, grid);
    const double h = horizon / kIntervals;
    double sum = 0.0;
    for (int i = 0; i <= kIntervals; ++i) {
      const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      sum += w * (1.0 - f[i].probability);
    }
    return sum * h / 3.0;
  }
  throw ModelError("survival function does not vanish; mean is not finite");
}

// ---------------------------------------------------------------------------
// model file

void write_model(const CtmcModel& model, std::ostream& out) {
  nlohmann::ordered_json j;
  j["format"] = "bugflow-ctmc";
  j["version"] = 1;
  j["initial"] = model.initial_state();
  j["terminal"] = model.terminal_state();
  j["dst_index"] = model.dst_index();
  auto& nodes = j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : model.nodes()) {
    nlohmann::ordered_json node;
    node["from"] = n.from_state;
    node["to"] = n.to_state;
    node["rate_per_hour"] = n.rate_per_hour;
    node["count"] = n.count;
    node["mean_hours"] = n.mean_hours;
    node["median_hours"] = n.median_hours;
    nodes.push_back(std::move(node));
  }
  auto& routing = j["routing"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < model.node_count(); ++i) {
    for (std::size_t k = 0; k <= model.node_count(); ++k) {
      if (model.routing(i, k) > 0.0) routing.push_back({i, k, model.routing(i, k)});
    }
  }
  j["entry"] = model.entry_distribution();
  out << j.dump(2) << '\n';
}

CtmcModel read_model(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.value("format", "") != "bugflow-ctmc") throw ModelError("not a bugflow-ctmc model file");
    if (j.value("version", 0) != 1) throw ModelError("unsupported model version");
    std::vector<DualNode> nodes;
    for (const auto& n : j.at("nodes")) {
      nodes.push_back({n.at("from").get<std::string>(), n.at("to").get<std::string>(),
                       n.at("rate_per_hour").get<double>(), n.value("count", std::size_t{0}),
                       n.value("mean_hours", 0.0), n.value("median_hours", 0.0)});
    }
    const std::size_t m = nodes.size();
    std::vector<std::vector<double>> routing(m, std::vector<double>(m + 1, 0.0));
    for (const auto& r : j.at("routing")) {
      const auto i = r.at(0).get<std::size_t>();
      const auto k = r.at(1).get<std::size_t>();
      if (i >= m || k > m) throw ModelError("routing index out of range");
      routing[i][k] = r.at(2).get<double>();
    }
    auto entry = j.at("entry").get<std::vector<double>>();
    return CtmcModel(std::move(nodes), std::move(routing), std::move(entry), j.value("initial", "Open"),
                     j.value("terminal", "Closed"));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace bugflow
