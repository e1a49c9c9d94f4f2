#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bugflow/stats.hpp"
#include "bugflow/types.hpp"

namespace bugflow::testing {

inline Timestamp hours(double h) { return static_cast<Timestamp>(h * 3600.0 + (h >= 0 ? 0.5 : -0.5)); }

/// Bug that walks `states` in order, spending sojourn_hours[k] in states[k].
inline BugRecord walk(const std::string& id, const std::vector<std::string>& states,
                      const std::vector<double>& sojourn_hours, Timestamp created = 0,
                      const std::string& status = "Fixed") {
  BugRecord b;
  b.id = id;
  b.project = "P";
  b.subproject = "core";
  b.priority = 1;
  b.reporter_id = "r1";
  b.assignee_id = "a1";
  b.created_at = created;
  b.resolution_status = status;
  b.event_times.push_back(created);
  Timestamp now = created;
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    now += hours(sojourn_hours[k]);
    b.transitions.push_back({states[k], states[k + 1], now, "a1"});
    b.event_times.push_back(now);
  }
  b.last_update_at = now;
  return b;
}

/// Same as walk() with sojourns given in seconds.
inline BugRecord walk_seconds(const std::string& id, const std::vector<std::string>& states,
                              const std::vector<std::int64_t>& sojourn_seconds, Timestamp created = 0) {
  BugRecord b = walk(id, {states.front()}, {}, created);
  Timestamp now = created;
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    now += sojourn_seconds[k];
    b.transitions.push_back({states[k], states[k + 1], now, "a1"});
    b.event_times.push_back(now);
  }
  b.last_update_at = now;
  return b;
}

/// Small deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double real(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(v.size()) - 1))];
  }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Random walk over `states` starting at "Open" and ending at "Closed", with
/// sojourns of at least min_seconds.
inline BugRecord random_bug(Gen& g, const std::string& id, const std::vector<std::string>& states,
                            std::int64_t min_seconds = 1, std::int64_t max_seconds = 400 * 3600) {
  std::vector<std::string> path{"Open"};
  const auto steps = g.integer(0, 5);
  for (std::int64_t k = 0; k < steps; ++k) {
    std::string s;
    do {
      s = g.pick(states);
    } while (s == path.back() || s == "Closed" || s == "Open");
    path.push_back(s);
  }
  path.push_back("Closed");
  std::vector<std::int64_t> soj;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) soj.push_back(g.integer(min_seconds, max_seconds));
  auto b = walk_seconds(id, path, soj, g.integer(1500000000, 1600000000));
  b.priority = static_cast<int>(g.integer(1, 5));
  b.reporter_id = "r" + std::to_string(g.integer(1, 8));
  b.assignee_id = g.coin(0.1) ? std::string(kUnassigned) : "a" + std::to_string(g.integer(1, 8));
  return b;
}

/// Published ONAP priority-1 transition durations (hours) as DurationStat values.
inline std::map<TransitionKey, DurationStat> onap_table_stats() {
  struct Row {
    const char* from;
    const char* to;
    double mean;
    double median;
    std::size_t count;
  };
  static const Row rows[] = {
      {"Open", "Closed", 472.91, 73.2, 143},          {"Open", "In Progress", 159.01, 26.42, 545},
      {"Open", "Delivered", 361.15, 70.47, 85},       {"Delivered", "Closed", 73.98, 4.96, 618},
      {"Delivered", "Reopened", 77.86, 45.2, 48},     {"Reopened", "Delivered", 64.99, 30.85, 8},
      {"Reopened", "In Progress", 27.82, 15.16, 24},  {"Reopened", "Closed", 30.65, 15.04, 6},
      {"In Progress", "Submitted", 111.48, 25.8, 311}, {"In Progress", "Open", 342.76, 93.39, 21},
      {"In Progress", "Closed", 261.46, 21.37, 143},  {"In Progress", "Delivered", 37.31, 22.56, 31},
      {"Submitted", "Delivered", 80.93, 21.05, 278},  {"Submitted", "In Progress", 170.23, 27.92, 26},
  };
  std::map<TransitionKey, DurationStat> out;
  for (const auto& r : rows) out[{r.from, r.to}] = {r.mean, r.median, r.count};
  return out;
}

/// 715 priority-1 bugs realizing the published common-flow shares and the
/// Open -> Closed row (mean 472.91 h, median 73.2 h, 143 bugs) in whole seconds.
inline Corpus onap_flow_fixture() {
  struct Flow {
    std::vector<std::string> path;
    int count;
  };
  const std::vector<Flow> flows{
      {{"Open", "In Progress", "Closed"}, 179},
      {{"Open", "Closed"}, 143},
      {{"Open", "Delivered", "Closed"}, 79},
      {{"Open", "In Progress", "Submitted", "Delivered", "Closed"}, 64},
      {{"Open", "In Progress", "Delivered", "Closed"}, 57},
      {{"Open", "Submitted", "Closed"}, 50},
      {{"Open", "In Progress", "Submitted", "Closed"}, 50},
      {{"Open", "Delivered", "Reopened", "Closed"}, 31},
      {{"Open", "Delivered", "Reopened", "Delivered", "Closed"}, 31},
      {{"Open", "In Progress", "Submitted", "In Progress", "Closed"}, 31},
  };
  std::vector<std::int64_t> open_closed;
  for (std::int64_t i = 0; i < 71; ++i) open_closed.push_back(3600 + i);
  open_closed.push_back(263520);
  for (std::int64_t i = 0; i < 70; ++i) open_closed.push_back(300000 + 1000 * i);
  std::int64_t used = 0;
  for (auto v : open_closed) used += v;
  open_closed.push_back(143 * std::int64_t{1702476} - used);

  Corpus c;
  std::size_t direct = 0;
  for (const auto& f : flows) {
    for (int k = 0; k < f.count; ++k) {
      const auto id = "ONAP-" + std::to_string(c.size() + 1);
      std::vector<std::int64_t> soj;
      for (std::size_t s = 0; s + 1 < f.path.size(); ++s) soj.push_back(7200 + 600 * static_cast<std::int64_t>(s + k % 7));
      if (f.path.size() == 2) soj = {open_closed[direct++]};
      auto b = walk_seconds(id, f.path, soj, 1600000000 + 3600 * static_cast<Timestamp>(c.size()));
      b.project = "ONAP";
      b.reporter_id = "r" + std::to_string(c.size() % 9);
      b.assignee_id = "a" + std::to_string(c.size() % 7);
      c.push_back(b);
    }
  }
  return c;
}

}  // namespace bugflow::testing
