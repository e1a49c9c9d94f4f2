#include "bugflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "bugflow/ingest.hpp"
#include "bugflow/numeric.hpp"
#include "json.hpp"

namespace bugflow {

using nlohmann::json;

namespace {

// Distribution helpers written out by hand so streams are identical across
// standard library implementations.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::size_t pick_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(pick_index(rng, static_cast<std::size_t>(hi - lo + 1)));
}

double sample(const Sojourn& s, std::mt19937_64& rng) {
  if (s.kind == Sojourn::Kind::exponential) return -std::log1p(-uniform01(rng)) / s.rate_per_hour;
  return std::exp(s.mu + s.sigma * standard_normal(rng));
}

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

double Sojourn::mean_hours() const {
  return kind == Kind::exponential ? 1.0 / rate_per_hour : std::exp(mu + 0.5 * sigma * sigma);
}

void GeneratorSpec::validate() const {
  bugflow::validate(workflow);
  auto bad = [](const std::string& what) { throw SpecError("generator spec: " + what); };
  if (n_bugs == 0) bad("n_bugs must be positive");
  if (min_sojourn_seconds < 0 || interarrival_seconds < 0) bad("negative time offset");
  if (!(self_assign_prob >= 0.0 && self_assign_prob <= 1.0)) bad("self_assign_prob outside [0, 1]");
  if (!(self_assign_multiplier > 0.0)) bad("self_assign_multiplier must be positive");
  if (!(comment_interval_hours >= 0.0)) bad("comment_interval_hours must be non-negative");
  double mix = 0.0;
  for (std::size_t p = 0; p < 5; ++p) {
    if (!(priority_mix[p] >= 0.0)) bad("negative priority_mix entry");
    if (!(priority_multiplier[p] > 0.0)) bad("priority multipliers must be positive");
    mix += priority_mix[p];
  }
  if (std::abs(mix - 1.0) > 1e-9) bad("priority_mix must sum to 1");
  for (const auto* list : {&reporters, &assignees, &subprojects}) {
    if (list->empty()) bad("entity lists must not be empty");
    for (const auto& e : *list) {
      if (!(e.multiplier > 0.0) || !std::isfinite(e.multiplier)) bad("multiplier of '" + e.id + "' must be positive");
    }
  }

  for (const auto& [from, row] : routing) {
    if (!workflow.has_state(from)) bad("routing from unknown state '" + from + "'");
    double sum = 0.0;
    for (const auto& [to, p] : row) {
      if (!workflow.has_state(to)) bad("routing to unknown state '" + to + "'");
      if (!(p >= 0.0)) bad("negative routing probability " + from + " -> " + to);
      if (p == 0.0) continue;
      if (from == to) bad("self-loop at '" + from + "'");
      if (!workflow.allows(from, to)) bad("transition " + from + " -> " + to + " not allowed by workflow");
      auto it = sojourn.find({from, to});
      if (it == sojourn.end()) bad("no sojourn law for " + from + " -> " + to);
      const auto& s = it->second;
      if (s.kind == Sojourn::Kind::exponential ? !(s.rate_per_hour > 0.0 && std::isfinite(s.rate_per_hour))
                                               : !(s.sigma >= 0.0 && std::isfinite(s.sigma) && std::isfinite(s.mu))) {
        bad("invalid sojourn law for " + from + " -> " + to);
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) bad("routing row '" + from + "' sums to " + format_number(sum));
  }

  // every state reachable from the initial one must itself reach the terminal
  std::set<std::string> reach{workflow.initial};
  std::deque<std::string> queue{workflow.initial};
  while (!queue.empty()) {
    const auto s = queue.front();
    queue.pop_front();
    if (s == workflow.terminal) continue;
    auto it = routing.find(s);
    if (it == routing.end()) bad("state '" + s + "' is reachable but has no routing row");
    for (const auto& [to, p] : it->second) {
      if (p > 0.0 && reach.insert(to).second) queue.push_back(to);
    }
  }
  if (!reach.count(workflow.terminal)) bad("terminal state unreachable from " + workflow.initial);
  std::set<std::string> reaches_end{workflow.terminal};
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& s : reach) {
      if (reaches_end.count(s)) continue;
      for (const auto& [to, p] : routing.at(s)) {
        if (p > 0.0 && reaches_end.count(to)) {
          reaches_end.insert(s);
          grew = true;
          break;
        }
      }
    }
  }
  for (const auto& s : reach) {
    if (!reaches_end.count(s)) bad("terminal state unreachable from '" + s + "'");
  }
}

namespace {

std::vector<SynthEntity> parse_entities(const json& j, std::uint64_t seed, std::uint64_t stream,
                                        const std::string& default_prefix) {
  std::vector<SynthEntity> out;
  if (j.is_array()) {
    for (const auto& e : j) {
      if (e.is_string()) {
        out.push_back({e.get<std::string>(), 1.0});
      } else {
        out.push_back({e.at("id").get<std::string>(), e.value("multiplier", 1.0)});
      }
    }
    return out;
  }
  const auto count = j.at("count").get<std::size_t>();
  const auto prefix = j.value("prefix", default_prefix);
  const double lo = j.value("min_multiplier", 1.0);
  const double hi = j.value("max_multiplier", 1.0);
  if (!(lo > 0.0 && hi >= lo)) throw SpecError("generator spec: bad multiplier range for " + prefix);
  auto rng = seeded(seed, stream);
  for (std::size_t i = 0; i < count; ++i) {
    const double m = lo * std::pow(hi / lo, uniform01(rng));
    out.push_back({prefix + std::to_string(i + 1), m});
  }
  return out;
}

Sojourn parse_sojourn(const json& j) {
  Sojourn s;
  const auto dist = j.value("dist", std::string("exponential"));
  if (dist == "exponential") {
    s.kind = Sojourn::Kind::exponential;
    if (j.contains("rate")) {
      s.rate_per_hour = j.at("rate").get<double>();
    } else {
      s.rate_per_hour = 1.0 / j.at("mean_hours").get<double>();
    }
  } else if (dist == "lognormal") {
    s.kind = Sojourn::Kind::lognormal;
    s.sigma = j.at("sigma").get<double>();
    if (j.contains("mu")) {
      s.mu = j.at("mu").get<double>();
    } else {
      s.mu = std::log(j.at("median_hours").get<double>());
    }
  } else {
    throw SpecError("generator spec: unknown sojourn distribution '" + dist + "'");
  }
  return s;
}

template <std::size_t N>
std::array<double, N> fixed_array(const json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != N) throw SpecError(std::string("generator spec: ") + what + " needs " + std::to_string(N) + " entries");
  std::array<double, N> a{};
  std::copy(v.begin(), v.end(), a.begin());
  return a;
}

}  // namespace

GeneratorSpec parse_generator_spec(std::string_view json_text) {
  GeneratorSpec s;
  try {
    const auto j = json::parse(json_text);
    if (!j.contains("workflow")) throw SpecError("generator spec: missing workflow");
    if (j.at("workflow").is_string()) {
      s.workflow = builtin_workflow(j.at("workflow").get<std::string>());
    } else {
      s.workflow = parse_profile(json{{"workflow", j.at("workflow")}}.dump()).workflow;
    }
    s.seed = j.value("seed", std::uint64_t{0});
    s.n_bugs = j.value("n_bugs", s.n_bugs);
    if (j.contains("routing_weights")) {
      s.routing = j.at("routing_weights").get<std::map<std::string, std::map<std::string, double>>>();
      for (auto& [from, row] : s.routing) {
        double total = 0.0;
        for (const auto& [to, w] : row) total += w;
        if (!(total > 0.0)) throw SpecError("generator spec: routing weights of '" + from + "' sum to zero");
        for (auto& [to, w] : row) w /= total;
      }
    } else {
      s.routing = j.at("routing").get<std::map<std::string, std::map<std::string, double>>>();
    }

    std::optional<Sojourn> fallback;
    if (j.contains("default_sojourn")) fallback = parse_sojourn(j.at("default_sojourn"));
    if (j.contains("sojourn")) {
      for (const auto& e : j.at("sojourn")) {
        s.sojourn[{e.at("from").get<std::string>(), e.at("to").get<std::string>()}] = parse_sojourn(e);
      }
    }
    if (fallback) {
      for (const auto& [from, row] : s.routing)
        for (const auto& [to, p] : row) s.sojourn.try_emplace({from, to}, *fallback);
    }

    s.reporters = parse_entities(j.at("reporters"), s.seed, 1, "reporter");
    s.assignees = parse_entities(j.at("assignees"), s.seed, 2, "assignee");
    if (j.contains("subprojects")) s.subprojects = parse_entities(j.at("subprojects"), s.seed, 3, "sub");
    s.self_assign_prob = j.value("self_assign_prob", s.self_assign_prob);
    s.self_assign_multiplier = j.value("self_assign_multiplier", s.self_assign_multiplier);
    if (j.contains("priority_mix")) s.priority_mix = fixed_array<5>(j.at("priority_mix"), "priority_mix");
    if (j.contains("priority_multipliers")) {
      s.priority_multiplier = fixed_array<5>(j.at("priority_multipliers"), "priority_multipliers");
    }
    s.min_sojourn_seconds = j.value("min_sojourn_seconds", s.min_sojourn_seconds);
    if (j.contains("start_time")) {
      const auto& t = j.at("start_time");
      s.start_time = t.is_string() ? parse_timestamp(t.get<std::string>()) : t.get<Timestamp>();
    }
    s.interarrival_seconds = j.value("interarrival_seconds", s.interarrival_seconds);
    s.comment_interval_hours = j.value("comment_interval_hours", s.comment_interval_hours);
    s.project = j.value("project", s.project);
    s.resolution_status = j.value("resolution_status", s.resolution_status);
  } catch (const json::exception& e) {
    throw SpecError(std::string("generator spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SpecError(std::string("generator spec: ") + e.what());
  }
  s.validate();
  return s;
}

Generated generate_corpus(const GeneratorSpec& spec) {
  spec.validate();
  constexpr std::size_t kMaxPathLength = 10000;
  Generated g;
  g.corpus.reserve(spec.n_bugs);
  g.truth.reserve(spec.n_bugs);
  for (std::size_t i = 0; i < spec.n_bugs; ++i) {
    auto rng = seeded(spec.seed, i);
    BugRecord bug;
    bug.id = spec.project + "-" + std::to_string(i + 1);
    bug.project = spec.project;
    bug.resolution_status = spec.resolution_status;
    bug.created_at = spec.start_time + static_cast<Timestamp>(i) * spec.interarrival_seconds;

    double u = uniform01(rng), acc = 0.0;
    int priority = 5;
    for (int p = 0; p < 5; ++p) {
      acc += spec.priority_mix[static_cast<std::size_t>(p)];
      if (u < acc) {
        priority = p + 1;
        break;
      }
    }
    bug.priority = priority;
    const auto& sub = spec.subprojects[pick_index(rng, spec.subprojects.size())];
    const auto& rep = spec.reporters[pick_index(rng, spec.reporters.size())];
    bug.subproject = sub.id;
    bug.reporter_id = rep.id;
    double mult = rep.multiplier * sub.multiplier * spec.priority_multiplier[static_cast<std::size_t>(priority - 1)];
    if (uniform01(rng) < spec.self_assign_prob) {
      bug.assignee_id = rep.id;
      mult *= spec.self_assign_multiplier;
    } else {
      const auto& a = spec.assignees[pick_index(rng, spec.assignees.size())];
      bug.assignee_id = a.id;
      mult *= a.multiplier;
    }

    TruthRow truth;
    truth.bug_id = bug.id;
    truth.speed_multiplier = mult;
    truth.path.push_back(spec.workflow.initial);
    Timestamp now = bug.created_at;
    bug.event_times.push_back(now);
    std::string state = spec.workflow.initial;
    while (state != spec.workflow.terminal) {
      if (truth.path.size() > kMaxPathLength) throw SpecError("generator spec: path exceeds " + std::to_string(kMaxPathLength) + " steps");
      const auto& row = spec.routing.at(state);
      u = uniform01(rng);
      acc = 0.0;
      std::string next;
      for (const auto& [to, p] : row) {
        if (p <= 0.0) continue;
        next = to;
        acc += p;
        if (u < acc) break;
      }
      const double hours = sample(spec.sojourn.at({state, next}), rng) * mult;
      const auto seconds = spec.min_sojourn_seconds + std::max<std::int64_t>(1, std::llround(hours * kSecondsPerHour));
      now += seconds;
      bug.transitions.push_back({state, next, now, bug.assignee_id});
      bug.event_times.push_back(now);
      truth.path.push_back(next);
      truth.sojourn_hours.push_back(seconds_to_hours(seconds));
      state = next;
    }
    if (spec.comment_interval_hours > 0.0) {
      const double rate = 1.0 / spec.comment_interval_hours;
      double t = static_cast<double>(bug.created_at);
      for (;;) {
        t += -std::log1p(-uniform01(rng)) / rate * kSecondsPerHour;
        const auto at = static_cast<Timestamp>(std::llround(t));
        if (at >= now) break;
        bug.event_times.push_back(at);
      }
      std::sort(bug.event_times.begin(), bug.event_times.end());
    }
    bug.last_update_at = now;
    truth.resolution_hours = seconds_to_hours(now - bug.created_at);
    g.corpus.push_back(std::move(bug));
    g.truth.push_back(std::move(truth));
  }
  return g;
}

void write_truth_csv(const std::vector<TruthRow>& truth, std::ostream& out) {
  out << "bug_id,path,speed_multiplier,resolution_hours,sojourn_hours\n";
  for (const auto& t : truth) {
    std::string path, soj;
    for (std::size_t k = 0; k < t.path.size(); ++k) path += (k ? "-" : "") + t.path[k];
    for (std::size_t k = 0; k < t.sojourn_hours.size(); ++k) soj += (k ? ";" : "") + format_number(t.sojourn_hours[k]);
    out << t.bug_id << ',' << path << ',' << format_number(t.speed_multiplier) << ','
        << format_number(t.resolution_hours) << ',' << soj << '\n';
  }
}

NoiseConfig parse_noise_config(std::string_view json_text) {
  NoiseConfig c;
  try {
    const auto j = json::parse(json_text);
    c.transient_fraction = j.value("transient_fraction", c.transient_fraction);
    c.undefined_fraction = j.value("undefined_fraction", c.undefined_fraction);
    c.loop_fraction = j.value("loop_fraction", c.loop_fraction);
    c.reopen_fraction = j.value("reopen_fraction", c.reopen_fraction);
    c.transient_threshold_seconds = j.value("transient_threshold_seconds", c.transient_threshold_seconds);
    c.undefined_state = j.value("undefined_state", c.undefined_state);
    c.reopen_state = j.value("reopen_state", c.reopen_state);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw SpecError(std::string("noise config: ") + e.what());
  }
  return c;
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::transient: return "transient";
    case NoiseKind::undefined_state: return "undefined_state";
    case NoiseKind::loop: return "loop";
    case NoiseKind::reopen_tail: return "reopen_tail";
  }
  return "?";
}

std::size_t NoisyCorpus::count(NoiseKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(injections.begin(), injections.end(), [kind](const Injection& i) { return i.kind == kind; }));
}

namespace {

struct Candidate {
  std::size_t interval;
  std::vector<std::string> fillers;  // transient only
};

// Bounded intervals long enough to be split so that every piece the pipeline
// should keep stays at or above the threshold.
std::vector<Candidate> candidates(const BugRecord& bug, NoiseKind kind, const NoiseConfig& cfg,
                                  const WorkflowSpec& wf) {
  std::vector<Candidate> out;
  const auto iv = extract_stage_intervals(bug, wf.initial);
  const std::int64_t thr = cfg.transient_threshold_seconds;
  for (std::size_t k = 0; k + 1 < iv.size(); ++k) {
    if (!iv[k].bounded() || *iv[k].exited_at - iv[k].entered_at < 2 * thr) continue;
    if (iv[k].state == wf.terminal) continue;
    Candidate c{k, {}};
    if (kind == NoiseKind::transient) {
      for (const auto& s : wf.states) {
        if (s != iv[k].state && s != iv[k + 1].state && s != wf.terminal) c.fillers.push_back(s);
      }
      if (c.fillers.empty()) continue;
    }
    out.push_back(std::move(c));
  }
  return out;
}

bool ends_at_terminal(const BugRecord& bug, const WorkflowSpec& wf) {
  if (bug.transitions.empty() || bug.transitions.back().to_state != wf.terminal) return false;
  return std::count_if(bug.transitions.begin(), bug.transitions.end(),
                       [&wf](const StateTransition& t) { return t.to_state == wf.terminal; }) == 1;
}

void add_event(BugRecord& bug, Timestamp t) {
  bug.event_times.insert(std::upper_bound(bug.event_times.begin(), bug.event_times.end(), t), t);
}

Injection apply(BugRecord& bug, NoiseKind kind, const Candidate* c, const NoiseConfig& cfg, std::mt19937_64& rng) {
  const std::int64_t thr = cfg.transient_threshold_seconds;
  if (kind == NoiseKind::reopen_tail) {
    const auto closed = bug.transitions.back();
    const Timestamp a = closed.at + uniform_int(rng, 3600, 240 * 3600);
    const Timestamp b = a + uniform_int(rng, 3600, 240 * 3600);
    bug.transitions.push_back({closed.to_state, cfg.reopen_state, a, closed.actor_id});
    bug.transitions.push_back({cfg.reopen_state, closed.to_state, b, closed.actor_id});
    add_event(bug, a);
    add_event(bug, b);
    bug.last_update_at = std::max(bug.last_update_at, b);
    return {bug.id, kind, cfg.reopen_state, a};
  }

  // interval k is left through transitions[k]
  const auto k = c->interval;
  const StateTransition exit = bug.transitions[k];
  const Timestamp entered = k == 0 ? bug.created_at : bug.transitions[k - 1].at;
  const std::string& state = exit.from_state;
  std::string inserted;
  Timestamp at = 0;
  switch (kind) {
    case NoiseKind::transient:
      inserted = c->fillers[pick_index(rng, c->fillers.size())];
      at = exit.at - uniform_int(rng, 1, thr - 1);
      break;
    case NoiseKind::undefined_state:
      inserted = cfg.undefined_state;
      at = uniform_int(rng, entered + 1, exit.at - 1);
      break;
    case NoiseKind::loop:
      inserted = state;
      at = uniform_int(rng, entered + thr, exit.at - thr);
      break;
    case NoiseKind::reopen_tail: break;
  }
  bug.transitions[k] = {state, inserted, at, exit.actor_id};
  bug.transitions.insert(bug.transitions.begin() + static_cast<std::ptrdiff_t>(k) + 1,
                         {inserted, exit.to_state, exit.at, exit.actor_id});
  add_event(bug, at);
  return {bug.id, kind, inserted, at};
}

}  // namespace

NoisyCorpus inject_noise(const Corpus& clean, const NoiseConfig& cfg, const WorkflowSpec& wf) {
  if (cfg.transient_threshold_seconds < 2) throw SpecError("noise config: threshold must be at least 2 seconds");
  if (wf.has_state(cfg.undefined_state)) {
    throw SpecError("noise config: undefined_state '" + cfg.undefined_state + "' is part of the workflow");
  }
  if (cfg.reopen_state == wf.terminal) throw SpecError("noise config: reopen_state must differ from the terminal");
  for (double f : {cfg.transient_fraction, cfg.undefined_fraction, cfg.loop_fraction, cfg.reopen_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) throw SpecError("noise config: fractions must lie in [0, 1]");
  }

  NoisyCorpus out{clean, {}};
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(clean.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> used(clean.size(), false);

  const std::pair<NoiseKind, double> plan[] = {{NoiseKind::transient, cfg.transient_fraction},
                                               {NoiseKind::undefined_state, cfg.undefined_fraction},
                                               {NoiseKind::loop, cfg.loop_fraction},
                                               {NoiseKind::reopen_tail, cfg.reopen_fraction}};
  for (const auto& [kind, fraction] : plan) {
    auto want = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(clean.size())));
    for (std::size_t i : order) {
      if (want == 0) break;
      if (used[i]) continue;
      BugRecord& bug = out.corpus[i];
      if (kind == NoiseKind::reopen_tail) {
        if (!ends_at_terminal(bug, wf)) continue;
        out.injections.push_back(apply(bug, kind, nullptr, cfg, rng));
      } else {
        const auto cands = candidates(bug, kind, cfg, wf);
        if (cands.empty()) continue;
        const auto& c = cands[pick_index(rng, cands.size())];
        out.injections.push_back(apply(bug, kind, &c, cfg, rng));
      }
      used[i] = true;
      --want;
    }
  }
  return out;
}

}  // namespace bugflow
