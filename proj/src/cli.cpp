#include "bugflow/cli.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "bugflow/ctmc.hpp"
#include "bugflow/filter.hpp"
#include "bugflow/ingest.hpp"
#include "bugflow/numeric.hpp"
#include "bugflow/predict.hpp"
#include "bugflow/report.hpp"
#include "bugflow/stats.hpp"
#include "bugflow/synth.hpp"

namespace bugflow::cli {

namespace {

struct Options {
  std::string profile;
  std::string workflow = "onap";
  std::string in;
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 0;

  // filter
  std::string filter_config;
  std::string report;
  std::vector<std::string> statuses;
  std::int64_t transient_seconds = -1;
  std::string outlier;
  int inactivity_days = 0;

  // stats
  std::vector<int> priorities;
  std::string role = "assignee";
  std::size_t top = 10;
  int order_priority = 1;
  std::string grid;

  // ctmc
  std::string model;
  std::size_t samples = 100000;

  // predict
  std::string kind;
  std::vector<std::string> kinds;
  std::size_t repeats = 10;
  std::string filter_variant = "none";
  std::size_t epochs = 200;
  std::size_t knn_k = 5;
  double train_fraction = 0.8;

  // synth
  std::string config;
  std::string truth;
  std::string ledger;
  std::size_t n_bugs = 0;
  bool seed_given = false;
};

std::string slurp(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  return slurp(f);
}

class Io {
 public:
  Io(const Options& o, std::istream& in, std::ostream& out) : opt_(o), in_(in), out_(out) {}

  std::istream& input() {
    if (opt_.in.empty() || opt_.in == "-") return in_;
    file_in_ = std::make_unique<std::ifstream>(opt_.in);
    if (!*file_in_) throw Error("cannot open " + opt_.in);
    return *file_in_;
  }

  std::ostream& output() {
    if (opt_.out.empty() || opt_.out == "-") return out_;
    if (!file_out_) {
      file_out_ = std::make_unique<std::ofstream>(opt_.out);
      if (!*file_out_) throw Error("cannot write " + opt_.out);
    }
    return *file_out_;
  }

  void finish() {
    if (file_out_) {
      file_out_->flush();
      if (!*file_out_) throw Error("error writing " + opt_.out);
    }
  }

 private:
  const Options& opt_;
  std::istream& in_;
  std::ostream& out_;
  std::unique_ptr<std::ifstream> file_in_;
  std::unique_ptr<std::ofstream> file_out_;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  return f;
}

ProjectProfile profile_of(const Options& o) {
  return o.profile.empty() ? default_profile(o.workflow) : load_profile(o.profile);
}

Corpus load_corpus(Io& io, const ProjectProfile& profile, std::ostream& err) {
  auto result = ingest(parse_export(io.input()), profile);
  if (!result.skipped.empty()) err << "skipped " << result.skipped.size() << " non-bug records\n";
  return std::move(result.bugs);
}

void write_corpus(const Corpus& corpus, const ProjectProfile& profile, std::ostream& out) {
  std::vector<RawIssueRecord> raw;
  raw.reserve(corpus.size());
  for (const auto& b : corpus) raw.push_back(to_raw_record(b, profile));
  serialize_export(raw, out);
}

OutputFormat format_of(const Options& o) { return parse_output_format(o.format); }

std::vector<double> grid_or(const Options& o, std::vector<double> fallback) {
  return o.grid.empty() ? fallback : parse_grid(o.grid);
}

std::vector<double> default_cdf_grid() {
  auto g = log_grid(0.1, 100000.0, 121);
  g.insert(g.begin(), 0.0);
  return g;
}

FilterConfig filter_config_of(const Options& o) {
  FilterConfig c = o.filter_config.empty() ? FilterConfig{} : parse_filter_config(read_file(o.filter_config));
  if (!o.statuses.empty()) c.allowed_statuses = {o.statuses.begin(), o.statuses.end()};
  if (o.transient_seconds >= 0) c.transient_threshold_seconds = o.transient_seconds;
  if (!o.outlier.empty()) c.outlier_mode = parse_outlier_mode(o.outlier);
  if (o.inactivity_days > 0) {
    c.inactivity_enabled = true;
    c.inactivity_gap_days = o.inactivity_days;
  }
  c.validate();
  return c;
}

CtmcModel model_of(const Options& o, Io& io, std::ostream& err) {
  if (!o.model.empty()) {
    std::ifstream f(o.model);
    if (!f) throw Error("cannot open " + o.model);
    return read_model(f);
  }
  const auto profile = profile_of(o);
  const auto corpus = load_corpus(io, profile, err);
  return build_dual_model(transition_duration_stats(corpus), profile.workflow);
}

void add_io(CLI::App* c, Options& o) {
  c->add_option("--in", o.in, "Input file (default stdin)");
  c->add_option("--out", o.out, "Output file (default stdout)");
}

void add_profile(CLI::App* c, Options& o) {
  c->add_option("--profile", o.profile, "Project profile JSON");
  c->add_option("--workflow", o.workflow, "Built-in workflow when no profile is given")->capture_default_str();
}

void add_format(CLI::App* c, Options& o) {
  c->add_option("--format", o.format, "csv or structured")
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "structured", "jsonl"}));
}

void add_seed(CLI::App* c, Options& o) {
  c->add_option("--seed", o.seed, "Random seed")->capture_default_str();
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  auto number = [&text](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError("bad grid '" + text + "'");
    return v;
  };
  auto fields = [](const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string f; std::getline(ss, f, sep);) out.push_back(f);
    return out;
  };
  const auto parts = fields(text, ':');
  if (parts.size() == 4 && (parts[0] == "log" || parts[0] == "lin")) {
    const double n = number(parts[3]);
    if (n < 2 || n != static_cast<int>(n)) throw UsageError("grid point count must be an integer >= 2");
    const double lo = number(parts[1]), hi = number(parts[2]);
    if (parts[0] == "log") {
      if (!(lo > 0.0 && hi > lo)) throw UsageError("log grid needs 0 < lo < hi");
      return log_grid(lo, hi, static_cast<int>(n));
    }
    if (!(hi > lo && lo >= 0.0)) throw UsageError("linear grid needs 0 <= lo < hi");
    return linear_grid(lo, hi, static_cast<int>(n));
  }
  std::vector<double> g;
  for (const auto& f : fields(text, ',')) g.push_back(number(f));
  if (g.empty()) throw UsageError("empty grid");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] < 0.0 || (i && g[i] < g[i - 1])) throw UsageError("grid must be non-negative and ascending");
  }
  return g;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Bug lifecycle analysis", "bugflow"};
  app.require_subcommand(1);
  std::function<void()> action;
  auto bind = [&action](CLI::App* c, std::function<void()> f) { c->callback([&action, f] { action = f; }); };
  Io io(o, in, out);

  // ingest
  {
    auto* c = app.add_subcommand("ingest", "Normalize an export into bug records");
    add_io(c, o);
    add_profile(c, o);
    bind(c, [&] {
      const auto profile = profile_of(o);
      auto result = ingest(parse_export(io.input()), profile);
      write_corpus(result.bugs, profile, io.output());
      err << "ingested " << result.bugs.size() << " bugs, skipped " << result.skipped.size() << " records\n";
    });
  }

  // filter
  {
    auto* c = app.add_subcommand("filter", "Clean histories and drop unusable bugs");
    add_io(c, o);
    add_profile(c, o);
    add_format(c, o);
    c->add_option("--config", o.filter_config, "Filter config JSON");
    c->add_option("--status", o.statuses, "Allowed resolution status (repeatable)");
    c->add_option("--transient-seconds", o.transient_seconds, "Transient-state threshold");
    c->add_option("--outlier", o.outlier, "none, mild or extreme")->check(CLI::IsMember({"none", "mild", "extreme"}));
    c->add_option("--inactivity-days", o.inactivity_days, "Enable the inactivity filter with this gap");
    c->add_option("--report", o.report, "Write the filter report here instead of stderr");
    bind(c, [&] {
      const auto profile = profile_of(o);
      const auto corpus = load_corpus(io, profile, err);
      const auto f = apply_configured_filters(corpus, filter_config_of(o), profile.workflow);
      write_corpus(f.corpus, profile, io.output());
      const auto t = filter_report_table(f.report);
      if (o.report.empty()) {
        write_table(t, format_of(o), err);
      } else {
        auto r = open_out(o.report);
        write_table(t, format_of(o), r);
      }
    });
  }

  // stats
  {
    auto* stats = app.add_subcommand("stats", "Descriptive statistics");
    stats->require_subcommand(1);
    auto leaf = [&](const char* name, const char* help, std::function<Table(const Corpus&, const ProjectProfile&)> f) {
      auto* c = stats->add_subcommand(name, help);
      add_io(c, o);
      add_profile(c, o);
      add_format(c, o);
      bind(c, [&, f] {
        const auto profile = profile_of(o);
        const auto corpus = load_corpus(io, profile, err);
        write_table(f(corpus, profile), format_of(o), io.output());
      });
      return c;
    };
    leaf("status-table", "Resolution status share per priority", [&](const Corpus& corpus, const ProjectProfile&) {
      std::set<int> p(o.priorities.begin(), o.priorities.end());
      if (p.empty()) p = {1, 2, 3, 4, 5};
      const auto s = resolution_status_table(corpus, p);
      for (const auto& w : s.warnings) err << "warning: " << w << '\n';
      return status_table(s);
    })->add_option("--priority", o.priorities, "Priority level (repeatable)");
    leaf("paths", "Path frequencies", [](const Corpus& corpus, const ProjectProfile& profile) {
      return paths_table(path_frequencies(corpus, profile.workflow.initial));
    });
    leaf("transitions", "Sojourn before each transition", [](const Corpus& corpus, const ProjectProfile&) {
      return transitions_table(transition_duration_stats(corpus));
    });
    auto* ent = leaf("entities", "Per-entity medians", [&](const Corpus& corpus, const ProjectProfile& profile) {
      const auto e = entity_impact(corpus, parse_entity_role(o.role), o.top, o.order_priority, profile.workflow.terminal);
      for (const auto& w : e.warnings) err << "warning: " << w << '\n';
      return entities_table(e);
    });
    ent->add_option("--role", o.role, "reporter or assignee")
        ->capture_default_str()
        ->check(CLI::IsMember({"reporter", "assignee"}));
    ent->add_option("--top", o.top, "Number of entities")->capture_default_str();
    ent->add_option("--order-priority", o.order_priority, "Priority used for ordering")->capture_default_str();
    leaf("self-assign", "Self-assigned versus other bugs", [&](const Corpus& corpus, const ProjectProfile& profile) {
      const auto s = self_assignment_comparison(corpus, profile.workflow.terminal);
      for (const auto& w : s.warnings) err << "warning: " << w << '\n';
      return self_assign_table(s);
    });
    leaf("occupancy", "State occupancy over time", [&](const Corpus& corpus, const ProjectProfile& profile) {
      return occupancy_table(occupancy_curve(corpus, grid_or(o, default_occupancy_grid()), profile.workflow.initial,
                                             profile.workflow.terminal));
    })->add_option("--grid", o.grid, "Time grid in hours");
  }

  // ctmc
  {
    auto* ctmc = app.add_subcommand("ctmc", "Dual-model Markov chain");
    ctmc->require_subcommand(1);
    auto leaf = [&](const char* name, const char* help) {
      auto* c = ctmc->add_subcommand(name, help);
      add_io(c, o);
      add_profile(c, o);
      return c;
    };
    auto* fit = leaf("fit", "Fitted nodes as a table");
    add_format(fit, o);
    bind(fit, [&] { write_table(node_table(model_of(o, io, err)), format_of(o), io.output()); });

    auto* exp = leaf("export", "Fitted model as JSON");
    bind(exp, [&] { write_model(model_of(o, io, err), io.output()); });

    auto* cdf = leaf("cdf", "Resolution-time CDF by uniformization");
    add_format(cdf, o);
    cdf->add_option("--model", o.model, "Model JSON (otherwise fitted from --in)");
    cdf->add_option("--grid", o.grid, "Time grid in hours");
    bind(cdf, [&] {
      const auto m = model_of(o, io, err);
      write_table(cdf_table(resolution_cdf(m, grid_or(o, default_cdf_grid()))), format_of(o), io.output());
    });

    auto* sim = leaf("simulate", "Resolution-time CDF by Monte Carlo");
    add_format(sim, o);
    add_seed(sim, o);
    sim->add_option("--model", o.model, "Model JSON (otherwise fitted from --in)");
    sim->add_option("--grid", o.grid, "Time grid in hours");
    sim->add_option("--samples", o.samples, "Simulated lifecycles")->capture_default_str();
    bind(sim, [&] {
      const auto m = model_of(o, io, err);
      const auto mc = monte_carlo_cdf(m, o.samples, o.seed, grid_or(o, default_cdf_grid()));
      write_table(cdf_table(mc.cdf), format_of(o), io.output());
      err << "sample mean " << format_number(mc.sample_mean_hours) << " h over " << mc.samples << " lifecycles\n";
    });
  }

  // predict
  {
    auto* pred = app.add_subcommand("predict", "Resolution-time predictors");
    pred->require_subcommand(1);
    auto leaf = [&](const char* name, const char* help) {
      auto* c = pred->add_subcommand(name, help);
      add_io(c, o);
      add_profile(c, o);
      return c;
    };
    const auto kKinds = CLI::IsMember({"knn", "naive_bayes", "nn_binary", "nn_regression"});
    auto nn_options = [&] {
      NnOptions n;
      n.epochs = o.epochs;
      n.seed = o.seed;
      return n;
    };

    auto* train = leaf("train", "Train one model on the whole corpus");
    add_seed(train, o);
    train->add_option("--kind", o.kind, "knn, naive_bayes, nn_binary or nn_regression")->required()->check(kKinds);
    train->add_option("--epochs", o.epochs, "Training epochs for networks")->capture_default_str();
    train->add_option("--knn-k", o.knn_k, "Neighbours for knn")->capture_default_str();
    bind(train, [&] {
      const auto profile = profile_of(o);
      const auto corpus = load_corpus(io, profile, err);
      std::set<std::string> ids;
      for (const auto& b : corpus) ids.insert(b.id);
      const auto data = encode_features(corpus, ids, profile.workflow.terminal);
      TrainedModel m;
      switch (parse_model_kind(o.kind)) {
        case ModelKind::knn: m = train_knn(data, o.knn_k); break;
        case ModelKind::naive_bayes: m = train_nb(data); break;
        case ModelKind::nn_binary: m = train_nn(data, NnMode::binary, nn_options()); break;
        case ModelKind::nn_regression: m = train_nn(data, NnMode::regression, nn_options()); break;
      }
      write_model_bundle(m, data.encoder, io.output());
    });

    auto* ev = leaf("eval", "Evaluate a trained model");
    add_format(ev, o);
    ev->add_option("--model", o.model, "Model bundle JSON")->required();
    bind(ev, [&] {
      std::ifstream f(o.model);
      if (!f) throw Error("cannot open " + o.model);
      const auto [model, encoder] = read_model_bundle(f);
      const auto profile = profile_of(o);
      const auto corpus = load_corpus(io, profile, err);
      Dataset test;
      test.encoder = encoder;
      for (const auto& b : corpus) test.examples.push_back({encode(b, encoder), resolution_time(b, profile.workflow.terminal), b.id});
      write_table(eval_table({{model.kind, evaluate(model, test)}}), format_of(o), io.output());
    });

    auto* cv = leaf("cv", "Repeated random-split evaluation");
    add_format(cv, o);
    add_seed(cv, o);
    cv->add_option("--kind", o.kinds, "Model kind (repeatable; default all)")->check(kKinds);
    cv->add_option("--repeats", o.repeats, "Number of random splits")->capture_default_str();
    cv->add_option("--filter-variant", o.filter_variant, "none, mild, extreme or inactivity")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "mild", "extreme", "inactivity"}));
    cv->add_option("--inactivity-days", o.inactivity_days, "Gap for the inactivity variant");
    cv->add_option("--epochs", o.epochs, "Training epochs for networks")->capture_default_str();
    cv->add_option("--knn-k", o.knn_k, "Neighbours for knn")->capture_default_str();
    cv->add_option("--train-fraction", o.train_fraction, "Training share of each split")->capture_default_str();
    bind(cv, [&] {
      const auto profile = profile_of(o);
      const auto corpus = load_corpus(io, profile, err);
      CvConfig cfg;
      cfg.repeats = o.repeats;
      if (!o.kinds.empty()) {
        cfg.kinds.clear();
        for (const auto& k : o.kinds) cfg.kinds.push_back(parse_model_kind(k));
      }
      cfg.filter_variant = parse_filter_variant(o.filter_variant);
      if (o.inactivity_days > 0) cfg.inactivity_gap_days = o.inactivity_days;
      cfg.train_fraction = o.train_fraction;
      cfg.base_seed = o.seed;
      cfg.knn_k = o.knn_k;
      cfg.nn.epochs = o.epochs;
      cfg.terminal = profile.workflow.terminal;
      write_table(eval_table(cross_validate(corpus, cfg)), format_of(o), io.output());
    });
  }

  // synth
  {
    auto* synth = app.add_subcommand("synth", "Synthetic corpora");
    synth->require_subcommand(1);
    auto* gen = synth->add_subcommand("generate", "Generate a corpus from a generator spec");
    gen->add_option("--config", o.config, "Generator spec JSON")->required();
    gen->add_option("--out", o.out, "Corpus output (default stdout)");
    gen->add_option("--truth", o.truth, "Write the ground-truth table here");
    gen->add_option("--n", o.n_bugs, "Override the number of bugs");
    gen->add_option("--seed", o.seed, "Override the generator seed")->each([&o](const std::string&) { o.seed_given = true; });
    bind(gen, [&] {
      auto spec = parse_generator_spec(read_file(o.config));
      if (o.seed_given) spec.seed = o.seed;
      if (o.n_bugs > 0) spec.n_bugs = o.n_bugs;
      const auto g = generate_corpus(spec);
      ProjectProfile profile = default_profile("standard");
      profile.workflow = spec.workflow;
      write_corpus(g.corpus, profile, io.output());
      if (!o.truth.empty()) {
        auto t = open_out(o.truth);
        write_truth_csv(g.truth, t);
      }
    });

    auto* inj = synth->add_subcommand("inject", "Add lifecycle noise to a clean corpus");
    add_io(inj, o);
    add_profile(inj, o);
    inj->add_option("--config", o.config, "Noise config JSON")->required();
    inj->add_option("--ledger", o.ledger, "Write the list of injections here");
    inj->add_option("--seed", o.seed, "Override the config seed")->each([&o](const std::string&) { o.seed_given = true; });
    bind(inj, [&] {
      auto cfg = parse_noise_config(read_file(o.config));
      if (o.seed_given) cfg.seed = o.seed;
      const auto profile = profile_of(o);
      const auto corpus = load_corpus(io, profile, err);
      const auto noisy = inject_noise(corpus, cfg, profile.workflow);
      write_corpus(noisy.corpus, profile, io.output());
      if (!o.ledger.empty()) {
        Table t{{"bug_id", "kind", "state", "at"}, {}};
        for (const auto& i : noisy.injections) t.add({i.bug_id, to_string(i.kind), i.state, std::int64_t{i.at}});
        auto l = open_out(o.ledger);
        write_csv(t, l);
      }
    });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!action) throw UsageError("no command given");
    action();
    io.finish();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace bugflow::cli
