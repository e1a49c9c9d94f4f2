#include "bugflow/report.hpp"

#include <ostream>

#include "bugflow/numeric.hpp"
#include "json.hpp"

namespace bugflow {

namespace {

using Cell = Table::Cell;

std::string csv_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

Cell num(double v) { return v; }
Cell num(std::size_t v) { return static_cast<std::int64_t>(v); }
Cell num(int v) { return static_cast<std::int64_t>(v); }

}  // namespace

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw Error("table row has the wrong number of cells");
  rows.push_back(std::move(row));
}

OutputFormat parse_output_format(const std::string& text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "structured" || text == "jsonl") return OutputFormat::structured;
  throw Error("unknown format '" + text + "' (expected csv or structured)");
}

void write_csv(const Table& t, std::ostream& out) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << csv_text(t.columns[i]);
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_text(row[i]);
    out << '\n';
  }
}

void write_jsonl(const Table& t, std::ostream& out) {
  for (const auto& row : t.rows) {
    // numbers are emitted as the same decimal text the CSV writer produces
    std::string line = "{";
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += ',';
      line += nlohmann::json(t.columns[i]).dump() + ':';
      if (const auto* s = std::get_if<std::string>(&row[i])) {
        line += nlohmann::json(*s).dump();
      } else {
        const auto text = csv_text(row[i]);
        line += (text == "nan" || text == "inf" || text == "-inf") ? "null" : text;
      }
    }
    out << line << "}\n";
  }
}

void write_table(const Table& t, OutputFormat format, std::ostream& out) {
  if (format == OutputFormat::csv) {
    write_csv(t, out);
  } else {
    write_jsonl(t, out);
  }
}

Table status_table(const StatusTable& s) {
  Table t{{"priority", "status", "percent", "stratum_size"}, {}};
  for (const auto& [key, pct] : s.percent) {
    t.add({num(key.first), key.second, num(pct), num(s.stratum_size.at(key.first))});
  }
  return t;
}

Table paths_table(const std::vector<PathCount>& paths) {
  Table t{{"path", "count", "fraction"}, {}};
  for (const auto& p : paths) t.add({join_path(p.path), num(p.count), num(p.fraction)});
  return t;
}

Table transitions_table(const std::map<TransitionKey, DurationStat>& stats) {
  Table t{{"from", "to", "mean_hours", "median_hours", "count"}, {}};
  for (const auto& [key, d] : stats) t.add({key.first, key.second, num(d.mean_hours), num(d.median_hours), num(d.count)});
  return t;
}

Table entities_table(const EntityImpact& impact) {
  Table t{{"rank", "entity_id", "total_count", "priority", "count", "median_hours"}, {}};
  std::size_t rank = 0;
  for (const auto& e : impact.entities) {
    ++rank;
    for (const auto& [p, st] : e.per_priority) {
      t.add({num(rank), e.entity_id, num(e.total_count), num(p), num(st.count), num(st.median_hours)});
    }
  }
  return t;
}

Table self_assign_table(const SelfAssignment& s) {
  Table t{{"priority", "group", "count", "median_hours"}, {}};
  for (const auto& [p, groups] : s.groups)
    for (const auto& [g, st] : groups) t.add({num(p), g, num(st.count), num(st.median_hours)});
  return t;
}

Table occupancy_table(const OccupancyCurve& c) {
  Table t;
  t.columns.push_back("t_hours");
  for (const auto& [state, v] : c.per_state_fraction) t.columns.push_back(state);
  for (std::size_t i = 0; i < c.grid_hours.size(); ++i) {
    std::vector<Cell> row{num(c.grid_hours[i])};
    for (const auto& [state, v] : c.per_state_fraction) row.push_back(num(v[i]));
    t.add(std::move(row));
  }
  return t;
}

Table filter_report_table(const FilterReport& r) {
  Table t{{"metric", "value"}, {}};
  t.add({std::string("input_count"), num(r.input_count)});
  t.add({std::string("kept_count"), num(r.kept_count)});
  for (const auto& [rule, n] : r.removed_by_rule) t.add({"removed_" + rule, num(n)});
  t.add({std::string("truncated_tails"), num(r.truncated_tails)});
  t.add({std::string("dropped_undefined_states"), num(r.dropped_undefined_states)});
  t.add({std::string("merged_transient_states"), num(r.merged_transient_states)});
  t.add({std::string("merged_loops"), num(r.merged_loops)});
  return t;
}

Table node_table(const CtmcModel& model) {
  Table t{{"from", "to", "rate_per_hour", "mean_hours", "median_hours", "mean_median_ratio", "count", "entry_probability"},
          {}};
  for (std::size_t i = 0; i < model.node_count(); ++i) {
    const auto& n = model.nodes()[i];
    const double ratio = n.median_hours > 0.0 ? n.mean_hours / n.median_hours : 0.0;
    t.add({n.from_state, n.to_state, num(n.rate_per_hour), num(n.mean_hours), num(n.median_hours), num(ratio),
           num(n.count), num(model.entry_distribution()[i])});
  }
  return t;
}

Table cdf_table(const std::vector<CdfPoint>& cdf) {
  Table t{{"t_hours", "F"}, {}};
  for (const auto& p : cdf) t.add({num(p.t_hours), num(p.probability)});
  return t;
}

Table eval_table(const std::map<ModelKind, EvalReport>& reports) {
  Table t{{"model", "repeat", "accuracy", "median_normalized_error", "n_test"}, {}};
  auto err = [](const std::optional<double>& e) -> Cell { return e ? Cell(*e) : Cell(std::string()); };
  for (const auto& [kind, r] : reports) {
    for (std::size_t i = 0; i < r.per_repeat.size(); ++i) {
      const auto& rr = r.per_repeat[i];
      t.add({to_string(kind), std::to_string(i + 1), num(rr.accuracy), err(rr.median_normalized_error), num(rr.n_test)});
    }
    t.add({to_string(kind), std::string("mean"), num(r.accuracy), err(r.median_normalized_error), num(r.n_test)});
  }
  return t;
}

}  // namespace bugflow
