#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "bugflow/ctmc.hpp"
#include "bugflow/filter.hpp"
#include "bugflow/predict.hpp"
#include "bugflow/stats.hpp"

namespace bugflow {

/// Column-oriented output shared by the CSV and line-delimited JSON writers,
/// so both formats always carry the same values.
struct Table {
  using Cell = std::variant<std::string, double, std::int64_t>;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

enum class OutputFormat { csv, structured };

OutputFormat parse_output_format(const std::string& text);

/// Numbers use "%.10g". Text cells containing a comma, quote or newline are
/// quoted.
void write_csv(const Table& t, std::ostream& out);
/// One JSON object per row, keys in column order.
void write_jsonl(const Table& t, std::ostream& out);
void write_table(const Table& t, OutputFormat format, std::ostream& out);

Table status_table(const StatusTable& s);
Table paths_table(const std::vector<PathCount>& paths);
Table transitions_table(const std::map<TransitionKey, DurationStat>& stats);
Table entities_table(const EntityImpact& impact);
Table self_assign_table(const SelfAssignment& s);
Table occupancy_table(const OccupancyCurve& c);
Table filter_report_table(const FilterReport& r);
Table node_table(const CtmcModel& model);
Table cdf_table(const std::vector<CdfPoint>& cdf);
Table eval_table(const std::map<ModelKind, EvalReport>& reports);

}  // namespace bugflow
