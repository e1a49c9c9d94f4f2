#pragma once

#include <span>
#include <string>
#include <vector>

namespace bugflow {

/// Middle order statistic for odd counts, mean of the two middle ones for
/// even counts. Throws std::invalid_argument on empty input.
double median(std::vector<double> values);

/// Linear-interpolation quantile on the sorted sample (h = (n-1)p).
double quantile_sorted(std::span<const double> sorted, double p);

double mean(std::span<const double> values);

/// n points spaced logarithmically in [lo, hi], inclusive.
std::vector<double> log_grid(double lo, double hi, int n);
std::vector<double> linear_grid(double lo, double hi, int n);

/// printf "%.10g"; the text form used in every CSV and structured record.
std::string format_number(double v);

}  // namespace bugflow
