#pragma once

#include <optional>
#include <string>
#include <vector>

#include "patchnet/kitti_eval.hpp"

namespace patchnet {

struct Table {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
  /// Space-padded columns, left-aligned text and right-aligned numbers.
  std::string to_text() const;
};

/// Parses the CSV produced by Table::to_csv (no quoting).
Table parse_csv_table(const std::string& text);

enum class MetricSelection { R11, R40, Both };
MetricSelection parse_metric_selection(const std::string& tag);

/// Percentages with two decimals, "n/a" for a missing value.
std::string format_ap(std::optional<double> ap);

/// Long-form rows: class, kind, iou_threshold, difficulty, metric, value.
Table ap_results_table(const std::string& label, const std::vector<ApResult>& results,
                       MetricSelection metrics);

}  // namespace patchnet
