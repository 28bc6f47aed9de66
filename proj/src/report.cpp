#include "patchnet/report.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/core.h>

#include "patchnet/error.hpp"

namespace patchnet {

namespace {

bool looks_numeric(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-';
  });
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(headers);
  for (const auto& r : rows) line(r);
  return out;
}

std::string Table::to_text() const {
  std::vector<std::size_t> width(headers.size(), 0);
  for (std::size_t c = 0; c < headers.size(); ++c) width[c] = headers[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) {
      width[c] = std::max(width[c], r[c].size());
    }
  }
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    std::string l;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) l += "  ";
      const std::size_t w = c < width.size() ? width[c] : cells[c].size();
      l += looks_numeric(cells[c]) ? fmt::format("{:>{}}", cells[c], w)
                                   : fmt::format("{:<{}}", cells[c], w);
    }
    while (!l.empty() && l.back() == ' ') l.pop_back();
    out += l + '\n';
  };
  line(headers);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  total += width.empty() ? 0 : 2 * (width.size() - 1);
  out += std::string(total, '-') + '\n';
  for (const auto& r : rows) line(r);
  return out;
}

Table parse_csv_table(const std::string& text) {
  Table t;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (header) {
      t.headers = std::move(cells);
      header = false;
    } else {
      if (cells.size() != t.headers.size()) {
        throw Error(ErrorKind::Parse,
                    fmt::format("csv row has {} cells, header has {}", cells.size(),
                                t.headers.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  if (header) throw Error(ErrorKind::Parse, "csv input is empty");
  return t;
}

MetricSelection parse_metric_selection(const std::string& tag) {
  if (tag == "r11") return MetricSelection::R11;
  if (tag == "r40") return MetricSelection::R40;
  if (tag == "both") return MetricSelection::Both;
  throw Error(ErrorKind::Parse,
              fmt::format("unknown metric '{}' (expected r11|r40|both)", tag));
}

std::string format_ap(std::optional<double> ap) {
  if (!ap) return "n/a";
  return fmt::format("{:.2f}", 100.0 * *ap);
}

Table ap_results_table(const std::string& label, const std::vector<ApResult>& results,
                       MetricSelection metrics) {
  Table t;
  t.headers = {"class", "kind", "iou_threshold", "difficulty", "metric", "value"};
  for (const ApResult& r : results) {
    auto push = [&](const char* metric, double value) {
      const std::optional<double> v =
          r.num_gt == 0 ? std::nullopt : std::optional<double>(value);
      t.rows.push_back({label, std::string(to_string(r.kind)),
                        fmt::format("{:.2f}", r.iou_threshold),
                        std::string(to_string(r.difficulty)), metric, format_ap(v)});
    };
    if (metrics != MetricSelection::R40) push("AP_R11", r.ap11);
    if (metrics != MetricSelection::R11) push("AP_R40", r.ap40);
  }
  return t;
}

}  // namespace patchnet
