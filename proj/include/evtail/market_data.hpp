#pragma once

// Raw price ingestion, log returns and panel alignment.
//
// Input is delimiter-separated text with a header row: one date column
// (ISO-8601) followed by one column per market. Rows with unparsable dates
// or non-positive prices are rejected at load time.

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "evtail/numeric.hpp"

namespace evtail {

struct PriceSeries {
  std::string market_id;
  std::vector<std::string> dates;  // ISO-8601, strictly increasing
  std::vector<double> values;      // prices (positive) or returns
};

struct ReturnPanel {
  std::vector<std::string> market_ids;
  std::vector<std::string> dates;
  std::vector<std::vector<double>> returns;  // one inner vector per market

  std::size_t n_rows() const { return dates.size(); }
  std::size_t n_cols() const { return market_ids.size(); }
};

namespace detail {

inline bool valid_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  int m = (s[5] - '0') * 10 + (s[6] - '0');
  int d = (s[8] - '0') * 10 + (s[9] - '0');
  return m >= 1 && m <= 12 && d >= 1 && d <= 31;
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

inline std::string trim(std::string s) {
  auto sp = [](unsigned char c) { return std::isspace(c); };
  while (!s.empty() && sp(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && sp(s[i])) ++i;
  return s.substr(i);
}

}  // namespace detail

inline std::vector<PriceSeries> load_prices(std::istream& in, char delim = ',') {
  std::string line;
  if (!std::getline(in, line)) throw Error("load_prices: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = detail::split_line(line, delim);
  if (header.size() < 2) throw Error("load_prices: malformed header");
  for (auto& h : header) h = detail::trim(h);

  std::vector<PriceSeries> series(header.size() - 1);
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].empty()) throw Error("load_prices: malformed header");
    series[j - 1].market_id = header[j];
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty() || line[0] == '#') continue;
    std::vector<std::string> fields = detail::split_line(line, delim);
    if (fields.size() != header.size()) continue;  // ragged row: reject
    std::string date = detail::trim(fields[0]);
    if (!detail::valid_iso_date(date)) continue;  // unparsable date: reject
    std::vector<double> row(series.size());
    bool ok = true;
    for (std::size_t j = 0; j < series.size(); ++j) {
      try {
        row[j] = std::stod(fields[j + 1]);
      } catch (...) {
        ok = false;
        break;
      }
      if (!(row[j] > 0.0)) throw Error("non-positive price");
    }
    if (!ok) continue;
    for (std::size_t j = 0; j < series.size(); ++j) {
      if (!series[j].dates.empty() && date <= series[j].dates.back())
        throw Error("load_prices: non-monotone dates");
      series[j].dates.push_back(date);
      series[j].values.push_back(row[j]);
    }
  }
  if (series.empty() || series[0].dates.empty())
    throw Error("load_prices: empty series");
  return series;
}

// r_t = ln(P_t / P_{t-1}); drops the first observation.
inline PriceSeries log_returns(const PriceSeries& s, double scale = 1.0) {
  if (s.values.size() < 2) throw Error("log_returns: need at least 2 prices");
  PriceSeries out;
  out.market_id = s.market_id;
  out.dates.assign(s.dates.begin() + 1, s.dates.end());
  out.values.resize(s.values.size() - 1);
  for (std::size_t t = 1; t < s.values.size(); ++t)
    out.values[t - 1] = scale * std::log(s.values[t] / s.values[t - 1]);
  return out;
}

// Inner join on dates; only dates present in every series survive.
inline ReturnPanel align(const std::vector<PriceSeries>& series) {
  if (series.size() < 2) throw Error("align: need at least 2 series");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : series)
    for (const auto& d : s.dates) ++counts[d];
  ReturnPanel panel;
  for (const auto& [date, c] : counts)
    if (c == series.size()) panel.dates.push_back(date);
  if (panel.dates.empty()) throw Error("align: empty intersection of dates");
  for (const auto& s : series) {
    panel.market_ids.push_back(s.market_id);
    std::map<std::string, double> by_date;
    for (std::size_t t = 0; t < s.dates.size(); ++t)
      by_date[s.dates[t]] = s.values[t];
    std::vector<double> col;
    col.reserve(panel.dates.size());
    for (const auto& d : panel.dates) col.push_back(by_date.at(d));
    panel.returns.push_back(std::move(col));
  }
  return panel;
}

inline ReturnPanel align(const ReturnPanel& p) {
  std::vector<PriceSeries> series;
  for (std::size_t j = 0; j < p.n_cols(); ++j)
    series.push_back({p.market_ids[j], p.dates, p.returns[j]});
  return align(series);
}

inline void write_panel(std::ostream& out, const ReturnPanel& p,
                        char delim = ',', const std::string& scale_tag = "") {
  if (!scale_tag.empty()) out << "# scale: " << scale_tag << "\n";
  out << "date";
  for (const auto& id : p.market_ids) out << delim << id;
  out << "\n";
  char buf[32];
  for (std::size_t t = 0; t < p.n_rows(); ++t) {
    out << p.dates[t];
    for (std::size_t j = 0; j < p.n_cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.12g", p.returns[j][t]);
      out << delim << buf;
    }
    out << "\n";
  }
}

inline ReturnPanel read_panel(std::istream& in, char delim = ',',
                              std::string* scale_tag = nullptr) {
  std::string line;
  std::streampos pos = in.tellg();
  if (std::getline(in, line) && line.rfind("# scale: ", 0) == 0) {
    if (scale_tag) *scale_tag = line.substr(9);
  } else {
    in.clear();
    in.seekg(pos);
    if (scale_tag) scale_tag->clear();
  }
  if (!std::getline(in, line)) throw Error("read_panel: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = detail::split_line(line, delim);
  if (header.size() < 2 || detail::trim(header[0]) != "date")
    throw Error("read_panel: malformed header");
  ReturnPanel panel;
  for (std::size_t j = 1; j < header.size(); ++j)
    panel.market_ids.push_back(detail::trim(header[j]));
  panel.returns.resize(panel.market_ids.size());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> fields = detail::split_line(line, delim);
    if (fields.size() != header.size()) throw Error("read_panel: ragged row");
    panel.dates.push_back(detail::trim(fields[0]));
    for (std::size_t j = 0; j < panel.market_ids.size(); ++j)
      panel.returns[j].push_back(std::stod(fields[j + 1]));
  }
  return panel;
}

}  // namespace evtail
