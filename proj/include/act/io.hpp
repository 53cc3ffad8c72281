#pragma once

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "act/common.hpp"
#include "act/masking.hpp"
#include "act/pipeline.hpp"
#include "act/pricing.hpp"
#include "act/smoothing.hpp"
#include "act/tensor.hpp"

namespace act {

namespace detail {

/// Shortest decimal form that round-trips an IEEE double exactly.
inline std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] inline void parse_fail(const std::string& path, Index line,
                                    Index column, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ":" +
                   std::to_string(column) + ": " + what);
}

inline double parse_real(const std::string& field, const std::string& path,
                         Index line, Index column) {
  if (field.empty()) parse_fail(path, line, column, "empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE)
    parse_fail(path, line, column, "not a number: '" + field + "'");
  return v;
}

inline Index parse_integer(const std::string& field, const std::string& path,
                           Index line, Index column) {
  if (field.empty()) parse_fail(path, line, column, "empty integer field");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(field.c_str(), &end, 10);
  if (end != field.c_str() + field.size() || errno == ERANGE)
    parse_fail(path, line, column, "not an integer: '" + field + "'");
  return static_cast<Index>(v);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

/// Labels travel through comma-separated files, so they may not contain the
/// separator or line breaks.
inline void check_label(const std::string& label, const char* axis) {
  if (label.empty())
    throw StructuralError(std::string("write: empty ") + axis + " label");
  for (const char c : label)
    if (c == ',' || c == '\n' || c == '\r')
      throw StructuralError(std::string("write: ") + axis + " label '" +
                            label + "' contains a separator character");
}

inline void check_month(const std::string& m, const std::string& path,
                        Index line) {
  bool ok = m.size() == 7 && m[4] == '-';
  for (std::size_t i = 0; ok && i < m.size(); ++i)
    if (i != 4) ok = std::isdigit(static_cast<unsigned char>(m[i])) != 0;
  if (!ok)
    parse_fail(path, line, 1, "month '" + m + "' is not in YYYY-MM form");
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open for reading");
  return in;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open for writing");
  return out;
}

}  // namespace detail

/*
 * Long-format panel file: header `month,firm_id,characteristic,value`, one
 * row per observed cell. Unobserved cells are simply absent, so an axis
 * member with no observations at all does not survive a write/read round
 * trip; values and masks of everything present round-trip exactly.
 */
template <typename Scalar>
void write_panel(const std::string& path, const MaskedTensor<Scalar>& panel) {
  for (const auto& m : panel.labels().months) detail::check_label(m, "month");
  for (const auto& f : panel.labels().firms) detail::check_label(f, "firm");
  for (const auto& c : panel.labels().characteristics)
    detail::check_label(c, "characteristic");
  std::ofstream out = detail::open_for_write(path);
  out << "month,firm_id,characteristic,value\n";
  const Index t = panel.dim_time(), n = panel.dim_firm(), l = panel.dim_char();
  for (Index it = 0; it < t; ++it)
    for (Index in = 0; in < n; ++in)
      for (Index il = 0; il < l; ++il) {
        if (!panel.observed(it, in, il)) continue;
        out << panel.labels().months[static_cast<std::size_t>(it)] << ','
            << panel.labels().firms[static_cast<std::size_t>(in)] << ','
            << panel.labels().characteristics[static_cast<std::size_t>(il)]
            << ','
            << detail::fmt_real(static_cast<double>(panel.value(it, in, il)))
            << '\n';
      }
  if (!out) throw Error(path + ": write failed");
}

/// Parses a long-format panel file. Axis labels are sorted lexicographically
/// (ISO months therefore chronologically); duplicate cells are an error.
template <typename Scalar>
MaskedTensor<Scalar> read_panel(const std::string& path) {
  std::ifstream in = detail::open_for_read(path);
  std::string line;
  Index line_no = 1;
  if (!std::getline(in, line) ||
      detail::split_csv(line) !=
          std::vector<std::string>{"month", "firm_id", "characteristic",
                                   "value"})
    detail::parse_fail(path, 1, 1,
                       "expected header month,firm_id,characteristic,value");

  struct Row {
    std::string month, firm, chr;
    double value;
    Index line;
  };
  std::vector<Row> rows;
  std::map<std::string, Index> months, firms, chars;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = detail::split_csv(line);
    if (f.size() != 4)
      detail::parse_fail(path, line_no, 1,
                         "expected 4 fields, found " +
                             std::to_string(f.size()));
    detail::check_month(f[0], path, line_no);
    if (f[1].empty()) detail::parse_fail(path, line_no, 2, "empty firm_id");
    if (f[2].empty())
      detail::parse_fail(path, line_no, 3, "empty characteristic");
    const double v = detail::parse_real(f[3], path, line_no, 4);
    if (!std::isfinite(v))
      detail::parse_fail(path, line_no, 4, "non-finite value");
    months.emplace(f[0], 0);
    firms.emplace(f[1], 0);
    chars.emplace(f[2], 0);
    rows.push_back(Row{f[0], f[1], f[2], v, line_no});
  }
  if (rows.empty()) detail::parse_fail(path, line_no, 1, "no data rows");

  AxisLabels labels;
  Index idx = 0;
  for (auto& [k, v] : months) {
    v = idx++;
    labels.months.push_back(k);
  }
  idx = 0;
  for (auto& [k, v] : firms) {
    v = idx++;
    labels.firms.push_back(k);
  }
  idx = 0;
  for (auto& [k, v] : chars) {
    v = idx++;
    labels.characteristics.push_back(k);
  }

  const Index t = static_cast<Index>(labels.months.size());
  const Index n = static_cast<Index>(labels.firms.size());
  const Index l = static_cast<Index>(labels.characteristics.size());
  Tensor3<Scalar> values(t, n, l);
  Tensor3<std::uint8_t> mask(t, n, l);
  for (const Row& row : rows) {
    const Index it = months[row.month], in = firms[row.firm],
                il = chars[row.chr];
    if (mask(it, in, il))
      detail::parse_fail(path, row.line, 1,
                         "duplicate cell (" + row.month + ", " + row.firm +
                             ", " + row.chr + ")");
    mask(it, in, il) = 1;
    values(it, in, il) = static_cast<Scalar>(row.value);
  }
  return MaskedTensor<Scalar>(std::move(values), std::move(mask),
                              std::move(labels));
}

/*
 * Market files: `returns.csv` (month,firm_id,return) with missing returns
 * absent, `mcap.csv` (month,firm_id,mcap), and `riskfree.csv` (month,rf).
 */
template <typename Scalar>
void write_market(const std::string& returns_path,
                  const std::string& mcap_path,
                  const std::string& riskfree_path,
                  const MarketData<Scalar>& market, const AxisLabels& labels) {
  market.validate();
  const Index t = market.returns.rows(), n = market.returns.cols();
  if (static_cast<Index>(labels.months.size()) != t ||
      static_cast<Index>(labels.firms.size()) != n)
    throw StructuralError("write_market: labels do not match market axes");
  std::ofstream ret = detail::open_for_write(returns_path);
  ret << "month,firm_id,return\n";
  std::ofstream cap = detail::open_for_write(mcap_path);
  cap << "month,firm_id,mcap\n";
  std::ofstream rf = detail::open_for_write(riskfree_path);
  rf << "month,rf\n";
  for (Index it = 0; it < t; ++it) {
    const std::string& month = labels.months[static_cast<std::size_t>(it)];
    rf << month << ','
       << detail::fmt_real(static_cast<double>(market.risk_free[it])) << '\n';
    for (Index in = 0; in < n; ++in) {
      const std::string& firm = labels.firms[static_cast<std::size_t>(in)];
      if (std::isfinite(static_cast<double>(market.returns(it, in))))
        ret << month << ',' << firm << ','
            << detail::fmt_real(static_cast<double>(market.returns(it, in)))
            << '\n';
      cap << month << ',' << firm << ','
          << detail::fmt_real(static_cast<double>(market.mcap(it, in)))
          << '\n';
    }
  }
  if (!ret || !cap || !rf) throw Error("write_market: write failed");
}

namespace detail {

struct LabelIndex {
  std::unordered_map<std::string, Index> map;

  explicit LabelIndex(const std::vector<std::string>& labels) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      map.emplace(labels[i], static_cast<Index>(i));
  }

  std::optional<Index> find(const std::string& label) const {
    const auto it = map.find(label);
    if (it == map.end()) return std::nullopt;
    return it->second;
  }
};

}  // namespace detail

/*
 * Reads the three market files against a panel's axes. Rows for months or
 * firms the panel does not contain are skipped (market universes are
 * usually supersets); the skipped-row count is reported through skipped_out.
 * Missing returns stay NaN and missing caps stay 0, both of which exclude
 * the firm downstream. The risk-free file must cover every panel month.
 */
template <typename Scalar>
MarketData<Scalar> read_market(const std::string& returns_path,
                               const std::string& mcap_path,
                               const std::string& riskfree_path,
                               const AxisLabels& labels,
                               Index* skipped_out = nullptr) {
  const Index t = static_cast<Index>(labels.months.size());
  const Index n = static_cast<Index>(labels.firms.size());
  const detail::LabelIndex months(labels.months);
  const detail::LabelIndex firms(labels.firms);
  MarketData<Scalar> out;
  out.returns =
      Matrix<Scalar>::Constant(t, n, std::numeric_limits<Scalar>::quiet_NaN());
  out.mcap = Matrix<Scalar>::Zero(t, n);
  out.risk_free =
      Vector<Scalar>::Constant(t, std::numeric_limits<Scalar>::quiet_NaN());
  Index skipped = 0;

  const auto read_tn = [&](const std::string& path, const char* column,
                           Matrix<Scalar>& target, bool require_finite) {
    std::ifstream in = detail::open_for_read(path);
    std::string line;
    Index line_no = 1;
    const std::vector<std::string> header{"month", "firm_id", column};
    if (!std::getline(in, line) || detail::split_csv(line) != header)
      detail::parse_fail(path, 1, 1,
                         std::string("expected header month,firm_id,") +
                             column);
    Matrix<std::uint8_t> seen = Matrix<std::uint8_t>::Zero(t, n);
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      const std::vector<std::string> f = detail::split_csv(line);
      if (f.size() != 3)
        detail::parse_fail(path, line_no, 1,
                           "expected 3 fields, found " +
                               std::to_string(f.size()));
      const double v = detail::parse_real(f[2], path, line_no, 3);
      if (require_finite && !std::isfinite(v))
        detail::parse_fail(path, line_no, 3, "non-finite value");
      const auto it = months.find(f[0]);
      const auto in_ = firms.find(f[1]);
      if (!it || !in_) {
        ++skipped;
        continue;
      }
      if (seen(*it, *in_))
        detail::parse_fail(path, line_no, 1,
                           "duplicate cell (" + f[0] + ", " + f[1] + ")");
      seen(*it, *in_) = 1;
      target(*it, *in_) = static_cast<Scalar>(v);
    }
  };
  read_tn(returns_path, "return", out.returns, true);
  read_tn(mcap_path, "mcap", out.mcap, true);

  {
    std::ifstream in = detail::open_for_read(riskfree_path);
    std::string line;
    Index line_no = 1;
    if (!std::getline(in, line) ||
        detail::split_csv(line) != std::vector<std::string>{"month", "rf"})
      detail::parse_fail(riskfree_path, 1, 1, "expected header month,rf");
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      const std::vector<std::string> f = detail::split_csv(line);
      if (f.size() != 2)
        detail::parse_fail(riskfree_path, line_no, 1,
                           "expected 2 fields, found " +
                               std::to_string(f.size()));
      const double v = detail::parse_real(f[1], riskfree_path, line_no, 2);
      if (!std::isfinite(v))
        detail::parse_fail(riskfree_path, line_no, 2, "non-finite value");
      const auto it = months.find(f[0]);
      if (!it) {
        ++skipped;
        continue;
      }
      if (std::isfinite(static_cast<double>(out.risk_free[*it])))
        detail::parse_fail(riskfree_path, line_no, 1,
                           "duplicate month " + f[0]);
      out.risk_free[*it] = static_cast<Scalar>(v);
    }
  }
  for (Index it = 0; it < t; ++it)
    if (!std::isfinite(static_cast<double>(out.risk_free[it])))
      throw StructuralError("read_market: no risk-free rate for month " +
                            labels.months[static_cast<std::size_t>(it)]);
  out.validate();
  if (skipped_out) *skipped_out = skipped;
  return out;
}

/*
 * Hold-out plan file: `#key=value` metadata lines (regime, fraction, seed,
 * partial, blocks_total, blocks_at_start), a header, then one record per
 * held-out cell as t_index,firm_id,characteristic_name,true_value.
 */
template <typename Scalar>
void write_plan(const std::string& path, const HoldoutPlan<Scalar>& plan,
                const AxisLabels& labels) {
  for (const auto& f : labels.firms) detail::check_label(f, "firm");
  for (const auto& c : labels.characteristics)
    detail::check_label(c, "characteristic");
  std::ofstream out = detail::open_for_write(path);
  out << "#regime=" << regime_name(plan.regime) << '\n';
  out << "#fraction=" << detail::fmt_real(plan.fraction) << '\n';
  out << "#seed=" << plan.seed << '\n';
  out << "#partial=" << (plan.partial ? 1 : 0) << '\n';
  out << "#blocks_total=" << plan.blocks_total << '\n';
  out << "#blocks_at_start=" << plan.blocks_at_start << '\n';
  out << "t_index,firm_id,characteristic_name,true_value\n";
  const Index n = static_cast<Index>(labels.firms.size());
  const Index l = static_cast<Index>(labels.characteristics.size());
  for (const auto& cell : plan.cells) {
    if (cell.n < 0 || cell.n >= n || cell.l < 0 || cell.l >= l)
      throw StructuralError("write_plan: cell outside the labeled axes");
    out << cell.t << ',' << labels.firms[static_cast<std::size_t>(cell.n)]
        << ','
        << labels.characteristics[static_cast<std::size_t>(cell.l)] << ','
        << detail::fmt_real(static_cast<double>(cell.value)) << '\n';
  }
  if (!out) throw Error(path + ": write failed");
}

/// Reads a hold-out plan and resolves its labels against the given axes;
/// a record naming an unknown firm or characteristic is an error that
/// reports the offending label.
template <typename Scalar>
HoldoutPlan<Scalar> read_plan(const std::string& path,
                              const AxisLabels& labels) {
  std::ifstream in = detail::open_for_read(path);
  const Index t = static_cast<Index>(labels.months.size());
  const detail::LabelIndex firms(labels.firms);
  const detail::LabelIndex chars(labels.characteristics);
  HoldoutPlan<Scalar> plan;
  std::map<std::string, std::string> meta;
  std::string line;
  Index line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      const std::string body = detail::trim(line.substr(1));
      const std::size_t eq = body.find('=');
      if (eq == std::string::npos)
        detail::parse_fail(path, line_no, 1, "metadata line without '='");
      meta[detail::trim(body.substr(0, eq))] =
          detail::trim(body.substr(eq + 1));
      continue;
    }
    if (!saw_header) {
      if (detail::split_csv(line) !=
          std::vector<std::string>{"t_index", "firm_id",
                                   "characteristic_name", "true_value"})
        detail::parse_fail(
            path, line_no, 1,
            "expected header t_index,firm_id,characteristic_name,true_value");
      saw_header = true;
      continue;
    }
    const std::vector<std::string> f = detail::split_csv(line);
    if (f.size() != 4)
      detail::parse_fail(path, line_no, 1,
                         "expected 4 fields, found " +
                             std::to_string(f.size()));
    HoldoutCell<Scalar> cell;
    cell.t = detail::parse_integer(f[0], path, line_no, 1);
    if (cell.t < 0 || cell.t >= t)
      detail::parse_fail(path, line_no, 1,
                         "t_index " + f[0] + " outside 0.." +
                             std::to_string(t - 1));
    const auto in_ = firms.find(f[1]);
    if (!in_)
      throw StructuralError(path + ":" + std::to_string(line_no) +
                            ": unknown firm label '" + f[1] + "'");
    const auto il = chars.find(f[2]);
    if (!il)
      throw StructuralError(path + ":" + std::to_string(line_no) +
                            ": unknown characteristic label '" + f[2] + "'");
    cell.n = *in_;
    cell.l = *il;
    const double v = detail::parse_real(f[3], path, line_no, 4);
    if (!std::isfinite(v))
      detail::parse_fail(path, line_no, 4, "non-finite true value");
    cell.value = static_cast<Scalar>(v);
    plan.cells.push_back(cell);
  }
  if (!saw_header) detail::parse_fail(path, line_no + 1, 1, "missing header");

  const auto meta_str = [&](const char* key) -> std::string {
    const auto it = meta.find(key);
    if (it == meta.end())
      throw ParseError(path + ": missing metadata key '" + std::string(key) +
                       "'");
    return it->second;
  };
  plan.regime = regime_from_name(meta_str("regime"));
  plan.fraction = detail::parse_real(meta_str("fraction"), path, 0, 1);
  plan.seed = static_cast<std::uint64_t>(
      std::strtoull(meta_str("seed").c_str(), nullptr, 10));
  if (meta.count("partial")) plan.partial = meta["partial"] != "0";
  if (meta.count("blocks_total"))
    plan.blocks_total = detail::parse_integer(meta["blocks_total"], path, 0, 1);
  if (meta.count("blocks_at_start"))
    plan.blocks_at_start =
        detail::parse_integer(meta["blocks_at_start"], path, 0, 1);
  return plan;
}

/// Writes a structured key=value report. Rows are emitted in order, so
/// identical inputs produce identical files.
inline void write_report(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ofstream out = detail::open_for_write(path);
  for (const auto& [key, value] : rows) out << key << '=' << value << '\n';
  if (!out) throw Error(path + ": write failed");
}

/// Flat key=value configuration file: blank lines and '#' comments are
/// skipped, keys may not repeat, values keep everything after the first '='.
class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path) {
    std::ifstream in = detail::open_for_read(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str(), path);
  }

  static KvConfig parse_text(const std::string& text,
                             const std::string& source) {
    KvConfig cfg;
    cfg.source_ = source;
    std::istringstream in(text);
    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string body = detail::trim(line);
      if (body.empty() || body[0] == '#') continue;
      const std::size_t eq = body.find('=');
      if (eq == std::string::npos)
        detail::parse_fail(source, line_no, 1, "expected key=value");
      const std::string key = detail::trim(body.substr(0, eq));
      const std::string value = detail::trim(body.substr(eq + 1));
      if (key.empty()) detail::parse_fail(source, line_no, 1, "empty key");
      if (cfg.values_.count(key))
        detail::parse_fail(source, line_no, 1, "duplicate key '" + key + "'");
      cfg.values_[key] = value;
      cfg.lines_[key] = line_no;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::map<std::string, std::string>& values() const { return values_; }

  const std::string& source() const { return source_; }

  std::string where(const std::string& key) const {
    const auto it = lines_.find(key);
    if (it == lines_.end()) return source_;
    return source_ + ":" + std::to_string(it->second);
  }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_real(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return detail::parse_real(it->second, where(key), 0, 1);
  }

  Index get_index(const std::string& key, Index fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return detail::parse_integer(it->second, where(key), 0, 1);
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    errno = 0;
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(it->second.c_str(), &end, 10);
    if (end != it->second.c_str() + it->second.size() || errno == ERANGE)
      throw ConfigError(where(key) + ": '" + it->second +
                        "' is not an unsigned integer");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError(where(key) + ": '" + it->second + "' is not a boolean");
  }

 private:
  std::string source_ = "<none>";
  std::map<std::string, std::string> values_;
  std::map<std::string, Index> lines_;
};

/*
 * The resolved experiment configuration: completion, clustering, smoothing,
 * masking, pricing, and synthesis parameters plus file locations. Defaults
 * are the reference parameter set (rank 40, K = 10, tau = 0.40, CMA window
 * 5, EMA theta 0.5, 6 chosen factors, 20 x 20 baskets, mode ranks (5,5,5),
 * lambda = 0).
 */
struct ExperimentConfig {
  // completion
  Index rank = 40;
  double lambda = 0;
  int max_iters = 200;
  double rel_tol = 1e-6;
  // clustering
  Index clusters = 10;
  double tau = 0.40;
  // smoothing
  std::string smoother = "none";
  int delta = 5;
  double theta = 0.5;
  double kalman_h = 1e-2;
  double kalman_r = 1e-1;
  // pipeline
  std::uint64_t seed = 0;
  std::string method = "act";
  bool keep_observed = false;
  // masking
  std::string regime = "mar";
  double fraction = 0.10;
  Index block_len = 12;
  double start_share = 0.40;
  double logit_gap_intercept = -1.5;
  double logit_gap_series = -0.5;
  double logit_gap_firm = -0.5;
  double logit_gap_geo_p = 0.25;
  double logit_prev = 2.0;
  double logit_density = -1.0;
  // pricing
  Index p_buckets = 20;
  Index q_buckets = 20;
  Index kp = 5;
  Index kq = 5;
  Index kl = 5;
  Index factors = 6;
  std::string size_name = "size";
  bool rolling = false;
  Index min_train = 36;
  // ingestion
  bool normalize = false;
  // synthesis
  Index synth_t = 72;
  Index synth_n = 120;
  Index synth_l = 8;
  Index synth_rank = 4;
  double synth_noise_sd = 0.01;
  bool synth_normalize = false;
  std::string synth_groups;  // firms:rank:noise:keep[:share];... overrides
  std::string market_betas;  // comma list, one per characteristic
  double market_noise_sd = 0.02;
  double market_rf = 0.002;
  double market_mcap_scale = 1.0;
  double market_factor_scale = 0.0;
  double market_factor_phi = 0.97;
  // sweep
  std::string sweep_param = "lambda";
  std::string sweep_values = "1e-5,1e-3,1e-1,0.5";
  // files
  std::string out = ".";
  std::string panel;
  std::string truth;
  std::string masked;
  std::string plan;
  std::string imputed;
  std::string returns;
  std::string mcap;
  std::string riskfree;

  static const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "rank", "lambda", "max_iters", "rel_tol", "clusters", "tau",
        "smoother", "delta", "theta", "kalman_h", "kalman_r", "seed",
        "method", "keep_observed", "regime", "fraction", "block_len",
        "start_share", "logit_gap_intercept", "logit_gap_series",
        "logit_gap_firm", "logit_gap_geo_p", "logit_prev", "logit_density",
        "p_buckets", "q_buckets", "kp", "kq", "kl", "factors", "size_name",
        "rolling", "min_train", "normalize", "synth_t", "synth_n", "synth_l",
        "synth_rank", "synth_noise_sd", "synth_normalize", "synth_groups",
        "market_betas", "market_noise_sd", "market_rf", "market_mcap_scale",
        "market_factor_scale", "market_factor_phi", "sweep_param",
        "sweep_values", "out", "panel", "truth", "masked", "plan", "imputed",
        "returns", "mcap", "riskfree"};
    return keys;
  }

  void apply(const KvConfig& kv) {
    for (const auto& [key, value] : kv.values()) {
      bool known = false;
      for (const auto& k : known_keys())
        if (k == key) {
          known = true;
          break;
        }
      if (!known)
        throw ConfigError(kv.where(key) + ": unknown config key '" + key +
                          "'");
    }
    rank = kv.get_index("rank", rank);
    lambda = kv.get_real("lambda", lambda);
    max_iters = static_cast<int>(kv.get_index("max_iters", max_iters));
    rel_tol = kv.get_real("rel_tol", rel_tol);
    clusters = kv.get_index("clusters", clusters);
    tau = kv.get_real("tau", tau);
    smoother = kv.get_string("smoother", smoother);
    delta = static_cast<int>(kv.get_index("delta", delta));
    theta = kv.get_real("theta", theta);
    kalman_h = kv.get_real("kalman_h", kalman_h);
    kalman_r = kv.get_real("kalman_r", kalman_r);
    seed = kv.get_seed("seed", seed);
    method = kv.get_string("method", method);
    keep_observed = kv.get_bool("keep_observed", keep_observed);
    regime = kv.get_string("regime", regime);
    fraction = kv.get_real("fraction", fraction);
    block_len = kv.get_index("block_len", block_len);
    start_share = kv.get_real("start_share", start_share);
    logit_gap_intercept = kv.get_real("logit_gap_intercept",
                                      logit_gap_intercept);
    logit_gap_series = kv.get_real("logit_gap_series", logit_gap_series);
    logit_gap_firm = kv.get_real("logit_gap_firm", logit_gap_firm);
    logit_gap_geo_p = kv.get_real("logit_gap_geo_p", logit_gap_geo_p);
    logit_prev = kv.get_real("logit_prev", logit_prev);
    logit_density = kv.get_real("logit_density", logit_density);
    p_buckets = kv.get_index("p_buckets", p_buckets);
    q_buckets = kv.get_index("q_buckets", q_buckets);
    kp = kv.get_index("kp", kp);
    kq = kv.get_index("kq", kq);
    kl = kv.get_index("kl", kl);
    factors = kv.get_index("factors", factors);
    size_name = kv.get_string("size_name", size_name);
    rolling = kv.get_bool("rolling", rolling);
    min_train = kv.get_index("min_train", min_train);
    normalize = kv.get_bool("normalize", normalize);
    synth_t = kv.get_index("synth_t", synth_t);
    synth_n = kv.get_index("synth_n", synth_n);
    synth_l = kv.get_index("synth_l", synth_l);
    synth_rank = kv.get_index("synth_rank", synth_rank);
    synth_noise_sd = kv.get_real("synth_noise_sd", synth_noise_sd);
    synth_normalize = kv.get_bool("synth_normalize", synth_normalize);
    synth_groups = kv.get_string("synth_groups", synth_groups);
    market_betas = kv.get_string("market_betas", market_betas);
    market_noise_sd = kv.get_real("market_noise_sd", market_noise_sd);
    market_rf = kv.get_real("market_rf", market_rf);
    market_mcap_scale = kv.get_real("market_mcap_scale", market_mcap_scale);
    market_factor_scale =
        kv.get_real("market_factor_scale", market_factor_scale);
    market_factor_phi = kv.get_real("market_factor_phi", market_factor_phi);
    sweep_param = kv.get_string("sweep_param", sweep_param);
    sweep_values = kv.get_string("sweep_values", sweep_values);
    out = kv.get_string("out", out);
    panel = kv.get_string("panel", panel);
    truth = kv.get_string("truth", truth);
    masked = kv.get_string("masked", masked);
    plan = kv.get_string("plan", plan);
    imputed = kv.get_string("imputed", imputed);
    returns = kv.get_string("returns", returns);
    mcap = kv.get_string("mcap", mcap);
    riskfree = kv.get_string("riskfree", riskfree);
  }

  static ExperimentConfig load(const std::string& path) {
    ExperimentConfig cfg;
    cfg.apply(KvConfig::parse_file(path));
    return cfg;
  }

  void validate() const {
    if (method != "act" && method != "cp" && method != "median")
      throw ConfigError("config: method must be act, cp, or median");
    regime_from_name(regime);  // throws on unknown names
    smoother_kind();
  }

  SmootherKind smoother_kind() const {
    if (smoother == "none") return SmootherKind::none;
    if (smoother == "cma") return SmootherKind::cma;
    if (smoother == "ema") return SmootherKind::ema;
    if (smoother == "kalman") return SmootherKind::kalman;
    throw ConfigError("config: smoother must be none, cma, ema, or kalman");
  }

  SolverConfig<double> solver_config() const {
    SolverConfig<double> s;
    s.rank = rank;
    s.lambda = lambda;
    s.max_iters = max_iters;
    s.rel_tol = rel_tol;
    s.seed = seed;
    return s;
  }

  SmootherSpec<double> smoother_spec() const {
    SmootherSpec<double> s;
    s.kind = smoother_kind();
    s.delta = delta;
    s.theta = theta;
    s.h = kalman_h;
    s.r = kalman_r;
    return s;
  }

  ActConfig<double> act_config() const {
    ActConfig<double> a;
    a.solver = solver_config();
    a.clusters = clusters;
    a.tau = tau;
    a.smoother = smoother_spec();
    a.seed = seed;
    a.keep_observed = keep_observed;
    return a;
  }

  BlockParams block_params() const {
    BlockParams b;
    b.block_len = block_len;
    b.start_share = start_share;
    return b;
  }

  LogitParams logit_params() const {
    LogitParams p;
    p.gap_intercept = logit_gap_intercept;
    p.gap_series_coef = logit_gap_series;
    p.gap_firm_coef = logit_gap_firm;
    p.gap_geo_p = logit_gap_geo_p;
    p.prev_coef = logit_prev;
    p.density_coef = logit_density;
    return p;
  }

  /// Effective input/output locations: explicit paths win, otherwise the
  /// conventional file name inside the output directory.
  std::string path_or(const std::string& explicit_path,
                      const char* filename) const {
    if (!explicit_path.empty()) return explicit_path;
    return out + "/" + filename;
  }

  std::string panel_path() const { return path_or(panel, "panel.csv"); }
  std::string truth_path() const { return path_or(truth, "truth.csv"); }
  std::string masked_path() const { return path_or(masked, "masked.csv"); }
  std::string plan_path() const { return path_or(plan, "plan.csv"); }
  std::string imputed_path() const { return path_or(imputed, "imputed.csv"); }
  std::string returns_path() const { return path_or(returns, "returns.csv"); }
  std::string mcap_path() const { return path_or(mcap, "mcap.csv"); }
  std::string riskfree_path() const {
    return path_or(riskfree, "riskfree.csv");
  }

  /// Full resolved configuration, in a fixed order, for report headers.
  std::vector<std::pair<std::string, std::string>> dump() const {
    using detail::fmt_real;
    std::vector<std::pair<std::string, std::string>> rows;
    const auto add = [&](const char* k, const std::string& v) {
      rows.emplace_back(std::string("config.") + k, v);
    };
    add("rank", std::to_string(rank));
    add("lambda", fmt_real(lambda));
    add("max_iters", std::to_string(max_iters));
    add("rel_tol", fmt_real(rel_tol));
    add("clusters", std::to_string(clusters));
    add("tau", fmt_real(tau));
    add("smoother", smoother);
    add("delta", std::to_string(delta));
    add("theta", fmt_real(theta));
    add("kalman_h", fmt_real(kalman_h));
    add("kalman_r", fmt_real(kalman_r));
    add("seed", std::to_string(seed));
    add("method", method);
    add("keep_observed", keep_observed ? "true" : "false");
    add("regime", regime);
    add("fraction", fmt_real(fraction));
    add("block_len", std::to_string(block_len));
    add("start_share", fmt_real(start_share));
    add("logit_gap_intercept", fmt_real(logit_gap_intercept));
    add("logit_gap_series", fmt_real(logit_gap_series));
    add("logit_gap_firm", fmt_real(logit_gap_firm));
    add("logit_gap_geo_p", fmt_real(logit_gap_geo_p));
    add("logit_prev", fmt_real(logit_prev));
    add("logit_density", fmt_real(logit_density));
    add("p_buckets", std::to_string(p_buckets));
    add("q_buckets", std::to_string(q_buckets));
    add("kp", std::to_string(kp));
    add("kq", std::to_string(kq));
    add("kl", std::to_string(kl));
    add("factors", std::to_string(factors));
    add("size_name", size_name);
    add("rolling", rolling ? "true" : "false");
    add("min_train", std::to_string(min_train));
    add("normalize", normalize ? "true" : "false");
    add("synth_t", std::to_string(synth_t));
    add("synth_n", std::to_string(synth_n));
    add("synth_l", std::to_string(synth_l));
    add("synth_rank", std::to_string(synth_rank));
    add("synth_noise_sd", fmt_real(synth_noise_sd));
    add("synth_normalize", synth_normalize ? "true" : "false");
    add("synth_groups", synth_groups);
    add("market_betas", market_betas);
    add("market_noise_sd", fmt_real(market_noise_sd));
    add("market_rf", fmt_real(market_rf));
    add("market_mcap_scale", fmt_real(market_mcap_scale));
    add("market_factor_scale", fmt_real(market_factor_scale));
    add("market_factor_phi", fmt_real(market_factor_phi));
    add("sweep_param", sweep_param);
    add("sweep_values", sweep_values);
    add("out", out);
    add("panel", panel_path());
    add("truth", truth_path());
    add("masked", masked_path());
    add("plan", plan_path());
    add("imputed", imputed_path());
    add("returns", returns_path());
    add("mcap", mcap_path());
    add("riskfree", riskfree_path());
    return rows;
  }
};

}  // namespace act
