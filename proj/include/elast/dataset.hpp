#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "elast/common.hpp"

namespace elast {

// Column layout mirrors the on-disk CSV: y,x,z1..zk[,iv1..ivm][,v_true].
// y nonnegative and finite (zeros are usable by the count-model estimator,
// log-scale estimators reject them at fit time); x and controls finite.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::VectorXd x;
  Eigen::MatrixXd controls;     // n x k, k may be 0
  Eigen::MatrixXd instruments;  // n x m, m may be 0
  std::optional<Eigen::VectorXd> v_true;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index n_controls() const { return controls.cols(); }
  Eigen::Index n_instruments() const { return instruments.cols(); }

  void validate() const {
    const Eigen::Index rows = y.size();
    if (rows < 1) throw ParameterError("dataset: empty");
    if (x.size() != rows) throw ParameterError("dataset: x length mismatch");
    if (controls.rows() != rows && controls.cols() > 0)
      throw ParameterError("dataset: controls length mismatch");
    if (instruments.rows() != rows && instruments.cols() > 0)
      throw ParameterError("dataset: instruments length mismatch");
    if (v_true && v_true->size() != rows) throw ParameterError("dataset: v_true length mismatch");
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!std::isfinite(y[i]) || y[i] < 0.0)
        throw ParameterError("dataset: y must be finite and >= 0 (row " + std::to_string(i) + ")");
      if (!std::isfinite(x[i]))
        throw ParameterError("dataset: x must be finite (row " + std::to_string(i) + ")");
    }
    if (!controls.allFinite()) throw ParameterError("dataset: non-finite control value");
    if (!instruments.allFinite()) throw ParameterError("dataset: non-finite instrument value");
  }
};

namespace detail {
// shortest decimal form that round-trips the exact double
inline void append_double(std::string& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}
inline double parse_double(std::string_view field, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw ParameterError("csv: cannot parse number '" + std::string(field) + "' in " + where);
  return v;
}
}  // namespace detail

inline std::string to_csv(const Dataset& d) {
  d.validate();
  std::string out = "y,x";
  for (Eigen::Index j = 0; j < d.n_controls(); ++j) out += ",z" + std::to_string(j + 1);
  for (Eigen::Index j = 0; j < d.n_instruments(); ++j) out += ",iv" + std::to_string(j + 1);
  if (d.v_true) out += ",v_true";
  out += "\n";
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    detail::append_double(out, d.y[i]);
    out += ',';
    detail::append_double(out, d.x[i]);
    for (Eigen::Index j = 0; j < d.n_controls(); ++j) {
      out += ',';
      detail::append_double(out, d.controls(i, j));
    }
    for (Eigen::Index j = 0; j < d.n_instruments(); ++j) {
      out += ',';
      detail::append_double(out, d.instruments(i, j));
    }
    if (d.v_true) {
      out += ',';
      detail::append_double(out, (*d.v_true)[i]);
    }
    out += '\n';
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // column-major

  int find(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    return -1;
  }
  const std::vector<double>& require(const std::string& name) const {
    int j = find(name);
    if (j < 0) throw ParameterError("csv: missing column '" + name + "'");
    return columns[static_cast<std::size_t>(j)];
  }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    line = std::string_view(text).substr(pos, end - pos);
    pos = end + 1;
    return true;
  };
  std::string_view line;
  if (!next_line(line) || line.empty()) throw ParameterError("csv: missing header");
  {
    std::size_t s = 0;
    while (s <= line.size()) {
      std::size_t e = line.find(',', s);
      if (e == std::string_view::npos) e = line.size();
      t.header.emplace_back(line.substr(s, e - s));
      s = e + 1;
    }
  }
  t.columns.assign(t.header.size(), {});
  std::size_t row = 0;
  while (next_line(line)) {
    if (line.empty()) continue;
    ++row;
    std::size_t s = 0, j = 0;
    while (s <= line.size()) {
      std::size_t e = line.find(',', s);
      if (e == std::string_view::npos) e = line.size();
      if (j >= t.header.size()) throw ParameterError("csv: extra field at row " + std::to_string(row));
      t.columns[j].push_back(
          detail::parse_double(line.substr(s, e - s), "row " + std::to_string(row)));
      ++j;
      s = e + 1;
    }
    if (j != t.header.size()) throw ParameterError("csv: short row " + std::to_string(row));
  }
  if (row == 0) throw ParameterError("csv: no data rows");
  return t;
}

// binds the documented schema names; explicit bindings may override
struct ColumnBinding {
  std::string y = "y";
  std::string x = "x";
  std::vector<std::string> controls;     // empty -> all z* columns in header order
  std::vector<std::string> instruments;  // empty -> all iv* columns in header order
};

inline Dataset from_csv(const std::string& text, const ColumnBinding& bind = {}) {
  CsvTable t = parse_csv(text);
  auto to_vec = [](const std::vector<double>& c) {
    return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())).eval();
  };
  Dataset d;
  d.y = to_vec(t.require(bind.y));
  d.x = to_vec(t.require(bind.x));
  std::vector<std::string> zc = bind.controls, ivc = bind.instruments;
  if (zc.empty() && bind.controls.empty()) {
    for (const auto& h : t.header)
      if (h.size() > 1 && h[0] == 'z' && h.find_first_not_of("0123456789", 1) == std::string::npos)
        zc.push_back(h);
  }
  if (ivc.empty() && bind.instruments.empty()) {
    for (const auto& h : t.header)
      if (h.size() > 2 && h.rfind("iv", 0) == 0 &&
          h.find_first_not_of("0123456789", 2) == std::string::npos)
        ivc.push_back(h);
  }
  d.controls.resize(d.y.size(), static_cast<Eigen::Index>(zc.size()));
  for (std::size_t j = 0; j < zc.size(); ++j) d.controls.col(static_cast<Eigen::Index>(j)) = to_vec(t.require(zc[j]));
  d.instruments.resize(d.y.size(), static_cast<Eigen::Index>(ivc.size()));
  for (std::size_t j = 0; j < ivc.size(); ++j)
    d.instruments.col(static_cast<Eigen::Index>(j)) = to_vec(t.require(ivc[j]));
  if (t.find("v_true") >= 0) d.v_true = to_vec(t.require("v_true"));
  d.validate();
  return d;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParameterError("cannot open for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw ParameterError("write failed: " + path);
}
inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParameterError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::string dataset_hash(const std::string& csv_text) {
  return hash_hex(fnv1a64(csv_text));
}
inline std::string dataset_hash(const Dataset& d) { return dataset_hash(to_csv(d)); }

}  // namespace elast
