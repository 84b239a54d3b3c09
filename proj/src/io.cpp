#include "rareevent/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace rareevent::io {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_design_csv(std::ostream& out, const PointMatrix& x, const Vector& f) {
  if (x.rows() != f.size()) throw std::invalid_argument("write_design_csv: size mismatch");
  for (Eigen::Index k = 0; k < x.cols(); ++k) out << 'x' << (k + 1) << ',';
  out << "f\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) out << num(x(i, k)) << ',';
    out << num(f[i]) << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::pair<PointMatrix, Vector> read_design_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("design csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < 2 || header.back() != "f") throw ConfigError("design csv: header must be x1,...,xd,f");
  const std::size_t d = header.size() - 1;
  for (std::size_t k = 0; k < d; ++k) {
    if (header[k] != "x" + std::to_string(k + 1)) throw ConfigError("design csv: header must be x1,...,xd,f");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != d + 1) throw ConfigError("design csv: wrong number of columns");
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw ConfigError("design csv: bad number '" + c + "'");
      } catch (const std::logic_error&) {
        throw ConfigError("design csv: bad number '" + c + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  PointMatrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  Vector f(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    f[static_cast<Eigen::Index>(i)] = rows[i][d];
  }
  return {std::move(x), std::move(f)};
}

void write_trace_csv(std::ostream& out, const std::vector<SurTraceRow>& trace, std::size_t dim) {
  out << 'n';
  for (std::size_t k = 0; k < dim; ++k) out << ",x" << (k + 1);
  out << ",criterion,u_t,stage\n";
  for (const SurTraceRow& r : trace) {
    out << r.n;
    for (double v : r.x_new) out << ',' << num(v);
    out << ',' << num(r.criterion) << ',' << num(r.u_t) << ',' << r.stage << '\n';
  }
}

}  // namespace rareevent::io
