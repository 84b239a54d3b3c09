#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rareevent/core.hpp"
#include "rareevent/result.hpp"

namespace rareevent::io {

/// Shortest-safe decimal form with 17 significant digits; reads back to the same double.
std::string num(double v);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(const std::string& s);

/// Header x1,...,xd,f then one row per point.
void write_design_csv(std::ostream& out, const PointMatrix& x, const Vector& f);
std::pair<PointMatrix, Vector> read_design_csv(std::istream& in);

/// Header n,x1..xd,criterion,u_t,stage.
void write_trace_csv(std::ostream& out, const std::vector<SurTraceRow>& trace, std::size_t dim);

}  // namespace rareevent::io
