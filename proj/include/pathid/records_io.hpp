#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathid/measurement.hpp"
#include "pathid/tomography.hpp"

namespace pathid::io {

using nlohmann::json;

/// [re, im]
json complex_json(Complex z);
Complex complex_from_json(const json& j);

/// [[l, [re, im]], ...] in ascending l.
json mode_ket_json(const ModeKet& ket);
ModeKet mode_ket_from_json(const json& j);

/// {"truncation": L, "terms": [[l_s, l_i, [re, im]], ...]}
json biphoton_json(const BiphotonKet& ket);

/// {"rows": n, "cols": m, "data": [[re, im], ...]} in row-major order.
json matrix_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

json reconstruction_json(const ReconstructionResult& r);

/// CSV with header setting_id,signal_ket,idler_ket,counts,integration_time.
/// Ket columns hold the JSON encoding above, quoted.
void write_counts_csv(std::ostream& out, const std::vector<CountRecord>& records);
/// Throws FormatError with the offending line number.
std::vector<CountRecord> read_counts_csv(std::istream& in);

} // namespace pathid::io
