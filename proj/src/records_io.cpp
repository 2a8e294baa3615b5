#include "pathid/records_io.hpp"

#include <istream>
#include <ostream>

namespace pathid::io {

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

Complex complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw FormatError("complex value must be [re, im]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json mode_ket_json(const ModeKet& ket) {
  json out = json::array();
  for (const auto& [ell, a] : ket.amplitudes()) out.push_back(json::array({ell, complex_json(a)}));
  return out;
}

ModeKet mode_ket_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("mode ket must be a list of [l, [re, im]]");
  std::map<int, Complex> amps;
  for (const auto& term : j) {
    if (!term.is_array() || term.size() != 2 || !term[0].is_number_integer()) {
      throw FormatError("mode ket term must be [l, [re, im]]");
    }
    amps[term[0].get<int>()] += complex_from_json(term[1]);
  }
  return ModeKet(std::move(amps));
}

json biphoton_json(const BiphotonKet& ket) {
  json terms = json::array();
  for (const auto& [p, a] : ket.amplitudes()) terms.push_back(json::array({p.signal, p.idler, complex_json(a)}));
  return {{"truncation", ket.space().truncation()}, {"terms", terms}};
}

json matrix_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(complex_json(m(r, c)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const json& j) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  json data;
  try {
    rows = j.at("rows").get<Eigen::Index>();
    cols = j.at("cols").get<Eigen::Index>();
    data = j.at("data");
  } catch (const json::exception& e) {
    throw FormatError(std::string("matrix must have rows, cols and data: ") + e.what());
  }
  if (!data.is_array()) throw FormatError("matrix data must be a list");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw FormatError("matrix data size does not match rows x cols");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(data[static_cast<std::size_t>(r * cols + c)]);
  }
  return m;
}

json reconstruction_json(const ReconstructionResult& r) {
  json basis = json::array();
  for (const auto& p : r.subspace_basis) basis.push_back(json::array({p.signal, p.idler}));
  return {{"truncation", r.rho.space().truncation()},
          {"basis", basis},
          {"rho", matrix_json(r.subspace_rho)},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"log_likelihood", r.log_likelihood},
          {"fidelity_mean", r.fidelity_mean},
          {"fidelity_stddev", r.fidelity_stddev}};
}

// ---------------------------------------------------------------------------

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw FormatError("line " + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

} // namespace

void write_counts_csv(std::ostream& out, const std::vector<CountRecord>& records) {
  out << "setting_id,signal_ket,idler_ket,counts,integration_time\n";
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    out << k << ',' << quote(mode_ket_json(r.setting.signal).dump()) << ','
        << quote(mode_ket_json(r.setting.idler).dump()) << ',' << r.counts << ',' << json(r.integration_time).dump()
        << '\n';
  }
}

std::vector<CountRecord> read_counts_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError("empty counts file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "setting_id,signal_ket,idler_ket,counts,integration_time") {
    throw FormatError("line 1: unexpected header '" + line + "'");
  }
  std::vector<CountRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line, line_no);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (f.size() != 5) throw FormatError(where + "expected 5 fields, got " + std::to_string(f.size()));
    try {
      CountRecord r;
      r.setting.signal = mode_ket_from_json(json::parse(f[1]));
      r.setting.idler = mode_ket_from_json(json::parse(f[2]));
      r.counts = std::stoll(f[3]);
      r.integration_time = std::stod(f[4]);
      if (r.counts < 0) throw FormatError("negative count");
      if (!(r.integration_time > 0.0)) throw FormatError("integration time must be positive");
      validate_setting(r.setting);
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError(where + e.what());
    }
  }
  return out;
}

} // namespace pathid::io
