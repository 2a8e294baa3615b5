#include "pathid/setup_format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <set>

namespace pathid::setup {

namespace {

constexpr std::string_view kWhitespace = " \t\r\f\v";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kWhitespace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kWhitespace);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list_items(std::string_view inner) {
  std::vector<std::string_view> items;
  if (trim(inner).empty()) return items;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= inner.size(); ++i) {
    if (i == inner.size() || inner[i] == ',') {
      items.push_back(trim(inner.substr(start, i - start)));
      start = i + 1;
    }
  }
  return items;
}

std::optional<std::string_view> bracket_inner(std::string_view s) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return std::nullopt;
  return s.substr(1, s.size() - 2);
}

} // namespace

// ---------------------------------------------------------------------------
// Values

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> parse_integer(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<Complex> parse_complex(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.back() != 'i') {
    auto re = parse_real(s);
    return re ? std::optional<Complex>(Complex(*re, 0.0)) : std::nullopt;
  }
  std::string_view body = s.substr(0, s.size() - 1);
  // Split at the last sign that is not part of an exponent or the leading sign.
  std::size_t split = std::string_view::npos;
  for (std::size_t i = body.size(); i-- > 1;) {
    if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string_view::npos) {
    if (body.empty() || body == "+") return Complex(0.0, 1.0);
    if (body == "-") return Complex(0.0, -1.0);
    auto im = parse_real(body);
    return im ? std::optional<Complex>(Complex(0.0, *im)) : std::nullopt;
  }
  auto re = parse_real(body.substr(0, split));
  std::string_view ims = body.substr(split);
  std::optional<double> im;
  if (ims == "+") {
    im = 1.0;
  } else if (ims == "-") {
    im = -1.0;
  } else {
    im = parse_real(ims);
  }
  if (!re || !im) return std::nullopt;
  return Complex(*re, *im);
}

std::optional<double> parse_angle(std::string_view s) {
  s = trim(s);
  if (s.size() > 3 && s.ends_with("rad")) return parse_real(s.substr(0, s.size() - 3));
  if (s.size() > 3 && s.ends_with("deg")) {
    auto d = parse_real(s.substr(0, s.size() - 3));
    if (!d) return std::nullopt;
    return *d * (std::numbers::pi / 180.0);
  }
  return std::nullopt;
}

std::optional<bool> parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  return std::nullopt;
}

std::optional<std::vector<Complex>> parse_complex_list(std::string_view s) {
  auto inner = bracket_inner(s);
  if (!inner) return std::nullopt;
  std::vector<Complex> out;
  for (auto item : split_list_items(*inner)) {
    auto z = parse_complex(item);
    if (!z) return std::nullopt;
    out.push_back(*z);
  }
  return out;
}

std::optional<std::vector<long long>> parse_integer_list(std::string_view s) {
  auto inner = bracket_inner(s);
  if (!inner) return std::nullopt;
  std::vector<long long> out;
  for (auto item : split_list_items(*inner)) {
    auto v = parse_integer(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

std::optional<ModeKet> parse_mode_ket(std::string_view s) {
  auto inner = bracket_inner(s);
  if (!inner) return std::nullopt;
  std::map<int, Complex> amps;
  for (auto item : split_list_items(*inner)) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto ell = parse_integer(item.substr(0, colon));
    auto amp = parse_complex(item.substr(colon + 1));
    if (!ell || !amp || std::abs(*ell) > 1000) return std::nullopt;
    if (!amps.emplace(static_cast<int>(*ell), *amp).second) return std::nullopt;
  }
  double n = 0.0;
  for (const auto& [l, a] : amps) n += std::norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) return std::nullopt;
  for (auto& [l, a] : amps) a /= std::sqrt(n);
  return ModeKet(std::move(amps));
}

std::string format_real(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string format_complex(Complex z) {
  if (z.imag() == 0.0) return format_real(z.real());
  std::string im = format_real(z.imag());
  if (z.real() == 0.0) return im + "i";
  if (im.front() != '-') im.insert(im.begin(), '+');
  return format_real(z.real()) + im + "i";
}

// ---------------------------------------------------------------------------

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
  case ExperimentKind::Tomography: return "tomography";
  case ExperimentKind::PhaseScan: return "phase-scan";
  case ExperimentKind::SpiralSpectrum: return "spiral-spectrum";
  case ExperimentKind::Qhq: return "qhq";
  case ExperimentKind::Coherence: return "coherence";
  }
  return "?";
}

std::optional<ExperimentKind> experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::Tomography, ExperimentKind::PhaseScan, ExperimentKind::SpiralSpectrum,
                 ExperimentKind::Qhq, ExperimentKind::Coherence}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::optional<std::string> Experiment::get(std::string_view key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  return std::nullopt;
}

ChainConfig SetupDocument::chain() const {
  ChainConfig c{{}, ModeSpace(truncation)};
  for (const auto& s : stages) c.stages.push_back(s.stage);
  return c;
}

const Experiment* SetupDocument::find_experiment(std::string_view name) const {
  for (const auto& e : experiments) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const Experiment* SetupDocument::first_experiment(ExperimentKind kind) const {
  for (const auto& e : experiments) {
    if (e.kind == kind) return &e;
  }
  return nullptr;
}

std::string Diagnostic::format() const {
  std::string s = std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  if (!expected.empty()) {
    s += " (expected: ";
    for (std::size_t i = 0; i < expected.size(); ++i) s += (i ? ", " : "") + expected[i];
    s += ")";
  }
  return s;
}

ParseError::ParseError(Diagnostic d) : Error(d.format()), diag_(std::move(d)) {}

// ---------------------------------------------------------------------------
// Document parser

namespace {

struct Token {
  std::string_view text;
  int column = 0;  // 1-based
};

using Validator = std::function<std::optional<std::string>(std::string_view)>;

struct KeySpec {
  std::string expected;
  Validator check;
};

Validator real_in(double lo, double hi, bool open_lo) {
  return [=](std::string_view v) -> std::optional<std::string> {
    auto x = parse_real(v);
    if (!x) return "not a number";
    if ((open_lo ? *x <= lo : *x < lo) || *x > hi) return "number out of range";
    return std::nullopt;
  };
}

Validator int_in(long long lo, long long hi) {
  return [=](std::string_view v) -> std::optional<std::string> {
    auto x = parse_integer(v);
    if (!x) return "not an integer";
    if (*x < lo || *x > hi) return "integer out of range";
    return std::nullopt;
  };
}

const std::map<std::string, KeySpec>& key_specs(ExperimentKind kind) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  static const KeySpec seed{"<non-negative integer>", int_in(0, std::numeric_limits<long long>::max())};
  static const KeySpec rate{"<positive number>", real_in(0.0, inf, true)};
  static const KeySpec time{"<positive number>", real_in(0.0, inf, true)};
  static const KeySpec gamma{"<number in [0,1]>", real_in(0.0, 1.0, false)};
  static const KeySpec length{"<non-negative length in mm>", real_in(0.0, inf, false)};
  static const KeySpec flag{"true|false", [](std::string_view v) -> std::optional<std::string> {
                              if (!parse_bool(v)) return "not a boolean";
                              return std::nullopt;
                            }};
  static const KeySpec ket{"[l:amplitude, ...]", [](std::string_view v) -> std::optional<std::string> {
                             if (!parse_mode_ket(v)) return "not a mode ket";
                             return std::nullopt;
                           }};
  static const KeySpec modes{"[l, ...]", [](std::string_view v) -> std::optional<std::string> {
                               auto l = parse_integer_list(v);
                               if (!l || l->empty()) return "not a non-empty integer list";
                               for (auto x : *l) {
                                 if (std::abs(x) > 1000) return "mode out of range";
                               }
                               return std::nullopt;
                             }};

  static const std::map<ExperimentKind, std::map<std::string, KeySpec>> specs = {
      {ExperimentKind::Tomography,
       {{"seed", seed},
        {"rate", rate},
        {"time", time},
        {"gamma", gamma},
        {"modes", modes},
        {"noiseless", flag},
        {"resamples", {"<integer >= 10>", int_in(10, 1000000)}},
        {"max_iter", {"<positive integer>", int_in(1, 100000000)}},
        {"tol", {"<positive number>", real_in(0.0, inf, true)}}}},
      {ExperimentKind::PhaseScan,
       {{"seed", seed},
        {"rate", rate},
        {"time", time},
        {"gamma", gamma},
        {"points", {"<integer >= 8>", int_in(8, 1000000)}},
        {"stage", {"<phase-shifter index>", int_in(0, 1000000)}},
        {"signal", ket},
        {"idler", ket},
        {"noiseless", flag}}},
      {ExperimentKind::SpiralSpectrum,
       {{"range", {"<non-negative integer>", int_in(0, 1000)}},
        {"crystal", {"<crystal index>", int_in(0, 1000000)}},
        {"seed", seed},
        {"rate", rate},
        {"time", time}}},
      {ExperimentKind::Qhq,
       {{"input", {"[h, v]", [](std::string_view v) -> std::optional<std::string> {
                     auto l = parse_complex_list(v);
                     if (!l || l->size() != 2) return "not a two-component Jones vector";
                     if (std::norm((*l)[0]) + std::norm((*l)[1]) == 0.0) return "zero Jones vector";
                     return std::nullopt;
                   }}},
        {"target", {"<angle>rad|<angle>deg", [](std::string_view v) -> std::optional<std::string> {
                      if (!parse_angle(v)) return "not an angle";
                      return std::nullopt;
                    }}}}},
      {ExperimentKind::Coherence, {{"lpa", length}, {"lpb", length}, {"lspdc", length}, {"lcoh", length}}},
  };
  return specs.at(kind);
}

const std::vector<std::string> kStageKeywords = {"space", "crystal", "spp", "mirror", "phase", "modeshift",
                                                 "[experiment"};

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  SetupDocument run() {
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text_.size()) {
      const auto nl = text_.find('\n', pos);
      const std::string_view line = text_.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      ++line_no;
      parse_line(line, line_no);
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
    validate();
    return std::move(doc_);
  }

private:
  [[noreturn]] void fail(int line, int column, std::string message, std::vector<std::string> expected = {}) {
    throw ParseError(Diagnostic{line, column, std::move(message), std::move(expected)});
  }

  // Splits on whitespace, keeping [...] groups together and dropping # comments.
  std::vector<Token> tokenize(std::string_view line, int line_no) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && kWhitespace.find(line[i]) != std::string_view::npos) ++i;
      if (i >= line.size() || line[i] == '#') break;
      const std::size_t start = i;
      int depth = 0;
      while (i < line.size()) {
        const char c = line[i];
        if (c == '[') ++depth;
        if (c == ']') --depth;
        if (depth == 0 && (kWhitespace.find(c) != std::string_view::npos || c == '#')) break;
        ++i;
      }
      if (depth > 0) fail(line_no, static_cast<int>(start) + 1, "unterminated '['", {"]"});
      out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
  }

  void parse_line(std::string_view raw, int line_no) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto c = static_cast<unsigned char>(raw[i]);
      if (c < 0x20 && c != '\t' && c != '\r') fail(line_no, static_cast<int>(i) + 1, "control character in input");
    }
    const auto first = raw.find_first_not_of(kWhitespace);
    if (first == std::string_view::npos || raw[first] == '#') return;

    if (raw[first] == '[') {
      parse_header(raw, line_no, static_cast<int>(first) + 1);
      return;
    }
    if (current_ != nullptr) {
      parse_param(raw, line_no);
      return;
    }
    parse_stage(tokenize(raw, line_no), line_no);
  }

  void parse_header(std::string_view raw, int line_no, int col) {
    std::string_view body = raw.substr(static_cast<std::size_t>(col - 1));
    const auto hash = body.find('#');
    if (hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.back() != ']') fail(line_no, col + static_cast<int>(body.size()), "unterminated experiment header", {"]"});
    const std::string_view inner = body.substr(1, body.size() - 2);
    auto toks = tokenize(inner, line_no);
    for (auto& t : toks) t.column += col;
    if (toks.empty() || toks[0].text != "experiment") {
      fail(line_no, toks.empty() ? col + 1 : toks[0].column, "expected experiment header", {"experiment"});
    }
    std::vector<std::string> kinds;
    for (auto k : {ExperimentKind::Tomography, ExperimentKind::PhaseScan, ExperimentKind::SpiralSpectrum,
                   ExperimentKind::Qhq, ExperimentKind::Coherence}) {
      kinds.emplace_back(to_string(k));
    }
    if (toks.size() < 2) fail(line_no, col + static_cast<int>(body.size()) - 1, "missing experiment kind", kinds);
    auto kind = experiment_kind(toks[1].text);
    if (!kind) fail(line_no, toks[1].column, "unknown experiment kind '" + std::string(toks[1].text) + "'", kinds);
    if (toks.size() < 3) fail(line_no, col + static_cast<int>(body.size()) - 1, "missing experiment name", {"<name>"});
    if (toks.size() > 3) fail(line_no, toks[3].column, "unexpected token after experiment name", {"]"});
    const std::string name(toks[2].text);
    if (!valid_identifier(name, true)) fail(line_no, toks[2].column, "invalid experiment name", {"<name>"});
    if (doc_.find_experiment(name) != nullptr) fail(line_no, toks[2].column, "duplicate experiment name '" + name + "'");
    doc_.experiments.push_back({*kind, name, {}, line_no});
    current_ = &doc_.experiments.back();
  }

  static bool valid_identifier(std::string_view s, bool allow_dash) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [&](char c) {
      return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
             (allow_dash && (c == '-' || c == '.'));
    });
  }

  void parse_param(std::string_view raw, int line_no) {
    const auto first = raw.find_first_not_of(kWhitespace);
    const int col = static_cast<int>(first) + 1;
    std::string_view body = raw.substr(first);
    const auto hash = body.find('#');
    if (hash != std::string_view::npos) body = body.substr(0, hash);
    const auto eq = body.find('=');
    const auto& specs = key_specs(current_->kind);
    std::vector<std::string> keys;
    for (const auto& [k, s] : specs) keys.push_back(k + "=");
    if (eq == std::string_view::npos) fail(line_no, col, "expected key=value", keys);
    const std::string key(trim(body.substr(0, eq)));
    const auto it = specs.find(key);
    if (it == specs.end()) {
      fail(line_no, col, "unknown key '" + key + "' for " + std::string(to_string(current_->kind)) + " experiment", keys);
    }
    if (current_->get(key)) fail(line_no, col, "duplicate key '" + key + "'");
    const std::string_view value = trim(body.substr(eq + 1));
    const int vcol = col + static_cast<int>(eq) + 1 +
                     static_cast<int>(body.substr(eq + 1).find_first_not_of(kWhitespace) == std::string_view::npos
                                          ? 0
                                          : body.substr(eq + 1).find_first_not_of(kWhitespace));
    if (value.empty()) fail(line_no, vcol, "missing value for '" + key + "'", {it->second.expected});
    if (auto err = it->second.check(value)) fail(line_no, vcol, *err + " for '" + key + "'", {it->second.expected});
    current_->params.emplace_back(key, std::string(value));
  }

  void expect_count(const std::vector<Token>& toks, std::size_t n, int line_no, const std::string& what) {
    if (toks.size() < n) {
      const Token& last = toks.back();
      fail(line_no, last.column + static_cast<int>(last.text.size()), "missing argument", {what});
    }
    if (toks.size() > n) fail(line_no, toks[n].column, "unexpected token '" + std::string(toks[n].text) + "'", {"end of line"});
  }

  void parse_stage(const std::vector<Token>& toks, int line_no) {
    const Token& head = toks.front();
    const std::string_view kw = head.text;
    if (kw == "space") {
      expect_count(toks, 2, line_no, "<truncation>");
      if (!doc_.stages.empty() || saw_space_) fail(line_no, head.column, "space must be declared once, before any stage");
      auto l = parse_integer(toks[1].text);
      if (!l || *l < 0 || *l > 20) fail(line_no, toks[1].column, "invalid truncation", {"<integer in [0,20]>"});
      doc_.truncation = static_cast<int>(*l);
      saw_space_ = true;
    } else if (kw == "crystal") {
      parse_crystal(toks, line_no);
    } else if (kw == "spp") {
      expect_count(toks, 2, line_no, "<signed integer>");
      auto d = parse_integer(toks[1].text);
      if (!d || std::abs(*d) > 1000) fail(line_no, toks[1].column, "invalid OAM shift", {"<signed integer>"});
      doc_.stages.push_back({PumpModeShifter{static_cast<int>(*d)}, line_no});
    } else if (kw == "modeshift") {
      expect_count(toks, 2, line_no, "<signed integer>");
      auto d = parse_integer(toks[1].text);
      if (!d || std::abs(*d) > 1000) fail(line_no, toks[1].column, "invalid OAM shift", {"<signed integer>"});
      doc_.stages.push_back({DownconversionModeShifter{static_cast<int>(*d)}, line_no});
    } else if (kw == "mirror") {
      expect_count(toks, 1, line_no, "");
      doc_.stages.push_back({Mirror{}, line_no});
    } else if (kw == "phase") {
      expect_count(toks, 2, line_no, "<angle>rad|<angle>deg");
      auto phi = parse_angle(toks[1].text);
      if (!phi) fail(line_no, toks[1].column, "invalid phase", {"<number>rad", "<number>deg"});
      doc_.stages.push_back({PhaseShifter{*phi}, line_no});
    } else {
      fail(line_no, head.column, "unknown directive '" + std::string(kw) + "'", kStageKeywords);
    }
  }

  void parse_crystal(const std::vector<Token>& toks, int line_no) {
    CrystalSpec spec;
    std::set<std::string_view> seen;
    for (std::size_t i = 1; i < toks.size(); ++i) {
      const Token& t = toks[i];
      const auto eq = t.text.find('=');
      const std::vector<std::string> keys = {"amp=", "pump_oam=", "alpha="};
      if (eq == std::string_view::npos) fail(line_no, t.column, "expected key=value", keys);
      const std::string_view key = t.text.substr(0, eq);
      const std::string_view value = t.text.substr(eq + 1);
      const int vcol = t.column + static_cast<int>(eq) + 1;
      if (!seen.insert(key).second) fail(line_no, t.column, "duplicate key '" + std::string(key) + "'");
      if (key == "amp") {
        auto a = parse_real(value);
        if (!a || *a < 0.0) fail(line_no, vcol, "invalid pump amplitude", {"<non-negative number>"});
        spec.pump_amplitude = *a;
      } else if (key == "pump_oam") {
        auto l = parse_integer(value);
        if (!l || std::abs(*l) > 1000) fail(line_no, vcol, "invalid pump OAM", {"<even integer>"});
        spec.pump_oam = static_cast<int>(*l);
      } else if (key == "alpha") {
        auto list = parse_complex_list(value);
        if (!list || list->empty()) fail(line_no, vcol, "invalid spiral coefficients", {"[c0, c1, ...]"});
        spec.spiral = *list;
      } else {
        fail(line_no, t.column, "unknown crystal key '" + std::string(key) + "'", keys);
      }
    }
    doc_.stages.push_back({spec, line_no});
  }

  void validate() {
    if (doc_.stages.empty() || doc_.chain().crystal_count() == 0) {
      fail(doc_.stages.empty() ? 1 : doc_.stages.back().line, 1, "no crystal stage", {"crystal"});
    }
    try {
      chain_contributions(doc_.chain());
    } catch (const StageError& e) {
      const auto& decl = doc_.stages[e.stage()];
      fail(decl.line, 1, e.what());
    }
  }

  std::string_view text_;
  SetupDocument doc_;
  Experiment* current_ = nullptr;
  bool saw_space_ = false;
};

} // namespace

SetupDocument parse_setup(std::string_view text) { return Parser(text).run(); }

std::string print_setup(const SetupDocument& doc) {
  std::string out = "space " + std::to_string(doc.truncation) + "\n";
  for (const auto& decl : doc.stages) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, CrystalSpec>) {
            out += "crystal amp=" + format_real(s.pump_amplitude) + " pump_oam=" + std::to_string(s.pump_oam) +
                   " alpha=[";
            for (std::size_t k = 0; k < s.spiral.size(); ++k) out += (k ? ", " : "") + format_complex(s.spiral[k]);
            out += "]\n";
          } else if constexpr (std::is_same_v<T, PumpModeShifter>) {
            out += "spp " + std::string(s.delta_oam >= 0 ? "+" : "") + std::to_string(s.delta_oam) + "\n";
          } else if constexpr (std::is_same_v<T, DownconversionModeShifter>) {
            out += "modeshift " + std::to_string(s.delta_per_photon) + "\n";
          } else if constexpr (std::is_same_v<T, PhaseShifter>) {
            out += "phase " + format_real(s.phi) + "rad\n";
          } else {
            out += "mirror\n";
          }
        },
        decl.stage);
  }
  for (const auto& e : doc.experiments) {
    out += "\n[experiment " + std::string(to_string(e.kind)) + " " + e.name + "]\n";
    for (const auto& [k, v] : e.params) out += k + "=" + v + "\n";
  }
  return out;
}

} // namespace pathid::setup
