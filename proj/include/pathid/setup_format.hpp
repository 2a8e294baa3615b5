#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pathid/source_chain.hpp"

namespace pathid::setup {

// Line-oriented setup description:
//
//   # comment
//   space 4
//   crystal amp=0.577 pump_oam=0 alpha=[1, 0.2+0.1i]
//   spp +4
//   mirror
//   phase 120deg            (or 2.0944rad)
//   modeshift 1
//
//   [experiment tomography psi1]
//   seed=7
//   rate=1e5
//
// Stages come first, experiment blocks after. Unknown directives and keys
// are rejected.

enum class ExperimentKind { Tomography, PhaseScan, SpiralSpectrum, Qhq, Coherence };

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> experiment_kind(std::string_view name);

struct Experiment {
  ExperimentKind kind = ExperimentKind::Tomography;
  std::string name;
  /// key -> value text, in document order.
  std::vector<std::pair<std::string, std::string>> params;
  int line = 0;

  std::optional<std::string> get(std::string_view key) const;
  bool operator==(const Experiment& o) const { return kind == o.kind && name == o.name && params == o.params; }
};

struct StageDecl {
  ChainStage stage;
  int line = 0;

  bool operator==(const StageDecl& o) const { return stage == o.stage; }
};

struct SetupDocument {
  int truncation = kDefaultTruncation;
  std::vector<StageDecl> stages;
  std::vector<Experiment> experiments;

  ChainConfig chain() const;
  const Experiment* find_experiment(std::string_view name) const;
  const Experiment* first_experiment(ExperimentKind kind) const;

  bool operator==(const SetupDocument&) const = default;
};

struct Diagnostic {
  int line = 0;
  int column = 0;
  std::string message;
  std::vector<std::string> expected;

  /// "line:col: message (expected: a, b)"
  std::string format() const;
};

class ParseError : public Error {
public:
  explicit ParseError(Diagnostic d);
  const Diagnostic& diagnostic() const { return diag_; }

private:
  Diagnostic diag_;
};

/// Parses and validates a setup document; the chain must build. Throws
/// ParseError carrying the line and column of the first problem.
SetupDocument parse_setup(std::string_view text);

/// Canonical text form; parse_setup(print_setup(d)) == d.
std::string print_setup(const SetupDocument& doc);

// Value grammar shared with the CLI.
std::optional<double> parse_real(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);
std::optional<Complex> parse_complex(std::string_view s);
/// "<x>rad" or "<x>deg", returned in radians.
std::optional<double> parse_angle(std::string_view s);
std::optional<bool> parse_bool(std::string_view s);
/// "[a, b, ...]" of complex literals.
std::optional<std::vector<Complex>> parse_complex_list(std::string_view s);
std::optional<std::vector<long long>> parse_integer_list(std::string_view s);
/// "[l:amp, ...]", normalized.
std::optional<ModeKet> parse_mode_ket(std::string_view s);

std::string format_real(double x);
std::string format_complex(Complex z);

} // namespace pathid::setup
