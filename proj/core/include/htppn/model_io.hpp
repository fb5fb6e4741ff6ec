#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htppn/model.hpp"

namespace htppn {

struct ModelSource {
  std::string text;
  std::string origin = "<memory>";
};

/// Reads a file into a ModelSource. Throws std::runtime_error if the file
/// cannot be opened.
ModelSource load_source(const std::string& path);

enum class Severity { Error, Warning };

struct ParseDiagnostic {
  Severity severity = Severity::Error;
  std::string message;
  int line = 1;    // 1-based
  int column = 1;  // 1-based
};

/// "origin:line:column: error: message"
std::string format_diagnostic(const ParseDiagnostic& d, std::string_view origin);

struct ParseResult {
  std::optional<Htppn> model;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
};

enum class ParseMode {
  // Syntax plus the positional structure checks: duplicate ids, dangling
  // and non-bipartite arcs, missing input/output declarations.
  Strict,
  // Syntax only. Structural problems are left for validate_structure.
  Syntax,
};

/// Parses the .htppn text format:
///
///   model "name" {
///     place p { capacity 1; window [0, 3]; }
///     transition t concrete { service "S"; qos { r 2; c 5; a 0.9; tp 10; } window [1, 3]; duration 0; }
///     transition d dummy { alpha 0.5; iterations 2; }
///     transition R refinable { branch b1 alpha 0.5; { ...items... } branch b2 { ... } }
///     arc p -> t;
///     input p;  output q;
///   }
///
/// "#" starts a comment. NUM accepts decimal notation and "inf"; a window
/// upper bound may be "inf". Never throws; every failure is a diagnostic.
ParseResult parse_model(const ModelSource& src, ParseMode mode = ParseMode::Strict);

/// Canonical text: places, transitions, arcs, then input/output, each sorted
/// by id (branches keep their order). Structurally equal models serialize to
/// identical bytes.
std::string serialize_model(const Htppn& model);

/// Graphviz digraph. Places are ellipses (input/output with extra
/// peripheries), concrete transitions boxes, dummy transitions thin filled
/// bars, refinable transitions clusters holding one cluster per branch.
std::string export_dot(const Htppn& model);
std::string export_dot(const FlatNet& net);

}  // namespace htppn
