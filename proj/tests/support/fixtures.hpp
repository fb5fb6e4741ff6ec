#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "htppn/model_io.hpp"

namespace htppn::testing {

inline std::string corpus_path(std::string_view name) { return std::string(HTPPN_CORPUS_DIR) + "/" + std::string(name); }

inline const char* const kCorpus[] = {"healthcare.htppn", "minimal.htppn", "nested.htppn",
                                      "chain.htppn", "retry_loop.htppn", "parallel_choice.htppn"};

/// Parses in strict mode; throws std::runtime_error with the diagnostics on
/// failure so a test fails loudly.
inline Htppn parse_or_throw(const ModelSource& src) {
  ParseResult r = parse_model(src);
  if (!r.ok()) {
    std::string msg;
    for (const auto& d : r.diagnostics) msg += format_diagnostic(d, src.origin) + "\n";
    throw std::runtime_error(msg);
  }
  return std::move(*r.model);
}

inline Htppn parse_text(std::string text) { return parse_or_throw(ModelSource{std::move(text), "<test>"}); }

inline Htppn load_corpus(std::string_view name) { return parse_or_throw(load_source(corpus_path(name))); }

}  // namespace htppn::testing
