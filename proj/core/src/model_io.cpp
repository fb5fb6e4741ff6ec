#include "htppn/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace htppn {

ModelSource load_source(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return ModelSource{buf.str(), path};
}

std::string format_diagnostic(const ParseDiagnostic& d, std::string_view origin) {
  return fmt::format("{}:{}:{}: {}: {}", origin, d.line, d.column,
                     d.severity == Severity::Error ? "error" : "warning", d.message);
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Ident, String, Number, LBrace, RBrace, LBracket, RBracket, Comma, Semi, Arrow, End, Bad };

struct Pos {
  int line = 1;
  int column = 1;
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  Pos pos;
};

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
    Token tok;
    tok.pos = pos_;
    if (i_ >= text_.size()) return tok;
    const char c = text_[i_];
    auto single = [&](Tok kind) {
      advance();
      tok.kind = kind;
      tok.text = std::string(1, c);
      return tok;
    };
    switch (c) {
      case '{': return single(Tok::LBrace);
      case '}': return single(Tok::RBrace);
      case '[': return single(Tok::LBracket);
      case ']': return single(Tok::RBracket);
      case ',': return single(Tok::Comma);
      case ';': return single(Tok::Semi);
      default: break;
    }
    if (c == '-' && peek(1) == '>') {
      advance();
      advance();
      tok.kind = Tok::Arrow;
      tok.text = "->";
      return tok;
    }
    if (c == '"') return string_literal(tok);
    if (digit(c) || (c == '-' && (digit(peek(1)) || peek(1) == '.')) || (c == '.' && digit(peek(1))))
      return number(tok);
    if (ident_start(c)) {
      while (i_ < text_.size() && ident_char(text_[i_])) tok.text += advance();
      tok.kind = Tok::Ident;
      return tok;
    }
    tok.kind = Tok::Bad;
    tok.text = fmt::format("unexpected character '{}'", printable(c));
    advance();
    return tok;
  }

 private:
  static std::string printable(char c) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u >= 0x7f) return fmt::format("\\x{:02x}", u);
    return std::string(1, c);
  }

  char peek(std::size_t ahead) const { return i_ + ahead < text_.size() ? text_[i_ + ahead] : '\0'; }

  char advance() {
    const char c = text_[i_++];
    if (c == '\n') {
      ++pos_.line;
      pos_.column = 1;
    } else {
      ++pos_.column;
    }
    return c;
  }

  void skip_space() {
    while (i_ < text_.size()) {
      const char c = text_[i_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (i_ < text_.size() && text_[i_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  Token string_literal(Token& tok) {
    advance();
    while (i_ < text_.size()) {
      char c = advance();
      if (c == '"') {
        tok.kind = Tok::String;
        return tok;
      }
      if (c == '\n') break;
      if (c == '\\') {
        if (i_ >= text_.size()) break;
        const char e = advance();
        switch (e) {
          case '"': tok.text += '"'; break;
          case '\\': tok.text += '\\'; break;
          case 'n': tok.text += '\n'; break;
          case 't': tok.text += '\t'; break;
          default:
            tok.kind = Tok::Bad;
            tok.text = fmt::format("unknown escape '\\{}' in string", printable(e));
            return tok;
        }
        continue;
      }
      tok.text += c;
    }
    tok.kind = Tok::Bad;
    tok.text = "unterminated string literal";
    return tok;
  }

  Token number(Token& tok) {
    if (text_[i_] == '-') tok.text += advance();
    while (i_ < text_.size() && digit(text_[i_])) tok.text += advance();
    if (i_ < text_.size() && text_[i_] == '.') {
      tok.text += advance();
      while (i_ < text_.size() && digit(text_[i_])) tok.text += advance();
    }
    if (i_ < text_.size() && (text_[i_] == 'e' || text_[i_] == 'E')) {
      std::size_t k = 1;
      if (peek(1) == '+' || peek(1) == '-') k = 2;
      if (digit(peek(k))) {
        for (std::size_t j = 0; j < k; ++j) tok.text += advance();
        while (i_ < text_.size() && digit(text_[i_])) tok.text += advance();
      }
    }
    tok.kind = Tok::Number;
    return tok;
  }

  std::string_view text_;
  std::size_t i_ = 0;
  Pos pos_;
};

// ---------------------------------------------------------------------------
// Parser

struct SyntaxError {
  std::string message;
  Pos pos;
};

constexpr int kMaxNesting = 64;

// Where each element of a scope was declared, for positional diagnostics.
struct ScopePositions {
  std::map<std::string, Pos> places;
  std::map<std::string, Pos> transitions;
  std::vector<Pos> arcs;
};

class Parser {
 public:
  Parser(const ModelSource& src, ParseMode mode) : lexer_(src.text), mode_(mode) { bump(); }

  ParseResult run() {
    ParseResult result;
    try {
      Htppn model = parse_model();
      if (mode_ == ParseMode::Strict) check_top(model);
      std::stable_sort(diagnostics_.begin(), diagnostics_.end(), [](const auto& a, const auto& b) {
        return std::tie(a.line, a.column) < std::tie(b.line, b.column);
      });
      if (diagnostics_.empty()) result.model = std::move(model);
    } catch (const SyntaxError& e) {
      diagnostics_.push_back({Severity::Error, e.message, e.pos.line, e.pos.column});
    }
    result.diagnostics = std::move(diagnostics_);
    return result;
  }

 private:
  [[noreturn]] void fail(const std::string& message, Pos pos) { throw SyntaxError{message, pos}; }
  [[noreturn]] void fail(const std::string& message) { fail(message, tok_.pos); }

  void error(const std::string& message, Pos pos) {
    diagnostics_.push_back({Severity::Error, message, pos.line, pos.column});
  }

  void bump() {
    tok_ = lexer_.next();
    if (tok_.kind == Tok::Bad) fail(tok_.text);
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::End: return "end of input";
      case Tok::String: return "string literal";
      case Tok::Number: return fmt::format("number '{}'", t.text);
      default: return fmt::format("'{}'", t.text);
    }
  }

  void expect(Tok kind, std::string_view what) {
    if (tok_.kind != kind) fail(fmt::format("expected {}, found {}", what, describe(tok_)));
    bump();
  }

  bool at_keyword(std::string_view kw) const { return tok_.kind == Tok::Ident && tok_.text == kw; }

  void keyword(std::string_view kw) {
    if (!at_keyword(kw)) fail(fmt::format("expected '{}', found {}", kw, describe(tok_)));
    bump();
  }

  std::pair<std::string, Pos> ident(std::string_view what) {
    if (tok_.kind != Tok::Ident) fail(fmt::format("expected {}, found {}", what, describe(tok_)));
    auto out = std::make_pair(tok_.text, tok_.pos);
    bump();
    return out;
  }

  std::string string_literal(std::string_view what) {
    if (tok_.kind != Tok::String) fail(fmt::format("expected {}, found {}", what, describe(tok_)));
    std::string out = tok_.text;
    bump();
    return out;
  }

  double number(std::string_view what) {
    if (at_keyword("inf")) {
      bump();
      return kInf;
    }
    if (tok_.kind != Tok::Number) fail(fmt::format("expected {}, found {}", what, describe(tok_)));
    double value = 0.0;
    const auto& s = tok_.text;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(fmt::format("malformed number '{}'", s));
    bump();
    return value;
  }

  Time integer(std::string_view what, bool allow_inf) {
    if (allow_inf && at_keyword("inf")) {
      bump();
      return kTimeInfinity;
    }
    if (tok_.kind != Tok::Number) fail(fmt::format("expected {}, found {}", what, describe(tok_)));
    Time value = 0;
    const auto& s = tok_.text;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || (!allow_inf && value == kTimeInfinity))
      fail(fmt::format("expected an integer, found '{}'", s));
    bump();
    return value;
  }

  TimeWindow window() {
    keyword("window");
    expect(Tok::LBracket, "'['");
    TimeWindow w;
    w.min = integer("window minimum", false);
    expect(Tok::Comma, "','");
    w.max = integer("window maximum", true);
    expect(Tok::RBracket, "']'");
    expect(Tok::Semi, "';'");
    return w;
  }

  Htppn parse_model() {
    Htppn model;
    keyword("model");
    model.name = string_literal("model name");
    expect(Tok::LBrace, "'{'");
    ScopePositions positions;
    std::optional<Pos> input_pos;
    std::optional<Pos> output_pos;
    while (tok_.kind != Tok::RBrace) {
      if (at_keyword("input") || at_keyword("output")) {
        const bool input = tok_.text == "input";
        const Pos pos = tok_.pos;
        bump();
        auto [id, id_pos] = ident("place id");
        expect(Tok::Semi, "';'");
        auto& slot = input ? input_pos : output_pos;
        if (slot) error(fmt::format("duplicate {} declaration", input ? "input" : "output"), pos);
        slot = id_pos;
        (input ? model.input_place : model.output_place) = id;
        continue;
      }
      item(model.net, positions, 0);
    }
    const Pos close = tok_.pos;
    bump();
    if (tok_.kind != Tok::End) fail(fmt::format("unexpected {} after model", describe(tok_)));
    reset_initial_marking(model);
    if (mode_ == ParseMode::Strict) {
      check_scope(model.net, positions);
      if (!input_pos) error("missing input declaration", close);
      else if (model.net.find_place(model.input_place) == nullptr)
        error(fmt::format("input '{}' is not a declared place", model.input_place), *input_pos);
      if (!output_pos) error("missing output declaration", close);
      else if (model.net.find_place(model.output_place) == nullptr)
        error(fmt::format("output '{}' is not a declared place", model.output_place), *output_pos);
    }
    return model;
  }

  void declare(ScopePositions& positions, const std::string& id, Pos pos, bool is_place) {
    if (positions.places.contains(id) || positions.transitions.contains(id)) {
      if (mode_ == ParseMode::Strict) error(fmt::format("duplicate id '{}'", id), pos);
      return;
    }
    (is_place ? positions.places : positions.transitions).emplace(id, pos);
  }

  void item(SubNet& net, ScopePositions& positions, int depth) {
    if (at_keyword("place")) {
      bump();
      Place p;
      Pos pos;
      std::tie(p.id, pos) = ident("place id");
      expect(Tok::LBrace, "'{'");
      bool seen_capacity = false;
      bool seen_window = false;
      while (tok_.kind != Tok::RBrace) {
        if (at_keyword("capacity") && !seen_capacity) {
          bump();
          const Time c = integer("capacity", false);
          if (c > std::numeric_limits<int>::max() || c < std::numeric_limits<int>::min())
            fail("capacity out of range");
          p.capacity = static_cast<int>(c);
          expect(Tok::Semi, "';'");
          seen_capacity = true;
        } else if (at_keyword("window") && !seen_window) {
          p.window = window();
          seen_window = true;
        } else {
          fail(fmt::format("unexpected {} in place body", describe(tok_)));
        }
      }
      bump();
      declare(positions, p.id, pos, true);
      net.places.push_back(std::move(p));
    } else if (at_keyword("transition")) {
      bump();
      auto [id, pos] = ident("transition id");
      auto [kind, kind_pos] = ident("transition kind");
      expect(Tok::LBrace, "'{'");
      Transition t;
      if (kind == "concrete") t = concrete_body(id);
      else if (kind == "dummy") t = dummy_body(id);
      else if (kind == "refinable") t = refinable_body(id, depth);
      else fail(fmt::format("unknown transition kind '{}'", kind), kind_pos);
      expect(Tok::RBrace, "'}'");
      declare(positions, t.id, pos, false);
      net.transitions.push_back(std::move(t));
    } else if (at_keyword("arc")) {
      const Pos pos = tok_.pos;
      bump();
      Arc arc;
      arc.source = ident("arc source").first;
      expect(Tok::Arrow, "'->'");
      arc.target = ident("arc target").first;
      expect(Tok::Semi, "';'");
      net.arcs.push_back(std::move(arc));
      positions.arcs.push_back(pos);
    } else if (at_keyword("input") || at_keyword("output")) {
      fail(fmt::format("'{}' is only allowed at model level", tok_.text));
    } else if (tok_.kind == Tok::Ident) {
      fail(fmt::format("unknown keyword '{}'", tok_.text));
    } else {
      fail(fmt::format("expected an item, found {}", describe(tok_)));
    }
  }

  Transition concrete_body(const std::string& id) {
    std::optional<std::string> service;
    if (at_keyword("service")) {
      bump();
      service = string_literal("service name");
      expect(Tok::Semi, "';'");
    }
    Transition t;
    if (at_keyword("unavailable")) {
      bump();
      expect(Tok::Semi, "';'");
      t = Transition::make_unavailable(id, std::move(service));
    } else {
      keyword("qos");
      expect(Tok::LBrace, "'{'");
      QosVector q;
      keyword("r");
      q.response_time = number("response time");
      expect(Tok::Semi, "';'");
      keyword("c");
      q.cost = number("cost");
      expect(Tok::Semi, "';'");
      keyword("a");
      q.availability = number("availability");
      expect(Tok::Semi, "';'");
      keyword("tp");
      q.throughput = number("throughput");
      expect(Tok::Semi, "';'");
      expect(Tok::RBrace, "'}'");
      t = Transition::make_concrete(id, std::move(service), q);
    }
    if (at_keyword("window")) t.window = window();
    if (at_keyword("duration")) {
      bump();
      t.duration = integer("duration", false);
      expect(Tok::Semi, "';'");
    }
    return t;
  }

  Transition dummy_body(const std::string& id) {
    Transition t = Transition::make_dummy(id);
    if (at_keyword("alpha")) {
      bump();
      t.dummy().alpha = number("alpha");
      expect(Tok::Semi, "';'");
    }
    if (at_keyword("iterations")) {
      bump();
      t.dummy().iterations = number("iterations");
      expect(Tok::Semi, "';'");
    }
    return t;
  }

  Transition refinable_body(const std::string& id, int depth) {
    if (depth >= kMaxNesting) fail("refinable nesting too deep");
    std::vector<Branch> branches;
    std::set<std::string> seen;
    while (at_keyword("branch")) {
      bump();
      Branch b;
      Pos pos;
      std::tie(b.id, pos) = ident("branch id");
      if (!seen.insert(b.id).second && mode_ == ParseMode::Strict)
        error(fmt::format("duplicate branch id '{}'", b.id), pos);
      if (at_keyword("alpha")) {
        bump();
        b.alpha = number("alpha");
        expect(Tok::Semi, "';'");
      }
      expect(Tok::LBrace, "'{'");
      ScopePositions positions;
      while (tok_.kind != Tok::RBrace) item(b.net, positions, depth + 1);
      bump();
      if (mode_ == ParseMode::Strict) check_scope(b.net, positions);
      branches.push_back(std::move(b));
    }
    if (branches.empty()) fail(fmt::format("expected 'branch', found {}", describe(tok_)));
    return Transition::make_refinable(id, std::move(branches));
  }

  void check_scope(const SubNet& net, const ScopePositions& positions) {
    for (std::size_t i = 0; i < net.arcs.size(); ++i) {
      const auto& arc = net.arcs[i];
      const Pos pos = positions.arcs[i];
      const bool src_place = positions.places.contains(arc.source);
      const bool dst_place = positions.places.contains(arc.target);
      const bool src_known = src_place || positions.transitions.contains(arc.source);
      const bool dst_known = dst_place || positions.transitions.contains(arc.target);
      if (!src_known || !dst_known) {
        error(fmt::format("dangling arc: '{}' is not declared in this scope",
                          src_known ? arc.target : arc.source),
              pos);
      } else if (src_place == dst_place) {
        error(fmt::format("bipartite arc: '{} -> {}' connects two {}", arc.source, arc.target,
                          src_place ? "places" : "transitions"),
              pos);
      }
    }
  }

  void check_top(const Htppn&) {}

  Lexer lexer_;
  ParseMode mode_;
  Token tok_;
  std::vector<ParseDiagnostic> diagnostics_;
};

// ---------------------------------------------------------------------------
// Serializer

std::string number_text(double x) {
  if (x == kInf) return "inf";
  return fmt::format("{}", x);
}

std::string time_text(Time t) { return is_infinite(t) ? "inf" : fmt::format("{}", t); }

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

class Writer {
 public:
  std::string take() { return std::move(out_); }

  void line(int indent, std::string_view text) {
    out_.append(static_cast<std::size_t>(indent) * 2, ' ');
    out_ += text;
    out_ += '\n';
  }

  void scope(const SubNet& net, int indent) {
    for (const auto& p : net.places) {
      std::string body;
      if (p.capacity != 1) body += fmt::format(" capacity {};", p.capacity);
      if (p.window != TimeWindow{}) body += fmt::format(" window [{}, {}];", p.window.min, time_text(p.window.max));
      line(indent, fmt::format("place {} {{{} }}", p.id, body));
    }
    for (const auto& t : net.transitions) transition(t, indent);
    for (const auto& a : net.arcs) line(indent, fmt::format("arc {} -> {};", a.source, a.target));
  }

 private:
  void transition(const Transition& t, int indent) {
    switch (t.kind()) {
      case TransitionKind::Dummy: {
        std::string body;
        if (t.dummy().alpha) body += fmt::format(" alpha {};", number_text(*t.dummy().alpha));
        if (t.dummy().iterations) body += fmt::format(" iterations {};", number_text(*t.dummy().iterations));
        line(indent, fmt::format("transition {} dummy {{{} }}", t.id, body));
        return;
      }
      case TransitionKind::Concrete: {
        const auto& c = t.concrete();
        std::string body;
        if (c.service) body += fmt::format(" service {};", quoted(*c.service));
        if (c.unavailable) {
          body += " unavailable;";
        } else {
          body += fmt::format(" qos {{ r {}; c {}; a {}; tp {}; }}", number_text(c.qos.response_time),
                              number_text(c.qos.cost), number_text(c.qos.availability),
                              number_text(c.qos.throughput));
        }
        if (t.window != TimeWindow{})
          body += fmt::format(" window [{}, {}];", t.window.min, time_text(t.window.max));
        if (t.duration != 0) body += fmt::format(" duration {};", t.duration);
        line(indent, fmt::format("transition {} concrete {{{} }}", t.id, body));
        return;
      }
      case TransitionKind::Refinable: {
        line(indent, fmt::format("transition {} refinable {{", t.id));
        for (const auto& b : t.refinable().branches) {
          std::string head = fmt::format("branch {}", b.id);
          if (b.alpha) head += fmt::format(" alpha {};", number_text(*b.alpha));
          line(indent + 1, head + " {");
          scope(canonicalized(b.net), indent + 2);
          line(indent + 1, "}");
        }
        line(indent, "}");
        return;
      }
    }
  }

  std::string out_;
};

}  // namespace

ParseResult parse_model(const ModelSource& src, ParseMode mode) {
  try {
    return Parser(src, mode).run();
  } catch (const SyntaxError& e) {
    // Raised while priming the first token.
    ParseResult r;
    r.diagnostics.push_back({Severity::Error, e.message, e.pos.line, e.pos.column});
    return r;
  }
}

std::string serialize_model(const Htppn& model) {
  Writer w;
  w.line(0, fmt::format("model {} {{", quoted(model.name)));
  w.scope(canonicalized(model.net), 1);
  if (!model.input_place.empty()) w.line(1, fmt::format("input {};", model.input_place));
  if (!model.output_place.empty()) w.line(1, fmt::format("output {};", model.output_place));
  w.line(0, "}");
  return w.take();
}

}  // namespace htppn
