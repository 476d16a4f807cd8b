#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "qdeco/schedule.hpp"

// Line-oriented pulse-sequence language.
//
//   program   := (decl)* (stmt)*
//   decl      := "dim" INT | "dt" FLOAT | "param" IDENT FLOAT
//   stmt      := "repeat" INT "{" (stmt)* "}"
//              | "sys" ("on"|"off") expr
//              | "gate" INT INT
//   expr      := + - * / arithmetic over literals, params and "dt"
//
// '#' comments to end of line; ';' or newline separates statements. Gate
// levels are written 1-based (u_12 swaps the first two levels). A program
// whose statements form a single top-level repeat block maps onto one cycle
// with that repeat count; anything else becomes a single unrolled cycle.
namespace qdeco::dsl {

namespace detail {

enum class Tok { end, sep, number, ident, lbrace, rbrace, lparen, rparen,
                 plus, minus, star, slash };

struct Token {
  Tok kind = Tok::end;
  double num = 0.0;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
        ++col_;
      } else {
        break;
      }
    }
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) return;
    char c = src_[pos_];
    if (c == '\n' || c == ';') {
      tok_.kind = Tok::sep;
      consume(1);
      if (c == '\n') {
        ++line_;
        col_ = 1;
      }
      return;
    }
    switch (c) {
      case '{': tok_.kind = Tok::lbrace; consume(1); return;
      case '}': tok_.kind = Tok::rbrace; consume(1); return;
      case '(': tok_.kind = Tok::lparen; consume(1); return;
      case ')': tok_.kind = Tok::rparen; consume(1); return;
      case '+': tok_.kind = Tok::plus; consume(1); return;
      case '-': tok_.kind = Tok::minus; consume(1); return;
      case '*': tok_.kind = Tok::star; consume(1); return;
      case '/': tok_.kind = Tok::slash; consume(1); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E' ||
              ((src_[pos_] == '+' || src_[pos_] == '-') && pos_ > start &&
               (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
        ++pos_;
      tok_.text = src_.substr(start, pos_ - start);
      col_ += static_cast<int>(pos_ - start);
      try {
        size_t used = 0;
        tok_.num = std::stod(tok_.text, &used);
        if (used != tok_.text.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw SyntaxError("bad number '" + tok_.text + "'", tok_.line, tok_.col);
      }
      tok_.kind = Tok::number;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      tok_.text = src_.substr(start, pos_ - start);
      col_ += static_cast<int>(pos_ - start);
      tok_.kind = Tok::ident;
      return;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", line_,
                      col_);
  }

  void consume(int n) {
    pos_ += n;
    col_ += n;
  }

  std::string src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

class Parser {
public:
  explicit Parser(const std::string& src) : lex_(src) {}

  PulseSchedule parse() {
    skip_seps();
    // declarations
    while (lex_.peek().kind == Tok::ident) {
      const std::string& kw = lex_.peek().text;
      if (kw == "dim") {
        lex_.next();
        dim_ = expect_int("dimension");
        if (dim_ < 2 || dim_ > 8)
          throw SyntaxError("dim must be in 2..8", lex_.peek().line,
                            lex_.peek().col);
      } else if (kw == "dt") {
        lex_.next();
        Token t = lex_.next();
        if (t.kind != Tok::number)
          throw SyntaxError("expected a number after 'dt'", t.line, t.col);
        dt_ = t.num;
        have_dt_ = true;
      } else if (kw == "param") {
        lex_.next();
        Token name = lex_.next();
        if (name.kind != Tok::ident)
          throw SyntaxError("expected parameter name", name.line, name.col);
        Token val = lex_.next();
        if (val.kind != Tok::number)
          throw SyntaxError("expected a number for parameter '" + name.text +
                            "'", val.line, val.col);
        params_[name.text] = val.num;
      } else {
        break;
      }
      end_of_statement();
      skip_seps();
    }
    if (!have_dt_ || !(dt_ > 0.0))
      throw SyntaxError("program must declare a positive dt",
                        lex_.peek().line, lex_.peek().col);

    // statements
    std::vector<CycleEvent> events;
    long top_repeat = 1;
    bool single_repeat_block = false;
    skip_seps();
    if (lex_.peek().kind == Tok::ident && lex_.peek().text == "repeat") {
      auto [body, count] = parse_repeat();
      skip_seps();
      if (lex_.peek().kind == Tok::end) {
        events = std::move(body);
        top_repeat = count;
        single_repeat_block = true;
      } else {
        // more statements follow: unroll this block inline
        for (long k = 0; k < count; ++k)
          events.insert(events.end(), body.begin(), body.end());
      }
    }
    if (!single_repeat_block) {
      while (lex_.peek().kind != Tok::end) {
        parse_statement(events);
        skip_seps();
      }
    }
    if (events.empty())
      throw SyntaxError("program has no statements", lex_.peek().line,
                        lex_.peek().col);

    PulseSchedule s;
    s.dim = dim_;
    s.dt = dt_;
    s.cycle = std::move(events);
    s.repeats = top_repeat;
    s.kind = ScheduleKind::custom;
    s.params = params_;
    if (!s.net_identity())
      s.warnings.push_back("UnbalancedGates: cycle permutation is not the identity");
    if (s.has_param("lambda")) {
      double budget = (1.0 + s.param("lambda")) * s.dt;
      if (std::abs(s.cycle_wall_time() - budget) > 1e-9 * budget)
        s.warnings.push_back("cycle length differs from (1+lambda)*dt");
    }
    s.validate();
    return s;
  }

private:
  void skip_seps() {
    while (lex_.peek().kind == Tok::sep) lex_.next();
  }

  void end_of_statement() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::end || t.kind == Tok::sep || t.kind == Tok::rbrace)
      return;
    throw SyntaxError("expected end of statement", t.line, t.col);
  }

  long expect_int(const std::string& what) {
    Token t = lex_.next();
    if (t.kind != Tok::number || t.num != std::floor(t.num) || t.num < 0)
      throw SyntaxError("expected a non-negative integer " + what, t.line,
                        t.col);
    return static_cast<long>(t.num);
  }

  std::pair<std::vector<CycleEvent>, long> parse_repeat() {
    lex_.next(); // 'repeat'
    long count = expect_int("repeat count");
    if (count < 1)
      throw SyntaxError("repeat count must be >= 1", lex_.peek().line,
                        lex_.peek().col);
    Token open = lex_.next();
    if (open.kind != Tok::lbrace)
      throw SyntaxError("expected '{' after repeat count", open.line, open.col);
    std::vector<CycleEvent> body;
    skip_seps();
    while (lex_.peek().kind != Tok::rbrace) {
      if (lex_.peek().kind == Tok::end)
        throw SyntaxError("unterminated repeat block", open.line, open.col);
      parse_statement(body);
      skip_seps();
    }
    lex_.next(); // '}'
    return {std::move(body), count};
  }

  void parse_statement(std::vector<CycleEvent>& out) {
    Token t = lex_.peek();
    if (t.kind != Tok::ident)
      throw SyntaxError("expected a statement", t.line, t.col);
    if (t.text == "repeat") {
      auto [body, count] = parse_repeat();
      for (long k = 0; k < count; ++k)
        out.insert(out.end(), body.begin(), body.end());
      return;
    }
    if (t.text == "sys") {
      lex_.next();
      Token mode = lex_.next();
      if (mode.kind != Tok::ident || (mode.text != "on" && mode.text != "off"))
        throw SyntaxError("expected 'on' or 'off' after 'sys'", mode.line,
                          mode.col);
      Token at = lex_.peek();
      double dur = parse_expr();
      if (dur < 0.0)
        throw NegativeDuration("negative duration at line " +
                               std::to_string(at.line) + ", col " +
                               std::to_string(at.col));
      out.push_back(Segment{dur, mode.text == "on"});
      end_of_statement();
      return;
    }
    if (t.text == "gate") {
      lex_.next();
      long i = expect_int("gate level");
      long j = expect_int("gate level");
      if (i < 1 || j < 1 || i >= j || j > dim_)
        throw SyntaxError("gate levels must satisfy 1 <= i < j <= dim",
                          t.line, t.col);
      out.push_back(GateEvent{static_cast<int>(i - 1), static_cast<int>(j - 1)});
      end_of_statement();
      return;
    }
    if (t.text == "dim" || t.text == "dt" || t.text == "param")
      throw SyntaxError("declarations must precede statements", t.line, t.col);
    throw SyntaxError("unknown statement '" + t.text + "'", t.line, t.col);
  }

  // expr := term (('+'|'-') term)*
  double parse_expr() {
    double v = parse_term();
    for (;;) {
      Tok k = lex_.peek().kind;
      if (k == Tok::plus) {
        lex_.next();
        v += parse_term();
      } else if (k == Tok::minus) {
        lex_.next();
        v -= parse_term();
      } else {
        return v;
      }
    }
  }

  // term := factor (('*'|'/') factor)*
  double parse_term() {
    double v = parse_factor();
    for (;;) {
      Tok k = lex_.peek().kind;
      if (k == Tok::star) {
        lex_.next();
        v *= parse_factor();
      } else if (k == Tok::slash) {
        lex_.next();
        Token at = lex_.peek();
        double d = parse_factor();
        if (d == 0.0)
          throw SyntaxError("division by zero", at.line, at.col);
        v /= d;
      } else {
        return v;
      }
    }
  }

  // factor := NUMBER | IDENT | '(' expr ')' | '-' factor
  double parse_factor() {
    Token t = lex_.next();
    switch (t.kind) {
      case Tok::number:
        return t.num;
      case Tok::minus:
        return -parse_factor();
      case Tok::lparen: {
        double v = parse_expr();
        Token close = lex_.next();
        if (close.kind != Tok::rparen)
          throw SyntaxError("expected ')'", close.line, close.col);
        return v;
      }
      case Tok::ident: {
        if (t.text == "dt") return dt_;
        auto it = params_.find(t.text);
        if (it == params_.end())
          throw UndefinedParam("undefined parameter '" + t.text + "' at line " +
                               std::to_string(t.line) + ", col " +
                               std::to_string(t.col));
        return it->second;
      }
      default:
        throw SyntaxError("expected an expression", t.line, t.col);
    }
  }

  Lexer lex_;
  int dim_ = 2;
  double dt_ = 0.0;
  bool have_dt_ = false;
  std::map<std::string, double> params_;
};

inline std::string format_sig12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

} // namespace detail

inline PulseSchedule parse_sequence(const std::string& text) {
  return detail::Parser(text).parse();
}

// Canonical emission: parameters inlined, durations in us at 12 significant
// digits, one statement per line.
inline std::string emit_sequence(const PulseSchedule& s) {
  std::string out;
  out += "dim " + std::to_string(s.dim) + "\n";
  out += "dt " + detail::format_sig12(s.dt) + "\n";
  out += "repeat " + std::to_string(s.repeats) + " {\n";
  for (const auto& ev : s.cycle) {
    if (const auto* seg = std::get_if<Segment>(&ev)) {
      out += std::string("  sys ") + (seg->system_on ? "on " : "off ") +
             detail::format_sig12(seg->duration) + "\n";
    } else {
      const auto& g = std::get<GateEvent>(ev);
      out += "  gate " + std::to_string(g.i + 1) + " " +
             std::to_string(g.j + 1) + "\n";
    }
  }
  out += "}\n";
  return out;
}

// Structural equality up to a relative tolerance on durations.
inline bool schedules_equivalent(const PulseSchedule& a, const PulseSchedule& b,
                                 double rtol = 1e-9) {
  auto close = [rtol](double x, double y) {
    return std::abs(x - y) <= rtol * std::max({1.0, std::abs(x), std::abs(y)});
  };
  if (a.dim != b.dim || a.repeats != b.repeats || !close(a.dt, b.dt))
    return false;
  if (a.cycle.size() != b.cycle.size()) return false;
  for (size_t k = 0; k < a.cycle.size(); ++k) {
    const auto* sa = std::get_if<Segment>(&a.cycle[k]);
    const auto* sb = std::get_if<Segment>(&b.cycle[k]);
    if ((sa == nullptr) != (sb == nullptr)) return false;
    if (sa != nullptr) {
      if (sa->system_on != sb->system_on || !close(sa->duration, sb->duration))
        return false;
    } else {
      const auto& ga = std::get<GateEvent>(a.cycle[k]);
      const auto& gb = std::get<GateEvent>(b.cycle[k]);
      if (ga.i != gb.i || ga.j != gb.j) return false;
    }
  }
  return true;
}

}
