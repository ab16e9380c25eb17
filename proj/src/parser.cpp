#include "owgp/parser.h"

#include <cctype>
#include <cstdlib>
#include <set>

namespace owgp {

namespace {

enum class TokKind { Ident, Number, LParen, RParen, Comma, Dot, Amp, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;   // identifiers lowercased
  double number = 0.0;
  int line = 1, column = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      bump();
    }
    tok_ = Token{};
    tok_.line = line_;
    tok_.column = col_;
    if (pos_ >= text_.size()) {
      tok_.kind = TokKind::End;
      return;
    }
    const char c = text_[pos_];
    if (c == '(') { tok_.kind = TokKind::LParen; bump(); return; }
    if (c == ')') { tok_.kind = TokKind::RParen; bump(); return; }
    if (c == ',') { tok_.kind = TokKind::Comma; bump(); return; }
    if (c == '.') {
      // Could start a number like ".9".
      if (pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
        lex_number();
        return;
      }
      tok_.kind = TokKind::Dot;
      bump();
      return;
    }
    if (c == '&') { tok_.kind = TokKind::Amp; bump(); return; }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (pos_ < text_.size()) {
        const char d = text_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_') {
          s += static_cast<char>(std::tolower(static_cast<unsigned char>(d)));
          bump();
        } else {
          break;
        }
      }
      tok_.kind = TokKind::Ident;
      tok_.text = s;
      return;
    }
    throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
  }

  void lex_number() {
    const size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E' ||
            ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
      bump();
    }
    tok_.kind = TokKind::Number;
    tok_.text = text_.substr(start, pos_ - start);
    tok_.number = std::strtod(tok_.text.c_str(), nullptr);
  }

  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  Parser(const std::string& text, const DomainConfig& domain)
      : lex_(text), domain_(domain) {}

  GoalFormula goal() {
    GoalFormula g;
    if (lex_.peek().kind == TokKind::Ident && lex_.peek().text == "exists") {
      lex_.take();
      g.exist_vars.push_back(variable_name());
      while (lex_.peek().kind == TokKind::Comma) {
        lex_.take();
        g.exist_vars.push_back(variable_name());
      }
      expect(TokKind::Dot, "'.' after existential variables");
      for (const auto& v : g.exist_vars) goal_vars_.insert(v);
    }
    g.fluents.push_back(fluent());
    while (lex_.peek().kind == TokKind::Amp) {
      lex_.take();
      g.fluents.push_back(fluent());
    }
    expect(TokKind::End, "end of goal");
    return g;
  }

  ExprPtr top_expr() {
    ExprPtr e = lambda_expr();
    expect(TokKind::End, "end of expression");
    return e;
  }

 private:
  [[noreturn]] void err(const Token& t, const std::string& msg) {
    throw ParseError(t.line, t.column, msg);
  }

  Token expect(TokKind k, const std::string& what) {
    Token t = lex_.take();
    if (t.kind != k) err(t, "expected " + what);
    return t;
  }

  std::string variable_name() {
    Token t = expect(TokKind::Ident, "a variable name");
    reject_definite(t);
    return t.text;
  }

  void reject_definite(const Token& t) {
    if (t.text == "the") {
      err(t, "definite descriptions (\"the ...\") are not supported");
    }
  }

  double probability() {
    Token t = expect(TokKind::Number, "a probability");
    if (t.number <= 0.0 || t.number > 1.0) {
      err(t, "probability must be in (0, 1]");
    }
    return t.number;
  }

  Fluent fluent() {
    Token head = expect(TokKind::Ident, "a fluent");
    reject_definite(head);
    if (head.text == "b") return b_fluent();
    if (head.text == "krd") {
      expect(TokKind::LParen, "'('");
      Term t = term();
      expect(TokKind::RParen, "')'");
      return KrdFluent{t};
    }
    if (head.text == "bcontents") {
      expect(TokKind::LParen, "'('");
      Token name = expect(TokKind::Ident, "a region name");
      expect(TokKind::Comma, "','");
      const double p = probability();
      expect(TokKind::RParen, "')'");
      return BContentsFluent{name.text, p};
    }
    err(head, "expected B(...), KRD(...) or BContents(...)");
  }

  Fluent b_fluent() {
    expect(TokKind::LParen, "'(' after B");
    Token inner = expect(TokKind::Ident, "a belief formula");
    reject_definite(inner);
    if (inner.text == "existsin") {
      expect(TokKind::LParen, "'('");
      ExprPtr e = lambda_expr();
      expect(TokKind::Comma, "','");
      Token region = expect(TokKind::Ident, "a region name");
      expect(TokKind::RParen, "')'");
      expect(TokKind::Comma, "','");
      const double p = probability();
      expect(TokKind::RParen, "')'");
      return BExistsInFluent{e, region.text, p};
    }
    if (inner.text == "den") {
      expect(TokKind::LParen, "'('");
      ExprPtr e = lambda_expr();
      expect(TokKind::Comma, "','");
      Term obj = term();
      expect(TokKind::RParen, "')'");
      expect(TokKind::Comma, "','");
      const double p = probability();
      expect(TokKind::RParen, "')'");
      return BBoolFluent{DenAtom{e, obj}, p};
    }
    // Ground relation: rel(term, ...)
    const std::string rel = inner.text;
    const auto kind = domain_.relation_kind(rel);
    if (!kind) err(inner, "unknown relation: " + rel);
    expect(TokKind::LParen, "'('");
    std::vector<Term> args;
    args.push_back(term());
    while (lex_.peek().kind == TokKind::Comma) {
      lex_.take();
      args.push_back(term());
    }
    expect(TokKind::RParen, "')'");
    if (static_cast<int>(args.size()) != domain_.arity(*kind)) {
      err(inner, "relation " + rel + " expects " +
                     std::to_string(domain_.arity(*kind)) + " argument(s)");
    }
    expect(TokKind::Comma, "','");
    const double p = probability();
    expect(TokKind::RParen, "')'");
    return BBoolFluent{RelAtom{rel, args}, p};
  }

  Term term() {
    Token t = expect(TokKind::Ident, "a term");
    reject_definite(t);
    if (goal_vars_.count(t.text)) return Variable{t.text};
    return ConstTerm{t.text};
  }

  ExprPtr lambda_expr() {
    Token kw = expect(TokKind::Ident, "'lambda'");
    reject_definite(kw);
    if (kw.text != "lambda") err(kw, "expected 'lambda'");
    Token var = expect(TokKind::Ident, "a variable name");
    expect(TokKind::Dot, "'.' after lambda variable");
    std::set<std::string> bound{var.text};
    ExprPtr b = body(bound);
    return make_lambda(var.text, b);
  }

  ExprPtr body(std::set<std::string>& bound) {
    Token head = expect(TokKind::Ident, "an expression");
    reject_definite(head);
    if (head.text == "and" || head.text == "or") {
      expect(TokKind::LParen, "'('");
      ExprPtr l = body(bound);
      expect(TokKind::Comma, "','");
      ExprPtr r = body(bound);
      expect(TokKind::RParen, "')'");
      return head.text == "and" ? make_and(l, r) : make_or(l, r);
    }
    if (head.text == "exists") {
      expect(TokKind::LParen, "'('");
      Token var = expect(TokKind::Ident, "a variable name");
      expect(TokKind::Comma, "','");
      const bool already = bound.count(var.text) > 0;
      bound.insert(var.text);
      ExprPtr b = body(bound);
      if (!already) bound.erase(var.text);
      expect(TokKind::RParen, "')'");
      return make_exists(var.text, b);
    }
    // rel(var)
    const std::string rel = head.text;
    if (!domain_.relation_kind(rel)) err(head, "unknown relation: " + rel);
    expect(TokKind::LParen, "'('");
    Token var = expect(TokKind::Ident, "a variable");
    if (!bound.count(var.text)) {
      err(var, "unbound variable '" + var.text + "' in expression");
    }
    expect(TokKind::RParen, "')'");
    return make_rel(rel, {Variable{var.text}});
  }

  Lexer lex_;
  const DomainConfig& domain_;
  std::set<std::string> goal_vars_;
};

}  // namespace

GoalFormula parse_goal(const std::string& text, const DomainConfig& domain) {
  Parser p(text, domain);
  return p.goal();
}

ExprPtr parse_expr(const std::string& text, const DomainConfig& domain) {
  Parser p(text, domain);
  return p.top_expr();
}

}  // namespace owgp
