#include "jetkit/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

namespace jetkit {

namespace {

// ---------------------------------------------------------------------------
// Lexer

struct Tok {
  enum Kind { Num, Id, Sym, End } kind = End;
  std::string text;
  char c = 0;  // Sym payload
  int line = 1, col = 1;
};

bool identStart(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool identChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

class Lex {
 public:
  Lex(std::string_view src, int line0, int col0)
      : s_(src), line_(line0), col_(col0) {
    scan();
  }

  const Tok& peek() const { return tok_; }
  Tok take() {
    Tok t = tok_;
    scan();
    return t;
  }

 private:
  void bump() {
    if (s_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void scan() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_])))
      bump();
    tok_ = Tok{};
    tok_.line = line_;
    tok_.col = col_;
    if (i_ >= s_.size()) {
      tok_.kind = Tok::End;
      return;
    }
    char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      tok_.kind = Tok::Num;
      size_t j = i_;
      while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j])))
        ++j;
      if (j < s_.size() && s_[j] == '.' && j + 1 < s_.size() &&
          std::isdigit(static_cast<unsigned char>(s_[j + 1]))) {
        ++j;
        while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j])))
          ++j;
      }
      tok_.text.assign(s_.substr(i_, j - i_));
      while (i_ < j) bump();
      return;
    }
    if (identStart(c)) {
      tok_.kind = Tok::Id;
      size_t j = i_ + 1;
      while (j < s_.size() && identChar(s_[j])) ++j;
      tok_.text.assign(s_.substr(i_, j - i_));
      while (i_ < j) bump();
      return;
    }
    static const std::string kSyms = "+-*/^()[],@";
    if (kSyms.find(c) != std::string::npos) {
      tok_.kind = Tok::Sym;
      tok_.c = c;
      tok_.text.assign(1, c);
      bump();
      return;
    }
    if (std::isprint(static_cast<unsigned char>(c)))
      throw ParseError(line_, col_,
                       std::string("unexpected character '") + c + "'");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "unexpected byte 0x%02x",
                  static_cast<unsigned char>(c));
    throw ParseError(line_, col_, buf);
  }

  std::string_view s_;
  size_t i_ = 0;
  int line_, col_;
  Tok tok_;
};

// ---------------------------------------------------------------------------
// Expression parser

const std::map<std::string, KOp>& kernelOps() {
  static const std::map<std::string, KOp> ops = {
      {"exp", KOp::Exp},       {"ln", KOp::Ln},   {"sin", KOp::Sin},
      {"cos", KOp::Cos},       {"tan", KOp::Tan}, {"arctan", KOp::Arctan},
      {"sqrt", KOp::Sqrt}};
  return ops;
}

Expr applyKernel(KOp op, const Expr& arg) {
  switch (op) {
    case KOp::Exp: return kExp(arg);
    case KOp::Ln: return kLn(arg);
    case KOp::Sin: return kSin(arg);
    case KOp::Cos: return kCos(arg);
    case KOp::Tan: return kTan(arg);
    case KOp::Arctan: return kArctan(arg);
    case KOp::Sqrt: return kSqrt(arg);
  }
  throw std::logic_error("unhandled kernel");
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

using Value = std::variant<Expr, Matrix>;

class ExprParser {
 public:
  ExprParser(Lex& lx, const SymbolTable& tab) : lx_(lx), tab_(tab) {}

  Expr parseAll() {
    Expr e = expr();
    expectEnd();
    return e;
  }

  std::vector<Expr> parseListAll() {
    std::vector<Expr> out;
    out.push_back(expr());
    while (isSym(',')) {
      lx_.take();
      out.push_back(expr());
    }
    expectEnd();
    return out;
  }

  Value parseValueAll() {
    if (isSym('[')) {
      Matrix m = matrix();
      expectEnd();
      return m;
    }
    Expr e = expr();
    expectEnd();
    return e;
  }

  Matrix parseMatrixAll() {
    if (!isSym('['))
      throw ParseError(lx_.peek().line, lx_.peek().col, "expected '['");
    Matrix m = matrix();
    expectEnd();
    return m;
  }

 private:
  bool isSym(char c) const {
    return lx_.peek().kind == Tok::Sym && lx_.peek().c == c;
  }

  void expectSym(char c) {
    if (!isSym(c))
      throw ParseError(lx_.peek().line, lx_.peek().col,
                       std::string("expected '") + c + "'");
    lx_.take();
  }

  void expectEnd() {
    if (lx_.peek().kind != Tok::End)
      throw ParseError(lx_.peek().line, lx_.peek().col,
                       "unexpected trailing '" + lx_.peek().text + "'");
  }

  template <class F>
  Expr guarded(const Tok& at, F&& f) {
    try {
      return f();
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ParseError(at.line, at.col, ex.what());
    }
  }

  Expr expr() {
    Expr a = term();
    while (lx_.peek().kind == Tok::Sym &&
           (lx_.peek().c == '+' || lx_.peek().c == '-')) {
      Tok op = lx_.take();
      Expr b = term();
      a = guarded(op, [&] { return op.c == '+' ? a + b : a - b; });
    }
    return a;
  }

  Expr term() {
    Expr a = unary();
    while (lx_.peek().kind == Tok::Sym &&
           (lx_.peek().c == '*' || lx_.peek().c == '/')) {
      Tok op = lx_.take();
      Expr b = unary();
      a = guarded(op, [&] { return op.c == '*' ? a * b : a / b; });
    }
    return a;
  }

  Expr unary() {
    if (isSym('-')) {
      lx_.take();
      return -unary();
    }
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (!isSym('^')) return base;
    Tok op = lx_.take();
    Expr e = unary();  // right-associative, sign allowed
    if (!e.isRational())
      throw ParseError(op.line, op.col, "exponent must be an integer constant");
    Rat r = e.asRational();
    if (boost::multiprecision::denominator(r) != 1)
      throw ParseError(op.line, op.col, "exponent must be an integer constant");
    Int n = boost::multiprecision::numerator(r);
    if (n > 1000 || n < -1000)
      throw ParseError(op.line, op.col, "exponent out of range");
    long k = n.convert_to<long>();
    return guarded(op, [&] { return base.pow(k); });
  }

  Expr atom() {
    const Tok& t = lx_.peek();
    if (t.kind == Tok::Num) {
      Tok num = lx_.take();
      size_t dot = num.text.find('.');
      if (dot == std::string::npos) return Expr::fromInt(Int(num.text));
      std::string digits = num.text.substr(0, dot) + num.text.substr(dot + 1);
      Int den = 1;
      for (size_t i = dot + 1; i < num.text.size(); ++i) den *= 10;
      return Expr::fromRat(Rat(Int(digits), den));
    }
    if (t.kind == Tok::Id) return ident(lx_.take());
    if (t.kind == Tok::Sym && t.c == '(') {
      lx_.take();
      Expr e = expr();
      expectSym(')');
      return e;
    }
    if (t.kind == Tok::End)
      throw ParseError(t.line, t.col, "expected an expression");
    throw ParseError(t.line, t.col, "unexpected '" + t.text + "'");
  }

  Expr jetOf(const std::string& var, int a, int b, const Tok& at) {
    return guarded(at, [&] {
      return Expr::fromGen(genJet(var, a, b, tab_.ix, tab_.it));
    });
  }

  Expr ident(Tok id) {
    const std::string& name = id.text;
    // Kernel application.
    if (isSym('(')) {
      auto it = kernelOps().find(name);
      if (it == kernelOps().end())
        throw ParseError(id.line, id.col, "unknown function '" + name + "'");
      lx_.take();
      Expr arg = expr();
      expectSym(')');
      Tok at = id;
      return guarded(at, [&] { return applyKernel(it->second, arg); });
    }
    // Explicit jet orders.
    if (isSym('@')) {
      lx_.take();
      expectSym('[');
      int a = smallInt();
      expectSym(',');
      int b = smallInt();
      expectSym(']');
      if (contains(tab_.nonlocals, name))
        throw ParseError(id.line, id.col,
                         "nonlocal variables take no jet orders");
      if (!contains(tab_.deps, name)) {
        if (!tab_.open || name == tab_.ix || name == tab_.it ||
            contains(tab_.params, name))
          throw ParseError(id.line, id.col,
                           "'" + name + "' is not a dependent variable");
      }
      return jetOf(name, a, b, id);
    }
    if (name == tab_.ix) return Expr::fromGen(genSym(name, true));
    if (name == tab_.it) return Expr::fromGen(genSym(name, true));
    if (contains(tab_.deps, name)) return jetOf(name, 0, 0, id);
    if (contains(tab_.nonlocals, name))
      return Expr::fromGen(genNonlocal(name));
    if (contains(tab_.params, name))
      return guarded(id, [&] { return Expr::fromGen(genSym(name, false)); });
    // Derivative suffix sugar.
    size_t us = name.rfind('_');
    if (us != std::string::npos && us > 0 && us + 1 < name.size() &&
        tab_.ix.size() == 1 && tab_.it.size() == 1) {
      std::string head = name.substr(0, us);
      std::string tail = name.substr(us + 1);
      bool coords = std::all_of(tail.begin(), tail.end(), [&](char c) {
        return c == tab_.ix[0] || c == tab_.it[0];
      });
      if (coords) {
        if (contains(tab_.nonlocals, head))
          throw ParseError(id.line, id.col,
                           "derivatives of nonlocal '" + head +
                               "' are determined by its covering rules");
        if (head == tab_.ix || head == tab_.it ||
            contains(tab_.params, head))
          throw ParseError(id.line, id.col,
                           "'" + head + "' is not a dependent variable");
        if (contains(tab_.deps, head) || tab_.open) {
          int a = static_cast<int>(
              std::count(tail.begin(), tail.end(), tab_.ix[0]));
          int b = static_cast<int>(
              std::count(tail.begin(), tail.end(), tab_.it[0]));
          return jetOf(head, a, b, id);
        }
      }
    }
    if (tab_.open)
      return guarded(id, [&] { return Expr::fromGen(genSym(name, false)); });
    throw ParseError(id.line, id.col, "undeclared symbol '" + name + "'");
  }

  int smallInt() {
    const Tok& t = lx_.peek();
    if (t.kind != Tok::Num || t.text.find('.') != std::string::npos)
      throw ParseError(t.line, t.col, "expected a nonnegative integer");
    Tok num = lx_.take();
    if (num.text.size() > 4)
      throw ParseError(num.line, num.col, "jet order out of range");
    return std::stoi(num.text);
  }

  Matrix matrix() {
    Tok open = lx_.take();  // '['
    std::vector<std::vector<Expr>> rows;
    while (true) {
      if (!isSym('['))
        throw ParseError(lx_.peek().line, lx_.peek().col,
                         "expected '[' to start a matrix row");
      Tok rowTok = lx_.take();
      std::vector<Expr> row;
      row.push_back(expr());
      while (isSym(',')) {
        lx_.take();
        row.push_back(expr());
      }
      expectSym(']');
      if (!rows.empty() && rows.front().size() != row.size())
        throw ParseError(rowTok.line, rowTok.col,
                         "matrix rows must have equal length");
      rows.push_back(std::move(row));
      if (isSym(',')) {
        lx_.take();
        continue;
      }
      break;
    }
    expectSym(']');
    Matrix m(static_cast<int>(rows.size()),
             static_cast<int>(rows.front().size()));
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) m.at(i, j) = rows[i][j];
    (void)open;
    return m;
  }

  Lex& lx_;
  const SymbolTable& tab_;
};

Expr parseExprAt(const std::string& text, int line, int col,
                 const SymbolTable& tab) {
  Lex lx(text, line, col);
  return ExprParser(lx, tab).parseAll();
}

std::vector<Expr> parseListAt(const std::string& text, int line, int col,
                              const SymbolTable& tab) {
  Lex lx(text, line, col);
  return ExprParser(lx, tab).parseListAll();
}

Value parseValueAt(const std::string& text, int line, int col,
                   const SymbolTable& tab) {
  Lex lx(text, line, col);
  return ExprParser(lx, tab).parseValueAll();
}

// ---------------------------------------------------------------------------
// Statement and section structure

struct Stmt {
  int line = 0;
  std::string text;  // raw line(s), comments stripped, newline-joined
};

struct Section {
  std::string kind;
  std::string name;
  int line = 0;
  std::vector<Stmt> stmts;
};

std::string trimmed(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

int bracketBalance(const std::string& s) {
  int d = 0;
  for (char c : s) {
    if (c == '[' || c == '(') ++d;
    if (c == ']' || c == ')') --d;
  }
  return d;
}

std::vector<Section> splitSections(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        lines.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    lines.push_back(cur);
  }
  for (std::string& l : lines) {
    size_t h = l.find('#');
    if (h != std::string::npos) l.erase(h);
    while (!l.empty() && l.back() == '\r') l.pop_back();
  }

  std::vector<Section> out;
  size_t i = 0;
  while (i < lines.size()) {
    const std::string& raw = lines[i];
    int lineNo = static_cast<int>(i) + 1;
    if (blank(raw)) {
      ++i;
      continue;
    }
    std::string t = trimmed(raw);
    if (t.front() == '[' && t.back() == ']') {
      std::string inside = trimmed(t.substr(1, t.size() - 2));
      std::istringstream ss(inside);
      std::string kind, name, extra;
      ss >> kind >> name >> extra;
      if (kind.empty() || !extra.empty())
        throw ParseError(lineNo, 1, "malformed section header");
      out.push_back(Section{kind, name, lineNo, {}});
      ++i;
      continue;
    }
    if (out.empty())
      throw ParseError(lineNo, 1, "expected a section header before statements");
    Stmt st{lineNo, raw};
    int depth = bracketBalance(raw);
    while (depth > 0) {
      ++i;
      if (i >= lines.size())
        throw ParseError(st.line, 1, "unterminated bracket");
      st.text += "\n" + lines[i];
      depth += bracketBalance(lines[i]);
    }
    out.back().stmts.push_back(std::move(st));
    ++i;
  }
  return out;
}

// Splits "key <sep> rest"; returns false when sep is absent.  keyCol and
// valCol are 1-based columns within the statement's first line.
struct KeyVal {
  std::string key;
  int keyCol = 1;
  std::string val;
  int valLine = 0;
  int valCol = 1;
};

bool splitAt(const Stmt& st, char sep, KeyVal& kv) {
  size_t p = st.text.find(sep);
  if (p == std::string::npos) return false;
  size_t nl = st.text.find('\n');
  if (nl != std::string::npos && p > nl) return false;
  kv.key = trimmed(st.text.substr(0, p));
  size_t kb = st.text.find_first_not_of(" \t");
  kv.keyCol = static_cast<int>(kb == std::string::npos ? 0 : kb) + 1;
  kv.val = st.text.substr(p + 1);
  kv.valLine = st.line;
  kv.valCol = static_cast<int>(p) + 2;
  return true;
}

std::vector<std::pair<std::string, int>> words(const std::string& line) {
  std::vector<std::pair<std::string, int>> out;
  size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return out;
}

bool nameOk(const std::string& s, bool allowPrime) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0])))
    return false;
  size_t i = 0;
  while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
  if (allowPrime)
    while (i < s.size() && s[i] == '\'') ++i;
  return i == s.size();
}

const std::set<std::string>& reservedNames() {
  static const std::set<std::string> r = {
      "exp", "ln",     "sin",      "cos",     "tan",     "arctan", "sqrt",
      "indep", "local", "nonlocal", "nonzero", "distinct"};
  return r;
}

// Rule lead: a variable with a derivative suffix or explicit jet orders.
struct Lead {
  std::string var;
  int a = 0, b = 0;
  bool nonlocal = false;
};

Lead parseLead(const std::string& text, int line, int col,
               const SymbolTable& tab) {
  Lex lx(text, line, col);
  Tok id = lx.take();
  if (id.kind != Tok::Id)
    throw ParseError(id.line, id.col, "expected a rule lead");
  Lead out;
  auto finishBare = [&](const std::string& name) {
    out.var = name;
    if (contains(tab.nonlocals, name)) out.nonlocal = true;
    else if (!contains(tab.deps, name))
      throw ParseError(id.line, id.col,
                       "lead variable '" + name + "' is not declared");
  };
  if (lx.peek().kind == Tok::Sym && lx.peek().c == '@') {
    lx.take();
    auto num = [&]() {
      Tok t = lx.take();
      if (t.kind != Tok::Num || t.text.find('.') != std::string::npos ||
          t.text.size() > 4)
        throw ParseError(t.line, t.col, "expected a nonnegative integer");
      return std::stoi(t.text);
    };
    Tok ob = lx.take();
    if (ob.kind != Tok::Sym || ob.c != '[')
      throw ParseError(ob.line, ob.col, "expected '['");
    out.a = num();
    Tok comma = lx.take();
    if (comma.kind != Tok::Sym || comma.c != ',')
      throw ParseError(comma.line, comma.col, "expected ','");
    out.b = num();
    Tok cb = lx.take();
    if (cb.kind != Tok::Sym || cb.c != ']')
      throw ParseError(cb.line, cb.col, "expected ']'");
    finishBare(id.text);
  } else {
    const std::string& name = id.text;
    if (contains(tab.deps, name) || contains(tab.nonlocals, name)) {
      finishBare(name);
    } else {
      size_t us = name.rfind('_');
      if (us == std::string::npos || us == 0 || us + 1 == name.size() ||
          tab.ix.size() != 1 || tab.it.size() != 1)
        throw ParseError(id.line, id.col,
                         "lead variable '" + name + "' is not declared");
      std::string head = name.substr(0, us);
      std::string tail = name.substr(us + 1);
      for (char c : tail)
        if (c != tab.ix[0] && c != tab.it[0])
          throw ParseError(id.line, id.col,
                           "'" + tail + "' is not a derivative suffix over " +
                               tab.ix + " and " + tab.it);
      finishBare(head);
      out.a =
          static_cast<int>(std::count(tail.begin(), tail.end(), tab.ix[0]));
      out.b =
          static_cast<int>(std::count(tail.begin(), tail.end(), tab.it[0]));
    }
  }
  if (lx.peek().kind != Tok::End)
    throw ParseError(lx.peek().line, lx.peek().col,
                     "unexpected trailing '" + lx.peek().text + "'");
  return out;
}

SymbolTable constTable() {
  SymbolTable t;
  t.ix.clear();
  t.it.clear();
  return t;
}

Rat rationalAt(const std::string& text, int line, int col) {
  Expr e = parseExprAt(text, line, col, constTable());
  if (!e.isRational())
    throw ParseError(line, col, "expected a rational constant");
  return e.asRational();
}

double doubleAt(const std::string& text, int line, int col) {
  return rationalAt(text, line, col).convert_to<double>();
}

long intAt(const std::string& text, int line, int col) {
  Rat r = rationalAt(text, line, col);
  if (boost::multiprecision::denominator(r) != 1)
    throw ParseError(line, col, "expected an integer");
  return boost::multiprecision::numerator(r).convert_to<long>();
}

// ---------------------------------------------------------------------------
// Problem assembly

class ProblemBuilder {
 public:
  Problem build(const std::string& text) {
    for (const Section& sec : splitSections(text)) dispatch(sec);
    finalize();
    return std::move(p_);
  }

 private:
  void dispatch(const Section& sec) {
    const std::string& k = sec.kind;
    bool named = k == "target" || k == "form" || k == "field" ||
                 k == "morphism" || k == "search" || k == "hunt";
    bool known = named || k == "vars" || k == "params" || k == "equations" ||
                 k == "covering" || k == "soliton" || k == "assert";
    if (!known)
      throw ParseError(sec.line, 1, "unknown section [" + k + "]");
    if (named && sec.name.empty())
      throw ParseError(sec.line, 1, "section [" + k + "] requires a name");
    if (!named && !sec.name.empty())
      throw ParseError(sec.line, 1, "section [" + k + "] takes no name");
    if (named) {
      if (!nameOk(sec.name, false))
        throw ParseError(sec.line, 1, "bad section name '" + sec.name + "'");
      if (!usedNames_.insert(k + ":" + sec.name).second)
        throw ParseError(sec.line, 1,
                         "duplicate section [" + k + " " + sec.name + "]");
    } else if (!usedNames_.insert(k).second) {
      throw ParseError(sec.line, 1, "duplicate section [" + k + "]");
    }

    if (k == "vars") return secVars(sec);
    if (k == "params") return secParams(sec);
    freeze(sec);
    if (k == "equations") return secEquations(sec);
    if (k == "covering") return secCovering(sec);
    if (k == "target") return secTarget(sec);
    if (k == "form") return secForm(sec);
    if (k == "field") return secField(sec);
    if (k == "morphism") return secMorphism(sec);
    if (k == "search") return secSearch(sec);
    if (k == "hunt") return secHunt(sec);
    if (k == "soliton") return secSoliton(sec);
    secAssert(sec);
  }

  // ---- declarations ----

  void declName(const std::string& n, int line, int col) {
    if (!nameOk(n, false))
      throw ParseError(line, col, "bad name '" + n + "'");
    if (reservedNames().count(n))
      throw ParseError(line, col, "reserved name '" + n + "'");
    if (!declared_.insert(n).second)
      throw ParseError(line, col, "duplicate name '" + n + "'");
  }

  void secVars(const Section& sec) {
    if (sys_)
      throw ParseError(sec.line, 1,
                       "the [vars] section must come before any system use");
    varsLine_ = sec.line;
    bool haveIndep = false;
    for (const Stmt& st : sec.stmts) {
      auto ws = words(st.text);
      const std::string& kw = ws[0].first;
      if (kw == "indep") {
        if (haveIndep)
          throw ParseError(st.line, ws[0].second,
                           "duplicate indep declaration");
        if (ws.size() != 3)
          throw ParseError(st.line, ws[0].second,
                           "expected two independent variables");
        for (int i = 1; i <= 2; ++i)
          if (ws[i].first.size() != 1 ||
              !std::isalpha(static_cast<unsigned char>(ws[i].first[0])))
            throw ParseError(st.line, ws[i].second,
                             "independent variables must be single letters");
        if (ws[1].first == ws[2].first)
          throw ParseError(st.line, ws[2].second,
                           "independent variables must be distinct");
        tab_.ix = ws[1].first;
        tab_.it = ws[2].first;
        declName(tab_.ix, st.line, ws[1].second);
        declName(tab_.it, st.line, ws[2].second);
        haveIndep = true;
      } else if (kw == "local" || kw == "nonlocal") {
        if (ws.size() < 2)
          throw ParseError(st.line, ws[0].second, "expected variable names");
        for (size_t i = 1; i < ws.size(); ++i) {
          declName(ws[i].first, st.line, ws[i].second);
          (kw == "local" ? tab_.deps : tab_.nonlocals).push_back(ws[i].first);
        }
      } else {
        throw ParseError(st.line, ws[0].second,
                         "expected indep, local, or nonlocal");
      }
    }
    if (!haveIndep)
      throw ParseError(sec.line, 1, "missing indep declaration in [vars]");
    if (tab_.deps.empty())
      throw ParseError(sec.line, 1, "missing local declaration in [vars]");
    varsSeen_ = true;
  }

  void secParams(const Section& sec) {
    if (sys_)
      throw ParseError(sec.line, 1,
                       "the [params] section must come before any system use");
    if (!varsSeen_)
      throw ParseError(sec.line, 1, "a [vars] section must precede [params]");
    for (const Stmt& st : sec.stmts) {
      auto ws = words(st.text);
      if (ws[0].first == "distinct") {
        if (ws.size() != 3)
          throw ParseError(st.line, ws[0].second,
                           "expected two parameter names");
        for (int i = 1; i <= 2; ++i)
          if (!contains(tab_.params, ws[i].first))
            throw ParseError(st.line, ws[i].second,
                             "unknown parameter '" + ws[i].first + "'");
        distinct_.push_back({ws[1].first, ws[2].first});
        continue;
      }
      if (ws.size() > 2 || (ws.size() == 2 && ws[1].first != "nonzero"))
        throw ParseError(st.line, ws[0].second,
                         "expected a parameter name with optional nonzero");
      declName(ws[0].first, st.line, ws[0].second);
      params_.push_back({ws[0].first, ws.size() == 2});
      tab_.params.push_back(ws[0].first);
    }
  }

  void freeze(const Section& sec) {
    if (sys_) return;
    if (!varsSeen_)
      throw ParseError(sec.line, 1,
                       "a [vars] section must precede [" + sec.kind + "]");
    sys_ = std::make_unique<EqSystem>(tab_.ix, tab_.it, tab_.deps, params_,
                                      tab_.nonlocals);
    for (auto& [a, b] : distinct_) sys_->addDistinct(a, b);
  }

  // ---- main system rules ----

  void addRuleStmt(EqSystem& sys, const SymbolTable& tab, const Stmt& st,
                   std::set<std::string>& leads, bool allowDep,
                   bool allowNonlocal) {
    KeyVal kv;
    if (!splitAt(st, '=', kv))
      throw ParseError(st.line, 1, "expected 'lead = expression'");
    Lead lead = parseLead(kv.key, st.line, kv.keyCol, tab);
    if (lead.nonlocal) {
      if (!allowNonlocal)
        throw ParseError(st.line, kv.keyCol,
                         "covering rules belong in [covering]");
      if (lead.a + lead.b != 1)
        throw ParseError(st.line, kv.keyCol,
                         "covering rules are first order in one coordinate");
    } else {
      if (!allowDep)
        throw ParseError(st.line, kv.keyCol,
                         "only nonlocal variables take covering rules");
      if (lead.a + lead.b == 0)
        throw ParseError(st.line, kv.keyCol, "rule lead must be a derivative");
    }
    std::string key = lead.var + "@" + std::to_string(lead.a) + "," +
                      std::to_string(lead.b);
    if (!leads.insert(key).second)
      throw ParseError(st.line, kv.keyCol,
                       "duplicate rule for '" + trimmed(kv.key) + "'");
    Expr rhs = parseExprAt(kv.val, kv.valLine, kv.valCol, tab);
    if (lead.nonlocal)
      sys.addCoveringRule(lead.var, lead.b == 1 ? 1 : 0, rhs);
    else
      sys.addRule(lead.var, lead.a, lead.b, rhs);
  }

  void secEquations(const Section& sec) {
    eqLine_ = sec.line;
    for (const Stmt& st : sec.stmts)
      addRuleStmt(*sys_, tab_, st, mainLeads_, true, false);
  }

  void secCovering(const Section& sec) {
    if (eqLine_ == 0) eqLine_ = sec.line;
    for (const Stmt& st : sec.stmts)
      addRuleStmt(*sys_, tab_, st, mainLeads_, false, true);
  }

  // ---- auxiliary target systems ----

  void secTarget(const Section& sec) {
    SymbolTable tab;
    tab.ix = tab_.ix;
    tab.it = tab_.it;
    tab.params = tab_.params;
    std::unique_ptr<EqSystem> target;
    std::set<std::string> leads;
    std::set<std::string> names;
    for (const Stmt& st : sec.stmts) {
      auto ws = words(st.text);
      const std::string& kw = ws[0].first;
      if (kw == "local" || kw == "nonlocal") {
        if (target)
          throw ParseError(st.line, ws[0].second,
                           "declare target variables before rules");
        if (ws.size() < 2)
          throw ParseError(st.line, ws[0].second, "expected variable names");
        for (size_t i = 1; i < ws.size(); ++i) {
          const std::string& n = ws[i].first;
          if (!nameOk(n, true) || reservedNames().count(n))
            throw ParseError(st.line, ws[i].second, "bad name '" + n + "'");
          if (declared_.count(n))
            throw ParseError(st.line, ws[i].second,
                             "target variable '" + n +
                                 "' shadows a problem symbol");
          if (!names.insert(n).second)
            throw ParseError(st.line, ws[i].second,
                             "duplicate name '" + n + "'");
          (kw == "local" ? tab.deps : tab.nonlocals).push_back(n);
        }
        continue;
      }
      if (!target) {
        if (tab.deps.empty())
          throw ParseError(st.line, 1,
                           "a target needs at least one local variable");
        target = std::make_unique<EqSystem>(tab.ix, tab.it, tab.deps,
                                            sys_->params(), tab.nonlocals);
        for (auto& [a, b] : sys_->distinctPairs()) target->addDistinct(a, b);
      }
      addRuleStmt(*target, tab, st, leads, true, true);
    }
    if (!target) {
      if (tab.deps.empty())
        throw ParseError(sec.line, 1,
                         "a target needs at least one local variable");
      target = std::make_unique<EqSystem>(tab.ix, tab.it, tab.deps,
                                          sys_->params(), tab.nonlocals);
      for (auto& [a, b] : sys_->distinctPairs()) target->addDistinct(a, b);
    }
    auto bad = target->solvedFormViolations();
    if (!bad.empty())
      throw ParseError(sec.line, 1, "solved-form validation failed: " +
                                        joinStrings(bad));
    p_.targets.push_back({sec.name, std::move(target)});
  }

  // ---- forms ----

  void secForm(const Section& sec) {
    std::optional<Value> dx, dt;
    for (const Stmt& st : sec.stmts) {
      KeyVal kv;
      if (!splitAt(st, ':', kv))
        throw ParseError(st.line, 1, "expected 'dx:' or 'dt:' components");
      std::optional<Value>* slot = nullptr;
      if (kv.key == "d" + tab_.ix) slot = &dx;
      else if (kv.key == "d" + tab_.it) slot = &dt;
      else
        throw ParseError(st.line, kv.keyCol,
                         "unknown form component '" + kv.key + "'");
      if (slot->has_value())
        throw ParseError(st.line, kv.keyCol,
                         "duplicate component '" + kv.key + "'");
      *slot = parseValueAt(kv.val, kv.valLine, kv.valCol, tab_);
    }
    if (!dx || !dt)
      throw ParseError(sec.line, 1, "a form needs both a d" + tab_.ix +
                                        " and a d" + tab_.it + " component");
    bool mx = std::holds_alternative<Matrix>(*dx);
    bool mt = std::holds_alternative<Matrix>(*dt);
    if (mx != mt)
      throw ParseError(sec.line, 1,
                       "form components must both be scalars or both matrices");
    if (mx) {
      Matrix x = std::get<Matrix>(*dx), t = std::get<Matrix>(*dt);
      if (x.rows() != x.cols() || t.rows() != t.cols() ||
          x.rows() != t.rows())
        throw ParseError(sec.line, 1,
                         "matrix form components must be square matrices of "
                         "equal size");
      p_.forms.push_back({sec.name, matrixForm(x, t)});
    } else {
      p_.forms.push_back(
          {sec.name, scalarForm(std::get<Expr>(*dx), std::get<Expr>(*dt))});
    }
  }

  // ---- fields ----

  void secField(const Section& sec) {
    std::optional<std::pair<Expr, Expr>> scalarBase;
    std::optional<Matrix> matrixBase;
    std::vector<std::pair<std::string, Value>> comps;
    std::optional<Rat> c;
    std::string formName;
    int formLine = 0, formCol = 0;
    for (const Stmt& st : sec.stmts) {
      KeyVal kv;
      if (!splitAt(st, ':', kv))
        throw ParseError(st.line, 1, "expected 'key: value'");
      if (kv.key == "base") {
        if (scalarBase || matrixBase)
          throw ParseError(st.line, kv.keyCol, "duplicate base components");
        if (trimmed(kv.val).rfind('[', 0) == 0) {
          Lex lx(kv.val, kv.valLine, kv.valCol);
          matrixBase = ExprParser(lx, tab_).parseMatrixAll();
        } else {
          auto list = parseListAt(kv.val, kv.valLine, kv.valCol, tab_);
          if (list.size() != 2)
            throw ParseError(st.line, kv.keyCol,
                             "base takes one component per coordinate");
          scalarBase = {list[0], list[1]};
        }
      } else if (kv.key == "c") {
        if (c)
          throw ParseError(st.line, kv.keyCol, "duplicate c value");
        c = rationalAt(kv.val, kv.valLine, kv.valCol);
      } else if (kv.key == "form") {
        if (!formName.empty())
          throw ParseError(st.line, kv.keyCol, "duplicate form reference");
        formName = trimmed(kv.val);
        formLine = st.line;
        formCol = kv.valCol;
        if (!p_.form(formName))
          throw ParseError(st.line, kv.valCol,
                           "unknown form '" + formName + "'");
      } else if (sys_->hasDep(kv.key) || sys_->hasNonlocal(kv.key)) {
        for (auto& [n, v] : comps)
          if (n == kv.key)
            throw ParseError(st.line, kv.keyCol,
                             "duplicate component '" + kv.key + "'");
        comps.push_back(
            {kv.key, parseValueAt(kv.val, kv.valLine, kv.valCol, tab_)});
      } else {
        throw ParseError(st.line, kv.keyCol,
                         "unknown variable '" + kv.key + "' in field");
      }
    }
    if (formName.empty())
      throw ParseError(sec.line, 1, "a field requires a form reference");
    const HForm* form = p_.form(formName);

    bool matrixKind = matrixBase.has_value();
    for (auto& [n, v] : comps)
      if (std::holds_alternative<Matrix>(v)) matrixKind = true;

    if (matrixKind) {
      if (c)
        throw ParseError(sec.line, 1,
                         "matrix fields take their twist from the form alone");
      if (scalarBase)
        throw ParseError(sec.line, 1,
                         "matrix fields take a bracketed base matrix");
      int rank = 0;
      if (matrixBase) rank = matrixBase->rows();
      else
        rank = std::get<Matrix>(comps.front().second).rows();
      if (rank < 2)
        throw ParseError(sec.line, 1, "matrix fields have rank at least 2");
      if (matrixBase && matrixBase->cols() != 2)
        throw ParseError(sec.line, 1,
                         "the base matrix takes one column per coordinate");
      std::map<std::string, Matrix> phi;
      for (auto& [n, v] : comps) {
        if (!std::holds_alternative<Matrix>(v))
          throw ParseError(sec.line, 1,
                           "component '" + n + "' of a rank-" +
                               std::to_string(rank) +
                               " field must be a column matrix");
        Matrix m = std::get<Matrix>(v);
        if (m.rows() != rank || m.cols() != 1)
          throw ParseError(sec.line, 1,
                           "component '" + n + "' must be a " +
                               std::to_string(rank) + "x1 column");
        phi.emplace(n, std::move(m));
      }
      if (form->scalar() || form->size() != rank)
        throw ParseError(formLine, formCol,
                         "form '" + formName + "' does not match rank " +
                             std::to_string(rank));
      Matrix base = matrixBase ? *matrixBase : Matrix(rank, 2);
      p_.fields.push_back(
          {sec.name,
           PseudoField::matrixField(std::move(base), std::move(phi), *form),
           formName});
    } else {
      if (!form->scalar())
        throw ParseError(formLine, formCol,
                         "form '" + formName + "' is not a scalar form");
      std::map<std::string, Expr> phi;
      for (auto& [n, v] : comps) phi.emplace(n, std::get<Expr>(v));
      Expr a1, a2;
      if (scalarBase) {
        a1 = scalarBase->first;
        a2 = scalarBase->second;
      }
      p_.fields.push_back(
          {sec.name,
           PseudoField::scalarField(a1, a2, std::move(phi),
                                    c.value_or(Rat(1)), *form),
           formName});
    }
  }

  // ---- morphisms ----

  void secMorphism(const Section& sec) {
    std::optional<Expr> xi1, xi2;
    std::vector<std::pair<std::string, Expr>> images;
    for (const Stmt& st : sec.stmts) {
      KeyVal kv;
      if (!splitAt(st, '=', kv))
        throw ParseError(st.line, 1, "expected 'name = expression'");
      Expr rhs = parseExprAt(kv.val, kv.valLine, kv.valCol, tab_);
      if (kv.key == tab_.ix + "'") {
        if (xi1)
          throw ParseError(st.line, kv.keyCol,
                           "duplicate image for '" + kv.key + "'");
        xi1 = rhs;
        continue;
      }
      if (kv.key == tab_.it + "'") {
        if (xi2)
          throw ParseError(st.line, kv.keyCol,
                           "duplicate image for '" + kv.key + "'");
        xi2 = rhs;
        continue;
      }
      if (!nameOk(kv.key, true))
        throw ParseError(st.line, kv.keyCol,
                         "bad image name '" + kv.key + "'");
      for (auto& [n, e] : images)
        if (n == kv.key)
          throw ParseError(st.line, kv.keyCol,
                           "duplicate image for '" + kv.key + "'");
      images.push_back({kv.key, rhs});
    }
    try {
      p_.morphisms.emplace_back(
          sec.name, Morphism(*sys_, xi1.value_or(sys_->coord(0)),
                             xi2.value_or(sys_->coord(1)), std::move(images)));
    } catch (const std::exception& ex) {
      throw ParseError(sec.line, 1, ex.what());
    }
  }

  // ---- searches and hunts ----

  void secSearch(const Section& sec) {
    SearchBlock blk;
    blk.line = sec.line;
    bool haveOver = false, haveC = false, haveDeg = false, haveBase = false;
    for (const Stmt& st : sec.stmts) {
      KeyVal kv;
      if (!splitAt(st, ':', kv))
        throw ParseError(st.line, 1, "expected 'key: value'");
      if (kv.key == "over") {
        if (haveOver)
          throw ParseError(st.line, kv.keyCol, "duplicate over list");
        blk.over = parseListAt(kv.val, kv.valLine, kv.valCol, tab_);
        for (size_t i = 0; i < blk.over.size(); ++i)
          for (size_t j = i + 1; j < blk.over.size(); ++j)
            if (blk.over[i] == blk.over[j])
              throw ParseError(st.line, kv.valCol,
                               "duplicate generator in over list");
        haveOver = true;
      } else if (kv.key == "degree") {
        if (haveDeg)
          throw ParseError(st.line, kv.keyCol, "duplicate degree");
        long d = intAt(kv.val, kv.valLine, kv.valCol);
        if (d < 0 || d > 16)
          throw ParseError(st.line, kv.valCol, "degree out of range");
        blk.degree = static_cast<int>(d);
        haveDeg = true;
      } else if (kv.key == "base") {
        if (haveBase)
          throw ParseError(st.line, kv.keyCol, "duplicate base flag");
        std::string v = trimmed(kv.val);
        if (v == "yes") blk.includeBase = true;
        else if (v == "no") blk.includeBase = false;
        else
          throw ParseError(st.line, kv.valCol, "expected yes or no");
        haveBase = true;
      } else if (kv.key == "c") {
        if (haveC)
          throw ParseError(st.line, kv.keyCol, "duplicate c list");
        for (const std::string& part :
             splitList(kv.val)) {
          blk.cValues.push_back(rationalAt(part, kv.valLine, kv.valCol));
        }
        haveC = true;
      } else if (kv.key == "form") {
        if (!blk.formName.empty())
          throw ParseError(st.line, kv.keyCol, "duplicate form reference");
        blk.formName = trimmed(kv.val);
        const HForm* f = p_.form(blk.formName);
        if (!f)
          throw ParseError(st.line, kv.valCol,
                           "unknown form '" + blk.formName + "'");
        if (!f->scalar())
          throw ParseError(st.line, kv.valCol,
                           "form '" + blk.formName + "' is not a scalar form");
      } else {
        throw ParseError(st.line, kv.keyCol,
                         "unknown search key '" + kv.key + "'");
      }
    }
    if (!haveOver)
      throw ParseError(sec.line, 1, "a search needs an over list");
    if (blk.formName.empty())
      throw ParseError(sec.line, 1, "a search requires a form reference");
    p_.searches.push_back({sec.name, std::move(blk)});
  }

  void secHunt(const Section& sec) {
    HuntBlock blk;
    blk.line = sec.line;
    const EqSystem* target = nullptr;
    for (const Stmt& st : sec.stmts) {
      KeyVal kv;
      if (!splitAt(st, ':', kv))
        throw ParseError(st.line, 1, "expected 'key: value'");
      if (kv.key == "morphism") {
        blk.morphismName = trimmed(kv.val);
        if (!p_.morphism(blk.morphismName))
          throw ParseError(st.line, kv.valCol,
                           "unknown morphism '" + blk.morphismName + "'");
      } else if (kv.key == "target") {
        blk.targetName = trimmed(kv.val);
        target = p_.target(blk.targetName);
        if (!target)
          throw ParseError(st.line, kv.valCol,
                           "unknown target '" + blk.targetName + "'");
      } else if (kv.key == "monomials") {
        if (!target)
          throw ParseError(st.line, kv.keyCol,
                           "declare the target before monomials");
        blk.monomials =
            parseListAt(kv.val, kv.valLine, kv.valCol, symbolsFor(*target));
      } else {
        throw ParseError(st.line, kv.keyCol,
                         "unknown hunt key '" + kv.key + "'");
      }
    }
    if (blk.morphismName.empty() || blk.targetName.empty() ||
        blk.monomials.empty())
      throw ParseError(sec.line, 1,
                       "a hunt needs a morphism, a target, and monomials");
    checkImageCover(*p_.morphism(blk.morphismName), blk.morphismName, *target,
                    blk.targetName, sec.line);
    p_.hunts.push_back({sec.name, std::move(blk)});
  }

  // ---- soliton ----

  void secSoliton(const Section& sec) {
    SolitonBlock blk;
    blk.line = sec.line;
    SymbolTable seedTab;
    seedTab.ix = tab_.ix;
    seedTab.it = tab_.it;
    seedTab.params = tab_.params;
    for (const Stmt& st : sec.stmts) {
      KeyVal kv;
      if (!splitAt(st, ':', kv))
        throw ParseError(st.line, 1, "expected 'key: value'");
      if (kv.key == "seed" || kv.key == "param" || kv.key == "ic") {
        Stmt inner{kv.valLine, kv.val};
        KeyVal asg;
        if (!splitAt(inner, '=', asg))
          throw ParseError(st.line, kv.valCol, "expected 'name = value'");
        std::string n = asg.key;
        if (kv.key == "seed") {
          if (!sys_->hasDep(n))
            throw ParseError(st.line, kv.valCol,
                             "unknown dependent variable '" + n + "'");
          if (blk.seed.count(n))
            throw ParseError(st.line, kv.valCol,
                             "duplicate seed for '" + n + "'");
          blk.seed.emplace(
              n, parseExprAt(asg.val, asg.valLine, asg.valCol, seedTab));
        } else if (kv.key == "param") {
          bool known = false;
          for (auto& pd : sys_->params()) known |= pd.name == n;
          if (!known)
            throw ParseError(st.line, kv.valCol,
                             "unknown parameter '" + n + "'");
          if (blk.paramValues.count(n))
            throw ParseError(st.line, kv.valCol,
                             "duplicate value for '" + n + "'");
          blk.paramValues.emplace(
              n, doubleAt(asg.val, asg.valLine, asg.valCol));
        } else {
          if (!sys_->hasNonlocal(n))
            throw ParseError(st.line, kv.valCol,
                             "unknown nonlocal variable '" + n + "'");
          if (blk.ic.count(n))
            throw ParseError(st.line, kv.valCol,
                             "duplicate initial condition for '" + n + "'");
          blk.ic.emplace(n, doubleAt(asg.val, asg.valLine, asg.valCol));
        }
      } else if (kv.key == "grid" || kv.key == "steps" || kv.key == "base") {
        auto ws = words(kv.val);
        size_t want = kv.key == "grid" ? 4 : 2;
        if (ws.size() != want)
          throw ParseError(st.line, kv.valCol,
                           "expected " + std::to_string(want) + " values");
        std::vector<double> v;
        for (auto& [w, c] : ws) v.push_back(doubleAt(w, kv.valLine, c));
        if (kv.key == "grid") {
          blk.grid.xmin = v[0];
          blk.grid.xmax = v[1];
          blk.grid.tmin = v[2];
          blk.grid.tmax = v[3];
        } else if (kv.key == "steps") {
          long nx = intAt(ws[0].first, kv.valLine, ws[0].second);
          long nt = intAt(ws[1].first, kv.valLine, ws[1].second);
          if (nx < 0 || nt < 0)
            throw ParseError(st.line, kv.valCol,
                             "step counts cannot be negative");
          blk.grid.nx = static_cast<int>(nx);
          blk.grid.nt = static_cast<int>(nt);
        } else {
          blk.grid.x0 = v[0];
          blk.grid.t0 = v[1];
        }
      } else if (kv.key == "morphism") {
        blk.morphismName = trimmed(kv.val);
        if (!p_.morphism(blk.morphismName))
          throw ParseError(st.line, kv.valCol,
                           "unknown morphism '" + blk.morphismName + "'");
      } else if (kv.key == "target") {
        blk.targetName = trimmed(kv.val);
        if (!p_.target(blk.targetName))
          throw ParseError(st.line, kv.valCol,
                           "unknown target '" + blk.targetName + "'");
      } else {
        throw ParseError(st.line, kv.keyCol,
                         "unknown soliton key '" + kv.key + "'");
      }
    }
    std::vector<std::string> missing;
    for (auto& d : sys_->deps())
      if (!blk.seed.count(d)) missing.push_back("seed " + d);
    for (auto& pd : sys_->params())
      if (!blk.paramValues.count(pd.name)) missing.push_back("param " + pd.name);
    for (auto& n : sys_->nonlocals())
      if (!blk.ic.count(n)) missing.push_back("ic " + n);
    if (!missing.empty())
      throw ParseError(sec.line, 1,
                       "incomplete soliton block: missing " +
                           joinStrings(missing));
    p_.soliton = std::move(blk);
  }

  // ---- assertions ----

  void checkImageCover(const Morphism& m, const std::string& mName,
                       const EqSystem& target, const std::string& tName,
                       int line) {
    for (auto& d : target.deps())
      if (!m.frame().hasImage(d))
        throw ParseError(line, 1, "morphism '" + mName +
                                      "' lacks an image for '" + d +
                                      "' of target '" + tName + "'");
    for (auto& n : target.nonlocals())
      if (!m.frame().hasImage(n))
        throw ParseError(line, 1, "morphism '" + mName +
                                      "' lacks an image for '" + n +
                                      "' of target '" + tName + "'");
  }

  const EqSystem* namedTarget(const std::string& raw, int line, int col,
                              std::string* outName) {
    std::string n = raw;
    if (n.rfind("target.", 0) == 0) n = n.substr(7);
    const EqSystem* t = p_.target(n);
    if (!t) throw ParseError(line, col, "unknown target '" + n + "'");
    *outName = n;
    return t;
  }

  void secAssert(const Section& sec) {
    for (const Stmt& st : sec.stmts) {
      Assertion as;
      as.line = st.line;
      as.text = trimmed(st.text);
      auto ws = words(st.text);
      const std::string& kw = ws[0].first;
      auto need = [&](size_t n) {
        if (ws.size() != n)
          throw ParseError(st.line, ws[0].second,
                           "malformed '" + kw + "' assertion");
      };
      auto formArg = [&](size_t i, bool wantScalar) {
        const HForm* f = p_.form(ws[i].first);
        if (!f)
          throw ParseError(st.line, ws[i].second,
                           "unknown form '" + ws[i].first + "'");
        if (wantScalar && !f->scalar())
          throw ParseError(st.line, ws[i].second,
                           "'" + ws[i].first + "' is not a scalar form");
        if (!wantScalar && f->scalar())
          throw ParseError(st.line, ws[i].second,
                           "'" + ws[i].first + "' is not a matrix form");
        as.names.push_back(ws[i].first);
        return f;
      };
      auto fieldArg = [&](size_t i) {
        const PseudoField* f = p_.field(ws[i].first);
        if (!f)
          throw ParseError(st.line, ws[i].second,
                           "unknown field '" + ws[i].first + "'");
        as.names.push_back(ws[i].first);
        return f;
      };
      auto morphismArg = [&](size_t i) {
        const Morphism* m = p_.morphism(ws[i].first);
        if (!m)
          throw ParseError(st.line, ws[i].second,
                           "unknown morphism '" + ws[i].first + "'");
        as.names.push_back(ws[i].first);
        return m;
      };
      auto arrow = [&](size_t i) {
        if (ws[i].first != "->")
          throw ParseError(st.line, ws[i].second, "expected '->'");
      };
      auto dimTail = [&](size_t i) {
        if (ws[i].first != "dim")
          throw ParseError(st.line, ws[i].second, "expected 'dim'");
        long d = intAt(ws[i + 1].first, st.line, ws[i + 1].second);
        if (d < 0)
          throw ParseError(st.line, ws[i + 1].second,
                           "dimension cannot be negative");
        as.dim = static_cast<int>(d);
      };

      if (kw == "solved_form") {
        need(1);
        as.kind = AssertKind::SolvedForm;
      } else if (kw == "conservation_law") {
        need(2);
        as.kind = AssertKind::ConservationLaw;
        formArg(1, true);
      } else if (kw == "zcr") {
        need(2);
        as.kind = AssertKind::Zcr;
        formArg(1, false);
      } else if (kw == "flat") {
        need(2);
        as.kind = AssertKind::FlatForm;
        formArg(1, false);
      } else if (kw == "pseudosymmetry") {
        need(2);
        as.kind = AssertKind::Pseudosymmetry;
        if (fieldArg(1)->rank() != 1)
          throw ParseError(st.line, ws[1].second,
                           "field '" + ws[1].first + "' is not scalar");
      } else if (kw == "r_pseudosymmetry") {
        need(2);
        as.kind = AssertKind::RPseudosymmetry;
        if (fieldArg(1)->rank() < 2)
          throw ParseError(st.line, ws[1].second,
                           "field '" + ws[1].first + "' is scalar");
      } else if (kw == "invariant") {
        as.kind = AssertKind::Invariant;
        size_t colon = st.text.find(':');
        if (colon == std::string::npos)
          throw ParseError(st.line, ws[0].second,
                           "expected 'invariant FIELD : expression'");
        auto head = words(st.text.substr(0, colon));
        if (head.size() != 2)
          throw ParseError(st.line, ws[0].second,
                           "expected 'invariant FIELD : expression'");
        const PseudoField* f = p_.field(head[1].first);
        if (!f)
          throw ParseError(st.line, head[1].second,
                           "unknown field '" + head[1].first + "'");
        as.names.push_back(head[1].first);
        as.expr = parseExprAt(st.text.substr(colon + 1), st.line,
                              static_cast<int>(colon) + 2, tab_);
      } else if (kw == "morphism") {
        need(4);
        as.kind = AssertKind::MorphismCheck;
        const Morphism* m = morphismArg(1);
        arrow(2);
        std::string tn;
        const EqSystem* t = namedTarget(ws[3].first, st.line, ws[3].second, &tn);
        as.names.push_back(tn);
        checkImageCover(*m, ws[1].first, *t, tn, st.line);
      } else if (kw == "regular") {
        need(2);
        as.kind = AssertKind::Regular;
        morphismArg(1);
      } else if (kw == "riccati_match") {
        need(5);
        as.kind = AssertKind::RiccatiMatch;
        const HForm* a = formArg(1, false);
        if (ws[2].first != "pivot")
          throw ParseError(st.line, ws[2].second, "expected 'pivot'");
        long h = intAt(ws[3].first, st.line, ws[3].second);
        if (h < 1 || h > a->size())
          throw ParseError(st.line, ws[3].second,
                           "pivot " + ws[3].first + " out of range for a " +
                               std::to_string(a->size()) + "x" +
                               std::to_string(a->size()) + " form");
        as.pivot = static_cast<int>(h);
        formArg(4, true);
      } else if (kw == "factor") {
        need(5);
        as.kind = AssertKind::Factor;
        fieldArg(1);
        const Morphism* m = morphismArg(2);
        arrow(3);
        std::string tn;
        const EqSystem* t = namedTarget(ws[4].first, st.line, ws[4].second, &tn);
        as.names.push_back(tn);
        checkImageCover(*m, ws[2].first, *t, tn, st.line);
      } else if (kw == "search") {
        need(4);
        as.kind = AssertKind::Search;
        if (!p_.search(ws[1].first))
          throw ParseError(st.line, ws[1].second,
                           "unknown search '" + ws[1].first + "'");
        as.names.push_back(ws[1].first);
        dimTail(2);
      } else if (kw == "hunt") {
        need(4);
        as.kind = AssertKind::Hunt;
        if (!p_.hunt(ws[1].first))
          throw ParseError(st.line, ws[1].second,
                           "unknown hunt '" + ws[1].first + "'");
        as.names.push_back(ws[1].first);
        dimTail(2);
      } else {
        throw ParseError(st.line, ws[0].second,
                         "unknown assertion '" + kw + "'");
      }
      p_.asserts.push_back(std::move(as));
    }
  }

  // ---- finish ----

  static std::string joinStrings(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }

  void finalize() {
    if (!varsSeen_)
      throw ParseError(1, 1, "missing [vars] section");
    if (!sys_) {
      Section dummy{"equations", "", varsLine_, {}};
      freeze(dummy);
    }
    auto bad = sys_->solvedFormViolations();
    if (!bad.empty())
      throw ParseError(eqLine_ ? eqLine_ : varsLine_, 1,
                       "solved-form validation failed: " + joinStrings(bad));
    p_.system = std::move(sys_);
  }

  static std::vector<std::string> splitList(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    out.push_back(cur);
    return out;
  }

  Problem p_;
  SymbolTable tab_;
  std::vector<ParamDecl> params_;
  std::vector<std::pair<std::string, std::string>> distinct_;
  std::unique_ptr<EqSystem> sys_;
  std::set<std::string> declared_;
  std::set<std::string> usedNames_;
  std::set<std::string> mainLeads_;
  bool varsSeen_ = false;
  int varsLine_ = 0, eqLine_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points

SymbolTable symbolsFor(const EqSystem& s) {
  SymbolTable t;
  t.ix = s.ix();
  t.it = s.it();
  t.deps = s.deps();
  t.nonlocals = s.nonlocals();
  for (const auto& pd : s.params()) t.params.push_back(pd.name);
  return t;
}

Expr parseExpr(const std::string& text, const SymbolTable& tab) {
  return parseExprAt(text, 1, 1, tab);
}

Expr parseExpr(const std::string& text) {
  SymbolTable tab;
  tab.open = true;
  return parseExprAt(text, 1, 1, tab);
}

Matrix parseMatrix(const std::string& text, const SymbolTable& tab) {
  Lex lx(text, 1, 1);
  return ExprParser(lx, tab).parseMatrixAll();
}

std::string render(const Expr& e) { return e.str(); }

std::string render(const Matrix& m) {
  std::string out = "[";
  for (int i = 0; i < m.rows(); ++i) {
    if (i) out += ", ";
    out += "[";
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out += ", ";
      out += m.at(i, j).str();
    }
    out += "]";
  }
  out += "]";
  return out;
}

std::vector<Expr> monomialBasis(const std::vector<Expr>& over, int degree) {
  std::vector<Expr> out;
  std::vector<int> exps(over.size(), 0);
  auto emit = [&]() {
    Expr m = ei(1);
    for (size_t i = 0; i < over.size(); ++i)
      if (exps[i] > 0) m = m * over[i].pow(exps[i]);
    out.push_back(m);
  };
  // Exponent vectors of total degree d, earlier generators descending.
  std::function<void(size_t, int)> rec = [&](size_t i, int left) {
    if (i + 1 == exps.size()) {
      exps[i] = left;
      emit();
      return;
    }
    for (int k = left; k >= 0; --k) {
      exps[i] = k;
      rec(i + 1, left - k);
    }
  };
  for (int d = 0; d <= degree; ++d) {
    if (over.empty()) {
      if (d == 0) out.push_back(ei(1));
      continue;
    }
    rec(0, d);
  }
  return out;
}

const HForm* Problem::form(const std::string& name) const {
  for (auto& [n, f] : forms)
    if (n == name) return &f;
  return nullptr;
}

const PseudoField* Problem::field(const std::string& name) const {
  for (auto& nf : fields)
    if (nf.name == name) return &nf.field;
  return nullptr;
}

const Morphism* Problem::morphism(const std::string& name) const {
  for (auto& [n, m] : morphisms)
    if (n == name) return &m;
  return nullptr;
}

const EqSystem* Problem::target(const std::string& name) const {
  for (auto& [n, t] : targets)
    if (n == name) return t.get();
  return nullptr;
}

const SearchBlock* Problem::search(const std::string& name) const {
  for (auto& [n, b] : searches)
    if (n == name) return &b;
  return nullptr;
}

const HuntBlock* Problem::hunt(const std::string& name) const {
  for (auto& [n, b] : hunts)
    if (n == name) return &b;
  return nullptr;
}

Problem parseProblem(const std::string& text) {
  return ProblemBuilder().build(text);
}

Problem parseProblemFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseProblem(ss.str());
}

// ---------------------------------------------------------------------------
// Canonical problem text

namespace {

std::string fmtDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string ratStr(const Rat& r) {
  std::ostringstream ss;
  ss << r;
  return ss.str();
}

void renderSystemRules(std::string& out, const EqSystem& s) {
  for (const Rule& r : s.rules())
    out += genStr(genJet(r.var, r.a, r.b, s.ix(), s.it())) + " = " +
           r.rhs.str() + "\n";
  for (const CoveringRule& r : s.coveringRules())
    out += r.nl + "_" + (r.dir == 0 ? s.ix() : s.it()) + " = " + r.rhs.str() +
           "\n";
}

std::string valueStr(const Matrix& m) {
  if (m.rows() == 1 && m.cols() == 1) return m.at(0, 0).str();
  return render(m);
}

}  // namespace

std::string render(const Problem& p) {
  const EqSystem& s = *p.system;
  std::string out;
  out += "[vars]\n";
  out += "indep " + s.ix() + " " + s.it() + "\n";
  out += "local";
  for (auto& d : s.deps()) out += " " + d;
  out += "\n";
  if (!s.nonlocals().empty()) {
    out += "nonlocal";
    for (auto& n : s.nonlocals()) out += " " + n;
    out += "\n";
  }
  if (!s.params().empty() || !s.distinctPairs().empty()) {
    out += "\n[params]\n";
    for (auto& pd : s.params())
      out += pd.name + (pd.nonzero ? " nonzero" : "") + "\n";
    for (auto& [a, b] : s.distinctPairs())
      out += "distinct " + a + " " + b + "\n";
  }
  if (!s.rules().empty()) {
    out += "\n[equations]\n";
    for (const Rule& r : s.rules())
      out += genStr(genJet(r.var, r.a, r.b, s.ix(), s.it())) + " = " +
             r.rhs.str() + "\n";
  }
  if (!s.coveringRules().empty()) {
    out += "\n[covering]\n";
    for (const CoveringRule& r : s.coveringRules())
      out += r.nl + "_" + (r.dir == 0 ? s.ix() : s.it()) + " = " +
             r.rhs.str() + "\n";
  }
  for (auto& [name, t] : p.targets) {
    out += "\n[target " + name + "]\n";
    out += "local";
    for (auto& d : t->deps()) out += " " + d;
    out += "\n";
    if (!t->nonlocals().empty()) {
      out += "nonlocal";
      for (auto& n : t->nonlocals()) out += " " + n;
      out += "\n";
    }
    renderSystemRules(out, *t);
  }
  for (auto& [name, f] : p.forms) {
    out += "\n[form " + name + "]\n";
    out += "d" + s.ix() + ": " +
           (f.scalar() ? f.xComp.at(0, 0).str() : render(f.xComp)) + "\n";
    out += "d" + s.it() + ": " +
           (f.scalar() ? f.tComp.at(0, 0).str() : render(f.tComp)) + "\n";
  }
  for (auto& nf : p.fields) {
    out += "\n[field " + nf.name + "]\n";
    const PseudoField& f = nf.field;
    if (f.scalar()) {
      out += "base: " + f.base().at(0, 0).str() + ", " +
             f.base().at(0, 1).str() + "\n";
      for (auto& [var, m] : f.components())
        out += var + ": " + m.at(0, 0).str() + "\n";
      out += "c: " + ratStr(f.scalarMultiple()) + "\n";
    } else {
      out += "base: " + render(f.base()) + "\n";
      for (auto& [var, m] : f.components())
        out += var + ": " + render(m) + "\n";
    }
    out += "form: " + nf.formName + "\n";
  }
  for (auto& [name, m] : p.morphisms) {
    out += "\n[morphism " + name + "]\n";
    out += s.ix() + "' = " + m.frame().xi1().str() + "\n";
    out += s.it() + "' = " + m.frame().xi2().str() + "\n";
    for (auto& [var, e] : m.frame().images())
      out += var + " = " + e.str() + "\n";
  }
  for (auto& [name, blk] : p.searches) {
    out += "\n[search " + name + "]\n";
    out += "over:";
    for (size_t i = 0; i < blk.over.size(); ++i)
      out += (i ? ", " : " ") + blk.over[i].str();
    out += "\ndegree: " + std::to_string(blk.degree) + "\n";
    if (blk.includeBase) out += "base: yes\n";
    if (!blk.cValues.empty()) {
      out += "c:";
      for (size_t i = 0; i < blk.cValues.size(); ++i)
        out += (i ? ", " : " ") + ratStr(blk.cValues[i]);
      out += "\n";
    }
    out += "form: " + blk.formName + "\n";
  }
  for (auto& [name, blk] : p.hunts) {
    out += "\n[hunt " + name + "]\n";
    out += "morphism: " + blk.morphismName + "\n";
    out += "target: " + blk.targetName + "\n";
    out += "monomials:";
    for (size_t i = 0; i < blk.monomials.size(); ++i)
      out += (i ? ", " : " ") + blk.monomials[i].str();
    out += "\n";
  }
  if (p.soliton) {
    const SolitonBlock& blk = *p.soliton;
    out += "\n[soliton]\n";
    for (auto& [n, e] : blk.seed) out += "seed: " + n + " = " + e.str() + "\n";
    for (auto& [n, v] : blk.paramValues)
      out += "param: " + n + " = " + fmtDouble(v) + "\n";
    for (auto& [n, v] : blk.ic)
      out += "ic: " + n + " = " + fmtDouble(v) + "\n";
    out += "grid: " + fmtDouble(blk.grid.xmin) + " " +
           fmtDouble(blk.grid.xmax) + " " + fmtDouble(blk.grid.tmin) + " " +
           fmtDouble(blk.grid.tmax) + "\n";
    out += "steps: " + std::to_string(blk.grid.nx) + " " +
           std::to_string(blk.grid.nt) + "\n";
    out += "base: " + fmtDouble(blk.grid.x0) + " " + fmtDouble(blk.grid.t0) +
           "\n";
    if (!blk.morphismName.empty()) out += "morphism: " + blk.morphismName + "\n";
    if (!blk.targetName.empty()) out += "target: " + blk.targetName + "\n";
  }
  if (!p.asserts.empty()) {
    out += "\n[assert]\n";
    for (const Assertion& a : p.asserts) {
      switch (a.kind) {
        case AssertKind::SolvedForm: out += "solved_form"; break;
        case AssertKind::ConservationLaw:
          out += "conservation_law " + a.names[0];
          break;
        case AssertKind::Zcr: out += "zcr " + a.names[0]; break;
        case AssertKind::FlatForm: out += "flat " + a.names[0]; break;
        case AssertKind::Pseudosymmetry:
          out += "pseudosymmetry " + a.names[0];
          break;
        case AssertKind::RPseudosymmetry:
          out += "r_pseudosymmetry " + a.names[0];
          break;
        case AssertKind::Invariant:
          out += "invariant " + a.names[0] + " : " + a.expr.str();
          break;
        case AssertKind::MorphismCheck:
          out += "morphism " + a.names[0] + " -> " + a.names[1];
          break;
        case AssertKind::Regular: out += "regular " + a.names[0]; break;
        case AssertKind::RiccatiMatch:
          out += "riccati_match " + a.names[0] + " pivot " +
                 std::to_string(a.pivot) + " " + a.names[1];
          break;
        case AssertKind::Factor:
          out += "factor " + a.names[0] + " " + a.names[1] + " -> " +
                 a.names[2];
          break;
        case AssertKind::Search:
          out += "search " + a.names[0] + " dim " + std::to_string(a.dim);
          break;
        case AssertKind::Hunt:
          out += "hunt " + a.names[0] + " dim " + std::to_string(a.dim);
          break;
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace jetkit
