#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jetkit/forms.hpp"
#include "jetkit/morphism.hpp"
#include "jetkit/numeric.hpp"
#include "jetkit/pseudosym.hpp"
#include "jetkit/search.hpp"
#include "jetkit/system.hpp"

namespace jetkit {

// Parse failure with a 1-based source position.  what() carries the
// position in "line L, col C: message" form.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ", col " +
                           std::to_string(col) + ": " + msg),
        line_(line),
        col_(col) {}

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_ = 0, col_ = 0;
};

// Name resolution context for expression text.  Identifiers resolve to the
// two coordinates, dependent variables (plain or with a derivative suffix),
// nonlocal variables, or parameters.  With open set, an undeclared
// identifier resolves to a parameter-style symbol and an undeclared
// derivative head to a dependent variable; otherwise it is an error.
struct SymbolTable {
  std::string ix = "x", it = "t";
  std::vector<std::string> deps;
  std::vector<std::string> nonlocals;
  std::vector<std::string> params;
  bool open = false;
};

SymbolTable symbolsFor(const EqSystem& s);

// Infix expression grammar: + - * / ^ with ^ binding tightest and
// right-associative, then unary minus, then * and /.  Function application
// is restricted to the transcendental kernels (exp, ln, sin, cos, tan,
// arctan, sqrt).  Jet coordinates are written with a derivative suffix
// counting single-letter coordinates (z_xxt) or explicitly as z@[2, 1].
// There is no implicit multiplication.
Expr parseExpr(const std::string& text, const SymbolTable& tab);
Expr parseExpr(const std::string& text);  // open table over x and t

// Bracketed row-major matrix literal: [[a, b], [c, d]].
Matrix parseMatrix(const std::string& text, const SymbolTable& tab);

std::string render(const Expr& e);
std::string render(const Matrix& m);

// All multivariate products of the generators with total degree at most
// degree, constants first, ordered by total degree and then by descending
// power of the earlier generators.
std::vector<Expr> monomialBasis(const std::vector<Expr>& over, int degree);

enum class AssertKind {
  SolvedForm,       // solved_form
  ConservationLaw,  // conservation_law MU
  Zcr,              // zcr ALPHA
  FlatForm,         // flat GAMMA
  Pseudosymmetry,   // pseudosymmetry Y
  RPseudosymmetry,  // r_pseudosymmetry YY
  Invariant,        // invariant Y : EXPR
  MorphismCheck,    // morphism B -> TARGET
  Regular,          // regular B
  RiccatiMatch,     // riccati_match ALPHA pivot H MU
  Factor,           // factor Y B -> TARGET
  Search,           // search S dim D
  Hunt,             // hunt H dim D
};

struct Assertion {
  AssertKind kind = AssertKind::SolvedForm;
  std::vector<std::string> names;  // referenced objects, in written order
  Expr expr;                       // Invariant payload
  int pivot = 1;                   // RiccatiMatch
  int dim = 0;                     // Search and Hunt
  std::string text;                // the line as written, trimmed
  int line = 0;
};

// Ansatz declaration: generators and a total-degree cap for the monomial
// basis, the c values to scan (empty for the default scan), and the name of
// the twisting form.
struct SearchBlock {
  std::vector<Expr> over;
  int degree = 2;
  bool includeBase = false;
  std::vector<Rat> cValues;
  std::string formName;
  int line = 0;
};

// Relation hunt declaration: monomials over the named target system whose
// pullbacks along the named morphism are combed for linear relations.
struct HuntBlock {
  std::string morphismName;
  std::string targetName;
  std::vector<Expr> monomials;
  int line = 0;
};

// Numeric run declaration: seed section functions per dependent variable,
// parameter values, nonlocal initial conditions at the base point, grid
// geometry, and optionally a morphism to apply with a target system for
// residual measurement.
struct SolitonBlock {
  std::map<std::string, Expr> seed;
  std::map<std::string, double> paramValues;
  std::map<std::string, double> ic;
  GridSpec grid{-2.0, 2.0, -2.0, 2.0, 256, 256, 0.0, 0.0};
  std::string morphismName;
  std::string targetName;
  int line = 0;
};

struct NamedField {
  std::string name;
  PseudoField field;
  std::string formName;
};

// A parsed problem file: the main system, auxiliary target systems, named
// forms, fields, and morphisms, declared searches and hunts, at most one
// soliton block, and the ordered assertion list.  Morphisms hold a
// reference to *system, so the struct is move-only.
struct Problem {
  std::unique_ptr<EqSystem> system;
  std::vector<std::pair<std::string, std::unique_ptr<EqSystem>>> targets;
  std::vector<std::pair<std::string, HForm>> forms;
  std::vector<NamedField> fields;
  std::vector<std::pair<std::string, Morphism>> morphisms;
  std::vector<std::pair<std::string, SearchBlock>> searches;
  std::vector<std::pair<std::string, HuntBlock>> hunts;
  std::optional<SolitonBlock> soliton;
  std::vector<Assertion> asserts;

  const HForm* form(const std::string& name) const;
  const PseudoField* field(const std::string& name) const;
  const Morphism* morphism(const std::string& name) const;
  const EqSystem* target(const std::string& name) const;
  const SearchBlock* search(const std::string& name) const;
  const HuntBlock* hunt(const std::string& name) const;
};

// Parses a sectioned problem file and validates it eagerly: declarations
// before use, solved-form ranking for the main and target systems, covering
// rules in both directions, and assertion references that resolve.  Throws
// ParseError on any failure.
Problem parseProblem(const std::string& text);
Problem parseProblemFile(const std::string& path);

// Canonical text of a problem; parsing it back reproduces the problem, and
// rendering again reproduces the text.
std::string render(const Problem& p);

}  // namespace jetkit
