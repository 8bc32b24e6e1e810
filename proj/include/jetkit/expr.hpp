#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jetkit/rational.hpp"

namespace jetkit {

// Exact symbolic expressions: quotients of multivariate integer polynomials
// over an interned table of generators.  Generators are plain symbols
// (coordinates and parameters), jet variables, nonlocal variables, and a
// small set of transcendental kernels applied to expression arguments.
//
// Every Expr is kept in a canonical form:
//   - numerator and denominator are coprime with joint integer content 1,
//   - the denominator's leading coefficient (content order) is positive,
//   - cos(a)^2 is rewritten to 1 - sin(a)^2,
//   - each monomial carries at most one exponential factor,
//   - denominators carry no negative exponential direction (the componentwise
//     minimum of exponential arguments across denominator terms is zero),
//   - kernel arguments are sign-normalized using the kernel's parity.
// Equality of canonical forms is structural equality.

enum class GenKind : uint8_t { Sym, Jet, Nonlocal, Kernel };
enum class KOp : uint8_t { Exp, Ln, Sin, Cos, Tan, Arctan, Sqrt };

const char* kopName(KOp op);

class Expr;

struct Gen {
  GenKind kind = GenKind::Sym;
  std::string name;  // symbol, jet variable, or nonlocal name; empty for kernels
  bool indep = false;              // Sym only: true for base coordinates
  int a = 0, b = 0;                // Jet only: derivative orders
  std::string ix = "x", it = "t";  // Jet only: coordinate names for printing
  KOp op = KOp::Exp;               // Kernel only
  std::shared_ptr<const Expr> arg; // Kernel only
  std::string key;                 // content-based sort key, unique per generator
};

using GenId = int32_t;

const Gen& genInfo(GenId id);
GenId genSym(const std::string& name, bool indep);
GenId genJet(const std::string& var, int a, int b,
             const std::string& ix = "x", const std::string& it = "t");
GenId genNonlocal(const std::string& name);
std::string genStr(GenId id);

// Monomial: generator ids with positive exponents, sorted by id.
using Mono = std::vector<std::pair<GenId, int32_t>>;
// Polynomial: monomial -> nonzero integer coefficient.
using Poly = std::map<Mono, Int>;

class Expr {
 public:
  Expr() : den_{{Mono{}, Int(1)}} {}  // zero

  static Expr fromInt(long v);
  static Expr fromInt(const Int& v);
  static Expr fromRat(const Rat& r);
  static Expr fromGen(GenId id);
  // Canonicalizes num/den; throws on zero denominator.
  static Expr make(Poly num, Poly den);

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }

  bool isZero() const { return num_.empty(); }
  bool isRational() const;
  // Requires isRational().
  Rat asRational() const;
  bool denIsOne() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  Expr operator-() const;
  Expr& operator+=(const Expr& o) { *this = *this + o; return *this; }
  Expr& operator-=(const Expr& o) { *this = *this - o; return *this; }
  Expr& operator*=(const Expr& o) { *this = *this * o; return *this; }
  Expr& operator/=(const Expr& o) { *this = *this / o; return *this; }
  Expr pow(long k) const;

  bool operator==(const Expr& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Expr& o) const { return !(*this == o); }
  size_t hash() const;

  // Canonical text form; deterministic across runs and threads.
  std::string str() const;

 private:
  Poly num_;
  Poly den_;
};

inline Expr ei(long v) { return Expr::fromInt(v); }
Expr erat(long num, long den);

// Transcendental kernels.  The returned expression reflects the rewrite
// rules listed above (so e.g. kernel(KOp::Tan, a) returns sin(a)/cos(a) and
// kernel(KOp::Exp, Expr()) returns 1).
Expr kernel(KOp op, const Expr& arg);
inline Expr kExp(const Expr& a) { return kernel(KOp::Exp, a); }
inline Expr kLn(const Expr& a) { return kernel(KOp::Ln, a); }
inline Expr kSin(const Expr& a) { return kernel(KOp::Sin, a); }
inline Expr kCos(const Expr& a) { return kernel(KOp::Cos, a); }
inline Expr kTan(const Expr& a) { return kernel(KOp::Tan, a); }
inline Expr kArctan(const Expr& a) { return kernel(KOp::Arctan, a); }
inline Expr kSqrt(const Expr& a) { return kernel(KOp::Sqrt, a); }

// Derivative of the kernel function with respect to its argument, evaluated
// at the given argument (e.g. Sin -> cos(arg)).
Expr kernelDerivative(KOp op, const Expr& arg);

// Partial derivative treating every generator (kernels included) as an
// independent atom.
Expr pdAtomic(const Expr& e, GenId g);
// Partial derivative with the chain rule applied through kernel arguments.
Expr pdChain(const Expr& e, GenId g);

// All generators of e, recursing through kernel arguments.
void collectGens(const Expr& e, std::set<GenId>& out);
std::set<GenId> closureGens(const Expr& e);

// Substitutes gen -> replacement simultaneously, recursing through kernel
// arguments; generators absent from the map are kept.
Expr substitute(const Expr& e, const std::map<GenId, Expr>& map);

// High-precision evaluation.  Returns nullopt if the assignment hits a domain
// edge: |denominator| < domainMargin, ln argument < domainMargin, or a
// negative sqrt argument.  Assignments must cover every non-kernel generator
// in the closure of e.
struct EvalGuard {
  double domainMargin = 1e-3;
};
std::optional<Real> evalReal(const Expr& e, const std::map<GenId, Real>& vals,
                             const EvalGuard& guard = {});

// Fast double evaluation for the numeric pipeline; nullopt on domain errors
// or a zero denominator.
std::optional<double> evalDouble(const Expr& e,
                                 const std::map<GenId, double>& vals);

enum class Verdict { Pass, ProbabilisticPass, Fail, Undecidable };
const char* verdictName(Verdict v);
// Combines verdicts of subchecks: Fail dominates, then Undecidable, then
// ProbabilisticPass; Pass only if all pass.
Verdict combineVerdicts(Verdict a, Verdict b);

struct ZeroOptions {
  uint64_t seed = 0;
  // Working precision in decimal digits; 0 means: use JETKIT_PRECISION from
  // the environment, falling back to 50.
  unsigned digits = 0;
  unsigned draws = 24;           // valid draws required for a probabilistic pass
  unsigned maxAttempts = 200;
  double threshold = 1e-30;      // |value| below this counts as zero
  double domainMargin = 1e-3;    // draw rejection margin (poles, ln, distinct)
  std::set<GenId> nonzero;       // generators that must not be near zero
  std::vector<std::pair<GenId, GenId>> distinct;  // pairs kept apart
};

struct ZeroResult {
  Verdict verdict = Verdict::Undecidable;
  unsigned validDraws = 0;
  unsigned attempts = 0;
  std::string witness;  // for Fail: the offending assignment and value
};

// Zero test: symbolic zero is authoritative (Pass); otherwise random rational
// draws evaluated at high precision decide between ProbabilisticPass, Fail,
// and Undecidable.
ZeroResult isZero(const Expr& e, const ZeroOptions& opt = {});

unsigned precisionFromEnv();  // JETKIT_PRECISION, default 50

}  // namespace jetkit
