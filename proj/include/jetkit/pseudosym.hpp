#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "jetkit/forms.hpp"
#include "jetkit/frame.hpp"

namespace jetkit {

// Vector field with base components on the independent variables and one
// generating component per dependent or nonlocal variable, pseudo-prolonged
// relative to a 1-form.  Rank-1 fields twist by the scalar form c * mu;
// rank-r fields twist by an r x r matrix form and carry r-column generating
// components.  Variables without an entry get a zero component.
class PseudoField {
 public:
  static PseudoField scalarField(Expr ax, Expr at,
                                 std::map<std::string, Expr> phi, Rat c,
                                 HForm mu);
  static PseudoField matrixField(Matrix base,  // rank x 2
                                 std::map<std::string, Matrix> phi,
                                 HForm gamma);

  int rank() const { return rank_; }
  bool scalar() const { return rank_ == 1; }
  const Matrix& base() const { return base_; }
  const std::map<std::string, Matrix>& components() const { return phi_; }
  const Rat& scalarMultiple() const { return c_; }
  // Effective twist: c * mu for rank 1, gamma otherwise.
  const HForm& form() const { return form_; }

 private:
  int rank_ = 1;
  Matrix base_;
  std::map<std::string, Matrix> phi_;
  Rat c_ = 1;
  HForm form_;
};

// Pseudo-prolongation context binding a field to a system.  Normalizes the
// generating components to their evolutionary representative (subtracting
// a_i times the first-derivative rules) and memoizes (D + U)_sigma values;
// x-direction factors are applied first, t-direction factors outermost.
// The field and system must outlive the context.
class PseudoProlong {
 public:
  PseudoProlong(const PseudoField& f, const EqSystem& s);

  int rank() const { return f_.rank(); }
  const PseudoField& field() const { return f_; }
  const EqSystem& system() const { return s_; }

  // (D + U)_(a,b) of var's evolutionary component; rank x 1.
  Matrix pp(const std::string& var, int a, int b);
  // One (D_dir + U_dir) application to an arbitrary rank x 1 column.
  Matrix applyStep(const Matrix& m, int dir);
  // Sum over coordinates of e of dE/dcoord * pp(coord); rank x 1.
  Matrix gradTerms(const Expr& e);
  // Full field application a_i D_i(e) + gradTerms(e); rank x 1.
  Matrix applyField(const Expr& e);

 private:
  const PseudoField& f_;
  const EqSystem& s_;
  Matrix ux_, ut_;
  std::map<std::string, Matrix> phiTilde_;

  struct Memo {
    std::mutex mu;
    std::map<std::tuple<std::string, int, int>, Matrix> val;
  };
  std::unique_ptr<Memo> memo_ = std::make_unique<Memo>();
};

// Reduced tangency residual for every rule of the bound system, covering
// rules included, named by the rule lead.  No zero testing is performed.
std::vector<std::pair<std::string, Matrix>> tangencyResiduals(
    PseudoProlong& ctx);

struct TangencyEntry {
  std::string rule;
  Verdict verdict = Verdict::Undecidable;
  Matrix residual;  // rank x 1, reduced
};

struct PseudosymReport {
  Verdict formVerdict = Verdict::Undecidable;
  std::vector<TangencyEntry> tangency;
  Verdict verdict = Verdict::Undecidable;  // combined
};

// Form validity (conservation law or matrix-form flatness) plus the
// tangency condition for every rule of the system, covering rules included.
PseudosymReport checkPseudosymmetry(const PseudoField& f, const EqSystem& s,
                                    const ZeroOptions& opt);

Verdict isInvariant(PseudoProlong& ctx, const Expr& e, const ZeroOptions& opt);
Verdict isInvariant(const PseudoField& f, const Expr& e, const EqSystem& s,
                    const ZeroOptions& opt);

struct DerivedInvariantTable {
  Expr det;
  // entries[i][j]: derivative of nu_j along the xi_(i+1) frame direction.
  std::vector<std::vector<Expr>> entries;
};

// [D xi]^(-1) [D nu] on the system; refuses a frame whose Jacobian
// determinant tests as zero.
DerivedInvariantTable derivedInvariants(const Expr& xi1, const Expr& xi2,
                                        const std::vector<Expr>& nus,
                                        const EqSystem& s,
                                        const ZeroOptions& opt);

}  // namespace jetkit
