#pragma once

#include <string>
#include <vector>

#include "jetkit/covering.hpp"
#include "jetkit/matrix.hpp"
#include "jetkit/system.hpp"

namespace jetkit {

// Horizontal 1-form U_x dx + U_t dt whose components are either scalars
// (stored as 1x1 matrices) or square matrices of equal size.
struct HForm {
  Matrix xComp, tComp;
  bool scalar() const { return size() == 1; }
  int size() const { return xComp.rows(); }
};

HForm scalarForm(Expr ux, Expr ut);
HForm matrixForm(Matrix ux, Matrix ut);

// Orientation of the curvature residual.  Standard is
// D_t(X) - D_x(T) + [X, T]; FlippedCommutator negates the commutator term.
enum class ZcrConvention { Standard, FlippedCommutator };

struct CellVerdict {
  int row = 0, col = 0;
  Verdict verdict = Verdict::Undecidable;
  Expr residual;
};

struct FormReport {
  Verdict verdict = Verdict::Pass;
  std::vector<CellVerdict> cells;  // only non-Pass cells are recorded
};

// Reduced curvature residual matrix of X dx + T dt.
Matrix zcrResidual(const HForm& alpha, const EqSystem& s,
                   ZcrConvention conv = ZcrConvention::Standard);
// Independent cross-check: the dx^dt coefficient of d_H(alpha) - alpha^alpha,
// which equals the negated Standard residual.
Matrix zcrCrossResidual(const HForm& alpha, const EqSystem& s);

FormReport isZcr(const HForm& alpha, const EqSystem& s, const ZeroOptions& opt,
                 ZcrConvention conv = ZcrConvention::Standard);

// Scalar closedness D_x(U_t) - D_t(U_x) = 0 mod the system.
FormReport isConservationLaw(const HForm& mu, const EqSystem& s,
                             const ZeroOptions& opt);

// Matrix-form flatness D_x(U_t) - D_t(U_x) + [U_x, U_t] = 0 mod the system,
// the condition under which the pseudo-prolongation factors commute on shell.
FormReport isMatrixFormFlat(const HForm& u, const EqSystem& s,
                            const ZeroOptions& opt);

// X^S = D_x(S) S^{-1} + S X S^{-1} and likewise for T.  Refuses a gauge
// matrix whose reduced determinant tests as zero.
HForm gaugeTransform(const HForm& alpha, const Matrix& g, const EqSystem& s,
                     const ZeroOptions& opt);

struct RiccatiResult {
  EqSystem covering;
  HForm mu;
  std::vector<std::string> nonlocalNames;
};

// Projectivizes an l x l zero-curvature form at the given pivot row
// (1-based): with V' the vector carrying 1 at the pivot slot and the new
// nonlocals elsewhere, and W = M V' for M in {X, T}, the nonlocal rules are
// rho^j_xi = W_j - W_pivot rho^j and the returned scalar form is
// mu = W_pivot(X) dx + W_pivot(T) dt.  Refuses when is_zcr does not hold.
RiccatiResult riccatiCovering(const HForm& alpha, int pivot, const EqSystem& s,
                              const ZeroOptions& opt,
                              std::vector<std::string> rhoNames = {});

}  // namespace jetkit
