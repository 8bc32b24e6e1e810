#pragma once

#include <string>
#include <vector>

#include "jetkit/expr.hpp"
#include "jetkit/forms.hpp"
#include "jetkit/morphism.hpp"
#include "jetkit/pseudosym.hpp"
#include "jetkit/system.hpp"

namespace jetkit {

// Linear ansatz for a scalar pseudosymmetry search.  Every generating
// component (and, with includeBase, both base components) is expanded as an
// unknown-coefficient linear combination of the given monomials; the twist is
// c * mu with c ranging over cValues.  Unknown coefficients are interned as
// symbols named "_c0", "_c1", ...; monomials mentioning such a symbol are
// rejected by the linearity check.
struct AnsatzSpec {
  std::vector<Expr> monomials;
  bool includeBase = false;
  std::vector<Rat> cValues;  // empty: scan defaultCScan()
  HForm mu;
};

// {0, 1, -1, 2, -2, 4, -4, 1/2, -1/2}
std::vector<Rat> defaultCScan();

// Solution space of the tangency equations for one c value.  layout names
// the unknown slots in coefficient-vector order: for each expanded block
// ("a1", "a2", then one block per dependent and nonlocal variable in system
// order) one slot per ansatz monomial.  basis spans the nullspace; fields
// holds the realized field for each basis vector and verified its
// re-verification verdict from checkPseudosymmetry.
struct AnsatzSolution {
  Rat c;
  std::vector<std::string> layout;
  std::vector<std::vector<Rat>> basis;
  std::vector<PseudoField> fields;
  std::vector<Verdict> verified;
};

// Builds the tangency residuals for the ansatz, extracts the coefficient of
// every residual monomial with respect to the unknowns, and solves the
// resulting homogeneous linear system exactly over the rationals.  One
// AnsatzSolution per c value, in cValues order (basis empty when only the
// zero field fits).  Throws std::invalid_argument when an unknown occurs
// nonlinearly in a residual, quoting the offending term.
std::vector<AnsatzSolution> searchPseudosymmetry(const EqSystem& s,
                                                 const AnsatzSpec& spec,
                                                 const ZeroOptions& opt);

// Linear relations among pulled-back target monomials.  Each relation is a
// coefficient vector over monomials (in the given order) whose combination
// pulls back to zero modulo the source system; verified holds the isZero
// verdict of each re-checked combination.
struct HuntResult {
  std::vector<std::vector<Rat>> relations;
  std::vector<Verdict> verified;
};

// Forms sum_i u_i * pullback(monomials[i]) with unknown u_i, reduces modulo
// the morphism source, and solves for the coefficient vectors making the sum
// vanish identically.  An empty result means no relation of this shape.
HuntResult huntRelations(const Morphism& m, const EqSystem& target,
                         const std::vector<Expr>& monomials,
                         const ZeroOptions& opt);

}  // namespace jetkit
