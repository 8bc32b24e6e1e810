#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jetkit/frame.hpp"
#include "jetkit/pseudosym.hpp"
#include "jetkit/system.hpp"

namespace jetkit {

struct MorphismEntry {
  std::string rule;
  Verdict verdict = Verdict::Undecidable;
  Expr residual;
};

struct MorphismReport {
  Verdict regularity = Verdict::Undecidable;
  std::vector<MorphismEntry> entries;
  Verdict verdict = Verdict::Undecidable;
};

// A map of jet extensions given by its lower components: images xi1, xi2 of
// the target coordinates and one image expression per target variable, all
// defined on the source system.  Higher derivatives of the images follow by
// the derivative frame of (xi1, xi2); the map respects a target system when
// every pulled-back rule reduces to zero on the source.
class Morphism {
 public:
  Morphism(const EqSystem& source, Expr xi1, Expr xi2,
           std::vector<std::pair<std::string, Expr>> images)
      : frame_(source, std::move(xi1), std::move(xi2), std::move(images)) {}

  const EqSystem& source() const { return frame_.source(); }
  const DerivativeFrame& frame() const { return frame_; }

  Verdict checkRegularity(const ZeroOptions& opt) const {
    return frame_.checkRegularity(opt);
  }

  // Image of the target variable's derivative of order (a, b).
  Expr prolong(const std::string& var, int a, int b) const {
    return frame_.value(var, a, b);
  }

  // Rewrite an expression in target coordinates as an expression on the
  // source: target coordinates become xi1/xi2, target jets and nonlocals
  // become prolonged images, parameters pass through.
  Expr pullback(const Expr& e, const EqSystem& target) const;

  // Check every rule and covering rule of the target under pullback.
  MorphismReport verify(const EqSystem& target, const ZeroOptions& opt) const;

 private:
  DerivativeFrame frame_;
};

struct FactorReport {
  std::vector<std::pair<std::string, Verdict>> invariance;
  MorphismReport morphism;
  Verdict verdict = Verdict::Undecidable;
};

// Check that the quotient system q is satisfied by the images of the given
// morphism and that every lower component of the morphism is an invariant of
// the field y on the morphism's source.
FactorReport factorCheck(const PseudoField& y, const Morphism& b,
                         const EqSystem& q, const ZeroOptions& opt);

}  // namespace jetkit
