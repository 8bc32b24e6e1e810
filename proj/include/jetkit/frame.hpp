#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "jetkit/matrix.hpp"
#include "jetkit/system.hpp"

namespace jetkit {

// Derivative frame of a pair of functions (xi1, xi2) on a system: expresses
// total derivatives in the two frame directions through the inverse Jacobian
// [[D_x xi1, D_x xi2], [D_t xi1, D_t xi2]]^(-1), and lazily extends a set of
// named images to their higher derivatives along the frame.  This is the
// computational core shared by derived invariants and morphism prolongation.
class DerivativeFrame {
 public:
  DerivativeFrame(const EqSystem& s, Expr xi1, Expr xi2,
                  std::vector<std::pair<std::string, Expr>> images);

  const EqSystem& source() const { return s_; }
  const Expr& xi1() const { return xi1_; }
  const Expr& xi2() const { return xi2_; }
  const Expr& jacobianDet() const { return det_; }
  // Pass when the reduced Jacobian determinant does not test as zero.
  Verdict checkRegularity(const ZeroOptions& opt) const;

  // Derivatives of e along the two frame directions: J^(-1) (D_x e, D_t e).
  std::pair<Expr, Expr> directionalDerivatives(const Expr& e) const;

  bool hasImage(const std::string& name) const;
  const std::vector<std::pair<std::string, Expr>>& images() const {
    return images_;
  }
  // Image of the named variable's derivative of order (a, b) in the frame
  // directions; descends through the second direction first, memoized.
  Expr value(const std::string& name, int a, int b) const;

 private:
  const EqSystem& s_;
  Expr xi1_, xi2_;
  std::vector<std::pair<std::string, Expr>> images_;
  Matrix jinv_;
  Expr det_;

  struct Memo {
    std::mutex mu;
    std::map<std::tuple<std::string, int, int>, Expr> val;
  };
  std::unique_ptr<Memo> memo_ = std::make_unique<Memo>();
};

}  // namespace jetkit
