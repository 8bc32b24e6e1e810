#include "jetkit/frame.hpp"

#include <stdexcept>

namespace jetkit {

DerivativeFrame::DerivativeFrame(
    const EqSystem& s, Expr xi1, Expr xi2,
    std::vector<std::pair<std::string, Expr>> images)
    : s_(s),
      xi1_(s.reduce(xi1)),
      xi2_(s.reduce(xi2)),
      images_(std::move(images)) {
  Matrix j(2, 2);
  j.at(0, 0) = s_.totalD(xi1_, 0);
  j.at(0, 1) = s_.totalD(xi2_, 0);
  j.at(1, 0) = s_.totalD(xi1_, 1);
  j.at(1, 1) = s_.totalD(xi2_, 1);
  det_ = s_.reduce(j.det());
  if (det_.isZero())
    throw std::runtime_error("frame Jacobian determinant reduces to zero");
  jinv_ = j.adjugate().map(
      [&](const Expr& e) { return s_.reduce(e) / det_; });
  for (const auto& [name, e] : images_) {
    if (name.empty()) throw std::invalid_argument("empty image name");
    (void)e;
  }
}

Verdict DerivativeFrame::checkRegularity(const ZeroOptions& opt) const {
  ZeroResult z = isZero(det_, opt);
  switch (z.verdict) {
    case Verdict::Fail:
      return Verdict::Pass;
    case Verdict::Pass:
    case Verdict::ProbabilisticPass:
      return Verdict::Fail;
    default:
      return Verdict::Undecidable;
  }
}

std::pair<Expr, Expr> DerivativeFrame::directionalDerivatives(
    const Expr& e) const {
  Expr dx = s_.totalD(e, 0), dt = s_.totalD(e, 1);
  Expr g1 = s_.reduce(jinv_.at(0, 0) * dx + jinv_.at(0, 1) * dt);
  Expr g2 = s_.reduce(jinv_.at(1, 0) * dx + jinv_.at(1, 1) * dt);
  return {g1, g2};
}

bool DerivativeFrame::hasImage(const std::string& name) const {
  for (const auto& [n, e] : images_) {
    (void)e;
    if (n == name) return true;
  }
  return false;
}

Expr DerivativeFrame::value(const std::string& name, int a, int b) const {
  if (a < 0 || b < 0) throw std::invalid_argument("negative derivative order");
  {
    std::lock_guard<std::mutex> lock(memo_->mu);
    auto it = memo_->val.find({name, a, b});
    if (it != memo_->val.end()) return it->second;
  }
  Expr r;
  if (a == 0 && b == 0) {
    bool found = false;
    for (const auto& [n, e] : images_)
      if (n == name) {
        r = s_.reduce(e);
        found = true;
        break;
      }
    if (!found)
      throw std::invalid_argument("no image named '" + name + "'");
  } else if (b > 0) {
    r = directionalDerivatives(value(name, a, b - 1)).second;
  } else {
    r = directionalDerivatives(value(name, a - 1, 0)).first;
  }
  std::lock_guard<std::mutex> lock(memo_->mu);
  return memo_->val.emplace(std::make_tuple(name, a, b), std::move(r))
      .first->second;
}

}  // namespace jetkit
