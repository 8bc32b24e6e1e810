#include "jetkit/forms.hpp"

#include <stdexcept>

namespace jetkit {

namespace {

Matrix totalDM(const Matrix& m, const EqSystem& s, int dir) {
  return m.map([&](const Expr& e) { return s.totalD(e, dir); });
}

Matrix reduceM(const Matrix& m, const EqSystem& s) {
  return m.map([&](const Expr& e) { return s.reduce(e); });
}

FormReport reportZeroM(const Matrix& m, const ZeroOptions& opt) {
  FormReport rep;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      ZeroResult z = isZero(m.at(i, j), opt);
      rep.verdict = combineVerdicts(rep.verdict, z.verdict);
      if (z.verdict != Verdict::Pass)
        rep.cells.push_back({i, j, z.verdict, m.at(i, j)});
    }
  return rep;
}

void requireSquare(const HForm& f) {
  if (f.xComp.rows() != f.xComp.cols() || f.tComp.rows() != f.tComp.cols() ||
      f.xComp.rows() != f.tComp.rows())
    throw std::invalid_argument("form components must be square and same size");
}

}  // namespace

HForm scalarForm(Expr ux, Expr ut) {
  return {Matrix::scalar(std::move(ux)), Matrix::scalar(std::move(ut))};
}

HForm matrixForm(Matrix ux, Matrix ut) {
  HForm f{std::move(ux), std::move(ut)};
  requireSquare(f);
  return f;
}

Matrix zcrResidual(const HForm& alpha, const EqSystem& s, ZcrConvention conv) {
  requireSquare(alpha);
  const Matrix& X = alpha.xComp;
  const Matrix& T = alpha.tComp;
  Matrix comm = commutator(X, T);
  Matrix r = totalDM(X, s, 1) - totalDM(T, s, 0);
  r = (conv == ZcrConvention::Standard) ? r + comm : r - comm;
  return reduceM(r, s);
}

Matrix zcrCrossResidual(const HForm& alpha, const EqSystem& s) {
  requireSquare(alpha);
  const Matrix& X = alpha.xComp;
  const Matrix& T = alpha.tComp;
  Matrix r = totalDM(T, s, 0) - totalDM(X, s, 1) - commutator(X, T);
  return reduceM(r, s);
}

FormReport isZcr(const HForm& alpha, const EqSystem& s, const ZeroOptions& opt,
                 ZcrConvention conv) {
  return reportZeroM(zcrResidual(alpha, s, conv), opt);
}

FormReport isConservationLaw(const HForm& mu, const EqSystem& s,
                             const ZeroOptions& opt) {
  if (!mu.scalar()) throw std::invalid_argument("conservation law must be scalar");
  Expr resid = s.reduce(s.totalD(mu.tComp.at(0, 0), 0) -
                        s.totalD(mu.xComp.at(0, 0), 1));
  return reportZeroM(Matrix::scalar(resid), opt);
}

FormReport isMatrixFormFlat(const HForm& u, const EqSystem& s,
                            const ZeroOptions& opt) {
  requireSquare(u);
  Matrix r = totalDM(u.tComp, s, 0) - totalDM(u.xComp, s, 1) +
             commutator(u.xComp, u.tComp);
  return reportZeroM(reduceM(r, s), opt);
}

HForm gaugeTransform(const HForm& alpha, const Matrix& g, const EqSystem& s,
                     const ZeroOptions& opt) {
  requireSquare(alpha);
  if (g.rows() != g.cols() || g.rows() != alpha.size())
    throw std::invalid_argument("gauge matrix shape mismatch");
  Expr d = s.reduce(g.det());
  ZeroResult z = isZero(d, opt);
  if (z.verdict == Verdict::Pass || z.verdict == Verdict::ProbabilisticPass)
    throw std::runtime_error("gauge matrix is singular");
  Matrix gi = g.inverse();
  auto transform = [&](const Matrix& comp, int dir) {
    return reduceM(totalDM(g, s, dir) * gi + g * comp * gi, s);
  };
  return {transform(alpha.xComp, 0), transform(alpha.tComp, 1)};
}

RiccatiResult riccatiCovering(const HForm& alpha, int pivot, const EqSystem& s,
                              const ZeroOptions& opt,
                              std::vector<std::string> rhoNames) {
  requireSquare(alpha);
  int l = alpha.size();
  if (l < 2) throw std::invalid_argument("need a matrix form of size >= 2");
  if (pivot < 1 || pivot > l) throw std::invalid_argument("pivot out of range");
  FormReport zcr = isZcr(alpha, s, opt);
  if (zcr.verdict == Verdict::Fail || zcr.verdict == Verdict::Undecidable)
    throw std::runtime_error("form is not a zero-curvature representation");

  if (rhoNames.empty()) {
    if (l == 2) {
      rhoNames = {"rho"};
    } else {
      for (int k = 1; k < l; ++k) rhoNames.push_back("rho" + std::to_string(k));
    }
  }
  if (static_cast<int>(rhoNames.size()) != l - 1)
    throw std::invalid_argument("need one nonlocal name per non-pivot row");

  std::vector<std::string> nonlocals = s.nonlocals();
  for (const auto& n : rhoNames) {
    if (s.hasDep(n) || s.hasNonlocal(n))
      throw std::invalid_argument("nonlocal name '" + n + "' already in use");
    nonlocals.push_back(n);
  }

  EqSystem cov(s.ix(), s.it(), s.deps(), s.params(), nonlocals);
  for (const auto& r : s.rules()) cov.addRule(r.var, r.a, r.b, r.rhs);
  for (const auto& c : s.coveringRules()) cov.addCoveringRule(c.nl, c.dir, c.rhs);
  for (const auto& [p, q] : s.distinctPairs()) cov.addDistinct(p, q);

  Matrix vprime(l, 1);
  {
    int k = 0;
    for (int q = 0; q < l; ++q)
      vprime.at(q, 0) = (q == pivot - 1)
                            ? ei(1)
                            : Expr::fromGen(genNonlocal(rhoNames[k++]));
  }
  Matrix wx = alpha.xComp * vprime;
  Matrix wt = alpha.tComp * vprime;
  {
    int k = 0;
    for (int q = 0; q < l; ++q) {
      if (q == pivot - 1) continue;
      Expr rho = Expr::fromGen(genNonlocal(rhoNames[k]));
      cov.addCoveringRule(rhoNames[k], 0,
                          cov.reduce(wx.at(q, 0) - wx.at(pivot - 1, 0) * rho));
      cov.addCoveringRule(rhoNames[k], 1,
                          cov.reduce(wt.at(q, 0) - wt.at(pivot - 1, 0) * rho));
      ++k;
    }
  }
  auto violations = cov.solvedFormViolations();
  if (!violations.empty())
    throw std::runtime_error("covering failed validation: " + violations.front());

  HForm mu = scalarForm(cov.reduce(wx.at(pivot - 1, 0)),
                        cov.reduce(wt.at(pivot - 1, 0)));
  return {std::move(cov), std::move(mu), std::move(rhoNames)};
}

}  // namespace jetkit
