#include "jetkit/pseudosym.hpp"

#include <stdexcept>

namespace jetkit {

PseudoField PseudoField::scalarField(Expr ax, Expr at,
                                     std::map<std::string, Expr> phi, Rat c,
                                     HForm mu) {
  if (!mu.scalar())
    throw std::invalid_argument("rank-1 field needs a scalar form");
  PseudoField f;
  f.rank_ = 1;
  f.base_ = Matrix(1, 2);
  f.base_.at(0, 0) = std::move(ax);
  f.base_.at(0, 1) = std::move(at);
  for (auto& [v, e] : phi) f.phi_[v] = Matrix::scalar(std::move(e));
  f.c_ = c;
  Expr scale = Expr::fromRat(c);
  f.form_ = scalarForm(scale * mu.xComp.at(0, 0), scale * mu.tComp.at(0, 0));
  return f;
}

PseudoField PseudoField::matrixField(Matrix base,
                                     std::map<std::string, Matrix> phi,
                                     HForm gamma) {
  int r = gamma.size();
  if (gamma.xComp.rows() != gamma.xComp.cols())
    throw std::invalid_argument("matrix form must be square");
  if (base.rows() != r || base.cols() != 2)
    throw std::invalid_argument("base components must be rank x 2");
  for (const auto& [v, m] : phi)
    if (m.rows() != r || m.cols() != 1)
      throw std::invalid_argument("component of '" + v +
                                  "' must be a rank x 1 column");
  PseudoField f;
  f.rank_ = r;
  f.base_ = std::move(base);
  f.phi_ = std::move(phi);
  f.form_ = std::move(gamma);
  return f;
}

PseudoProlong::PseudoProlong(const PseudoField& f, const EqSystem& s)
    : f_(f), s_(s), ux_(f.form().xComp), ut_(f.form().tComp) {
  int r = f.rank();
  for (const auto& [v, m] : f.components()) {
    (void)m;
    if (!s.hasDep(v) && !s.hasNonlocal(v))
      throw std::invalid_argument("field component for unknown variable '" +
                                  v + "'");
  }
  auto component = [&](const std::string& v) {
    auto it = f.components().find(v);
    return it != f.components().end() ? it->second : Matrix(r, 1);
  };
  // Evolutionary representative: subtract a_i times the first-derivative
  // rules so that the a_i D_i part can be dropped from the tangency check.
  for (const auto& v : s.deps()) {
    Matrix m = component(v);
    m = m - f.base().col(0) * Expr::fromGen(genJet(v, 1, 0, s.ix(), s.it()));
    m = m - f.base().col(1) * Expr::fromGen(genJet(v, 0, 1, s.ix(), s.it()));
    phiTilde_[v] = m.map([&](const Expr& e) { return s.reduce(e); });
  }
  for (const auto& v : s.nonlocals()) {
    Matrix m = component(v);
    for (int dir = 0; dir < 2; ++dir) {
      const CoveringRule* cr = s.coveringRule(v, dir);
      if (!cr)
        throw std::invalid_argument("nonlocal '" + v +
                                    "' is missing a covering rule");
      m = m - f.base().col(dir) * cr->rhs;
    }
    phiTilde_[v] = m.map([&](const Expr& e) { return s.reduce(e); });
  }
}

Matrix PseudoProlong::applyStep(const Matrix& m, int dir) {
  Matrix d = m.map([&](const Expr& e) { return s_.totalD(e, dir); });
  Matrix r = d + (dir == 0 ? ux_ : ut_) * m;
  return r.map([&](const Expr& e) { return s_.reduce(e); });
}

Matrix PseudoProlong::pp(const std::string& var, int a, int b) {
  if (a < 0 || b < 0) throw std::invalid_argument("negative derivative order");
  {
    std::lock_guard<std::mutex> lock(memo_->mu);
    auto it = memo_->val.find({var, a, b});
    if (it != memo_->val.end()) return it->second;
  }
  Matrix r;
  if (a == 0 && b == 0) {
    auto it = phiTilde_.find(var);
    if (it == phiTilde_.end())
      throw std::invalid_argument("no field component for '" + var + "'");
    r = it->second;
  } else if (b > 0) {
    r = applyStep(pp(var, a, b - 1), 1);
  } else {
    r = applyStep(pp(var, a - 1, 0), 0);
  }
  std::lock_guard<std::mutex> lock(memo_->mu);
  return memo_->val.emplace(std::make_tuple(var, a, b), std::move(r))
      .first->second;
}

Matrix PseudoProlong::gradTerms(const Expr& e) {
  Matrix out(rank(), 1);
  for (GenId g : closureGens(e)) {
    const Gen& info = genInfo(g);
    Matrix term;
    if (info.kind == GenKind::Jet && s_.hasDep(info.name)) {
      term = pp(info.name, info.a, info.b);
    } else if (info.kind == GenKind::Nonlocal && s_.hasNonlocal(info.name)) {
      term = pp(info.name, 0, 0);
    } else {
      continue;
    }
    Expr d = pdChain(e, g);
    if (d.isZero()) continue;
    out = out + term * d;
  }
  return out.map([&](const Expr& q) { return s_.reduce(q); });
}

Matrix PseudoProlong::applyField(const Expr& e) {
  Matrix out = f_.base().col(0) * s_.totalD(e, 0) +
               f_.base().col(1) * s_.totalD(e, 1) + gradTerms(e);
  return out.map([&](const Expr& q) { return s_.reduce(q); });
}

std::vector<std::pair<std::string, Matrix>> tangencyResiduals(
    PseudoProlong& ctx) {
  const EqSystem& s = ctx.system();
  std::vector<std::pair<std::string, Matrix>> out;
  auto push = [&](const std::string& name, const Matrix& lhs,
                  const Expr& rhs) {
    Matrix resid = lhs - ctx.gradTerms(rhs);
    out.emplace_back(name,
                     resid.map([&](const Expr& e) { return s.reduce(e); }));
  };
  for (const auto& r : s.rules()) {
    std::string name = r.var + "[" + std::to_string(r.a) + "," +
                       std::to_string(r.b) + "]";
    push(name, ctx.pp(r.var, r.a, r.b), s.reduce(r.rhs));
  }
  for (const auto& c : s.coveringRules()) {
    std::string name = c.nl + "_" + (c.dir == 0 ? s.ix() : s.it());
    push(name, ctx.pp(c.nl, c.dir == 0 ? 1 : 0, c.dir == 0 ? 0 : 1),
         s.reduce(c.rhs));
  }
  return out;
}

PseudosymReport checkPseudosymmetry(const PseudoField& f, const EqSystem& s,
                                    const ZeroOptions& opt) {
  PseudosymReport rep;
  rep.formVerdict = f.scalar()
                        ? isConservationLaw(f.form(), s, opt).verdict
                        : isMatrixFormFlat(f.form(), s, opt).verdict;
  PseudoProlong ctx(f, s);
  for (auto& [name, resid] : tangencyResiduals(ctx)) {
    TangencyEntry entry;
    entry.rule = name;
    entry.residual = resid;
    Verdict v = Verdict::Pass;
    for (int i = 0; i < entry.residual.rows(); ++i)
      v = combineVerdicts(v, isZero(entry.residual.at(i, 0), opt).verdict);
    entry.verdict = v;
    rep.tangency.push_back(std::move(entry));
  }
  rep.verdict = rep.formVerdict;
  for (const auto& e : rep.tangency)
    rep.verdict = combineVerdicts(rep.verdict, e.verdict);
  return rep;
}

Verdict isInvariant(PseudoProlong& ctx, const Expr& e,
                    const ZeroOptions& opt) {
  Matrix v = ctx.applyField(ctx.system().reduce(e));
  Verdict out = Verdict::Pass;
  for (int i = 0; i < v.rows(); ++i)
    out = combineVerdicts(out, isZero(v.at(i, 0), opt).verdict);
  return out;
}

Verdict isInvariant(const PseudoField& f, const Expr& e, const EqSystem& s,
                    const ZeroOptions& opt) {
  PseudoProlong ctx(f, s);
  return isInvariant(ctx, e, opt);
}

DerivedInvariantTable derivedInvariants(const Expr& xi1, const Expr& xi2,
                                        const std::vector<Expr>& nus,
                                        const EqSystem& s,
                                        const ZeroOptions& opt) {
  DerivativeFrame frame(s, xi1, xi2, {});
  DerivedInvariantTable out;
  out.det = frame.jacobianDet();
  if (frame.checkRegularity(opt) != Verdict::Pass)
    throw std::runtime_error("frame Jacobian is singular: det = " +
                             out.det.str());
  out.entries.assign(2, {});
  for (const Expr& nu : nus) {
    auto [g1, g2] = frame.directionalDerivatives(s.reduce(nu));
    out.entries[0].push_back(g1);
    out.entries[1].push_back(g2);
  }
  return out;
}

}  // namespace jetkit
