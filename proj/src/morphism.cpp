#include "jetkit/morphism.hpp"

#include <map>
#include <set>
#include <stdexcept>

namespace jetkit {

Expr Morphism::pullback(const Expr& e, const EqSystem& target) const {
  std::set<GenId> gens = closureGens(e);
  std::map<GenId, Expr> map;
  for (GenId g : gens) {
    const Gen& gi = genInfo(g);
    switch (gi.kind) {
      case GenKind::Jet:
        if (!frame_.hasImage(gi.name))
          throw std::invalid_argument("no image for target variable '" +
                                      gi.name + "'");
        map[g] = frame_.value(gi.name, gi.a, gi.b);
        break;
      case GenKind::Nonlocal:
        if (!frame_.hasImage(gi.name))
          throw std::invalid_argument("no image for target nonlocal '" +
                                      gi.name + "'");
        map[g] = frame_.value(gi.name, 0, 0);
        break;
      case GenKind::Sym:
        if (gi.indep)
          map[g] = gi.name == target.ix() ? frame_.xi1() : frame_.xi2();
        break;
      case GenKind::Kernel:
        break;
    }
  }
  return source().reduce(substitute(e, map));
}

MorphismReport Morphism::verify(const EqSystem& target,
                                const ZeroOptions& opt) const {
  MorphismReport rep;
  rep.regularity = frame_.checkRegularity(opt);
  Verdict all = rep.regularity;
  auto push = [&](const std::string& name, const Expr& lead,
                  const Expr& rhs) {
    Expr residual = source().reduce(lead - pullback(rhs, target));
    Verdict v = isZero(residual, opt).verdict;
    rep.entries.push_back({name, v, residual});
    all = combineVerdicts(all, v);
  };
  for (const auto& r : target.rules())
    push(r.var + "[" + std::to_string(r.a) + "," + std::to_string(r.b) + "]",
         frame_.value(r.var, r.a, r.b), r.rhs);
  for (const auto& c : target.coveringRules())
    push(c.nl + (c.dir == 0 ? "_x" : "_t"),
         frame_.value(c.nl, c.dir == 0 ? 1 : 0, c.dir == 0 ? 0 : 1), c.rhs);
  rep.verdict = all;
  return rep;
}

FactorReport factorCheck(const PseudoField& y, const Morphism& b,
                         const EqSystem& q, const ZeroOptions& opt) {
  FactorReport rep;
  PseudoProlong ctx(y, b.source());
  auto addInv = [&](const std::string& name, const Expr& e) {
    rep.invariance.push_back({name, isInvariant(ctx, e, opt)});
  };
  addInv("xi1", b.frame().xi1());
  addInv("xi2", b.frame().xi2());
  for (const auto& [name, image] : b.frame().images()) addInv(name, image);
  rep.morphism = b.verify(q, opt);
  Verdict v = rep.morphism.verdict;
  for (const auto& [name, iv] : rep.invariance) v = combineVerdicts(v, iv);
  rep.verdict = v;
  return rep;
}

}  // namespace jetkit
