#include "jetkit/covering.hpp"

#include <algorithm>
#include <stdexcept>

namespace jetkit {

namespace {

bool isParamOf(const EqSystem& s, const std::string& name, bool* nonzero) {
  for (const auto& p : s.params())
    if (p.name == name) {
      if (nonzero) *nonzero = p.nonzero;
      return true;
    }
  return false;
}

bool nameTaken(const EqSystem& s, const std::string& name) {
  if (s.hasDep(name) || s.hasNonlocal(name)) return true;
  if (isParamOf(s, name, nullptr)) return true;
  return name == s.ix() || name == s.it();
}

}  // namespace

std::vector<FlatnessEntry> coveringFlatness(const EqSystem& s,
                                            const ZeroOptions& opt) {
  std::vector<FlatnessEntry> out;
  for (const auto& name : s.nonlocals()) {
    const CoveringRule* rx = s.coveringRule(name, 0);
    const CoveringRule* rt = s.coveringRule(name, 1);
    if (!rx || !rt)
      throw std::runtime_error("nonlocal '" + name +
                               "' is missing a covering rule");
    FlatnessEntry e;
    e.nonlocal = name;
    e.residual = s.reduce(s.totalD(rx->rhs, 1) - s.totalD(rt->rhs, 0));
    e.verdict = isZero(e.residual, opt).verdict;
    out.push_back(std::move(e));
  }
  return out;
}

Verdict coveringFlatnessVerdict(const EqSystem& s, const ZeroOptions& opt) {
  Verdict v = Verdict::Pass;
  for (const auto& e : coveringFlatness(s, opt)) v = combineVerdicts(v, e.verdict);
  return v;
}

EqSystem doubleCovering(
    const EqSystem& s,
    const std::vector<std::pair<std::string, std::string>>& renames) {
  std::map<GenId, Expr> sub;
  std::vector<std::pair<std::string, std::string>> nlPairs;
  std::vector<ParamDecl> newParams;
  std::vector<std::pair<std::string, std::string>> newDistinct;

  for (const auto& [oldName, freshName] : renames) {
    if (nameTaken(s, freshName))
      throw std::invalid_argument("rename target '" + freshName +
                                  "' already in use");
    bool nonzero = false;
    if (s.hasNonlocal(oldName)) {
      sub[genNonlocal(oldName)] = Expr::fromGen(genNonlocal(freshName));
      nlPairs.emplace_back(oldName, freshName);
    } else if (isParamOf(s, oldName, &nonzero)) {
      sub[genSym(oldName, false)] = Expr::fromGen(genSym(freshName, false));
      newParams.push_back({freshName, nonzero});
      newDistinct.emplace_back(oldName, freshName);
    } else {
      throw std::invalid_argument("'" + oldName +
                                  "' is neither a nonlocal nor a parameter");
    }
  }

  std::vector<ParamDecl> params = s.params();
  params.insert(params.end(), newParams.begin(), newParams.end());
  std::vector<std::string> nonlocals = s.nonlocals();
  for (const auto& [oldName, freshName] : nlPairs) {
    (void)oldName;
    nonlocals.push_back(freshName);
  }

  EqSystem out(s.ix(), s.it(), s.deps(), params, nonlocals);
  for (const auto& r : s.rules()) out.addRule(r.var, r.a, r.b, r.rhs);
  for (const auto& c : s.coveringRules())
    out.addCoveringRule(c.nl, c.dir, c.rhs);
  for (const auto& [oldName, freshName] : nlPairs) {
    for (int dir = 0; dir < 2; ++dir) {
      const CoveringRule* r = s.coveringRule(oldName, dir);
      if (!r)
        throw std::runtime_error("nonlocal '" + oldName +
                                 "' is missing a covering rule");
      out.addCoveringRule(freshName, dir, substitute(r->rhs, sub));
    }
  }
  for (const auto& [p, q] : s.distinctPairs()) out.addDistinct(p, q);
  for (const auto& [p, q] : newDistinct) out.addDistinct(p, q);
  return out;
}

EqSystem projectCovering(const EqSystem& s,
                         const std::vector<std::string>& dropNonlocals,
                         const std::vector<std::string>& dropParams) {
  auto dropped = [&](const std::string& name, bool nonlocal) {
    const auto& list = nonlocal ? dropNonlocals : dropParams;
    return std::find(list.begin(), list.end(), name) != list.end();
  };
  for (const auto& name : dropNonlocals)
    if (!s.hasNonlocal(name))
      throw std::invalid_argument("cannot drop unknown nonlocal '" + name + "'");
  for (const auto& name : dropParams)
    if (!isParamOf(s, name, nullptr))
      throw std::invalid_argument("cannot drop unknown parameter '" + name + "'");

  auto checkFree = [&](const Expr& e, const std::string& where) {
    for (GenId g : closureGens(e)) {
      const Gen& info = genInfo(g);
      if (info.kind == GenKind::Nonlocal && dropped(info.name, true))
        throw std::runtime_error(where + " still mentions dropped nonlocal '" +
                                 info.name + "'");
      if (info.kind == GenKind::Sym && !info.indep && dropped(info.name, false))
        throw std::runtime_error(where + " still mentions dropped parameter '" +
                                 info.name + "'");
    }
  };

  std::vector<ParamDecl> params;
  for (const auto& p : s.params())
    if (!dropped(p.name, false)) params.push_back(p);
  std::vector<std::string> nonlocals;
  for (const auto& n : s.nonlocals())
    if (!dropped(n, true)) nonlocals.push_back(n);

  EqSystem out(s.ix(), s.it(), s.deps(), params, nonlocals);
  for (const auto& r : s.rules()) {
    checkFree(r.rhs, "rule for " + r.var);
    out.addRule(r.var, r.a, r.b, r.rhs);
  }
  for (const auto& c : s.coveringRules()) {
    if (dropped(c.nl, true)) continue;
    checkFree(c.rhs, "covering rule for " + c.nl);
    out.addCoveringRule(c.nl, c.dir, c.rhs);
  }
  for (const auto& [p, q] : s.distinctPairs())
    if (!dropped(p, false) && !dropped(q, false)) out.addDistinct(p, q);
  return out;
}

}  // namespace jetkit
