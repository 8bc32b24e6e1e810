#include "jetkit/system.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace jetkit {

namespace {

// Ranking used by the solved-form check: total order, then t-count, then
// variable name.  Strict comparison.
bool ranksBelow(const std::string& var, int a, int b, const std::string& lvar,
                int la, int lb) {
  int s = a + b, ls = la + lb;
  if (s != ls) return s < ls;
  if (b != lb) return b < lb;
  return var < lvar;
}

thread_local std::set<std::tuple<std::string, int, int>> redInProgress;

}  // namespace

EqSystem::EqSystem(std::string ix, std::string it, std::vector<std::string> deps,
                   std::vector<ParamDecl> params,
                   std::vector<std::string> nonlocals)
    : ix_(std::move(ix)),
      it_(std::move(it)),
      deps_(std::move(deps)),
      params_(std::move(params)),
      nonlocals_(std::move(nonlocals)) {
  genSym(ix_, true);
  genSym(it_, true);
  for (auto& p : params_) genSym(p.name, false);
  for (auto& n : nonlocals_) genNonlocal(n);
}

void EqSystem::addRule(const std::string& var, int a, int b, Expr rhs) {
  if (!hasDep(var))
    throw std::runtime_error("rule for undeclared variable '" + var + "'");
  rules_.push_back({var, a, b, std::move(rhs)});
}

void EqSystem::addCoveringRule(const std::string& nl, int dir, Expr rhs) {
  if (!hasNonlocal(nl))
    throw std::runtime_error("covering rule for undeclared nonlocal '" + nl +
                             "'");
  covRules_.push_back({nl, dir, std::move(rhs)});
}

void EqSystem::addDistinct(const std::string& p, const std::string& q) {
  distinct_.push_back({p, q});
}

bool EqSystem::hasDep(const std::string& v) const {
  return std::find(deps_.begin(), deps_.end(), v) != deps_.end();
}

bool EqSystem::hasNonlocal(const std::string& v) const {
  return std::find(nonlocals_.begin(), nonlocals_.end(), v) != nonlocals_.end();
}

const CoveringRule* EqSystem::coveringRule(const std::string& nl,
                                           int dir) const {
  for (auto& r : covRules_)
    if (r.nl == nl && r.dir == dir) return &r;
  return nullptr;
}

Expr EqSystem::jet(const std::string& var, int a, int b) const {
  return Expr::fromGen(genJet(var, a, b, ix_, it_));
}

Expr EqSystem::nl(const std::string& name) const {
  return Expr::fromGen(genNonlocal(name));
}

Expr EqSystem::coord(int dir) const {
  return Expr::fromGen(genSym(dir == 0 ? ix_ : it_, true));
}

std::vector<std::string> EqSystem::solvedFormViolations() const {
  std::vector<std::string> out;
  for (auto& r : rules_) {
    std::string lead = jet(r.var, r.a, r.b).str();
    if (r.a + r.b == 0) {
      out.push_back("rule lead " + lead + " has order zero");
      continue;
    }
    for (GenId g : closureGens(r.rhs)) {
      const Gen& gi = genInfo(g);
      if (gi.kind != GenKind::Jet || !hasDep(gi.name)) continue;
      if (!ranksBelow(gi.name, gi.a, gi.b, r.var, r.a, r.b))
        out.push_back("rule for " + lead + " depends on " + genStr(g) +
                      " which does not rank below the lead");
    }
  }
  for (size_t i = 0; i < rules_.size(); ++i)
    for (size_t j = 0; j < rules_.size(); ++j) {
      if (i == j) continue;
      const Rule& a = rules_[i];
      const Rule& bR = rules_[j];
      if (a.var == bR.var && a.a <= bR.a && a.b <= bR.b)
        out.push_back("rule lead " + jet(bR.var, bR.a, bR.b).str() +
                      " is derivable from lead " + jet(a.var, a.a, a.b).str());
    }
  for (auto& n : nonlocals_)
    for (int dir = 0; dir < 2; ++dir)
      if (!coveringRule(n, dir))
        out.push_back("nonlocal '" + n + "' lacks a covering rule along " +
                      (dir == 0 ? ix_ : it_));
  return out;
}

bool EqSystem::derivable(const std::string& var, int a, int b) const {
  for (auto& r : rules_)
    if (r.var == var && r.a <= a && r.b <= b) return true;
  return false;
}

Expr EqSystem::derivedRule(const std::string& var, int a, int b) const {
  auto key = std::make_tuple(var, a, b);
  {
    std::lock_guard lk(memo_->mu);
    auto it = memo_->red.find(key);
    if (it != memo_->red.end()) return it->second;
  }
  if (redInProgress.count(key))
    throw std::runtime_error("reduction cycle at " + jet(var, a, b).str() +
                             " (system not in solved form?)");
  redInProgress.insert(key);
  Expr result;
  bool done = false;
  for (auto& r : rules_) {
    if (r.var == var && r.a == a && r.b == b) {
      result = reduce(r.rhs);
      done = true;
      break;
    }
  }
  if (!done) {
    const Rule* base = nullptr;
    for (auto& r : rules_)
      if (r.var == var && r.a <= a && r.b <= b) {
        base = &r;
        break;
      }
    if (!base) {
      redInProgress.erase(key);
      throw std::runtime_error("jet " + jet(var, a, b).str() +
                               " is not derivable");
    }
    if (a > base->a)
      result = totalD(derivedRule(var, a - 1, b), 0);
    else
      result = totalD(derivedRule(var, a, b - 1), 1);
  }
  redInProgress.erase(key);
  std::lock_guard lk(memo_->mu);
  auto [it, inserted] = memo_->red.emplace(key, result);
  return it->second;
}

Expr EqSystem::reduce(const Expr& e) const {
  std::map<GenId, Expr> sub;
  for (GenId g : closureGens(e)) {
    const Gen& gi = genInfo(g);
    if (gi.kind != GenKind::Jet || !hasDep(gi.name)) continue;
    if (derivable(gi.name, gi.a, gi.b))
      sub.emplace(g, derivedRule(gi.name, gi.a, gi.b));
  }
  if (sub.empty()) return e;
  return substitute(e, sub);
}

Expr EqSystem::coveringRhsReduced(const std::string& nl, int dir) const {
  auto key = std::make_pair(nl, dir);
  {
    std::lock_guard lk(memo_->mu);
    auto it = memo_->cov.find(key);
    if (it != memo_->cov.end()) return it->second;
  }
  const CoveringRule* r = coveringRule(nl, dir);
  if (!r)
    throw std::runtime_error("nonlocal '" + nl + "' has no covering rule along " +
                             (dir == 0 ? ix_ : it_));
  Expr red = reduce(r->rhs);
  std::lock_guard lk(memo_->mu);
  auto [it, inserted] = memo_->cov.emplace(key, red);
  return it->second;
}

Expr EqSystem::totalD(const Expr& e, int dir) const {
  Expr acc;
  for (GenId g : closureGens(e)) {
    const Gen& gi = genInfo(g);
    if (gi.kind == GenKind::Kernel) continue;
    Expr dg;
    switch (gi.kind) {
      case GenKind::Sym:
        if (gi.indep) {
          if (gi.name == (dir == 0 ? ix_ : it_))
            dg = Expr::fromInt(1);
          else if (gi.name == (dir == 0 ? it_ : ix_))
            dg = Expr();
          else
            throw std::runtime_error("total derivative over foreign coordinate '" +
                                     gi.name + "'");
        }
        break;  // parameters are constant
      case GenKind::Jet: {
        if (!hasDep(gi.name))
          throw std::runtime_error("total derivative of foreign jet " +
                                   genStr(g));
        int na = gi.a + (dir == 0 ? 1 : 0);
        int nb = gi.b + (dir == 1 ? 1 : 0);
        if (derivable(gi.name, na, nb))
          dg = derivedRule(gi.name, na, nb);
        else
          dg = jet(gi.name, na, nb);
        break;
      }
      case GenKind::Nonlocal:
        if (!hasNonlocal(gi.name))
          throw std::runtime_error("total derivative of foreign nonlocal " +
                                   gi.name);
        dg = coveringRhsReduced(gi.name, dir);
        break;
      case GenKind::Kernel:
        break;
    }
    if (dg.isZero()) continue;
    Expr pd = pdChain(e, g);
    if (pd.isZero()) continue;
    acc += pd * dg;
  }
  return acc;
}

ZeroOptions EqSystem::zeroOptions(uint64_t seed) const {
  ZeroOptions opt;
  opt.seed = seed;
  for (auto& p : params_)
    if (p.nonzero) opt.nonzero.insert(genSym(p.name, false));
  for (auto& [p, q] : distinct_)
    opt.distinct.push_back({genSym(p, false), genSym(q, false)});
  return opt;
}

}  // namespace jetkit
