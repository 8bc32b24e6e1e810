#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "jetkit/expr.hpp"

namespace jetkit {

// A differential rule in solved form: the lead jet of a dependent variable
// equals an expression that ranks strictly below it.
struct Rule {
  std::string var;
  int a = 0, b = 0;
  Expr rhs;
};

// A covering rule: first derivative of a nonlocal variable along one
// coordinate equals an expression in the extended variables.
struct CoveringRule {
  std::string nl;
  int dir = 0;  // 0 = x, 1 = t
  Expr rhs;
};

struct ParamDecl {
  std::string name;
  bool nonzero = false;
};

// A two-coordinate differential system, optionally extended by a covering.
// Construction populates variables and rules; afterwards the system is
// treated as immutable and reduction results are memoized.
class EqSystem {
 public:
  EqSystem(std::string ix, std::string it, std::vector<std::string> deps,
           std::vector<ParamDecl> params = {},
           std::vector<std::string> nonlocals = {});

  void addRule(const std::string& var, int a, int b, Expr rhs);
  void addCoveringRule(const std::string& nl, int dir, Expr rhs);
  void addDistinct(const std::string& p, const std::string& q);

  const std::string& ix() const { return ix_; }
  const std::string& it() const { return it_; }
  const std::vector<std::string>& deps() const { return deps_; }
  const std::vector<std::string>& nonlocals() const { return nonlocals_; }
  const std::vector<ParamDecl>& params() const { return params_; }
  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<CoveringRule>& coveringRules() const { return covRules_; }
  const std::vector<std::pair<std::string, std::string>>& distinctPairs() const {
    return distinct_;
  }
  bool hasDep(const std::string& v) const;
  bool hasNonlocal(const std::string& v) const;
  const CoveringRule* coveringRule(const std::string& nl, int dir) const;

  Expr jet(const std::string& var, int a, int b) const;
  Expr nl(const std::string& name) const;
  Expr coord(int dir) const;

  // Ranked solved-form validation; empty result means valid.
  std::vector<std::string> solvedFormViolations() const;

  // True if some rule lead of var lies componentwise at or below (a, b).
  bool derivable(const std::string& var, int a, int b) const;
  // Reduced derivative of var at (a, b); requires derivable().
  Expr derivedRule(const std::string& var, int a, int b) const;
  // Rewrites every derivable jet through the rules.
  Expr reduce(const Expr& e) const;
  // Covering-extended total derivative along dir, returned reduced.
  Expr totalD(const Expr& e, int dir) const;

  // Zero-test options preloaded with this system's parameter constraints.
  ZeroOptions zeroOptions(uint64_t seed) const;

 private:
  Expr coveringRhsReduced(const std::string& nl, int dir) const;

  std::string ix_, it_;
  std::vector<std::string> deps_;
  std::vector<ParamDecl> params_;
  std::vector<std::string> nonlocals_;
  std::vector<std::pair<std::string, std::string>> distinct_;
  std::vector<Rule> rules_;
  std::vector<CoveringRule> covRules_;

  struct Memo {
    std::mutex mu;
    std::map<std::tuple<std::string, int, int>, Expr> red;
    std::map<std::pair<std::string, int>, Expr> cov;
  };
  std::unique_ptr<Memo> memo_ = std::make_unique<Memo>();
};

}  // namespace jetkit
