#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jetkit/system.hpp"

namespace jetkit {

// Verdict for one nonlocal's compatibility condition
// D~_t(rho_x-rule) - D~_x(rho_t-rule) = 0 mod the system.
struct FlatnessEntry {
  std::string nonlocal;
  Verdict verdict = Verdict::Undecidable;
  Expr residual;
};

// Checks every nonlocal of the system; entries in declaration order.
std::vector<FlatnessEntry> coveringFlatness(const EqSystem& s,
                                            const ZeroOptions& opt);
Verdict coveringFlatnessVerdict(const EqSystem& s, const ZeroOptions& opt);

// Adds a renamed copy of part of the covering: each (old, fresh) pair renames
// a nonlocal or a parameter.  Renamed nonlocals get covering rules obtained
// from the originals by substituting all renamed symbols; renamed parameter
// pairs are recorded as distinct for the zero-test sampling domain.
EqSystem doubleCovering(
    const EqSystem& s,
    const std::vector<std::pair<std::string, std::string>>& renames);

// Removes the named nonlocals (with their covering rules) and parameters.
// Expressions that still mention a dropped symbol cause an error.
EqSystem projectCovering(const EqSystem& s,
                         const std::vector<std::string>& dropNonlocals,
                         const std::vector<std::string>& dropParams = {});

}  // namespace jetkit
