#include <random>

#include "doctest.h"
#include "jetkit/system.hpp"

using namespace jetkit;

namespace {

// Third-order scalar evolution system used throughout: z_xxx = -z_t - 6 z z_x.
EqSystem makeKdv(bool withRho = false) {
  EqSystem s("x", "t", {"z"}, {{"lambda", false}},
             withRho ? std::vector<std::string>{"rho"}
                     : std::vector<std::string>{});
  Expr z = s.jet("z", 0, 0), zx = s.jet("z", 1, 0), zt = s.jet("z", 0, 1);
  s.addRule("z", 3, 0, -zt - ei(6) * z * zx);
  return s;
}

void addKdvRiccati(EqSystem& s) {
  Expr z = s.jet("z", 0, 0), zx = s.jet("z", 1, 0), zxx = s.jet("z", 2, 0);
  Expr r = s.nl("rho"), lam = Expr::fromGen(genSym("lambda", false));
  s.addCoveringRule("rho", 0, -r * r - z - lam);
  s.addCoveringRule("rho", 1,
                    ei(-2) * (ei(2) * lam - z) * r * r - ei(2) * zx * r + zxx +
                        ei(2) * z * z - ei(2) * lam * z - ei(4) * lam * lam);
}

}  // namespace

TEST_SUITE("system") {

TEST_CASE("derived rules of an evolution equation") {
  EqSystem s = makeKdv();
  Expr z = s.jet("z", 0, 0), zx = s.jet("z", 1, 0), zt = s.jet("z", 0, 1);
  Expr zxx = s.jet("z", 2, 0), zxt = s.jet("z", 1, 1), ztt = s.jet("z", 0, 2);
  CHECK(s.derivable("z", 3, 0));
  CHECK(s.derivable("z", 5, 2));
  CHECK(!s.derivable("z", 2, 0));
  CHECK(!s.derivable("z", 0, 3));
  CHECK(s.derivedRule("z", 3, 0) == -zt - ei(6) * z * zx);
  CHECK(s.derivedRule("z", 4, 0) == -zxt - ei(6) * zx * zx - ei(6) * z * zxx);
  CHECK(s.derivedRule("z", 3, 1) == -ztt - ei(6) * zt * zx - ei(6) * z * zxt);
  CHECK(s.reduce(s.jet("z", 3, 0) * z + zxx) ==
        (-zt - ei(6) * z * zx) * z + zxx);
  CHECK(s.totalD(z * z, 0) == ei(2) * z * zx);
  CHECK(s.totalD(s.coord(0) * z, 0) == z + s.coord(0) * zx);
  CHECK(s.totalD(s.coord(0), 1).isZero());
}

TEST_CASE("solved form validation") {
  EqSystem good = makeKdv();
  CHECK(good.solvedFormViolations().empty());

  EqSystem orderZero("x", "t", {"z"});
  orderZero.addRule("z", 0, 0, Expr::fromInt(1));
  CHECK(!orderZero.solvedFormViolations().empty());

  EqSystem badRank("x", "t", {"z"});
  badRank.addRule("z", 2, 0, badRank.jet("z", 3, 0));
  CHECK(!badRank.solvedFormViolations().empty());

  EqSystem dupLead("x", "t", {"z"});
  dupLead.addRule("z", 1, 0, dupLead.jet("z", 0, 0));
  dupLead.addRule("z", 2, 0, dupLead.jet("z", 0, 0));
  CHECK(!dupLead.solvedFormViolations().empty());

  EqSystem missingCov("x", "t", {"z"}, {}, {"rho"});
  missingCov.addRule("z", 2, 0, missingCov.jet("z", 0, 1));
  missingCov.addCoveringRule("rho", 0, missingCov.nl("rho"));
  auto v = missingCov.solvedFormViolations();
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("lacks a covering rule") != std::string::npos);
}

TEST_CASE("mixed-lead systems reduce deterministically") {
  // Two compatible leads for the same variable: w_t and w_xx.
  EqSystem s("x", "t", {"w"});
  Expr w = s.jet("w", 0, 0), wx = s.jet("w", 1, 0);
  s.addRule("w", 0, 1, wx * ei(2));      // w_t = 2 w_x
  s.addRule("w", 2, 0, w);               // w_xx = w
  CHECK(s.solvedFormViolations().empty());
  CHECK(s.derivedRule("w", 0, 1) == ei(2) * wx);
  CHECK(s.derivedRule("w", 2, 0) == w);
  // w_xt two ways: D_x(w_t) = 2 w_xx -> 2w; D_t(w_x) = D_x(w_t) likewise.
  CHECK(s.derivedRule("w", 1, 1) == ei(2) * w);
  CHECK(s.derivedRule("w", 2, 1) == ei(2) * wx);
}

TEST_CASE("higher-lead rule may reference lower mixed jets") {
  // Lead z_xxt with z_xxx on the right side: allowed, z_xxx ranks below.
  EqSystem s("x", "t", {"z"});
  Expr z = s.jet("z", 0, 0), zx = s.jet("z", 1, 0), zt = s.jet("z", 0, 1);
  Expr zxx = s.jet("z", 2, 0), zxxx = s.jet("z", 3, 0);
  s.addRule("z", 2, 1,
            ei(3) * z * zx - z * zxxx - ei(2) * zx * zxx + zt);
  CHECK(s.solvedFormViolations().empty());
  CHECK(!s.derivable("z", 3, 0));
  CHECK(s.derivable("z", 2, 1));
  CHECK(s.derivable("z", 4, 2));
}

TEST_CASE("covering-extended derivatives and flatness") {
  EqSystem s = makeKdv(true);
  addKdvRiccati(s);
  CHECK(s.solvedFormViolations().empty());
  Expr r = s.nl("rho");
  Expr lam = Expr::fromGen(genSym("lambda", false));
  Expr z = s.jet("z", 0, 0);
  CHECK(s.totalD(r, 0) == -r * r - z - lam);
  CHECK(s.totalD(r * r, 0) == ei(2) * r * (-r * r - z - lam));
  // Flatness of the covering: mixed extended derivatives of rho agree.
  const CoveringRule* rx = s.coveringRule("rho", 0);
  const CoveringRule* rt = s.coveringRule("rho", 1);
  REQUIRE(rx);
  REQUIRE(rt);
  Expr resid = s.reduce(s.totalD(rx->rhs, 1) - s.totalD(rt->rhs, 0));
  CHECK(resid.isZero());
}

TEST_CASE("foreign objects are rejected") {
  EqSystem s = makeKdv();
  CHECK_THROWS(s.totalD(Expr::fromGen(genJet("unknownvar", 1, 0)), 0));
  CHECK_THROWS(s.totalD(Expr::fromGen(genSym("xprime", true)), 0));
  CHECK_THROWS(s.totalD(Expr::fromGen(genNonlocal("ghost")), 0));
  CHECK_THROWS(s.derivedRule("z", 2, 0));
  CHECK_THROWS(EqSystem("x", "t", {"z"}).addRule("w", 1, 0, Expr()));
}

TEST_CASE("total derivatives commute modulo the system") {
  EqSystem s = makeKdv(true);
  addKdvRiccati(s);
  std::mt19937_64 rng(4242);
  std::vector<Expr> atoms = {s.jet("z", 0, 0), s.jet("z", 1, 0),
                             s.jet("z", 0, 1), s.jet("z", 2, 0), s.nl("rho"),
                             s.coord(0), s.coord(1)};
  for (int i = 0; i < 20; ++i) {
    Expr f;
    int terms = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < terms; ++k) {
      Expr term = ei(1 + static_cast<long>(rng() % 5));
      int factors = 1 + static_cast<int>(rng() % 3);
      for (int j = 0; j < factors; ++j)
        term *= atoms[rng() % atoms.size()];
      f += term;
    }
    Expr lhs = s.totalD(s.totalD(f, 0), 1);
    Expr rhs = s.totalD(s.totalD(f, 1), 0);
    CHECK(s.reduce(lhs - rhs).isZero());
    // Reduction is a projector.
    Expr red = s.reduce(f * s.jet("z", 3, 0));
    CHECK(s.reduce(red) == red);
  }
}

}  // TEST_SUITE
