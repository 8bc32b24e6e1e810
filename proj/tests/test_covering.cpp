#include <random>
#include <stdexcept>

#include "doctest.h"
#include "jetkit/covering.hpp"
#include "systems.hpp"

using namespace jetkit;

namespace {

bool passes(Verdict v) {
  return v == Verdict::Pass || v == Verdict::ProbabilisticPass;
}

Expr randomPoly(const EqSystem& s, std::mt19937_64& rng,
                const std::vector<Expr>& atoms) {
  Expr f;
  int terms = 1 + static_cast<int>(rng() % 3);
  for (int k = 0; k < terms; ++k) {
    Expr term = ei(1 + static_cast<long>(rng() % 5));
    int factors = 1 + static_cast<int>(rng() % 2);
    for (int j = 0; j < factors; ++j) term *= atoms[rng() % atoms.size()];
    f += term;
  }
  return s.reduce(f);
}

}  // namespace

TEST_SUITE("covering") {

TEST_CASE("corpus coverings are flat") {
  auto check = [](const EqSystem& s) {
    for (const auto& e : coveringFlatness(s, s.zeroOptions(11)))
      CHECK_MESSAGE(passes(e.verdict),
                    e.nonlocal, ": ", e.residual.str());
  };
  check(corpus::kdvRiccati());
  check(corpus::spRiccati());
  check(corpus::chRiccati());
  check(corpus::hdRiccati());
  check(corpus::nlsRiccati());
  check(corpus::sgRiccati());
  check(corpus::tzRiccati());
  check(corpus::kdvDoubled());
  check(corpus::chDoubled());
  check(corpus::nlsDoubled());
}

TEST_CASE("extended derivatives commute on random expressions") {
  std::mt19937_64 rng(77);
  auto runs = [&](const EqSystem& s, std::vector<Expr> atoms, int count) {
    for (int i = 0; i < count; ++i) {
      Expr f = randomPoly(s, rng, atoms);
      Expr lhs = s.totalD(s.totalD(f, 0), 1);
      Expr rhs = s.totalD(s.totalD(f, 1), 0);
      CHECK(s.reduce(lhs - rhs).isZero());
    }
  };
  {
    EqSystem s = corpus::kdvRiccati();
    runs(s, {s.jet("z", 0, 0), s.jet("z", 1, 0), s.nl("rho"), s.coord(0)}, 20);
  }
  {
    EqSystem s = corpus::hdRiccati();
    runs(s, {s.jet("z", 0, 0), s.jet("z", 1, 0), s.nl("rho")}, 20);
  }
  {
    EqSystem s = corpus::sgRiccati();
    runs(s, {s.jet("z", 0, 0), s.jet("z", 1, 0), s.nl("rho")}, 5);
  }
}

TEST_CASE("doubling adds a renamed copy of the covering") {
  EqSystem d = corpus::kdvDoubled();
  CHECK(d.rules().size() == 1);
  CHECK(d.coveringRules().size() == 4);
  REQUIRE(d.nonlocals() == std::vector<std::string>{"rho", "rhohat"});
  REQUIRE(d.params().size() == 2);
  CHECK(d.params()[1].name == "lambdahat");
  CHECK(d.params()[1].nonzero == d.params()[0].nonzero);
  REQUIRE(d.distinctPairs().size() == 1);
  CHECK(d.distinctPairs()[0] ==
        std::make_pair(std::string("lambda"), std::string("lambdahat")));

  Expr z = d.jet("z", 0, 0);
  Expr rh = d.nl("rhohat");
  Expr lamh = corpus::P("lambdahat");
  const CoveringRule* rx = d.coveringRule("rhohat", 0);
  REQUIRE(rx);
  CHECK(rx->rhs == -rh * rh - z - lamh);
  CHECK(d.solvedFormViolations().empty());
}

TEST_CASE("projecting out the hatted copy restores the original") {
  EqSystem orig = corpus::kdvRiccati();
  EqSystem back =
      projectCovering(corpus::kdvDoubled(), {"rhohat"}, {"lambdahat"});
  CHECK(back.nonlocals() == orig.nonlocals());
  REQUIRE(back.params().size() == orig.params().size());
  CHECK(back.params()[0].name == orig.params()[0].name);
  REQUIRE(back.rules().size() == orig.rules().size());
  for (size_t i = 0; i < orig.rules().size(); ++i)
    CHECK(back.rules()[i].rhs == orig.rules()[i].rhs);
  REQUIRE(back.coveringRules().size() == orig.coveringRules().size());
  for (size_t i = 0; i < orig.coveringRules().size(); ++i) {
    CHECK(back.coveringRules()[i].nl == orig.coveringRules()[i].nl);
    CHECK(back.coveringRules()[i].rhs == orig.coveringRules()[i].rhs);
  }
  CHECK(back.distinctPairs().empty());
}

TEST_CASE("doubling and projection reject bad names") {
  EqSystem s = corpus::kdvRiccati();
  CHECK_THROWS_AS(doubleCovering(s, {{"rho", "z"}}), std::invalid_argument);
  CHECK_THROWS_AS(doubleCovering(s, {{"ghost", "ghosthat"}}),
                  std::invalid_argument);
  // Dropping the covering entirely is fine; dropping a parameter the
  // remaining rules still use is not.
  EqSystem bare = projectCovering(s, {"rho"});
  CHECK(bare.nonlocals().empty());
  CHECK(bare.rules().size() == 1);
  CHECK_THROWS_AS(projectCovering(s, {}, {"lambda"}), std::runtime_error);
  CHECK_THROWS_AS(projectCovering(s, {"ghost"}), std::invalid_argument);
}

TEST_CASE("doubled Camassa-Holm system has five rules") {
  EqSystem d = corpus::chDoubled();
  CHECK(d.rules().size() + d.coveringRules().size() == 5);
  CHECK(d.solvedFormViolations().empty());
  CHECK(passes(coveringFlatnessVerdict(d, d.zeroOptions(3))));
}

}  // TEST_SUITE
