#include <random>
#include <stdexcept>

#include "doctest.h"
#include "jetkit/forms.hpp"
#include "systems.hpp"

using namespace jetkit;

namespace {

bool passes(Verdict v) {
  return v == Verdict::Pass || v == Verdict::ProbabilisticPass;
}

EqSystem freeScalar() { return EqSystem("x", "t", {"z"}); }

}  // namespace

TEST_SUITE("forms") {

TEST_CASE("matrix determinant, adjugate, inverse") {
  Matrix m(3, 3);
  long vals[3][3] = {{2, 0, 1}, {-1, 3, 2}, {4, 1, -2}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m.at(i, j) = ei(vals[i][j]);
  CHECK(m.det() == ei(-29));

  Expr z = Expr::fromGen(genJet("z", 0, 0));
  Matrix sym(3, 3);
  sym.at(0, 0) = z;
  sym.at(0, 1) = ei(1);
  sym.at(1, 1) = z * z;
  sym.at(1, 2) = -z;
  sym.at(2, 0) = ei(2);
  sym.at(2, 2) = ei(1) + z;
  Matrix prod = sym.adjugate() * sym;
  Expr d = sym.det();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(prod.at(i, j) == (i == j ? d : Expr()));
  Matrix inv = sym.inverse();
  CHECK(inv * sym == Matrix::identity(3));

  Matrix sing(2, 2);
  sing.at(0, 0) = z;
  sing.at(0, 1) = z;
  sing.at(1, 0) = z;
  sing.at(1, 1) = z;
  CHECK_THROWS_AS(sing.inverse(), std::runtime_error);
}

TEST_CASE("corpus forms satisfy the curvature condition") {
  auto check = [](const HForm& alpha, const EqSystem& s) {
    FormReport rep = isZcr(alpha, s, s.zeroOptions(5));
    std::string detail =
        rep.cells.empty() ? std::string() : rep.cells.front().residual.str();
    CHECK_MESSAGE(passes(rep.verdict), detail);
  };
  check(corpus::kdvZcr(), corpus::kdvBase());
  check(corpus::sgZcr(), corpus::sgBase());
  check(corpus::spZcr(), corpus::spRiccati());
  check(corpus::chZcr(), corpus::chBase());
  check(corpus::hdZcr(), corpus::hdRiccati());
  check(corpus::nlsZcr(), corpus::nlsBase());
  check(corpus::tzZcr(), corpus::tzBase());
}

TEST_CASE("convention switch and cross-check residual") {
  EqSystem s = corpus::kdvBase();
  HForm alpha = corpus::kdvZcr();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(zcrResidual(alpha, s).at(i, j).isZero());
  // The flipped convention leaves -2[X, T], which is nonzero here.
  FormReport flipped =
      isZcr(alpha, s, s.zeroOptions(5), ZcrConvention::FlippedCommutator);
  CHECK(flipped.verdict == Verdict::Fail);

  // d_H(alpha) - alpha ^ alpha negates the standard residual, identically
  // even off shell.
  HForm skew = matrixForm(alpha.xComp, alpha.xComp * alpha.xComp);
  Matrix std1 = zcrResidual(skew, s);
  Matrix cross = zcrCrossResidual(skew, s);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(cross.at(i, j) == -std1.at(i, j));
}

TEST_CASE("conservation laws of the corpus coverings") {
  auto check = [](const HForm& mu, const EqSystem& s) {
    CHECK(passes(isConservationLaw(mu, s, s.zeroOptions(9)).verdict));
  };
  {
    EqSystem s = corpus::kdvRiccati();
    check(corpus::kdvMu(s), s);
  }
  {
    EqSystem s = corpus::sgRiccati();
    check(corpus::sgMu(s), s);
  }
  {
    EqSystem s = corpus::spRiccati();
    check(corpus::spMu(s), s);
  }
  {
    EqSystem s = corpus::chRiccati();
    check(corpus::chMu(s), s);
  }
  {
    EqSystem s = corpus::hdRiccati();
    check(corpus::hdMu(s), s);
  }
  {
    EqSystem s = corpus::nlsRiccati();
    check(corpus::nlsMu(s), s);
  }
  {
    EqSystem s = corpus::tzRiccati();
    check(corpus::tzMu(s), s);
  }
}

TEST_CASE("conservation law edge cases") {
  EqSystem s = freeScalar();
  CHECK(isConservationLaw(scalarForm(Expr(), Expr()), s, s.zeroOptions(1))
            .verdict == Verdict::Pass);
  // z dx is not closed on the free jet space: the residual is -z_t.
  HForm zdx = scalarForm(s.jet("z", 0, 0), Expr());
  FormReport rep = isConservationLaw(zdx, s, s.zeroOptions(1));
  CHECK(rep.verdict == Verdict::Fail);
  REQUIRE(rep.cells.size() == 1);
  CHECK(rep.cells[0].residual == -s.jet("z", 0, 1));
  CHECK_THROWS_AS(
      isConservationLaw(corpus::kdvZcr(), s, s.zeroOptions(1)),
      std::invalid_argument);
}

TEST_CASE("gauge transformations") {
  EqSystem s = corpus::kdvBase();
  HForm alpha = corpus::kdvZcr();
  ZeroOptions opt = s.zeroOptions(13);

  HForm same = gaugeTransform(alpha, Matrix::identity(2), s, opt);
  CHECK(same.xComp == alpha.xComp);
  CHECK(same.tComp == alpha.tComp);

  Matrix diag(2, 2);
  diag.at(0, 0) = kExp(s.coord(0));
  diag.at(1, 1) = ei(1);
  CHECK(passes(isZcr(gaugeTransform(alpha, diag, s, opt), s, opt).verdict));

  Matrix swap(2, 2);
  swap.at(0, 1) = ei(1);
  swap.at(1, 0) = ei(1);
  CHECK(passes(isZcr(gaugeTransform(alpha, swap, s, opt), s, opt).verdict));

  Matrix sing(2, 2);
  sing.at(0, 0) = ei(1);
  sing.at(0, 1) = ei(1);
  sing.at(1, 0) = ei(1);
  sing.at(1, 1) = ei(1);
  CHECK_THROWS_AS(gaugeTransform(alpha, sing, s, opt), std::runtime_error);
}

TEST_CASE("gauge invariance under random unimodular matrices") {
  EqSystem s = corpus::kdvBase();
  HForm alpha = corpus::kdvZcr();
  ZeroOptions opt = s.zeroOptions(17);
  std::mt19937_64 rng(2024);
  Expr z = s.jet("z", 0, 0), lam = corpus::P("lambda");
  std::vector<Expr> atoms = {z, lam, s.jet("z", 1, 0)};
  for (int trial = 0; trial < 4; ++trial) {
    Expr p = ei(static_cast<long>(rng() % 5) - 2);
    p += atoms[rng() % atoms.size()] * ei(1 + static_cast<long>(rng() % 3));
    Matrix g = Matrix::identity(2);
    if (trial % 2 == 0)
      g.at(0, 1) = p;
    else
      g.at(1, 0) = p;
    CHECK(passes(isZcr(gaugeTransform(alpha, g, s, opt), s, opt).verdict));
  }
}

TEST_CASE("projectivization reproduces the corpus coverings") {
  {
    EqSystem base = corpus::kdvBase();
    RiccatiResult rr = riccatiCovering(corpus::kdvZcr(), 1, base,
                                       base.zeroOptions(23));
    EqSystem expect = corpus::kdvRiccati();
    REQUIRE(rr.covering.coveringRules().size() == 2);
    for (size_t i = 0; i < 2; ++i) {
      CHECK(rr.covering.coveringRules()[i].rhs ==
            expect.coveringRules()[i].rhs);
    }
    HForm mu = corpus::kdvMu(rr.covering);
    CHECK(rr.mu.xComp == mu.xComp);
    CHECK(rr.mu.tComp == mu.tComp);
    CHECK(passes(coveringFlatnessVerdict(rr.covering,
                                         rr.covering.zeroOptions(29))));
    CHECK(passes(isConservationLaw(rr.mu, rr.covering,
                                   rr.covering.zeroOptions(31)).verdict));
  }
  {
    EqSystem base = corpus::sgBase();
    RiccatiResult rr =
        riccatiCovering(corpus::sgZcr(), 2, base, base.zeroOptions(23));
    EqSystem expect = corpus::sgRiccati();
    REQUIRE(rr.covering.coveringRules().size() == 2);
    for (size_t i = 0; i < 2; ++i)
      CHECK(rr.covering.coveringRules()[i].rhs ==
            expect.coveringRules()[i].rhs);
    HForm mu = corpus::sgMu(rr.covering);
    CHECK(rr.mu.xComp == mu.xComp);
    CHECK(rr.mu.tComp == mu.tComp);
  }
  {
    EqSystem base = corpus::tzBase();
    RiccatiResult rr =
        riccatiCovering(corpus::tzZcr(), 3, base, base.zeroOptions(23));
    CHECK(rr.nonlocalNames == std::vector<std::string>{"rho1", "rho2"});
    EqSystem expect = corpus::tzRiccati();
    REQUIRE(rr.covering.coveringRules().size() == 4);
    for (size_t i = 0; i < 4; ++i) {
      CHECK(rr.covering.coveringRules()[i].nl ==
            expect.coveringRules()[i].nl);
      CHECK(rr.covering.coveringRules()[i].rhs ==
            expect.coveringRules()[i].rhs);
    }
    HForm mu = corpus::tzMu(rr.covering);
    CHECK(rr.mu.xComp == mu.xComp);
    CHECK(rr.mu.tComp == mu.tComp);
    CHECK(passes(coveringFlatnessVerdict(rr.covering,
                                         rr.covering.zeroOptions(37))));
  }
}

TEST_CASE("projectivization at the other pivot still yields a covering") {
  EqSystem base = corpus::kdvBase();
  RiccatiResult rr =
      riccatiCovering(corpus::kdvZcr(), 2, base, base.zeroOptions(41));
  CHECK(passes(coveringFlatnessVerdict(rr.covering,
                                       rr.covering.zeroOptions(43))));
  CHECK(passes(isConservationLaw(rr.mu, rr.covering,
                                 rr.covering.zeroOptions(47)).verdict));
}

TEST_CASE("projectivization refuses a non-flat form") {
  EqSystem s = freeScalar();
  Matrix X(2, 2), T(2, 2);
  X.at(0, 1) = ei(1);
  T.at(0, 0) = s.jet("z", 0, 0);
  CHECK_THROWS_AS(
      riccatiCovering(matrixForm(X, T), 1, s, s.zeroOptions(1)),
      std::runtime_error);
}

TEST_CASE("random commuting constant forms projectivize cleanly") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    EqSystem s = freeScalar();
    Matrix X(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        X.at(i, j) = ei(static_cast<long>(rng() % 7) - 3);
    Matrix T = X * X;
    HForm alpha = matrixForm(X, T);
    ZeroOptions opt = s.zeroOptions(100 + trial);
    REQUIRE(isZcr(alpha, s, opt).verdict == Verdict::Pass);
    RiccatiResult rr =
        riccatiCovering(alpha, 1 + trial % 2, s, opt);
    CHECK(coveringFlatnessVerdict(rr.covering, opt) == Verdict::Pass);
    CHECK(isConservationLaw(rr.mu, rr.covering, opt).verdict ==
          Verdict::Pass);
  }
}

}  // TEST_SUITE
