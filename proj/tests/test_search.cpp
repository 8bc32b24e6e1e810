#include <map>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "jetkit/search.hpp"
#include "systems.hpp"

using namespace jetkit;

namespace {

bool prop(const std::vector<Rat>& got, const std::vector<Rat>& want) {
  if (got.size() != want.size()) return false;
  Rat scale;
  bool have = false;
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i] == 0) {
      if (got[i] != 0) return false;
      continue;
    }
    if (!have) {
      scale = got[i] / want[i];
      have = true;
      if (scale == 0) return false;
    }
    if (got[i] != scale * want[i]) return false;
  }
  return have;
}

std::vector<Rat> rv(std::vector<Rat> v) { return v; }

// KdV doubled in two Riccati coverings with the spectral parameters pinned
// to 2 and 3, so the one-dimensional answer is free of parameter choices.
EqSystem kdvDoubledNumeric() {
  EqSystem s("x", "t", {"z"}, {}, {"rho", "rhohat"});
  Expr z = s.jet("z", 0, 0), zx = s.jet("z", 1, 0), zxx = s.jet("z", 2, 0),
       zt = s.jet("z", 0, 1);
  s.addRule("z", 3, 0, -zt - ei(6) * z * zx);
  Expr r = s.nl("rho"), rh = s.nl("rhohat");
  s.addCoveringRule("rho", 0, -r * r - z - ei(2));
  s.addCoveringRule("rho", 1,
                    ei(-2) * (ei(4) - z) * r * r - ei(2) * zx * r + zxx +
                        ei(2) * z * z - ei(4) * z - ei(16));
  s.addCoveringRule("rhohat", 0, -rh * rh - z - ei(3));
  s.addCoveringRule("rhohat", 1,
                    ei(-2) * (ei(6) - z) * rh * rh - ei(2) * zx * rh + zxx +
                        ei(2) * z * z - ei(6) * z - ei(36));
  return s;
}

EqSystem heatQ() {
  EqSystem s("x", "t", {"u1p", "u2p"});
  Expr u1 = s.jet("u1p", 0, 0), u2 = s.jet("u2p", 0, 0);
  s.addRule("u1p", 1, 0, u2 - u1 * u1);
  s.addRule("u2p", 1, 0, s.jet("u1p", 0, 1));
  return s;
}

EqSystem mkdvQ() {
  EqSystem s("x", "t", {"nu1", "nu2"});
  Expr n1 = s.jet("nu1", 0, 0), n1x = s.jet("nu1", 1, 0),
       n1xx = s.jet("nu1", 2, 0), n2x = s.jet("nu2", 1, 0);
  s.addRule("nu1", 0, 1, ei(2) * n1 * n1x + n2x);
  s.addRule("nu2", 0, 0, ei(2) * n1 * n1 + n1xx);
  return s;
}

EqSystem chQ() {
  EqSystem s("x", "t", {"nu1", "nu2"}, {{"eta", true}});
  Expr n1 = s.jet("nu1", 0, 0), n1t = s.jet("nu1", 0, 1);
  Expr n2 = s.jet("nu2", 0, 0), n2x = s.jet("nu2", 1, 0),
       n2xx = s.jet("nu2", 2, 0);
  Expr eta = corpus::P("eta");
  s.addRule("nu1", 1, 0, n2);
  s.addRule("nu2", 1, 1,
            (ei(-6) * eta + ei(3) * n1 - ei(2) * n2x) * n2 +
                (ei(2) * eta - n1) * n2xx + n1t);
  return s;
}

Expr chNu1(const EqSystem& s) {
  Expr r = s.nl("rho"), eta = corpus::P("eta");
  Expr z = s.jet("z", 0, 0), zx = s.jet("z", 1, 0);
  Expr den = r * r - eta * eta;
  return (r * r + eta * eta) / den * z + ei(2) * eta * r / den * zx;
}

Expr chNu2(const EqSystem& s) {
  Expr r = s.nl("rho"), eta = corpus::P("eta");
  Expr z = s.jet("z", 0, 0), zx = s.jet("z", 1, 0);
  Expr den = r * r - eta * eta;
  return ei(2) * eta * r / den * z + (r * r + eta * eta) / den * zx -
         ei(2) * r;
}

Expr chXi1(const EqSystem& s) {
  Expr r = s.nl("rho"), eta = corpus::P("eta");
  return s.coord(0) - kLn((r - eta) / (r + eta));
}

}  // namespace

TEST_SUITE("search") {

TEST_CASE("quadratic ansatz over the KdV covering") {
  EqSystem s = corpus::kdvRiccati();
  Expr z = s.jet("z", 0, 0), r = s.nl("rho");
  AnsatzSpec spec;
  spec.monomials = {ei(1), z, r, z * z, z * r, r * r};
  spec.mu = corpus::kdvMu(s);
  spec.cValues = {Rat(0), Rat(2)};
  auto sols = searchPseudosymmetry(s, spec, s.zeroOptions(601));
  REQUIRE(sols.size() == 2);

  CHECK(sols[0].c == 0);
  CHECK(sols[0].basis.empty());

  CHECK(sols[1].c == 2);
  REQUIRE(sols[1].basis.size() == 1);
  CHECK(sols[1].layout.size() == 12);
  CHECK(sols[1].layout[2] == "phi[z]*rho");
  CHECK(prop(sols[1].basis[0],
             rv({0, 0, 1, 0, 0, 0, Rat(-1, 4), 0, 0, 0, 0, 0})));
  REQUIRE(sols[1].verified.size() == 1);
  CHECK(sols[1].verified[0] == Verdict::Pass);
}

TEST_CASE("sine-Gordon ansatz needs degree four") {
  EqSystem s = corpus::sgRiccati();
  Expr r = s.nl("rho");
  AnsatzSpec spec;
  spec.mu = corpus::sgMu(s);
  spec.cValues = {Rat(2)};

  spec.monomials = {ei(1), r, r * r};
  auto low = searchPseudosymmetry(s, spec, s.zeroOptions(602));
  REQUIRE(low.size() == 1);
  CHECK(low[0].basis.empty());

  spec.monomials = {ei(1), r, r * r, r * r * r, r * r * r * r};
  auto high = searchPseudosymmetry(s, spec, s.zeroOptions(603));
  REQUIRE(high.size() == 1);
  REQUIRE(high[0].basis.size() == 1);
  CHECK(prop(high[0].basis[0],
             rv({1, 0, 1, 0, 0, Rat(-1, 4), 0, Rat(-1, 2), 0, Rat(-1, 4)})));
  CHECK(high[0].verified[0] == Verdict::Pass);
}

TEST_CASE("doubled KdV ansatz recovers the Darboux field") {
  EqSystem s = kdvDoubledNumeric();
  Expr z = s.jet("z", 0, 0), zx = s.jet("z", 1, 0);
  Expr r = s.nl("rho"), rh = s.nl("rhohat");
  AnsatzSpec spec;
  spec.monomials = {ei(1), z,      r,      rh,     z * z,
                    z * r, z * rh, r * r,  r * rh, rh * rh};
  spec.includeBase = true;
  spec.mu = scalarForm(rh, zx + (ei(12) - ei(2) * z) * rh);
  spec.cValues = {Rat(2)};
  auto sols = searchPseudosymmetry(s, spec, s.zeroOptions(604));
  REQUIRE(sols.size() == 1);
  REQUIRE(sols[0].basis.size() == 1);
  CHECK(sols[0].layout.size() == 50);
  std::vector<Rat> want(50, Rat(0));
  want[23] = 1;           // phi[z] = rhohat
  want[30] = Rat(-1, 4);  // phi[rho] constant term
  want[37] = Rat(1, 4);   // phi[rho] rho^2
  want[38] = Rat(-1, 2);  // phi[rho] rho*rhohat
  want[39] = Rat(1, 4);   // phi[rho] rhohat^2
  want[40] = Rat(-1, 4);  // phi[rhohat]
  CHECK(prop(sols[0].basis[0], want));
  CHECK(sols[0].verified[0] == Verdict::Pass);
}

TEST_CASE("injecting the known solution solves the extracted system") {
  EqSystem s = corpus::kdvRiccati();
  Expr z = s.jet("z", 0, 0), r = s.nl("rho");
  std::vector<Expr> mons = {ei(1), z, r, z * z, z * r, r * r};
  std::vector<GenId> ug;
  for (int i = 0; i < 12; ++i) ug.push_back(genSym("_c" + std::to_string(i), false));
  Expr phz, phr;
  for (int i = 0; i < 6; ++i) {
    phz = phz + Expr::fromGen(ug[i]) * mons[i];
    phr = phr + Expr::fromGen(ug[6 + i]) * mons[i];
  }
  PseudoField f = PseudoField::scalarField(
      Expr(), Expr(), {{"z", phz}, {"rho", phr}}, 2, corpus::kdvMu(s));
  PseudoProlong ctx(f, s);
  std::map<GenId, Expr> inject;
  for (GenId g : ug) inject[g] = Expr();
  inject[ug[2]] = ei(1);
  inject[ug[6]] = erat(-1, 4);
  auto resids = tangencyResiduals(ctx);
  CHECK(resids.size() == 3);
  for (auto& [name, m] : resids)
    for (int i = 0; i < m.rows(); ++i) {
      Expr plugged = s.reduce(substitute(m.at(i, 0), inject));
      CHECK_MESSAGE(isZero(plugged, s.zeroOptions(605)).verdict == Verdict::Pass,
                    name);
    }
}

TEST_CASE("nonlinear unknown occurrences are refused") {
  EqSystem s = corpus::kdvRiccati();
  AnsatzSpec spec;
  spec.mu = corpus::kdvMu(s);
  spec.cValues = {Rat(2)};

  spec.monomials = {ei(1), Expr::fromGen(genSym("_c0", false)) * s.nl("rho")};
  CHECK_THROWS_AS(searchPseudosymmetry(s, spec, s.zeroOptions(606)),
                  std::invalid_argument);

  spec.monomials = {ei(1) / (ei(1) + Expr::fromGen(genSym("_c0", false)))};
  CHECK_THROWS_AS(searchPseudosymmetry(s, spec, s.zeroOptions(607)),
                  std::invalid_argument);
}

TEST_CASE("default scalar multiple scan") {
  auto cs = defaultCScan();
  REQUIRE(cs.size() == 9);
  CHECK(cs[0] == 0);
  CHECK(cs[3] == 2);
  CHECK(cs[7] == Rat(1, 2));

  EqSystem s = corpus::kdvRiccati();
  Expr r = s.nl("rho");
  AnsatzSpec spec;
  spec.monomials = {ei(1), r};
  spec.mu = corpus::kdvMu(s);
  auto sols = searchPseudosymmetry(s, spec, s.zeroOptions(608));
  CHECK(sols.size() == 9);
  for (const auto& sol : sols)
    for (Verdict v : sol.verified) CHECK(v == Verdict::Pass);
}

TEST_CASE("relation hunting over quotient coordinates") {
  {
    EqSystem s = corpus::heatSys();
    EqSystem q = heatQ();
    Expr u = s.jet("u", 0, 0);
    Morphism m(s, s.coord(0), s.coord(1),
               {{"u1p", s.jet("u", 1, 0) / u}, {"u2p", s.jet("u", 0, 1) / u}});
    Expr n1 = q.jet("u1p", 0, 0), n2 = q.jet("u2p", 0, 0);
    {
      HuntResult h = huntRelations(m, q, {q.jet("u1p", 1, 0), n2, n1 * n1, ei(1)},
                                   s.zeroOptions(609));
      REQUIRE(h.relations.size() == 1);
      CHECK(prop(h.relations[0], rv({1, -1, 1, 0})));
      CHECK(h.verified[0] == Verdict::Pass);
    }
    {
      HuntResult h = huntRelations(m, q, {q.jet("u1p", 0, 1), q.jet("u2p", 1, 0)},
                                   s.zeroOptions(610));
      REQUIRE(h.relations.size() == 1);
      CHECK(prop(h.relations[0], rv({1, -1})));
      CHECK(h.verified[0] == Verdict::Pass);
    }
    {
      HuntResult h = huntRelations(m, q, {ei(1)}, s.zeroOptions(611));
      CHECK(h.relations.empty());
    }
  }
  {
    EqSystem s = corpus::mkdvSys();
    EqSystem q = mkdvQ();
    Expr u = s.jet("u", 0, 0), ux = s.jet("u", 1, 0), uxx = s.jet("u", 2, 0),
         ut = s.jet("u", 0, 1);
    Expr nu1 = ux - u * u;
    Expr nu2 = ut - ei(2) * u * (uxx - ei(2) * u * ux) -
               ei(2) * u * u * (ux - u * u);
    Morphism m(s, s.coord(0), s.coord(1), {{"nu1", nu1}, {"nu2", nu2}});
    Expr n1 = q.jet("nu1", 0, 0), n2 = q.jet("nu2", 0, 0);
    {
      // The zeroth-order relation needs a quadratic head; the linear head
      // admits no relation at all.
      HuntResult h = huntRelations(m, q, {n2, q.jet("nu1", 2, 0), n1, ei(1)},
                                   s.zeroOptions(612));
      CHECK(h.relations.empty());
    }
    {
      HuntResult h = huntRelations(m, q, {n2, q.jet("nu1", 2, 0), n1 * n1, ei(1)},
                                   s.zeroOptions(613));
      REQUIRE(h.relations.size() == 1);
      CHECK(prop(h.relations[0], rv({-1, 1, 2, 0})));
      CHECK(h.verified[0] == Verdict::Pass);
    }
    {
      HuntResult h = huntRelations(
          m, q, {n1 * q.jet("nu1", 1, 0), q.jet("nu2", 1, 0), q.jet("nu1", 0, 1)},
          s.zeroOptions(614));
      REQUIRE(h.relations.size() == 1);
      CHECK(prop(h.relations[0], rv({2, 1, -1})));
      CHECK(h.verified[0] == Verdict::Pass);
    }
  }
  {
    EqSystem s = corpus::chRiccati();
    EqSystem q = chQ();
    Morphism m(s, chXi1(s), s.coord(1),
               {{"nu1", chNu1(s)}, {"nu2", chNu2(s)}});
    HuntResult h = huntRelations(m, q, {q.jet("nu1", 1, 0), q.jet("nu2", 0, 0)},
                                 s.zeroOptions(615));
    REQUIRE(h.relations.size() == 1);
    CHECK(prop(h.relations[0], rv({1, -1})));
    CHECK(h.verified[0] == Verdict::Pass);
  }
}

}  // TEST_SUITE
