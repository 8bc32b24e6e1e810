#include "jetkit/search.hpp"

#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

namespace jetkit {
namespace {

std::string termStr(const Mono& m, const Int& c) {
  Poly num{{m, c}};
  return Expr::make(std::move(num), Poly{{Mono{}, Int(1)}}).str();
}

// One coefficient row per surviving monomial of the residual numerator:
// the residual vanishes identically iff each row, dotted with the unknown
// vector, is zero.  Denominators and kernel arguments must be unknown-free
// and every numerator term must carry exactly one unknown to first power,
// otherwise the system is not linear in the unknowns.
void extractRows(const Expr& e, const std::set<GenId>& unknowns,
                 std::size_t n, const std::map<GenId, std::size_t>& slot,
                 std::vector<std::vector<Rat>>& rows) {
  for (GenId g : closureGens(e)) {
    const Gen& info = genInfo(g);
    if (info.kind != GenKind::Kernel) continue;
    for (GenId h : closureGens(*info.arg))
      if (unknowns.count(h))
        throw std::invalid_argument(
            "ansatz unknowns occur nonlinearly: unknown inside " + genStr(g));
  }
  for (const auto& [m, c] : e.den())
    for (const auto& [g, p] : m)
      if (unknowns.count(g))
        throw std::invalid_argument(
            "ansatz unknowns occur nonlinearly: denominator term " +
            termStr(m, c));
  std::map<Mono, std::vector<Rat>> byShape;
  for (const auto& [m, c] : e.num()) {
    std::size_t idx = n;
    Mono rest;
    for (const auto& [g, p] : m) {
      if (!unknowns.count(g)) {
        rest.emplace_back(g, p);
        continue;
      }
      if (idx != n || p != 1)
        throw std::invalid_argument(
            "ansatz unknowns occur nonlinearly: term " + termStr(m, c));
      idx = slot.at(g);
    }
    if (idx == n)
      throw std::invalid_argument(
          "residual term free of unknowns: " + termStr(m, c));
    auto [it, fresh] = byShape.try_emplace(std::move(rest));
    if (fresh) it->second.assign(n, Rat(0));
    it->second[idx] += Rat(c);
  }
  for (auto& [shape, row] : byShape) rows.push_back(std::move(row));
}

std::size_t height(const Rat& q) {
  return numerator(q).str().size() + denominator(q).str().size();
}

// Exact reduced row echelon form with a smallest-entry pivot choice, then
// the standard free-column parameterization of the nullspace.
std::vector<std::vector<Rat>> nullspaceBasis(
    std::vector<std::vector<Rat>> rows, std::size_t n) {
  std::vector<std::size_t> pivotCol;
  std::size_t r = 0;
  for (std::size_t col = 0; col < n && r < rows.size(); ++col) {
    std::size_t best = rows.size();
    for (std::size_t i = r; i < rows.size(); ++i) {
      if (rows[i][col] == 0) continue;
      if (best == rows.size() || height(rows[i][col]) < height(rows[best][col]))
        best = i;
    }
    if (best == rows.size()) continue;
    std::swap(rows[r], rows[best]);
    Rat inv = Rat(1) / rows[r][col];
    for (std::size_t j = col; j < n; ++j) rows[r][j] *= inv;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][col] == 0) continue;
      Rat f = rows[i][col];
      for (std::size_t j = col; j < n; ++j) rows[i][j] -= f * rows[r][j];
    }
    pivotCol.push_back(col);
    ++r;
  }
  std::vector<bool> isPivot(n, false);
  for (std::size_t p : pivotCol) isPivot[p] = true;
  std::vector<std::vector<Rat>> basis;
  for (std::size_t f = 0; f < n; ++f) {
    if (isPivot[f]) continue;
    std::vector<Rat> v(n, Rat(0));
    v[f] = 1;
    for (std::size_t k = 0; k < pivotCol.size(); ++k)
      v[pivotCol[k]] = -rows[k][f];
    basis.push_back(std::move(v));
  }
  return basis;
}

std::vector<GenId> internUnknowns(std::size_t count) {
  std::vector<GenId> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(genSym("_c" + std::to_string(i), false));
  return out;
}

Expr combination(const std::vector<Expr>& coeffs,
                 const std::vector<Expr>& monomials, std::size_t offset) {
  Expr out;
  for (std::size_t i = 0; i < monomials.size(); ++i)
    out = out + coeffs[offset + i] * monomials[i];
  return out;
}

}  // namespace

std::vector<Rat> defaultCScan() {
  return {Rat(0),  Rat(1),       Rat(-1),      Rat(2), Rat(-2),
          Rat(4),  Rat(-4),      Rat(1, 2),    Rat(-1, 2)};
}

std::vector<AnsatzSolution> searchPseudosymmetry(const EqSystem& s,
                                                 const AnsatzSpec& spec,
                                                 const ZeroOptions& opt) {
  std::size_t n = spec.monomials.size();
  std::vector<std::string> blocks;
  if (spec.includeBase) {
    blocks.push_back("a1");
    blocks.push_back("a2");
  }
  std::vector<std::string> vars;
  for (const auto& d : s.deps()) vars.push_back(d);
  for (const auto& nl : s.nonlocals()) vars.push_back(nl);
  for (const auto& v : vars) blocks.push_back("phi[" + v + "]");
  std::size_t total = blocks.size() * n;

  std::vector<GenId> ug = internUnknowns(total);
  std::set<GenId> unknowns(ug.begin(), ug.end());
  std::map<GenId, std::size_t> slot;
  for (std::size_t i = 0; i < total; ++i) slot[ug[i]] = i;
  std::vector<Expr> coeffs;
  for (GenId g : ug) coeffs.push_back(Expr::fromGen(g));

  std::vector<std::string> layout;
  for (const auto& b : blocks)
    for (const auto& m : spec.monomials) layout.push_back(b + "*" + m.str());

  Expr a1, a2;
  std::size_t off = 0;
  if (spec.includeBase) {
    a1 = combination(coeffs, spec.monomials, 0);
    a2 = combination(coeffs, spec.monomials, n);
    off = 2 * n;
  }
  std::map<std::string, Expr> phi;
  for (const auto& v : vars) {
    phi[v] = combination(coeffs, spec.monomials, off);
    off += n;
  }

  std::vector<Rat> cs = spec.cValues.empty() ? defaultCScan() : spec.cValues;
  std::vector<AnsatzSolution> out;
  for (const Rat& c : cs) {
    PseudoField tmpl = PseudoField::scalarField(a1, a2, phi, c, spec.mu);
    PseudoProlong ctx(tmpl, s);
    std::vector<std::vector<Rat>> rows;
    for (auto& [name, resid] : tangencyResiduals(ctx))
      for (int i = 0; i < resid.rows(); ++i)
        extractRows(resid.at(i, 0), unknowns, total, slot, rows);

    AnsatzSolution sol;
    sol.c = c;
    sol.layout = layout;
    sol.basis = nullspaceBasis(std::move(rows), total);
    for (const auto& v : sol.basis) {
      std::vector<Expr> vals;
      vals.reserve(total);
      for (const Rat& q : v) vals.push_back(Expr::fromRat(q));
      Expr b1, b2;
      std::size_t o = 0;
      if (spec.includeBase) {
        b1 = combination(vals, spec.monomials, 0);
        b2 = combination(vals, spec.monomials, n);
        o = 2 * n;
      }
      std::map<std::string, Expr> comp;
      for (const auto& var : vars) {
        comp[var] = combination(vals, spec.monomials, o);
        o += n;
      }
      PseudoField f = PseudoField::scalarField(b1, b2, comp, c, spec.mu);
      sol.verified.push_back(checkPseudosymmetry(f, s, opt).verdict);
      sol.fields.push_back(std::move(f));
    }
    out.push_back(std::move(sol));
  }
  return out;
}

HuntResult huntRelations(const Morphism& m, const EqSystem& target,
                         const std::vector<Expr>& monomials,
                         const ZeroOptions& opt) {
  std::size_t n = monomials.size();
  std::vector<GenId> ug = internUnknowns(n);
  std::set<GenId> unknowns(ug.begin(), ug.end());
  std::map<GenId, std::size_t> slot;
  for (std::size_t i = 0; i < n; ++i) slot[ug[i]] = i;

  std::vector<Expr> pulled;
  pulled.reserve(n);
  for (const Expr& mon : monomials) pulled.push_back(m.pullback(mon, target));

  Expr sum;
  for (std::size_t i = 0; i < n; ++i)
    sum = sum + Expr::fromGen(ug[i]) * pulled[i];
  Expr resid = m.source().reduce(sum);

  std::vector<std::vector<Rat>> rows;
  if (!resid.isZero()) extractRows(resid, unknowns, n, slot, rows);

  HuntResult out;
  out.relations = nullspaceBasis(std::move(rows), n);
  for (const auto& v : out.relations) {
    Expr combo;
    for (std::size_t i = 0; i < n; ++i)
      combo = combo + Expr::fromRat(v[i]) * pulled[i];
    out.verified.push_back(isZero(m.source().reduce(combo), opt).verdict);
  }
  return out;
}

}  // namespace jetkit
