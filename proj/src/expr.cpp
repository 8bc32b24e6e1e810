#include "jetkit/expr.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace jetkit {

namespace {

// ---------------------------------------------------------------------------
// Generator registry

struct Registry {
  std::shared_mutex mu;
  std::vector<std::unique_ptr<Gen>> gens;
  std::unordered_map<std::string, GenId> byKey;

  static Registry& get() {
    static Registry r;
    return r;
  }
};

GenId internGen(Gen g) {
  auto& reg = Registry::get();
  {
    std::shared_lock lk(reg.mu);
    auto it = reg.byKey.find(g.key);
    if (it != reg.byKey.end()) return it->second;
  }
  std::unique_lock lk(reg.mu);
  auto it = reg.byKey.find(g.key);
  if (it != reg.byKey.end()) return it->second;
  GenId id = static_cast<GenId>(reg.gens.size());
  reg.gens.push_back(std::make_unique<Gen>(std::move(g)));
  reg.byKey.emplace(reg.gens.back()->key, id);
  return id;
}

std::string pad4(int v) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%04d", v);
  return buf;
}

}  // namespace

const Gen& genInfo(GenId id) {
  auto& reg = Registry::get();
  std::shared_lock lk(reg.mu);
  return *reg.gens.at(static_cast<size_t>(id));
}

GenId genSym(const std::string& name, bool indep) {
  Gen g;
  g.kind = GenKind::Sym;
  g.name = name;
  g.indep = indep;
  g.key = "s|" + name;
  GenId id = internGen(std::move(g));
  if (genInfo(id).indep != indep)
    throw std::runtime_error("symbol '" + name +
                             "' redeclared with a different coordinate role");
  return id;
}

GenId genJet(const std::string& var, int a, int b, const std::string& ix,
             const std::string& it) {
  if (a < 0 || b < 0) throw std::runtime_error("negative jet order");
  Gen g;
  g.kind = GenKind::Jet;
  g.name = var;
  g.a = a;
  g.b = b;
  g.ix = ix;
  g.it = it;
  g.key = "j|" + var + "|" + ix + "|" + it + "|" + pad4(a) + "|" + pad4(b);
  return internGen(std::move(g));
}

GenId genNonlocal(const std::string& name) {
  Gen g;
  g.kind = GenKind::Nonlocal;
  g.name = name;
  g.key = "n|" + name;
  return internGen(std::move(g));
}

const char* kopName(KOp op) {
  switch (op) {
    case KOp::Exp: return "exp";
    case KOp::Ln: return "ln";
    case KOp::Sin: return "sin";
    case KOp::Cos: return "cos";
    case KOp::Tan: return "tan";
    case KOp::Arctan: return "arctan";
    case KOp::Sqrt: return "sqrt";
  }
  return "?";
}

std::string genStr(GenId id) {
  const Gen& g = genInfo(id);
  switch (g.kind) {
    case GenKind::Sym:
    case GenKind::Nonlocal:
      return g.name;
    case GenKind::Jet: {
      if (g.a == 0 && g.b == 0) return g.name;
      std::string s = g.name + "_";
      for (int i = 0; i < g.a; ++i) s += g.ix;
      for (int i = 0; i < g.b; ++i) s += g.it;
      return s;
    }
    case GenKind::Kernel:
      return std::string(kopName(g.op)) + "(" + g.arg->str() + ")";
  }
  return "?";
}

const char* verdictName(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::ProbabilisticPass: return "probabilistic-pass";
    case Verdict::Fail: return "fail";
    case Verdict::Undecidable: return "undecidable";
  }
  return "?";
}

Verdict combineVerdicts(Verdict a, Verdict b) {
  if (a == Verdict::Fail || b == Verdict::Fail) return Verdict::Fail;
  if (a == Verdict::Undecidable || b == Verdict::Undecidable)
    return Verdict::Undecidable;
  if (a == Verdict::ProbabilisticPass || b == Verdict::ProbabilisticPass)
    return Verdict::ProbabilisticPass;
  return Verdict::Pass;
}

// ---------------------------------------------------------------------------
// Polynomial helpers

namespace {

const Poly& onePoly() {
  static const Poly p{{Mono{}, Int(1)}};
  return p;
}

int monoTotalDeg(const Mono& m) {
  int d = 0;
  for (auto& [g, k] : m) d += k;
  return d;
}

Mono monoMul(const Mono& a, const Mono& b) {
  Mono r;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first == b[j].first) {
      r.push_back({a[i].first, a[i].second + b[j].second});
      ++i;
      ++j;
    } else if (a[i].first < b[j].first) {
      r.push_back(a[i++]);
    } else {
      r.push_back(b[j++]);
    }
  }
  for (; i < a.size(); ++i) r.push_back(a[i]);
  for (; j < b.size(); ++j) r.push_back(b[j]);
  return r;
}

bool monoDivides(const Mono& d, const Mono& m) {
  size_t j = 0;
  for (auto& [g, k] : d) {
    while (j < m.size() && m[j].first < g) ++j;
    if (j >= m.size() || m[j].first != g || m[j].second < k) return false;
  }
  return true;
}

Mono monoQuot(const Mono& m, const Mono& d) {
  Mono r;
  size_t j = 0;
  for (auto& [g, k] : m) {
    int32_t sub = 0;
    if (j < d.size() && d[j].first == g) {
      sub = d[j].second;
      ++j;
    }
    if (k > sub) r.push_back({g, k - sub});
  }
  return r;
}

void polyAddTerm(Poly& p, const Mono& m, const Int& c) {
  if (c == 0) return;
  auto it = p.find(m);
  if (it == p.end()) {
    p.emplace(m, c);
  } else {
    it->second += c;
    if (it->second == 0) p.erase(it);
  }
}

Poly polyAdd(const Poly& a, const Poly& b) {
  Poly r = a;
  for (auto& [m, c] : b) polyAddTerm(r, m, c);
  return r;
}

Poly polyNeg(const Poly& a) {
  Poly r;
  for (auto& [m, c] : a) r.emplace(m, -c);
  return r;
}

Poly polySub(const Poly& a, const Poly& b) { return polyAdd(a, polyNeg(b)); }

Poly polyMul(const Poly& a, const Poly& b) {
  Poly r;
  for (auto& [ma, ca] : a)
    for (auto& [mb, cb] : b) polyAddTerm(r, monoMul(ma, mb), ca * cb);
  return r;
}

Poly polyMulInt(const Poly& a, const Int& c) {
  Poly r;
  if (c == 0) return r;
  for (auto& [m, k] : a) r.emplace(m, k * c);
  return r;
}

Poly polyPow(const Poly& a, long k) {
  Poly r = onePoly();
  Poly base = a;
  while (k > 0) {
    if (k & 1) r = polyMul(r, base);
    k >>= 1;
    if (k) base = polyMul(base, base);
  }
  return r;
}

bool polyIsConst(const Poly& p) {
  return p.empty() || (p.size() == 1 && p.begin()->first.empty());
}

Int polyIntContent(const Poly& p) {
  Int g = 0;
  for (auto& [m, c] : p) {
    g = boost::multiprecision::gcd(g, c);
    if (g == 1) break;
  }
  if (g < 0) g = -g;
  return g;
}

Poly polyDivInt(const Poly& p, const Int& d) {
  Poly r;
  for (auto& [m, c] : p) r.emplace(m, c / d);
  return r;
}

int degIn(const Poly& p, GenId v) {
  int d = 0;
  for (auto& [m, c] : p)
    for (auto& [g, k] : m)
      if (g == v) d = std::max(d, (int)k);
  return d;
}

std::set<GenId> polyAtoms(const Poly& p) {
  std::set<GenId> s;
  for (auto& [m, c] : p)
    for (auto& [g, k] : m) s.insert(g);
  return s;
}

// Content-based ordering used wherever canonical choices must survive across
// processes: print order, sign normalization, main-variable selection.
bool monoPrintBefore(const Mono& a, const Mono& b) {
  int da = monoTotalDeg(a), db = monoTotalDeg(b);
  if (da != db) return da > db;
  std::vector<std::pair<std::string, int32_t>> ka, kb;
  ka.reserve(a.size());
  kb.reserve(b.size());
  for (auto& [g, k] : a) ka.push_back({genInfo(g).key, k});
  for (auto& [g, k] : b) kb.push_back({genInfo(g).key, k});
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  for (size_t i = 0; i < std::min(ka.size(), kb.size()); ++i) {
    if (ka[i].first != kb[i].first) return ka[i].first < kb[i].first;
    if (ka[i].second != kb[i].second) return ka[i].second > kb[i].second;
  }
  return ka.size() < kb.size();
}

const Mono& polyLeadMono(const Poly& p) {
  const Mono* best = nullptr;
  for (auto& [m, c] : p)
    if (!best || monoPrintBefore(m, *best)) best = &m;
  return *best;
}

// Graded lexicographic order (low gen ids most significant); compatible with
// monomial multiplication, used inside exact division (deterministic
// in-process is enough there).
bool monoGrlexLess(const Mono& a, const Mono& b) {
  int da = monoTotalDeg(a), db = monoTotalDeg(b);
  if (da != db) return da < db;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first != b[j].first) return a[i].first > b[j].first;
    if (a[i].second != b[j].second) return a[i].second < b[j].second;
    ++i;
    ++j;
  }
  return false;
}

const Mono* polyGrlexLead(const Poly& p) {
  const Mono* best = nullptr;
  for (auto& [m, c] : p)
    if (!best || monoGrlexLess(*best, m)) best = &m;
  return best;
}

Poly polyDivExact(const Poly& a, const Poly& b) {
  if (b.empty()) throw std::logic_error("division by zero polynomial");
  Poly q;
  Poly r = a;
  const Mono* lb = polyGrlexLead(b);
  const Int& cb = b.at(*lb);
  while (!r.empty()) {
    const Mono* lr = polyGrlexLead(r);
    if (!monoDivides(*lb, *lr)) throw std::logic_error("inexact poly division");
    const Int& cr = r.at(*lr);
    if (cr % cb != 0) throw std::logic_error("inexact poly division");
    Mono qm = monoQuot(*lr, *lb);
    Int qc = cr / cb;
    polyAddTerm(q, qm, qc);
    Poly sub;
    for (auto& [m, c] : b) sub.emplace(monoMul(m, qm), c * qc);
    r = polySub(r, sub);
  }
  return q;
}

// Coefficients of p by the degree of v; entries are polynomials without v.
std::vector<Poly> coeffsByDeg(const Poly& p, GenId v) {
  std::vector<Poly> out(static_cast<size_t>(degIn(p, v)) + 1);
  for (auto& [m, c] : p) {
    int dv = 0;
    Mono rest;
    for (auto& [g, k] : m) {
      if (g == v)
        dv = k;
      else
        rest.push_back({g, k});
    }
    polyAddTerm(out[static_cast<size_t>(dv)], rest, c);
  }
  return out;
}

Poly polyGcd(const Poly& a, const Poly& b);

Poly contentIn(const Poly& p, GenId v) {
  auto cs = coeffsByDeg(p, v);
  Poly g;
  for (auto& c : cs)
    if (!c.empty()) g = polyGcd(g, c);
  return g;
}

// Modular arithmetic for the coprimality precheck.
constexpr uint64_t kPrime = 2305843009213693951ULL;  // 2^61 - 1

uint64_t mulmod(uint64_t a, uint64_t b) {
  return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % kPrime);
}

uint64_t powmod(uint64_t a, uint64_t e) {
  uint64_t r = 1;
  while (e) {
    if (e & 1) r = mulmod(r, a);
    a = mulmod(a, a);
    e >>= 1;
  }
  return r;
}

uint64_t invmod(uint64_t a) { return powmod(a, kPrime - 2); }

uint64_t intModP(const Int& c) {
  Int m = c % Int(kPrime);
  if (m < 0) m += Int(kPrime);
  return m.convert_to<uint64_t>();
}

// Specializes every variable except v; returns coefficients by degree of v.
std::vector<uint64_t> specialize(const Poly& p, GenId v,
                                 const std::map<GenId, uint64_t>& vals) {
  std::vector<uint64_t> out(static_cast<size_t>(degIn(p, v)) + 1, 0);
  for (auto& [m, c] : p) {
    uint64_t val = intModP(c);
    int dv = 0;
    for (auto& [g, k] : m) {
      if (g == v) {
        dv = k;
      } else {
        val = mulmod(val, powmod(vals.at(g), static_cast<uint64_t>(k)));
      }
    }
    out[static_cast<size_t>(dv)] =
        (out[static_cast<size_t>(dv)] + val) % kPrime;
  }
  while (out.size() > 1 && out.back() == 0) out.pop_back();
  return out;
}

std::vector<uint64_t> uniGcdModP(std::vector<uint64_t> a,
                                 std::vector<uint64_t> b) {
  auto deg = [](const std::vector<uint64_t>& p) {
    return static_cast<int>(p.size()) - 1;
  };
  auto trim = [](std::vector<uint64_t>& p) {
    while (p.size() > 1 && p.back() == 0) p.pop_back();
  };
  trim(a);
  trim(b);
  if (deg(a) < deg(b)) std::swap(a, b);
  while (!(b.size() == 1 && b[0] == 0)) {
    // a mod b
    uint64_t inv = invmod(b.back());
    for (int d = deg(a); d >= deg(b); --d) {
      uint64_t q = mulmod(a[static_cast<size_t>(d)], inv);
      if (q == 0) continue;
      for (int j = 0; j <= deg(b); ++j) {
        size_t idx = static_cast<size_t>(d - deg(b) + j);
        uint64_t sub = mulmod(q, b[static_cast<size_t>(j)]);
        a[idx] = (a[idx] + kPrime - sub) % kPrime;
      }
    }
    trim(a);
    std::swap(a, b);
    trim(b);
  }
  return a;
}

Poly primPartIn(const Poly& p, GenId v, Poly* contentOut = nullptr) {
  Poly c = contentIn(p, v);
  if (contentOut) *contentOut = c;
  if (polyIsConst(c) && !c.empty() && c.begin()->second == 1) return p;
  return polyDivExact(p, c);
}

// Pseudo-remainder of a by b with respect to v.
Poly pseudoRem(const Poly& a, const Poly& b, GenId v) {
  int db = degIn(b, v);
  auto bc = coeffsByDeg(b, v);
  const Poly& lb = bc[static_cast<size_t>(db)];
  Poly r = a;
  int e = degIn(a, v) - db + 1;
  while (!r.empty() && degIn(r, v) >= db) {
    int dr = degIn(r, v);
    auto rc = coeffsByDeg(r, v);
    Poly shift = rc[static_cast<size_t>(dr)];
    if (dr > db)
      shift = polyMul(shift, Poly{{Mono{{v, dr - db}}, Int(1)}});
    r = polySub(polyMul(r, lb), polyMul(shift, b));
    --e;
  }
  for (; e > 0; --e) r = polyMul(r, lb);
  return r;
}

Poly gcdSignNormalize(Poly g) {
  if (g.empty()) return g;
  if (g.at(polyLeadMono(g)) < 0) g = polyNeg(g);
  return g;
}

thread_local std::mt19937_64 gcdRng(0x5eedf00dULL);

Poly polyGcdPrim(const Poly& a, const Poly& b) {
  // Both nonzero, integer-primitive.
  if (a == b) return a;
  if (polyIsConst(a) || polyIsConst(b)) return onePoly();
  std::set<GenId> vars;
  for (GenId g : polyAtoms(a)) vars.insert(g);
  std::set<GenId> vb = polyAtoms(b);
  std::set<GenId> common;
  for (GenId g : vars)
    if (vb.count(g)) common.insert(g);
  // A variable missing from one side cannot appear in the gcd.
  // Pick the main variable minimizing the smaller degree.
  GenId v = -1;
  int best = INT32_MAX;
  std::string bestKey;
  for (GenId g : common) {
    int d = std::min(degIn(a, g), degIn(b, g));
    const std::string& k = genInfo(g).key;
    if (d < best || (d == best && k < bestKey)) {
      best = d;
      v = g;
      bestKey = k;
    }
  }
  if (v < 0) return onePoly();  // no shared variable

  // Coprimality precheck: specialize all other variables at random points
  // mod p and take a univariate gcd.  Two independent degree-zero results
  // certify that the gcd is free of v.
  std::set<GenId> others;
  for (GenId g : polyAtoms(a)) others.insert(g);
  for (GenId g : polyAtoms(b)) others.insert(g);
  others.erase(v);
  int zeroDegSeen = 0;
  bool positiveDegSeen = false;
  for (int trial = 0; trial < 6 && zeroDegSeen < 2 && !positiveDegSeen;
       ++trial) {
    std::map<GenId, uint64_t> vals;
    for (GenId g : others) vals[g] = 1 + gcdRng() % (kPrime - 1);
    auto sa = specialize(a, v, vals);
    auto sb = specialize(b, v, vals);
    if (static_cast<int>(sa.size()) - 1 != degIn(a, v)) continue;
    if (static_cast<int>(sb.size()) - 1 != degIn(b, v)) continue;
    auto g = uniGcdModP(sa, sb);
    if (g.size() == 1 && g[0] != 0)
      ++zeroDegSeen;
    else if (g.size() > 1)
      positiveDegSeen = true;
  }
  if (zeroDegSeen >= 2 && !positiveDegSeen) {
    Poly ca = contentIn(a, v);
    Poly cb = contentIn(b, v);
    return polyGcd(ca, cb);
  }

  // Primitive polynomial remainder sequence.
  Poly ca, cb;
  Poly pa = primPartIn(a, v, &ca);
  Poly pb = primPartIn(b, v, &cb);
  Poly cg = polyGcd(ca, cb);
  if (degIn(pa, v) < degIn(pb, v)) std::swap(pa, pb);
  while (true) {
    Poly r = pseudoRem(pa, pb, v);
    if (r.empty()) break;
    if (degIn(r, v) == 0) {
      pb = onePoly();
      break;
    }
    pa = pb;
    pb = primPartIn(r, v);
  }
  Poly g = primPartIn(pb, v);
  return gcdSignNormalize(polyMul(cg, g));
}

Poly polyGcd(const Poly& a, const Poly& b) {
  if (a.empty()) return gcdSignNormalize(b);
  if (b.empty()) return gcdSignNormalize(a);
  Int ca = polyIntContent(a);
  Int cb = polyIntContent(b);
  Int c = boost::multiprecision::gcd(ca, cb);
  Poly pa = polyDivInt(a, ca);
  Poly pb = polyDivInt(b, cb);
  Poly g = polyGcdPrim(pa, pb);
  return gcdSignNormalize(polyMulInt(g, c));
}

// ---------------------------------------------------------------------------
// Term rewrites (canonicalization step 1)

bool termNeedsRewrite(const Mono& m) {
  int expCount = 0;
  for (auto& [g, k] : m) {
    const Gen& gi = genInfo(g);
    if (gi.kind != GenKind::Kernel) continue;
    if (gi.op == KOp::Exp) {
      ++expCount;
      if (k >= 2 || expCount >= 2) return true;
    } else if ((gi.op == KOp::Cos || gi.op == KOp::Sqrt) && k >= 2) {
      return true;
    }
  }
  return false;
}

bool polyNeedsRewrite(const Poly& p) {
  for (auto& [m, c] : p)
    if (termNeedsRewrite(m)) return true;
  return false;
}

}  // namespace

// Forward declarations used by rewrites.
static Expr rewritePoly(const Poly& p);

// ---------------------------------------------------------------------------
// Expr basics

Expr Expr::fromInt(long v) { return fromInt(Int(v)); }

Expr Expr::fromInt(const Int& v) {
  Poly n;
  if (v != 0) n.emplace(Mono{}, v);
  return make(std::move(n), onePoly());
}

Expr Expr::fromRat(const Rat& r) {
  Poly n, d;
  Int nu = boost::multiprecision::numerator(r);
  Int de = boost::multiprecision::denominator(r);
  if (nu != 0) n.emplace(Mono{}, nu);
  d.emplace(Mono{}, de);
  return make(std::move(n), std::move(d));
}

Expr erat(long num, long den) { return Expr::fromRat(Rat(num, den)); }

Expr Expr::fromGen(GenId id) {
  Poly n;
  n.emplace(Mono{{id, 1}}, Int(1));
  return make(std::move(n), onePoly());
}

bool Expr::isRational() const { return polyIsConst(num_) && polyIsConst(den_); }

Rat Expr::asRational() const {
  if (!isRational()) throw std::logic_error("not a rational constant");
  Int n = num_.empty() ? Int(0) : num_.begin()->second;
  Int d = den_.begin()->second;
  return Rat(n, d);
}

bool Expr::denIsOne() const {
  return den_.size() == 1 && den_.begin()->first.empty() &&
         den_.begin()->second == 1;
}

namespace {

// Decomposition of the exponential content of a monomial: basis key -> weight,
// plus the expression each basis key stands for.  Used for the denominator
// shift that keeps exponential directions nonnegative.
struct ExpVec {
  std::map<std::string, Rat> w;
};

void expVecOfTerm(const Mono& m, ExpVec& vec,
                  std::map<std::string, Expr>& basis) {
  for (auto& [g, k] : m) {
    const Gen& gi = genInfo(g);
    if (gi.kind != GenKind::Kernel || gi.op != KOp::Exp) continue;
    const Expr& arg = *gi.arg;
    if (arg.denIsOne()) {
      for (auto& [mono, c] : arg.num()) {
        std::ostringstream key;
        for (auto& [mg, mk] : mono) key << genInfo(mg).key << "^" << mk << "|";
        std::string ks = key.str();
        vec.w[ks] += Rat(c) * k;
        if (!basis.count(ks)) {
          Poly p;
          p.emplace(mono, Int(1));
          basis.emplace(ks, Expr::make(p, onePoly()));
        }
      }
    } else {
      std::string ks = "opaque|" + arg.str();
      vec.w[ks] += Rat(k);
      basis.emplace(ks, arg);
    }
  }
}

// Replaces the exponential part of each term of p by exp(existing + delta).
Poly shiftExp(const Poly& p, const Expr& delta) {
  Poly out;
  for (auto& [m, c] : p) {
    Expr acc = delta;
    Mono keep;
    for (auto& [g, k] : m) {
      const Gen& gi = genInfo(g);
      if (gi.kind == GenKind::Kernel && gi.op == KOp::Exp) {
        acc += Expr::fromInt(k) * (*gi.arg);
      } else {
        keep.push_back({g, k});
      }
    }
    Expr e = kExp(acc);
    if (e.denIsOne() && e.num().size() == 1) {
      auto& [em, ec] = *e.num().begin();
      polyAddTerm(out, monoMul(keep, em), c * ec);
    } else {
      throw std::logic_error("exponential shift did not yield a monomial");
    }
  }
  return out;
}

}  // namespace

Expr Expr::make(Poly num, Poly den) {
  if (den.empty()) throw std::runtime_error("zero denominator");
  if (polyNeedsRewrite(num) || polyNeedsRewrite(den))
    return rewritePoly(num) / rewritePoly(den);
  if (num.empty()) return Expr();

  // Denominator exponential shift: make the componentwise minimum of the
  // exponential directions across denominator terms zero.
  {
    bool denHasExp = false;
    for (auto& [m, c] : den)
      for (auto& [g, k] : m) {
        const Gen& gi = genInfo(g);
        if (gi.kind == GenKind::Kernel && gi.op == KOp::Exp) denHasExp = true;
      }
    if (denHasExp) {
      std::map<std::string, Expr> basis;
      std::vector<ExpVec> vecs;
      std::set<std::string> keys;
      for (auto& [m, c] : den) {
        ExpVec v;
        expVecOfTerm(m, v, basis);
        for (auto& [k, w] : v.w) keys.insert(k);
        vecs.push_back(std::move(v));
      }
      Expr shift;  // minus the componentwise minimum
      for (const std::string& k : keys) {
        Rat mn;
        bool first = true;
        for (auto& v : vecs) {
          auto it = v.w.find(k);
          Rat w = it == v.w.end() ? Rat(0) : it->second;
          if (first || w < mn) mn = w;
          first = false;
        }
        if (mn != 0) shift -= Expr::fromRat(mn) * basis.at(k);
      }
      if (!shift.isZero()) {
        num = shiftExp(num, shift);
        den = shiftExp(den, shift);
      }
    }
  }

  Poly g = polyGcd(num, den);
  if (!(polyIsConst(g) && g.begin()->second == 1)) {
    num = polyDivExact(num, g);
    den = polyDivExact(den, g);
  }
  Int cn = polyIntContent(num);
  Int cd = polyIntContent(den);
  Int c = boost::multiprecision::gcd(cn, cd);
  if (c > 1) {
    num = polyDivInt(num, c);
    den = polyDivInt(den, c);
  }
  if (den.at(polyLeadMono(den)) < 0) {
    num = polyNeg(num);
    den = polyNeg(den);
  }
  Expr e;
  e.num_ = std::move(num);
  e.den_ = std::move(den);
  return e;
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.isZero()) return b;
  if (b.isZero()) return a;
  Poly g = polyGcd(a.den_, b.den_);
  Poly db = polyDivExact(b.den_, g);
  Poly da = polyDivExact(a.den_, g);
  Poly num = polyAdd(polyMul(a.num_, db), polyMul(b.num_, da));
  Poly den = polyMul(a.den_, db);
  return Expr::make(std::move(num), std::move(den));
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr Expr::operator-() const {
  Expr e;
  e.num_ = polyNeg(num_);
  e.den_ = den_;
  return e;
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.isZero() || b.isZero()) return Expr();
  Poly g1 = polyGcd(a.num_, b.den_);
  Poly g2 = polyGcd(b.num_, a.den_);
  Poly num = polyMul(polyDivExact(a.num_, g1), polyDivExact(b.num_, g2));
  Poly den = polyMul(polyDivExact(a.den_, g2), polyDivExact(b.den_, g1));
  return Expr::make(std::move(num), std::move(den));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.isZero()) throw std::runtime_error("division by zero expression");
  Expr inv;
  inv.num_ = b.den_;
  inv.den_ = b.num_;
  return a * Expr::make(std::move(inv.num_), std::move(inv.den_));
}

Expr Expr::pow(long k) const {
  if (k == 0) return fromInt(1);
  if (k < 0) {
    if (isZero()) throw std::runtime_error("zero to a negative power");
    Expr inv = make(Poly(den_), Poly(num_));
    return inv.pow(-k);
  }
  return make(polyPow(num_, k), polyPow(den_, k));
}

size_t Expr::hash() const {
  size_t h = 1469598103934665603ULL;
  auto mix = [&h](size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  };
  auto hashPoly = [&](const Poly& p) {
    for (auto& [m, c] : p) {
      for (auto& [g, k] : m) {
        mix(static_cast<size_t>(g));
        mix(static_cast<size_t>(k));
      }
      mix(static_cast<size_t>((c % Int(1000000007)).convert_to<long>() + 500000003L));
      mix(0xabcdef);
    }
  };
  hashPoly(num_);
  mix(0x12345);
  hashPoly(den_);
  return h;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string monoStr(const Mono& m) {
  std::vector<std::pair<std::string, std::pair<GenId, int32_t>>> fac;
  for (auto& [g, k] : m) fac.push_back({genInfo(g).key, {g, k}});
  std::sort(fac.begin(), fac.end(),
            [](auto& a, auto& b) { return a.first < b.first; });
  std::string s;
  for (auto& [key, gk] : fac) {
    if (!s.empty()) s += "*";
    s += genStr(gk.first);
    if (gk.second > 1) s += "^" + std::to_string(gk.second);
  }
  return s;
}

std::string polyStr(const Poly& p) {
  if (p.empty()) return "0";
  std::vector<const Mono*> order;
  for (auto& [m, c] : p) order.push_back(&m);
  std::sort(order.begin(), order.end(),
            [](const Mono* a, const Mono* b) { return monoPrintBefore(*a, *b); });
  std::string s;
  for (const Mono* m : order) {
    const Int& c = p.at(*m);
    bool neg = c < 0;
    Int ac = neg ? Int(-c) : c;
    std::string term;
    std::string ms = monoStr(*m);
    if (ms.empty()) {
      term = ac.str();
    } else if (ac == 1) {
      term = ms;
    } else {
      term = ac.str() + "*" + ms;
    }
    if (s.empty()) {
      s = neg ? "-" + term : term;
    } else {
      s += neg ? " - " : " + ";
      s += term;
    }
  }
  return s;
}

}  // namespace

std::string Expr::str() const {
  if (denIsOne()) return polyStr(num_);
  if (polyIsConst(den_))
    return "(" + polyStr(num_) + ")/" + den_.begin()->second.str();
  return "(" + polyStr(num_) + ")/(" + polyStr(den_) + ")";
}

// ---------------------------------------------------------------------------
// Kernels

namespace {

bool exprLeadNegative(const Expr& e) {
  if (e.isZero()) return false;
  return e.num().at(polyLeadMono(e.num())) < 0;
}

GenId internKernelGen(KOp op, const Expr& arg) {
  Gen g;
  g.kind = GenKind::Kernel;
  g.op = op;
  g.arg = std::make_shared<const Expr>(arg);
  g.key = std::string("k|") + kopName(op) + "|" + arg.str();
  return internGen(std::move(g));
}

bool perfectSquareRat(const Rat& r, Rat& root) {
  if (r < 0) return false;
  Int n = boost::multiprecision::numerator(r);
  Int d = boost::multiprecision::denominator(r);
  Int sn = boost::multiprecision::sqrt(n);
  Int sd = boost::multiprecision::sqrt(d);
  if (sn * sn == n && sd * sd == d) {
    root = Rat(sn, sd);
    return true;
  }
  return false;
}

// Finds a term of arg that is c * atan(w) with integer weight |c| >= 2;
// returns the atan generator and the integer weight.
bool findEvenArctan(const Expr& arg, GenId& gen, Int& weight) {
  if (!polyIsConst(arg.den())) return false;
  Int d = arg.den().begin()->second;
  for (auto& [m, c] : arg.num()) {
    if (m.size() != 1 || m[0].second != 1) continue;
    const Gen& gi = genInfo(m[0].first);
    if (gi.kind != GenKind::Kernel || gi.op != KOp::Arctan) continue;
    if (c % d != 0) continue;
    Int w = c / d;
    if (w >= 2 || w <= -2) {
      gen = m[0].first;
      weight = w;
      return true;
    }
  }
  return false;
}

}  // namespace

Expr kernel(KOp op, const Expr& arg) {
  if (op == KOp::Tan) return kernel(KOp::Sin, arg) / kernel(KOp::Cos, arg);

  if (arg.isRational()) {
    Rat r = arg.asRational();
    switch (op) {
      case KOp::Exp:
        if (r == 0) return Expr::fromInt(1);
        break;
      case KOp::Ln:
        if (r == 1) return Expr();
        break;
      case KOp::Sin:
      case KOp::Arctan:
        if (r == 0) return Expr();
        break;
      case KOp::Cos:
        if (r == 0) return Expr::fromInt(1);
        break;
      case KOp::Sqrt: {
        Rat root;
        if (perfectSquareRat(r, root)) return Expr::fromRat(root);
        break;
      }
      default:
        break;
    }
  }

  if (op == KOp::Exp) {
    // exp(a + c*ln(w) + ...) -> w^c * exp(a + ...) for integer c.
    if (polyIsConst(arg.den())) {
      Int d = arg.den().begin()->second;
      for (auto& [m, c] : arg.num()) {
        if (m.size() != 1 || m[0].second != 1) continue;
        const Gen& gi = genInfo(m[0].first);
        if (gi.kind != GenKind::Kernel || gi.op != KOp::Ln) continue;
        if (c % d != 0) continue;
        long e = (c / d).convert_to<long>();
        Poly rest = arg.num();
        rest.erase(m);
        Expr rem = Expr::make(std::move(rest), arg.den());
        return gi.arg->pow(e) * kernel(KOp::Exp, rem);
      }
    }
    if (arg.isZero()) return Expr::fromInt(1);
  }

  if (op == KOp::Ln) {
    // ln(exp(a)^k) -> k*a
    if (arg.denIsOne() && arg.num().size() == 1) {
      auto& [m, c] = *arg.num().begin();
      if (c == 1 && m.size() == 1) {
        const Gen& gi = genInfo(m[0].first);
        if (gi.kind == GenKind::Kernel && gi.op == KOp::Exp)
          return Expr::fromInt(m[0].second) * (*gi.arg);
      }
    }
  }

  if (op == KOp::Sin || op == KOp::Cos) {
    GenId ag;
    Int w;
    if (findEvenArctan(arg, ag, w)) {
      // Peel two arctangents: sin(X +- 2*arctan(v)) etc., with
      // sin(2*arctan(v)) = 2v/(1+v^2) and cos(2*arctan(v)) = (1-v^2)/(1+v^2).
      const Expr v = *genInfo(ag).arg;
      long sgn = w > 0 ? 1 : -1;
      Expr vv = v * v;
      Expr denom = Expr::fromInt(1) + vv;
      Expr sin2 = Expr::fromInt(2 * sgn) * v / denom;
      Expr cos2 = (Expr::fromInt(1) - vv) / denom;
      Expr rest = arg - Expr::fromInt(2 * sgn) * Expr::fromGen(ag);
      if (op == KOp::Sin)
        return kernel(KOp::Sin, rest) * cos2 + kernel(KOp::Cos, rest) * sin2;
      return kernel(KOp::Cos, rest) * cos2 - kernel(KOp::Sin, rest) * sin2;
    }
    if (arg.isZero())
      return op == KOp::Sin ? Expr() : Expr::fromInt(1);
  }

  // Parity normalization.
  if (exprLeadNegative(arg)) {
    switch (op) {
      case KOp::Sin:
      case KOp::Arctan:
        return -Expr::fromGen(internKernelGen(op, -arg));
      case KOp::Cos:
        return Expr::fromGen(internKernelGen(op, -arg));
      default:
        break;
    }
  }
  return Expr::fromGen(internKernelGen(op, arg));
}

Expr kernelDerivative(KOp op, const Expr& arg) {
  switch (op) {
    case KOp::Exp: return kExp(arg);
    case KOp::Ln: return Expr::fromInt(1) / arg;
    case KOp::Sin: return kCos(arg);
    case KOp::Cos: return -kSin(arg);
    case KOp::Arctan: return Expr::fromInt(1) / (Expr::fromInt(1) + arg * arg);
    case KOp::Sqrt: return Expr::fromInt(1) / (Expr::fromInt(2) * kSqrt(arg));
    case KOp::Tan: break;
  }
  throw std::logic_error("no derivative for this kernel");
}

// ---------------------------------------------------------------------------
// Rewrite of a polynomial with non-canonical kernel powers

static Expr rewritePoly(const Poly& p) {
  Expr acc;
  for (auto& [m, c] : p) {
    if (!termNeedsRewrite(m)) {
      Poly single;
      single.emplace(m, c);
      acc += Expr::make(std::move(single), onePoly());
      continue;
    }
    Expr f = Expr::fromInt(c);
    Expr expArg;
    bool haveExp = false;
    Mono keep;
    for (auto& [g, k] : m) {
      const Gen& gi = genInfo(g);
      if (gi.kind == GenKind::Kernel && gi.op == KOp::Exp) {
        expArg += Expr::fromInt(k) * (*gi.arg);
        haveExp = true;
      } else if (gi.kind == GenKind::Kernel && gi.op == KOp::Cos && k >= 2) {
        Expr s = kSin(*gi.arg);
        f *= (Expr::fromInt(1) - s * s).pow(k / 2);
        if (k % 2) keep.push_back({g, 1});
      } else if (gi.kind == GenKind::Kernel && gi.op == KOp::Sqrt && k >= 2) {
        f *= gi.arg->pow(k / 2);
        if (k % 2) keep.push_back({g, 1});
      } else {
        keep.push_back({g, k});
      }
    }
    if (haveExp) f *= kExp(expArg);
    Poly keepP;
    keepP.emplace(std::move(keep), Int(1));
    acc += f * Expr::make(std::move(keepP), onePoly());
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Derivatives, gen collection, substitution

namespace {

std::set<GenId> topGens(const Expr& e) {
  std::set<GenId> s;
  for (auto& [m, c] : e.num())
    for (auto& [g, k] : m) s.insert(g);
  for (auto& [m, c] : e.den())
    for (auto& [g, k] : m) s.insert(g);
  return s;
}

Poly polyPdAtomic(const Poly& p, GenId v) {
  Poly r;
  for (auto& [m, c] : p) {
    for (size_t i = 0; i < m.size(); ++i) {
      if (m[i].first != v) continue;
      Mono dm;
      for (size_t j = 0; j < m.size(); ++j) {
        if (j == i) {
          if (m[j].second > 1) dm.push_back({m[j].first, m[j].second - 1});
        } else {
          dm.push_back(m[j]);
        }
      }
      polyAddTerm(r, dm, c * m[i].second);
    }
  }
  return r;
}

}  // namespace

Expr pdAtomic(const Expr& e, GenId g) {
  Poly dn = polyPdAtomic(e.num(), g);
  Poly dd = polyPdAtomic(e.den(), g);
  if (dd.empty()) {
    if (dn.empty()) return Expr();
    return Expr::make(std::move(dn), e.den());
  }
  Poly num = polySub(polyMul(dn, e.den()), polyMul(e.num(), dd));
  Poly den = polyMul(e.den(), e.den());
  return Expr::make(std::move(num), std::move(den));
}

Expr pdChain(const Expr& e, GenId g) {
  Expr r = pdAtomic(e, g);
  for (GenId k : topGens(e)) {
    const Gen& gi = genInfo(k);
    if (gi.kind != GenKind::Kernel) continue;
    Expr inner = pdChain(*gi.arg, g);
    if (inner.isZero()) continue;
    r += pdAtomic(e, k) * kernelDerivative(gi.op, *gi.arg) * inner;
  }
  return r;
}

void collectGens(const Expr& e, std::set<GenId>& out) {
  for (GenId g : topGens(e)) {
    if (out.count(g)) continue;
    out.insert(g);
    const Gen& gi = genInfo(g);
    if (gi.kind == GenKind::Kernel) collectGens(*gi.arg, out);
  }
}

std::set<GenId> closureGens(const Expr& e) {
  std::set<GenId> s;
  collectGens(e, s);
  return s;
}

namespace {

Expr evalPolyExpr(const Poly& p, const std::map<GenId, Expr>& genVal) {
  Expr acc;
  std::map<std::pair<GenId, int32_t>, Expr> powCache;
  for (auto& [m, c] : p) {
    Expr term = Expr::fromInt(c);
    for (auto& [g, k] : m) {
      auto key = std::make_pair(g, k);
      auto it = powCache.find(key);
      if (it == powCache.end())
        it = powCache.emplace(key, genVal.at(g).pow(k)).first;
      term *= it->second;
    }
    acc += term;
  }
  return acc;
}

}  // namespace

Expr substitute(const Expr& e, const std::map<GenId, Expr>& map) {
  std::set<GenId> gens = topGens(e);
  std::map<GenId, Expr> genVal;
  bool any = false;
  for (GenId g : gens) {
    const Gen& gi = genInfo(g);
    if (gi.kind == GenKind::Kernel) {
      Expr newArg = substitute(*gi.arg, map);
      if (newArg == *gi.arg) {
        genVal.emplace(g, Expr::fromGen(g));
      } else {
        genVal.emplace(g, kernel(gi.op, newArg));
        any = true;
      }
    } else {
      auto it = map.find(g);
      if (it != map.end()) {
        genVal.emplace(g, it->second);
        any = true;
      } else {
        genVal.emplace(g, Expr::fromGen(g));
      }
    }
  }
  if (!any) return e;
  Expr num = evalPolyExpr(e.num(), genVal);
  Expr den = evalPolyExpr(e.den(), genVal);
  return num / den;
}

// ---------------------------------------------------------------------------
// Numeric evaluation

namespace {

struct RealEvalCtx {
  const std::map<GenId, Real>& vals;
  const EvalGuard& guard;
  std::map<GenId, Real> kernelCache;
  bool ok = true;
};

Real evalPolyReal(const Poly& p, RealEvalCtx& ctx, Real (*genEval)(GenId, RealEvalCtx&));

Real evalGenReal(GenId g, RealEvalCtx& ctx) {
  const Gen& gi = genInfo(g);
  if (gi.kind != GenKind::Kernel) {
    auto it = ctx.vals.find(g);
    if (it == ctx.vals.end())
      throw std::logic_error("unassigned generator in evaluation: " + genStr(g));
    return it->second;
  }
  auto it = ctx.kernelCache.find(g);
  if (it != ctx.kernelCache.end()) return it->second;
  Real num = evalPolyReal(gi.arg->num(), ctx, evalGenReal);
  Real den = evalPolyReal(gi.arg->den(), ctx, evalGenReal);
  if (!ctx.ok) return Real(0);
  if (abs(den) < ctx.guard.domainMargin) {
    ctx.ok = false;
    return Real(0);
  }
  Real a = num / den;
  Real v(0);
  switch (gi.op) {
    case KOp::Exp: v = exp(a); break;
    case KOp::Ln:
      if (a < ctx.guard.domainMargin) {
        ctx.ok = false;
        return Real(0);
      }
      v = log(a);
      break;
    case KOp::Sin: v = sin(a); break;
    case KOp::Cos: v = cos(a); break;
    case KOp::Arctan: v = atan(a); break;
    case KOp::Sqrt:
      if (a < 0) {
        ctx.ok = false;
        return Real(0);
      }
      v = sqrt(a);
      break;
    case KOp::Tan:
      throw std::logic_error("tan generator in canonical form");
  }
  ctx.kernelCache.emplace(g, v);
  return v;
}

Real evalPolyReal(const Poly& p, RealEvalCtx& ctx,
                  Real (*genEval)(GenId, RealEvalCtx&)) {
  Real acc(0);
  for (auto& [m, c] : p) {
    Real term(c);
    for (auto& [g, k] : m) {
      Real base = genEval(g, ctx);
      if (!ctx.ok) return Real(0);
      for (int i = 0; i < k; ++i) term *= base;
    }
    acc += term;
    if (!ctx.ok) return Real(0);
  }
  return acc;
}

}  // namespace

std::optional<Real> evalReal(const Expr& e, const std::map<GenId, Real>& vals,
                             const EvalGuard& guard) {
  RealEvalCtx ctx{vals, guard, {}, true};
  Real num = evalPolyReal(e.num(), ctx, evalGenReal);
  if (!ctx.ok) return std::nullopt;
  Real den = evalPolyReal(e.den(), ctx, evalGenReal);
  if (!ctx.ok) return std::nullopt;
  if (abs(den) < guard.domainMargin) return std::nullopt;
  return num / den;
}

namespace {

struct DblCtx {
  const std::map<GenId, double>& vals;
  std::map<GenId, double> kernelCache;
  bool ok = true;
};

double evalPolyDbl(const Poly& p, DblCtx& ctx);

double evalGenDbl(GenId g, DblCtx& ctx) {
  const Gen& gi = genInfo(g);
  if (gi.kind != GenKind::Kernel) {
    auto it = ctx.vals.find(g);
    if (it == ctx.vals.end())
      throw std::logic_error("unassigned generator in evaluation: " + genStr(g));
    return it->second;
  }
  auto it = ctx.kernelCache.find(g);
  if (it != ctx.kernelCache.end()) return it->second;
  double num = evalPolyDbl(gi.arg->num(), ctx);
  double den = evalPolyDbl(gi.arg->den(), ctx);
  if (!ctx.ok || den == 0) {
    ctx.ok = false;
    return 0;
  }
  double a = num / den;
  double v = 0;
  switch (gi.op) {
    case KOp::Exp: v = std::exp(a); break;
    case KOp::Ln:
      if (a <= 0) {
        ctx.ok = false;
        return 0;
      }
      v = std::log(a);
      break;
    case KOp::Sin: v = std::sin(a); break;
    case KOp::Cos: v = std::cos(a); break;
    case KOp::Arctan: v = std::atan(a); break;
    case KOp::Sqrt:
      if (a < 0) {
        ctx.ok = false;
        return 0;
      }
      v = std::sqrt(a);
      break;
    case KOp::Tan:
      throw std::logic_error("tan generator in canonical form");
  }
  ctx.kernelCache.emplace(g, v);
  return v;
}

double evalPolyDbl(const Poly& p, DblCtx& ctx) {
  double acc = 0;
  for (auto& [m, c] : p) {
    double term = c.convert_to<double>();
    for (auto& [g, k] : m) {
      double base = evalGenDbl(g, ctx);
      if (!ctx.ok) return 0;
      for (int i = 0; i < k; ++i) term *= base;
    }
    acc += term;
  }
  return acc;
}

}  // namespace

std::optional<double> evalDouble(const Expr& e,
                                 const std::map<GenId, double>& vals) {
  DblCtx ctx{vals, {}, true};
  double num = evalPolyDbl(e.num(), ctx);
  if (!ctx.ok) return std::nullopt;
  double den = evalPolyDbl(e.den(), ctx);
  if (!ctx.ok || den == 0) return std::nullopt;
  return num / den;
}

// ---------------------------------------------------------------------------
// Zero testing

unsigned precisionFromEnv() {
  static unsigned cached = [] {
    const char* env = std::getenv("JETKIT_PRECISION");
    if (env) {
      long v = std::strtol(env, nullptr, 10);
      if (v >= 10 && v <= 100000) return static_cast<unsigned>(v);
    }
    return 50u;
  }();
  return cached;
}

ZeroResult isZero(const Expr& e, const ZeroOptions& opt) {
  ZeroResult res;
  if (e.isZero()) {
    res.verdict = Verdict::Pass;
    return res;
  }
  if (e.isRational()) {
    res.verdict = Verdict::Fail;
    res.witness = "nonzero rational constant " + e.str();
    return res;
  }
  unsigned digits = opt.digits ? opt.digits : precisionFromEnv();
  Real::default_precision(digits);

  std::vector<GenId> baseGens;
  {
    std::set<GenId> closure = closureGens(e);
    for (GenId g : closure)
      if (genInfo(g).kind != GenKind::Kernel) baseGens.push_back(g);
    std::sort(baseGens.begin(), baseGens.end(), [](GenId a, GenId b) {
      return genInfo(a).key < genInfo(b).key;
    });
  }

  std::mt19937_64 rng(opt.seed);
  EvalGuard guard{opt.domainMargin};
  Real threshold(opt.threshold);
  while (res.attempts < opt.maxAttempts && res.validDraws < opt.draws) {
    ++res.attempts;
    std::map<GenId, Real> vals;
    std::map<GenId, Rat> ratVals;
    for (GenId g : baseGens) {
      // Random rational of magnitude in [1/4, 4], numerator and denominator
      // bounded by 99.
      long n, d;
      do {
        n = 1 + static_cast<long>(rng() % 99);
        d = 1 + static_cast<long>(rng() % 99);
      } while (4 * n < d || n > 4 * d);
      bool negative = rng() & 1;
      Rat r(negative ? -n : n, d);
      ratVals[g] = r;
      vals[g] = Real(r);
    }
    bool valid = true;
    for (auto& [a, b] : opt.distinct) {
      if (!ratVals.count(a) || !ratVals.count(b)) continue;
      Rat diff = ratVals[a] - ratVals[b];
      if (diff < 0) diff = -diff;
      if (diff < Rat(1, 1000)) valid = false;
    }
    if (!valid) continue;
    auto val = evalReal(e, vals, guard);
    if (!val) continue;
    Real av = abs(*val);
    if (av < threshold) {
      ++res.validDraws;
    } else {
      res.verdict = Verdict::Fail;
      std::ostringstream w;
      for (GenId g : baseGens) {
        Rat r = ratVals[g];
        w << genStr(g) << "=" << r << " ";
      }
      w << "-> " << av.str(8);
      res.witness = w.str();
      return res;
    }
  }
  res.verdict =
      res.validDraws >= opt.draws ? Verdict::ProbabilisticPass : Verdict::Undecidable;
  if (res.verdict == Verdict::Undecidable)
    res.witness = "no admissible random assignment found";
  return res;
}

}  // namespace jetkit
