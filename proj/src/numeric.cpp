#include "jetkit/numeric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace jetkit {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kBlowupCap = 1e6;
constexpr double kSeedTol = 1e-6;
constexpr double kCrossTol = 1e-5;

struct Stencil {
  std::vector<double> w;
  int r = 0;
};

// Central differences with 4th-order truncation error, orders 1..4.
const Stencil& stencil(int order) {
  static const Stencil tab[5] = {
      {{1.0}, 0},
      {{1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12}, 2},
      {{-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12}, 2},
      {{1.0 / 8, -1.0, 13.0 / 8, 0.0, -13.0 / 8, 1.0, -1.0 / 8}, 3},
      {{-1.0 / 6, 2.0, -13.0 / 2, 28.0 / 3, -13.0 / 2, 2.0, -1.0 / 6}, 3}};
  if (order < 0 || order > 4)
    throw std::invalid_argument(
        "finite differences cover derivative orders up to 4, got " +
        std::to_string(order));
  return tab[order];
}

// x-derivative of the given order for every grid line; NaN outside the
// stencil's reach, NaN taps propagate.
std::vector<double> fdAxisX(const std::vector<double>& v, int nx, int nt,
                            double hx, int order) {
  if (order == 0) return v;
  const Stencil& st = stencil(order);
  std::vector<double> out(v.size(), kNan);
  if (nx < 2 * st.r || hx == 0) return out;
  double scale = 1;
  for (int k = 0; k < order; ++k) scale *= hx;
  int w = static_cast<int>(st.w.size());
  for (int i = st.r; i <= nx - st.r; ++i)
    for (int j = 0; j <= nt; ++j) {
      double acc = 0;
      for (int k = 0; k < w; ++k)
        acc += st.w[k] * v[(i - st.r + k) * (nt + 1) + j];
      out[i * (nt + 1) + j] = acc / scale;
    }
  return out;
}

std::vector<double> fdAxisT(const std::vector<double>& v, int nx, int nt,
                            double ht, int order) {
  if (order == 0) return v;
  const Stencil& st = stencil(order);
  std::vector<double> out(v.size(), kNan);
  if (nt < 2 * st.r || ht == 0) return out;
  double scale = 1;
  for (int k = 0; k < order; ++k) scale *= ht;
  int w = static_cast<int>(st.w.size());
  for (int i = 0; i <= nx; ++i)
    for (int j = st.r; j <= nt - st.r; ++j) {
      double acc = 0;
      for (int k = 0; k < w; ++k) acc += st.w[k] * v[i * (nt + 1) + j - st.r + k];
      out[i * (nt + 1) + j] = acc / scale;
    }
  return out;
}

// Shared evaluation machinery over one field: resolves generators to node
// coordinates, parameter values, or (finite-difference) columns, and caches
// the derived columns.
struct GridEval {
  const EqSystem& s;
  const GridField& g;
  std::map<std::tuple<std::string, int, int>, std::vector<double>> fdCache;

  const std::vector<double>& column(const std::string& name) {
    auto it = g.values.find(name);
    if (it == g.values.end())
      throw std::invalid_argument("grid carries no column for '" + name + "'");
    return it->second;
  }

  const std::vector<double>& jetColumn(const std::string& var, int a, int b) {
    if (a == 0 && b == 0) return column(var);
    auto key = std::make_tuple(var, a, b);
    auto it = fdCache.find(key);
    if (it != fdCache.end()) return it->second;
    std::vector<double> d = fdAxisT(fdAxisX(column(var), g.nx, g.nt, g.hx, a),
                                    g.nx, g.nt, g.ht, b);
    return fdCache.emplace(key, std::move(d)).first->second;
  }

  std::vector<double> eval(const Expr& e) {
    enum class Src { X, T, Fixed, Column };
    struct Binding {
      GenId id;
      Src src;
      double value = 0;
      const std::vector<double>* col = nullptr;
    };
    std::vector<Binding> binds;
    for (GenId gid : closureGens(e)) {
      const Gen& gi = genInfo(gid);
      switch (gi.kind) {
        case GenKind::Kernel:
          break;
        case GenKind::Sym:
          if (gi.indep) {
            if (gi.name == s.ix())
              binds.push_back({gid, Src::X});
            else if (gi.name == s.it())
              binds.push_back({gid, Src::T});
            else
              throw std::invalid_argument("expression mentions coordinate '" +
                                          gi.name + "' unknown to the system");
          } else {
            auto it = g.params.find(gi.name);
            if (it == g.params.end())
              throw std::invalid_argument(
                  "grid carries no value for parameter '" + gi.name + "'");
            binds.push_back({gid, Src::Fixed, it->second});
          }
          break;
        case GenKind::Jet:
          binds.push_back(
              {gid, Src::Column, 0, &jetColumn(gi.name, gi.a, gi.b)});
          break;
        case GenKind::Nonlocal:
          binds.push_back({gid, Src::Column, 0, &column(gi.name)});
          break;
      }
    }
    std::vector<double> out(g.nodes(), kNan);
    std::map<GenId, double> vals;
    for (const Binding& b : binds)
      if (b.src == Src::Fixed) vals[b.id] = b.value;
    for (int i = 0; i <= g.nx; ++i)
      for (int j = 0; j <= g.nt; ++j) {
        int id = g.idx(i, j);
        for (const Binding& b : binds) switch (b.src) {
            case Src::X: vals[b.id] = g.x(i); break;
            case Src::T: vals[b.id] = g.t(j); break;
            case Src::Column: vals[b.id] = (*b.col)[id]; break;
            case Src::Fixed: break;
          }
        auto r = evalDouble(e, vals);
        out[id] = r ? *r : kNan;
      }
    return out;
  }
};

double axisStep(double lo, double hi, int n, const char* which) {
  if (n < 0)
    throw std::invalid_argument(std::string("negative step count along ") +
                                which);
  if (n == 0) {
    if (hi != lo)
      throw std::invalid_argument(
          std::string("zero steps need a collapsed range along ") + which);
    return 0;
  }
  if (!(hi > lo))
    throw std::invalid_argument(std::string("empty range along ") + which);
  return (hi - lo) / n;
}

int baseNode(double v, double lo, double h, int n, const char* which) {
  long i = 0;
  if (n > 0) {
    double d = (v - lo) / h;
    i = std::lround(d);
    if (std::abs(d - i) > 1e-9 * (1 + std::abs(d)))
      throw std::invalid_argument(
          std::string("base point is not a grid node along ") + which);
  } else if (std::abs(v - lo) > 1e-12 * (1 + std::abs(lo))) {
    throw std::invalid_argument(
        std::string("base point is not a grid node along ") + which);
  }
  if (i < 0 || i > n)
    throw std::invalid_argument(std::string("base point outside the grid along ") +
                                which);
  return static_cast<int>(i);
}

void initGeometry(GridField& f, const GridSpec& grid) {
  f.hx = axisStep(grid.xmin, grid.xmax, grid.nx, "x");
  f.ht = axisStep(grid.tmin, grid.tmax, grid.nt, "t");
  f.xmin = grid.xmin;
  f.tmin = grid.tmin;
  f.nx = grid.nx;
  f.nt = grid.nt;
}

// Fritsch-Carlson monotone cubic slopes; endpoints take the secant slope.
std::vector<double> pchipSlopes(const std::vector<double>& x,
                                const std::vector<double>& y) {
  size_t n = x.size();
  std::vector<double> h(n - 1), d(n - 1), m(n);
  for (size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    d[i] = (y[i + 1] - y[i]) / h[i];
  }
  m[0] = d[0];
  m[n - 1] = d[n - 2];
  for (size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0) {
      m[i] = 0;
    } else {
      double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
      m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
  }
  return m;
}

double pchipEval(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& m, double q) {
  size_t i = std::upper_bound(x.begin(), x.end(), q) - x.begin();
  i = i == 0 ? 0 : i - 1;
  if (i > x.size() - 2) i = x.size() - 2;
  double h = x[i + 1] - x[i], s = (q - x[i]) / h;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  double h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s);
  double h11 = s * s * (s - 1);
  return h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1];
}

}  // namespace

IntegrationReport integrateCovering(const EqSystem& s,
                                    const std::map<std::string, Expr>& seed,
                                    const std::map<std::string, double>& params,
                                    const GridSpec& grid,
                                    const std::map<std::string, double>& ic) {
  IntegrationReport rep;
  GridField& f = rep.field;
  initGeometry(f, grid);
  int i0 = baseNode(grid.x0, grid.xmin, f.hx, grid.nx, "x");
  int j0 = baseNode(grid.t0, grid.tmin, f.ht, grid.nt, "t");

  for (const ParamDecl& p : s.params())
    if (!params.count(p.name))
      throw std::invalid_argument("missing value for parameter '" + p.name +
                                  "'");
  for (const std::string& d : s.deps())
    if (!seed.count(d))
      throw std::invalid_argument("missing seed for variable '" + d + "'");
  for (const auto& [var, e] : seed)
    if (!s.hasDep(var))
      throw std::invalid_argument("seed names unknown variable '" + var + "'");
  for (const auto& [nl, v] : ic)
    if (!s.hasNonlocal(nl))
      throw std::invalid_argument("initial values name unknown nonlocal '" +
                                  nl + "'");
  const std::vector<std::string>& nls = s.nonlocals();
  for (const std::string& n : nls) {
    if (!ic.count(n))
      throw std::invalid_argument("missing initial value for nonlocal '" + n +
                                  "'");
    for (int dir = 0; dir < 2; ++dir)
      if (!s.coveringRule(n, dir))
        throw std::invalid_argument("nonlocal '" + n +
                                    "' lacks a covering rule along " +
                                    (dir == 0 ? s.ix() : s.it()));
  }

  GenId gx = genSym(s.ix(), true), gt = genSym(s.it(), true);
  for (const auto& [var, e] : seed)
    for (GenId gid : closureGens(e)) {
      const Gen& gi = genInfo(gid);
      if (gi.kind == GenKind::Kernel) continue;
      bool ok = gi.kind == GenKind::Sym &&
                (gid == gx || gid == gt ||
                 (!gi.indep && params.count(gi.name)));
      if (!ok)
        throw std::invalid_argument(
            "seed for '" + var + "' mentions " + genStr(gid) +
            "; closed forms may use only the coordinates and parameters");
    }

  // Exact derivatives of the closed-form seed, memoized per (var, a, b).
  std::map<std::tuple<std::string, int, int>, Expr> sd;
  auto seedD = [&](auto&& self, const std::string& var, int a,
                   int b) -> const Expr& {
    auto key = std::make_tuple(var, a, b);
    auto it = sd.find(key);
    if (it != sd.end()) return it->second;
    Expr v;
    if (a == 0 && b == 0)
      v = seed.at(var);
    else if (a > 0)
      v = pdChain(self(self, var, a - 1, b), gx);
    else
      v = pdChain(self(self, var, a, b - 1), gt);
    return sd.emplace(key, std::move(v)).first->second;
  };

  int m = static_cast<int>(nls.size());
  std::vector<GenId> nlIds;
  for (const std::string& n : nls) nlIds.push_back(genNonlocal(n));
  std::vector<std::array<Expr, 2>> covRhs(m);
  std::set<GenId> jetGens;
  auto scanJets = [&](const Expr& e) {
    for (GenId gid : closureGens(e)) {
      const Gen& gi = genInfo(gid);
      if (gi.kind == GenKind::Jet) {
        if (!s.hasDep(gi.name))
          throw std::invalid_argument("rule mentions jet of unknown variable '" +
                                      gi.name + "'");
        jetGens.insert(gid);
      }
      if (gi.kind == GenKind::Nonlocal && !s.hasNonlocal(gi.name))
        throw std::invalid_argument("rule mentions unknown nonlocal '" +
                                    gi.name + "'");
    }
  };
  for (int k = 0; k < m; ++k)
    for (int dir = 0; dir < 2; ++dir) {
      covRhs[k][dir] = s.coveringRule(nls[k], dir)->rhs;
      scanJets(covRhs[k][dir]);
    }
  for (const Rule& r : s.rules()) scanJets(r.rhs);

  std::map<GenId, double> vals;
  for (const auto& [name, v] : params) vals[genSym(name, false)] = v;
  vals[gx] = 0;
  vals[gt] = 0;
  for (GenId gid : jetGens) vals[gid] = 0;
  for (GenId gid : nlIds) vals[gid] = 0;

  // Seed jets at a point; false on a domain error.
  auto setPoint = [&](double xv, double tv) {
    vals[gx] = xv;
    vals[gt] = tv;
    for (GenId gid : jetGens) {
      const Gen& gi = genInfo(gid);
      auto r = evalDouble(seedD(seedD, gi.name, gi.a, gi.b), vals);
      if (!r || !std::isfinite(*r)) return false;
      vals[gid] = *r;
    }
    return true;
  };

  auto rhsAt = [&](int dir, double xv, double tv, const std::vector<double>& y,
                   std::vector<double>& dy) {
    if (!setPoint(xv, tv)) return false;
    for (int k = 0; k < m; ++k) vals[nlIds[k]] = y[k];
    for (int k = 0; k < m; ++k) {
      auto r = evalDouble(covRhs[k][dir], vals);
      if (!r || !std::isfinite(*r)) return false;
      dy[k] = *r;
    }
    return true;
  };

  std::vector<double> k1(m), k2(m), k3(m), k4(m), stage(m);
  // One RK4 step from (xv, tv); false truncates the line: a stage failed,
  // the state left [-1e6, 1e6], or a component jumped by more than
  // max(10, |y|/2) in a single step.
  auto rk4 = [&](int dir, double xv, double tv, double h,
                 std::vector<double>& y) {
    double xm = xv, tm = tv, xe = xv, te = tv;
    (dir == 0 ? xm : tm) += h / 2;
    (dir == 0 ? xe : te) += h;
    if (!rhsAt(dir, xv, tv, y, k1)) return false;
    for (int k = 0; k < m; ++k) stage[k] = y[k] + h / 2 * k1[k];
    if (!rhsAt(dir, xm, tm, stage, k2)) return false;
    for (int k = 0; k < m; ++k) stage[k] = y[k] + h / 2 * k2[k];
    if (!rhsAt(dir, xm, tm, stage, k3)) return false;
    for (int k = 0; k < m; ++k) stage[k] = y[k] + h * k3[k];
    if (!rhsAt(dir, xe, te, stage, k4)) return false;
    bool ok = true;
    for (int k = 0; k < m; ++k) {
      double yn = y[k] + h / 6 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
      if (!std::isfinite(yn) || std::abs(yn) > kBlowupCap ||
          std::abs(yn - y[k]) > std::max(10.0, 0.5 * std::abs(y[k])))
        ok = false;
      y[k] = yn;
    }
    return ok;
  };

  // Seed spot-check against the base rules at 5 interior probes; rules whose
  // right side involves nonlocals cannot be checked from the seed alone and
  // are skipped.
  {
    double worst = 0;
    bool any = false, failed = false;
    for (const Rule& r : s.rules()) {
      bool usesNl = false;
      for (GenId gid : closureGens(r.rhs))
        if (genInfo(gid).kind == GenKind::Nonlocal) usesNl = true;
      if (usesNl) continue;
      const Expr& lead = seedD(seedD, r.var, r.a, r.b);
      for (int k = 1; k <= 5; ++k) {
        double xv = grid.xmin + k * (grid.xmax - grid.xmin) / 6;
        double tv = grid.tmin + k * (grid.tmax - grid.tmin) / 6;
        if (!setPoint(xv, tv)) {
          failed = true;
          continue;
        }
        auto lv = evalDouble(lead, vals);
        auto rv = evalDouble(r.rhs, vals);
        if (!lv || !rv || !std::isfinite(*lv) || !std::isfinite(*rv)) {
          failed = true;
          continue;
        }
        worst = std::max(worst, std::abs(*lv - *rv));
        any = true;
      }
    }
    rep.seedResidual = any ? worst : failed ? kNan : 0.0;
    rep.seedOk = any ? worst < kSeedTol : !failed;
  }

  f.params = params;
  for (const std::string& d : s.deps()) f.vars.push_back(d);
  for (const std::string& n : nls) f.vars.push_back(n);
  int N = f.nodes();
  for (const std::string& v : f.vars) f.values[v].assign(N, kNan);

  for (const std::string& d : s.deps()) {
    std::vector<double>& col = f.values[d];
    const Expr& e = seed.at(d);
    for (int i = 0; i <= f.nx; ++i)
      for (int j = 0; j <= f.nt; ++j) {
        vals[gx] = f.x(i);
        vals[gt] = f.t(j);
        auto r = evalDouble(e, vals);
        col[f.idx(i, j)] = r && std::isfinite(*r) ? *r : kNan;
      }
  }

  std::vector<double> y0(m);
  for (int k = 0; k < m; ++k) y0[k] = ic.at(nls[k]);
  bool icOk = true;
  for (double v : y0)
    if (!std::isfinite(v) || std::abs(v) > kBlowupCap) icOk = false;

  // t-line through the base point, both directions.
  std::vector<std::optional<std::vector<double>>> tstate(f.nt + 1);
  if (icOk) {
    tstate[j0] = y0;
    std::vector<double> y = y0;
    for (int j = j0; j < f.nt; ++j) {
      if (!rk4(1, grid.x0, f.t(j), f.ht, y)) break;
      tstate[j + 1] = y;
    }
    y = y0;
    for (int j = j0; j > 0; --j) {
      if (!rk4(1, grid.x0, f.t(j), -f.ht, y)) break;
      tstate[j - 1] = y;
    }
  }

  // x-lines from every reached t-node, both directions.
  auto writeNode = [&](int i, int j, const std::vector<double>& y) {
    for (int k = 0; k < m; ++k) f.values[nls[k]][f.idx(i, j)] = y[k];
  };
  for (int j = 0; j <= f.nt; ++j) {
    if (!tstate[j]) continue;
    std::vector<double> y = *tstate[j];
    writeNode(i0, j, y);
    for (int i = i0; i < f.nx; ++i) {
      if (!rk4(0, f.x(i), f.t(j), f.hx, y)) break;
      writeNode(i + 1, j, y);
    }
    y = *tstate[j];
    for (int i = i0; i > 0; --i) {
      if (!rk4(0, f.x(i), f.t(j), -f.hx, y)) break;
      writeNode(i - 1, j, y);
    }
  }

  // Flatness witness: x-line first, then a t-line up to the top edge, at 5
  // probe abscissae between the base point and the right edge.
  {
    double worst = 0;
    bool any = false;
    if (icOk) {
      for (int k = 1; k <= 5; ++k) {
        int i = i0 + static_cast<int>(std::lround(0.2 * k * (f.nx - i0)));
        std::vector<double> y = y0;
        bool ok = true;
        for (int q = i0; q < i && ok; ++q)
          ok = rk4(0, f.x(q), grid.t0, f.hx, y);
        for (int j = j0; j < f.nt && ok; ++j)
          ok = rk4(1, f.x(i), f.t(j), f.ht, y);
        if (!ok) continue;
        double d = 0;
        for (int kk = 0; kk < m && ok; ++kk) {
          double gv = f.values[nls[kk]][f.idx(i, f.nt)];
          if (!std::isfinite(gv))
            ok = false;
          else
            d = std::max(d, std::abs(y[kk] - gv));
        }
        if (ok) {
          worst = std::max(worst, d);
          any = true;
        }
      }
    }
    rep.crossError = any ? worst : 0.0;
    rep.crossConsistent = rep.crossError < kCrossTol;
  }

  for (int n = 0; n < N; ++n) {
    bool bad = false;
    for (const std::string& nl : nls)
      if (!std::isfinite(f.values[nl][n])) bad = true;
    if (bad) ++rep.maskedCells;
  }
  return rep;
}

std::vector<double> evaluateOnGrid(const Expr& e, const EqSystem& s,
                                   const GridField& g) {
  GridEval ev{s, g, {}};
  return ev.eval(e);
}

GridField applyMorphismNumeric(const Morphism& m, const GridField& g) {
  const EqSystem& s = m.source();
  GridEval ev{s, g, {}};
  const auto& images = m.frame().images();
  GridField out;
  out.xmin = g.xmin;
  out.tmin = g.tmin;
  out.hx = g.hx;
  out.ht = g.ht;
  out.nx = g.nx;
  out.nt = g.nt;
  out.params = g.params;
  for (const auto& [name, e] : images) out.vars.push_back(name);

  bool idX = m.frame().xi1() == s.coord(0);
  bool idT = m.frame().xi2() == s.coord(1);
  if (idX && idT) {
    for (const auto& [name, e] : images) out.values[name] = ev.eval(e);
    return out;
  }
  if (!idT)
    throw std::invalid_argument(
        "numeric image supports only frames that fix the second coordinate");

  std::vector<double> xp = ev.eval(m.frame().xi1());
  std::vector<std::vector<double>> imv;
  for (const auto& [name, e] : images) imv.push_back(ev.eval(e));
  int nk = static_cast<int>(images.size());
  for (const auto& [name, e] : images) out.values[name].assign(g.nodes(), kNan);

  std::vector<double> xs;
  std::vector<std::vector<double>> ys(nk);
  for (int j = 0; j <= g.nt; ++j) {
    xs.clear();
    for (std::vector<double>& v : ys) v.clear();
    for (int i = 0; i <= g.nx; ++i) {
      int id = g.idx(i, j);
      bool use = std::isfinite(xp[id]);
      for (int q = 0; q < nk && use; ++q) use = std::isfinite(imv[q][id]);
      if (!use) continue;
      xs.push_back(xp[id]);
      for (int q = 0; q < nk; ++q) ys[q].push_back(imv[q][id]);
    }
    for (size_t p = 1; p < xs.size(); ++p)
      if (!(xs[p] > xs[p - 1]))
        throw std::runtime_error(
            "image abscissae are not strictly increasing along a grid line");
    if (xs.size() < 2) continue;
    for (int q = 0; q < nk; ++q) {
      std::vector<double> slope = pchipSlopes(xs, ys[q]);
      std::vector<double>& col = out.values[images[q].first];
      for (int i = 0; i <= g.nx; ++i) {
        double xq = g.x(i);
        if (xq < xs.front() || xq > xs.back()) continue;
        col[g.idx(i, j)] = pchipEval(xs, ys[q], slope, xq);
      }
    }
  }
  return out;
}

double gridResidual(const EqSystem& s, const GridField& g) {
  GridEval ev{s, g, {}};
  double worst = 0;
  bool any = false;
  auto account = [&](const std::vector<double>& lead,
                     const std::vector<double>& rhs) {
    for (size_t n = 0; n < lead.size(); ++n) {
      double d = std::abs(lead[n] - rhs[n]);
      if (!std::isfinite(d)) continue;
      worst = std::max(worst, d);
      any = true;
    }
  };
  for (const Rule& r : s.rules()) {
    const std::vector<double>& lead = ev.jetColumn(r.var, r.a, r.b);
    account(lead, ev.eval(r.rhs));
  }
  for (const CoveringRule& c : s.coveringRules()) {
    const std::vector<double>& col = ev.column(c.nl);
    std::vector<double> lead = c.dir == 0
                                   ? fdAxisX(col, g.nx, g.nt, g.hx, 1)
                                   : fdAxisT(col, g.nx, g.nt, g.ht, 1);
    account(lead, ev.eval(c.rhs));
  }
  return any ? worst : kNan;
}

GridField sampleExpressions(
    const GridSpec& grid,
    const std::vector<std::pair<std::string, Expr>>& fields,
    const std::map<std::string, double>& params, const std::string& ix,
    const std::string& it) {
  GridField f;
  initGeometry(f, grid);
  f.params = params;
  GenId gx = genSym(ix, true), gt = genSym(it, true);
  std::map<GenId, double> vals;
  for (const auto& [name, v] : params) vals[genSym(name, false)] = v;
  for (const auto& [var, e] : fields)
    for (GenId gid : closureGens(e)) {
      const Gen& gi = genInfo(gid);
      if (gi.kind == GenKind::Kernel) continue;
      bool ok = gi.kind == GenKind::Sym &&
                (gid == gx || gid == gt ||
                 (!gi.indep && params.count(gi.name)));
      if (!ok)
        throw std::invalid_argument("closed form for '" + var + "' mentions " +
                                    genStr(gid) +
                                    "; only coordinates and parameters sample");
    }
  for (const auto& [var, e] : fields) {
    f.vars.push_back(var);
    std::vector<double>& col = f.values[var];
    col.assign(f.nodes(), kNan);
    for (int i = 0; i <= f.nx; ++i)
      for (int j = 0; j <= f.nt; ++j) {
        vals[gx] = f.x(i);
        vals[gt] = f.t(j);
        auto r = evalDouble(e, vals);
        col[f.idx(i, j)] = r && std::isfinite(*r) ? *r : kNan;
      }
  }
  return f;
}

void writeCsv(std::ostream& os, const GridField& g) {
  os << "x,t";
  for (const std::string& v : g.vars) os << ',' << v;
  os << '\n';
  char buf[40];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (int i = 0; i <= g.nx; ++i)
    for (int j = 0; j <= g.nt; ++j) {
      emit(g.x(i));
      os << ',';
      emit(g.t(j));
      for (const std::string& v : g.vars) {
        os << ',';
        emit(g.values.at(v)[g.idx(i, j)]);
      }
      os << '\n';
    }
}

std::string csvString(const GridField& g) {
  std::ostringstream os;
  writeCsv(os, g);
  return os.str();
}

}  // namespace jetkit
