#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "jetkit/morphism.hpp"
#include "jetkit/system.hpp"

namespace jetkit {

// Rectangular sampling window together with the integration base point.
// Node counts are nx+1 and nt+1; a step count of zero collapses that axis to
// the single abscissa of its lower bound.  The base point (x0, t0) must lie
// on a grid node.
struct GridSpec {
  double xmin = 0, xmax = 0;
  double tmin = 0, tmax = 0;
  int nx = 0, nt = 0;
  double x0 = 0, t0 = 0;
};

// Sampled field on a rectangular grid: one column of doubles per variable,
// flattened x-major (node (i, j) at index i*(nt+1)+j).  NaN marks a masked
// cell; masking propagates through every grid operation.
struct GridField {
  double xmin = 0, tmin = 0;
  double hx = 0, ht = 0;
  int nx = 0, nt = 0;
  std::map<std::string, double> params;
  std::vector<std::string> vars;  // column order for CSV export
  std::map<std::string, std::vector<double>> values;

  int idx(int i, int j) const { return i * (nt + 1) + j; }
  int nodes() const { return (nx + 1) * (nt + 1); }
  double x(int i) const { return xmin + i * hx; }
  double t(int j) const { return tmin + j * ht; }
};

// Outcome of a covering integration.  seedOk reports the closed-form seed
// spot-check against the base rules (exact symbolic derivatives at 5 probe
// points, tolerance 1e-6); crossConsistent reports the path-swap flatness
// witness (x-line first instead of t-line first, compared at 5 probe nodes,
// tolerance 1e-5).  Neither flag aborts the integration.
struct IntegrationReport {
  GridField field;
  bool seedOk = false;
  double seedResidual = 0;  // worst |lead - rhs| of the seed at the probes
  bool crossConsistent = false;
  double crossError = 0;  // worst path-swap disagreement at the probes
  long maskedCells = 0;   // nodes where at least one nonlocal is masked
};

// Integrates the covering ODEs of s over the grid with classical fixed-step
// RK4: the t-rules along the t-line through (x0, t0), then the x-rules along
// every t-node's x-line, both directions from the base point.  seed maps
// every dependent variable to a closed form in the coordinates and
// parameters; ic gives each nonlocal's value at the base point.  Lines are
// truncated and masked past a blow-up (non-finite state, magnitude above
// 1e6, or a per-step jump above max(10, |y|/2), the jump guard catching
// steps that cross a pole unresolved).  The field holds the seeded dependent
// variables followed by the integrated nonlocals.
IntegrationReport integrateCovering(const EqSystem& s,
                                    const std::map<std::string, Expr>& seed,
                                    const std::map<std::string, double>& params,
                                    const GridSpec& grid,
                                    const std::map<std::string, double>& ic);

// Pointwise evaluation of an expression on the extended variables of s over
// the grid: coordinates from the node position, parameters from the field,
// order-zero jets and nonlocals from their columns, higher jets by central
// finite differences (4th-order-accurate stencils, derivative orders up to
// 4).  Cells outside a stencil's reach, masked inputs, and domain errors
// evaluate to NaN.
std::vector<double> evaluateOnGrid(const Expr& e, const EqSystem& s,
                                   const GridField& g);

// Applies the morphism pointwise: every image expression is evaluated over
// the source field, giving one column per image in declaration order.  When
// the frame is the identity the geometry is kept as is.  A frame moving the
// first coordinate (the second must stay fixed) yields scattered abscissae;
// each grid line is resampled onto the original nodes by monotone cubic
// interpolation, NaN outside the image hull.  Throws if the image abscissae
// are not strictly increasing along some line.
GridField applyMorphismNumeric(const Morphism& m, const GridField& g);

// Finite-difference residual of the field against every rule and covering
// rule of s: max |lead - rhs| over the cells where both sides evaluate.
// NaN when no cell does.
double gridResidual(const EqSystem& s, const GridField& g);

// Samples closed forms in the coordinates and parameters onto a grid.
GridField sampleExpressions(
    const GridSpec& grid,
    const std::vector<std::pair<std::string, Expr>>& fields,
    const std::map<std::string, double>& params, const std::string& ix = "x",
    const std::string& it = "t");

// CSV export, header "x,t,<vars...>", one row per node in x-major order;
// masked cells print as nan.
void writeCsv(std::ostream& os, const GridField& g);
std::string csvString(const GridField& g);

}  // namespace jetkit
