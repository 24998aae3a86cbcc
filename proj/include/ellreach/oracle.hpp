#ifndef ELLREACH_ORACLE_HPP
#define ELLREACH_ORACLE_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "ellreach/ellipsoid.hpp"
#include "ellreach/ltv.hpp"
#include "ellreach/reach.hpp"

namespace ellreach {

using Point2 = std::array<double, 2>;

struct Polygon {
    std::vector<Point2> vertices; // counterclockwise
};

/// Signed shoelace area: positive for counterclockwise ordering.
double polygon_area(const Polygon& poly);

bool polygon_contains(const Polygon& poly, const Point2& pt);

/// Distance from pt to the polygon outline (zero on the outline).
double polygon_boundary_distance(const Polygon& poly, const Point2& pt);

struct Box2 {
    Point2 lo{-2.0, -2.0};
    Point2 hi{2.0, 2.0};
};

/// max over the input ellipsoid of <-lam, A(t)x + B(t)u>:
/// <-lam, A(t)x + B(t)p> + ||P^{1/2} B^T(t) lam||.
double hamiltonian_ltv(double t, const Vector& x, const Vector& lam, const ReachProblem& prob);

/// Boundary of the backward reachable set at time t, traced by extremal
/// state/costate trajectories started from n_dirs uniformly spread terminal
/// boundary directions. Vertices ordered by terminal angle (counterclockwise
/// for these convex sets). 2-D only.
Polygon pmp_boundary_polygon(const ReachProblem& prob, double t, int n_dirs, double dt);

/// Cell-count area of { family_value <= 0 } over a resolution^2 grid of cell
/// centers. 2-D only; deterministic for fixed resolution.
double family_area(const EllipsoidFamily& family, const Box2& box, int resolution);

/// Value function fields on a square node grid, stored at selected times
/// (descending, terminal slice first).
struct GridSolution {
    Box2 box;
    int resolution = 0; // nodes per axis
    std::vector<double> times;
    std::vector<std::vector<double>> values; // [time][ix + resolution*iy]
    bool box_too_small = false;

    double dx() const { return (box.hi[0] - box.lo[0]) / (resolution - 1); }
    double dy() const { return (box.hi[1] - box.lo[1]) / (resolution - 1); }

    std::size_t time_index(double t) const; // TimeNotStored when absent
    double value_at(std::size_t ti, double x, double y) const;
    std::array<double, 2> gradient_at(std::size_t ti, double x, double y) const;
};

/// First-order Lax-Friedrichs solve of the terminal-value equation
/// v_t = H(t, x, grad v), v(T, .) = terminal quadratic, marched from T down
/// to the earliest requested store time. Central gradients plus per-axis
/// dissipation bounded by max |dH/dlambda| over the box; time step
/// cfl * min(dx, dy) / sum(alpha). 2-D only.
GridSolution grid_hjb_solve(const ReachProblem& prob, const Box2& box, int resolution, double cfl,
                            std::vector<double> t_store = {});

/// Area of { v(t, .) <= 0 } with fractional boundary cells from linear
/// interpolation along cell edges.
double grid_sublevel_area(const GridSolution& sol, double t);

/// Zero-crossing points of the stored field along cell edges.
std::vector<Point2> grid_zero_level_points(const GridSolution& sol, double t);

struct ContainmentReport {
    int n_samples = 0;
    int n_inside = 0;
    double fraction = 0.0;
    double worst_violation = 0.0; // largest outside margin observed
};

/// Under families: fraction of union-boundary samples lying inside the
/// reference. Over families: fraction of reference-boundary samples lying
/// inside the intersection (band `over_band`).
ContainmentReport containment_report(const ApproxFamily& family, const Polygon& reference,
                                     double t, int n_samples, double over_band = 1e-6);
ContainmentReport containment_report(const ApproxFamily& family, const GridSolution& reference,
                                     double t, int n_samples, double over_band = 1e-6);

/// Closed polyline approximating the ellipsoid outline (2-D only).
std::vector<Point2> ellipse_polyline(const Ellipsoid& e, int segments);

} // namespace ellreach

#endif
