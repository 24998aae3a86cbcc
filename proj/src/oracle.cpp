#include "ellreach/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ellreach/parallel.hpp"

namespace ellreach {

double polygon_area(const Polygon& poly) {
    const std::size_t n = poly.vertices.size();
    if (n < 3)
        throw Error(Errc::DegeneratePolygon, "polygon area needs at least 3 vertices");
    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = poly.vertices[i];
        const Point2& b = poly.vertices[(i + 1) % n];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    return 0.5 * twice;
}

bool polygon_contains(const Polygon& poly, const Point2& pt) {
    const std::size_t n = poly.vertices.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2& a = poly.vertices[i];
        const Point2& b = poly.vertices[j];
        if ((a[1] > pt[1]) != (b[1] > pt[1])) {
            const double xcross = a[0] + (pt[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if (pt[0] < xcross) inside = !inside;
        }
    }
    return inside;
}

double polygon_boundary_distance(const Polygon& poly, const Point2& pt) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = poly.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = poly.vertices[i];
        const Point2& b = poly.vertices[(i + 1) % n];
        const double ex = b[0] - a[0], ey = b[1] - a[1];
        const double len2 = ex * ex + ey * ey;
        double u = len2 > 0.0 ? ((pt[0] - a[0]) * ex + (pt[1] - a[1]) * ey) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        const double dx = pt[0] - (a[0] + u * ex), dy = pt[1] - (a[1] + u * ey);
        best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    return best;
}

double hamiltonian_ltv(double t, const Vector& x, const Vector& lam, const ReachProblem& prob) {
    const Matrix a = prob.A.eval(t);
    const Matrix b = prob.B.eval(t);
    const Vector drift = a * x;
    return -dot(lam, drift) + prob.input.support_value(-1.0 * (b.transpose() * lam));
}

Polygon pmp_boundary_polygon(const ReachProblem& prob, double t, int n_dirs, double dt) {
    validate_problem(prob);
    if (prob.state_dim() != 2)
        throw Error(Errc::DimensionUnsupported, "boundary polygon requires a 2-D state space");
    if (n_dirs < 3)
        throw Error(Errc::ValidationError, "boundary polygon needs at least 3 directions");
    if (t < prob.t0 - 1e-12 || t > prob.T + 1e-12)
        throw Error(Errc::OutOfRange, "requested polygon time lies outside the horizon");
    if (!(dt > 0.0))
        throw Error(Errc::ValidationError, "dt must be positive");

    const Ellipsoid& terminal = prob.terminal;
    const Matrix inv_sqrt = spd_inv_sqrt(terminal.shape());
    const std::vector<Vector> dirs = spread_directions(2, n_dirs);

    Polygon poly;
    poly.vertices.resize(n_dirs);

    parallel_for(n_dirs, [&](int k) {
        Vector x = terminal.boundary_point(dirs[k]);
        const Vector diff = x - terminal.center();
        Vector lam = 2.0 * (inv_sqrt * (inv_sqrt * diff));

        // Extremal dynamics with signal and control evaluated at stage times;
        // this keeps the oracle's integration path distinct from the family
        // integrator, which freezes per step.
        auto rhs = [&prob](double s, const Vector& xs, const Vector& ls, Vector& dx, Vector& dl) {
            const Matrix a = prob.A.eval(s);
            const Matrix b = prob.B.eval(s);
            const Vector u = prob.input.support_argmax(b.transpose() * ls);
            dx = a * xs + b * u;
            dl = -1.0 * (a.transpose() * ls);
        };

        double s = prob.T;
        while (s > t + 1e-12) {
            const double h = -std::min(dt, s - t);
            Vector k1x(2), k1l(2), k2x(2), k2l(2), k3x(2), k3l(2), k4x(2), k4l(2);
            rhs(s, x, lam, k1x, k1l);
            rhs(s + h / 2, x + (h / 2) * k1x, lam + (h / 2) * k1l, k2x, k2l);
            rhs(s + h / 2, x + (h / 2) * k2x, lam + (h / 2) * k2l, k3x, k3l);
            rhs(s + h, x + h * k3x, lam + h * k3l, k4x, k4l);
            x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            lam = lam + (h / 6.0) * (k1l + 2.0 * k2l + 2.0 * k3l + k4l);
            s += h;
        }
        poly.vertices[k] = {x[0], x[1]};
    });
    return poly;
}

double family_area(const EllipsoidFamily& family, const Box2& box, int resolution) {
    if (family.members.empty())
        throw Error(Errc::EmptyFamily, "family area requested for empty family");
    if (family.members.front().dim() != 2)
        throw Error(Errc::DimensionUnsupported, "family area requires a 2-D state space");
    if (resolution < 2)
        throw Error(Errc::ValidationError, "family area needs resolution >= 2");

    const double hx = (box.hi[0] - box.lo[0]) / resolution;
    const double hy = (box.hi[1] - box.lo[1]) / resolution;
    std::vector<long> row_counts(resolution, 0);
    parallel_for(resolution, [&](int iy) {
        const double y = box.lo[1] + (iy + 0.5) * hy;
        Vector pt{0.0, y};
        long count = 0;
        for (int ix = 0; ix < resolution; ++ix) {
            pt[0] = box.lo[0] + (ix + 0.5) * hx;
            if (family_value(family, pt) <= 0.0) ++count;
        }
        row_counts[iy] = count;
    });
    long total = 0;
    for (long c : row_counts) total += c;
    return double(total) * hx * hy;
}

std::size_t GridSolution::time_index(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) <= 1e-9) return i;
    throw Error(Errc::TimeNotStored, "grid solution has no field stored at the requested time");
}

double GridSolution::value_at(std::size_t ti, double x, double y) const {
    const int n = resolution;
    const double gx = (x - box.lo[0]) / dx();
    const double gy = (y - box.lo[1]) / dy();
    if (gx < -1e-9 || gy < -1e-9 || gx > n - 1 + 1e-9 || gy > n - 1 + 1e-9)
        throw Error(Errc::OutOfRange, "grid interpolation point lies outside the box");
    const int ix = std::clamp(int(gx), 0, n - 2);
    const int iy = std::clamp(int(gy), 0, n - 2);
    const double u = std::clamp(gx - ix, 0.0, 1.0);
    const double w = std::clamp(gy - iy, 0.0, 1.0);
    const std::vector<double>& v = values[ti];
    const double v00 = v[ix + n * iy], v10 = v[ix + 1 + n * iy];
    const double v01 = v[ix + n * (iy + 1)], v11 = v[ix + 1 + n * (iy + 1)];
    return v00 * (1 - u) * (1 - w) + v10 * u * (1 - w) + v01 * (1 - u) * w + v11 * u * w;
}

std::array<double, 2> GridSolution::gradient_at(std::size_t ti, double x, double y) const {
    const int n = resolution;
    const double gx = (x - box.lo[0]) / dx();
    const double gy = (y - box.lo[1]) / dy();
    const int ix = std::clamp(int(gx), 0, n - 2);
    const int iy = std::clamp(int(gy), 0, n - 2);
    const double u = std::clamp(gx - ix, 0.0, 1.0);
    const double w = std::clamp(gy - iy, 0.0, 1.0);
    const std::vector<double>& v = values[ti];
    const double v00 = v[ix + n * iy], v10 = v[ix + 1 + n * iy];
    const double v01 = v[ix + n * (iy + 1)], v11 = v[ix + 1 + n * (iy + 1)];
    return {((v10 - v00) * (1 - w) + (v11 - v01) * w) / dx(),
            ((v01 - v00) * (1 - u) + (v11 - v10) * u) / dy()};
}

GridSolution grid_hjb_solve(const ReachProblem& prob, const Box2& box, int resolution, double cfl,
                            std::vector<double> t_store) {
    validate_problem(prob);
    if (prob.state_dim() != 2)
        throw Error(Errc::DimensionUnsupported, "grid solver requires a 2-D state space");
    if (!(cfl > 0.0) || cfl > 1.0)
        throw Error(Errc::CflViolation, "cfl must lie in (0, 1]");
    if (resolution < 3)
        throw Error(Errc::ValidationError, "grid solver needs resolution >= 3");

    if (t_store.empty()) t_store.push_back(prob.t0);
    for (double ts : t_store)
        if (ts < prob.t0 - 1e-12 || ts > prob.T + 1e-12)
            throw Error(Errc::ValidationError, "grid store time lies outside the horizon");
    std::sort(t_store.begin(), t_store.end(), std::greater<double>());
    t_store.erase(std::unique(t_store.begin(), t_store.end(),
                              [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                  t_store.end());

    GridSolution sol;
    sol.box = box;
    sol.resolution = resolution;

    const int n = resolution;
    const double dx = sol.dx(), dy = sol.dy();
    const Vector p = prob.input.center();
    const Matrix P = prob.input.shape();

    // Terminal slice is the terminal quadratic, exact at the nodes.
    std::vector<double> v(std::size_t(n) * n);
    for (int iy = 0; iy < n; ++iy) {
        const double y = box.lo[1] + iy * dy;
        for (int ix = 0; ix < n; ++ix) {
            const double x = box.lo[0] + ix * dx;
            v[ix + std::size_t(n) * iy] = prob.terminal.quad_value({x, y});
        }
    }

    auto check_boundary = [&](const std::vector<double>& field) {
        for (int ix = 0; ix < n; ++ix)
            if (field[ix] <= 0.0 || field[ix + std::size_t(n) * (n - 1)] <= 0.0) return true;
        for (int iy = 0; iy < n; ++iy)
            if (field[std::size_t(n) * iy] <= 0.0 || field[n - 1 + std::size_t(n) * iy] <= 0.0)
                return true;
        return false;
    };

    auto record = [&](double t, const std::vector<double>& field) {
        sol.times.push_back(t);
        sol.values.push_back(field);
        if (check_boundary(field)) sol.box_too_small = true;
    };

    record(prob.T, v);
    std::size_t next_store = 0;
    while (next_store < t_store.size() && t_store[next_store] >= prob.T - 1e-12) ++next_store;
    const double t_end = t_store.back();

    std::vector<double> vn(v.size());
    double t = prob.T;
    while (t > t_end + 1e-12) {
        const Matrix a = prob.A.eval(t);
        const Matrix b = prob.B.eval(t);
        const Matrix bpbt = b * P * b.transpose();
        const Vector bp = b * p;

        // Per-axis dissipation bounds: |dH/dlambda_j| <= max |(Ax + Bp)_j|
        // over the box corners plus sqrt((BPB^T)_jj).
        double alpha[2] = {std::sqrt(std::max(0.0, bpbt(0, 0))),
                           std::sqrt(std::max(0.0, bpbt(1, 1)))};
        for (int cx = 0; cx < 2; ++cx)
            for (int cy = 0; cy < 2; ++cy) {
                const double x = cx ? box.hi[0] : box.lo[0];
                const double y = cy ? box.hi[1] : box.lo[1];
                const double f0 = a(0, 0) * x + a(0, 1) * y + bp[0];
                const double f1 = a(1, 0) * x + a(1, 1) * y + bp[1];
                alpha[0] = std::max(alpha[0], std::abs(f0) + std::sqrt(std::max(0.0, bpbt(0, 0))));
                alpha[1] = std::max(alpha[1], std::abs(f1) + std::sqrt(std::max(0.0, bpbt(1, 1))));
            }

        double step = cfl * std::min(dx, dy) / std::max(alpha[0] + alpha[1], 1e-12);
        double target = t_end;
        if (next_store < t_store.size()) target = t_store[next_store];
        step = std::min(step, t - target);

        const double a00 = a(0, 0), a01 = a(0, 1), a10 = a(1, 0), a11 = a(1, 1);
        const double b00 = bpbt(0, 0), b01 = bpbt(0, 1), b11 = bpbt(1, 1);
        const double bp0 = bp[0], bp1 = bp[1];
        const double ax = alpha[0], ay = alpha[1];

        parallel_for(n, [&](int iy) {
            const double y = box.lo[1] + iy * dy;
            const std::size_t row = std::size_t(n) * iy;
            const std::size_t up = iy + 1 < n ? row + n : row;   // ghost handled below
            const std::size_t dn = iy > 0 ? row - n : row;
            for (int ix = 0; ix < n; ++ix) {
                const double x = box.lo[0] + ix * dx;
                const double vc = v[row + ix];

                const double vxm = ix > 0 ? v[row + ix - 1] : 2.0 * vc - v[row + ix + 1];
                const double vxp = ix + 1 < n ? v[row + ix + 1] : 2.0 * vc - v[row + ix - 1];
                const double vym = iy > 0 ? v[dn + ix] : 2.0 * vc - v[up + ix];
                const double vyp = iy + 1 < n ? v[up + ix] : 2.0 * vc - v[dn + ix];

                const double pxm = (vc - vxm) / dx, pxp = (vxp - vc) / dx;
                const double pym = (vc - vym) / dy, pyp = (vyp - vc) / dy;
                const double l1 = 0.5 * (pxm + pxp);
                const double l2 = 0.5 * (pym + pyp);

                const double f0 = a00 * x + a01 * y + bp0;
                const double f1 = a10 * x + a11 * y + bp1;
                const double quad = b00 * l1 * l1 + 2.0 * b01 * l1 * l2 + b11 * l2 * l2;
                const double ham = -(l1 * f0 + l2 * f1) + std::sqrt(std::max(0.0, quad));

                vn[row + ix] = vc - step * (ham - 0.5 * ax * (pxp - pxm) - 0.5 * ay * (pyp - pym));
            }
        });
        v.swap(vn);
        t -= step;

        if (next_store < t_store.size() && std::abs(t - t_store[next_store]) <= 1e-12) {
            record(t_store[next_store], v);
            ++next_store;
        }
    }
    return sol;
}

namespace {

// Area of the { v <= 0 } part of one grid cell; corners in the order
// (x0,y0) (x1,y0) (x1,y1) (x0,y1), zero crossings linearly interpolated.
double cell_sublevel_area(double x0, double y0, double x1, double y1, double v00, double v10,
                          double v11, double v01) {
    const double cx[4] = {x0, x1, x1, x0};
    const double cy[4] = {y0, y0, y1, y1};
    const double cv[4] = {v00, v10, v11, v01};

    double px[8], py[8];
    int np = 0;
    for (int i = 0; i < 4; ++i) {
        const int j = (i + 1) % 4;
        if (cv[i] <= 0.0) {
            px[np] = cx[i];
            py[np] = cy[i];
            ++np;
        }
        if ((cv[i] <= 0.0) != (cv[j] <= 0.0)) {
            const double u = cv[i] / (cv[i] - cv[j]);
            px[np] = cx[i] + u * (cx[j] - cx[i]);
            py[np] = cy[i] + u * (cy[j] - cy[i]);
            ++np;
        }
    }
    if (np < 3) return 0.0;
    double twice = 0.0;
    for (int i = 0; i < np; ++i) {
        const int j = (i + 1) % np;
        twice += px[i] * py[j] - px[j] * py[i];
    }
    return 0.5 * std::abs(twice);
}

} // namespace

double grid_sublevel_area(const GridSolution& sol, double t) {
    const std::size_t ti = sol.time_index(t);
    const std::vector<double>& v = sol.values[ti];
    const int n = sol.resolution;
    const double dx = sol.dx(), dy = sol.dy();
    double area = 0.0;
    for (int iy = 0; iy + 1 < n; ++iy) {
        const double y0 = sol.box.lo[1] + iy * dy;
        for (int ix = 0; ix + 1 < n; ++ix) {
            const double x0 = sol.box.lo[0] + ix * dx;
            area += cell_sublevel_area(x0, y0, x0 + dx, y0 + dy, v[ix + std::size_t(n) * iy],
                                       v[ix + 1 + std::size_t(n) * iy],
                                       v[ix + 1 + std::size_t(n) * (iy + 1)],
                                       v[ix + std::size_t(n) * (iy + 1)]);
        }
    }
    return area;
}

std::vector<Point2> grid_zero_level_points(const GridSolution& sol, double t) {
    const std::size_t ti = sol.time_index(t);
    const std::vector<double>& v = sol.values[ti];
    const int n = sol.resolution;
    const double dx = sol.dx(), dy = sol.dy();
    std::vector<Point2> pts;
    for (int iy = 0; iy < n; ++iy) {
        const double y = sol.box.lo[1] + iy * dy;
        for (int ix = 0; ix < n; ++ix) {
            const double x = sol.box.lo[0] + ix * dx;
            const double vc = v[ix + std::size_t(n) * iy];
            if (ix + 1 < n) {
                const double vr = v[ix + 1 + std::size_t(n) * iy];
                if ((vc <= 0.0) != (vr <= 0.0))
                    pts.push_back({x + dx * vc / (vc - vr), y});
            }
            if (iy + 1 < n) {
                const double vu = v[ix + std::size_t(n) * (iy + 1)];
                if ((vc <= 0.0) != (vu <= 0.0))
                    pts.push_back({x, y + dy * vc / (vc - vu)});
            }
        }
    }
    return pts;
}

namespace {

std::vector<Point2> union_boundary_samples(const EllipsoidFamily& fam, int n_samples) {
    const int n_q = int(fam.members.size());
    const int per_member = std::max(1, (n_samples + n_q - 1) / n_q);
    std::vector<Point2> samples;
    samples.reserve(std::size_t(per_member) * n_q);
    for (const Ellipsoid& e : fam.members) {
        for (int m = 0; m < per_member; ++m) {
            const double th = 2.0 * M_PI * double(m) / double(per_member);
            const Vector pt = e.boundary_point({std::cos(th), std::sin(th)});
            if (union_value(fam, pt) >= -1e-9) samples.push_back({pt[0], pt[1]});
        }
    }
    return samples;
}

std::vector<Point2> subsample(std::vector<Point2> pts, int n_samples) {
    if (int(pts.size()) <= n_samples) return pts;
    std::vector<Point2> out;
    out.reserve(n_samples);
    const double stride = double(pts.size()) / n_samples;
    for (int i = 0; i < n_samples; ++i) out.push_back(pts[std::size_t(i * stride)]);
    return out;
}

ContainmentReport report_fraction(const std::vector<Point2>& pts,
                                  const std::function<double(const Point2&)>& violation) {
    ContainmentReport rep;
    rep.n_samples = int(pts.size());
    for (const Point2& pt : pts) {
        const double margin = violation(pt);
        if (margin <= 0.0) ++rep.n_inside;
        else rep.worst_violation = std::max(rep.worst_violation, margin);
    }
    rep.fraction = pts.empty() ? 0.0 : double(rep.n_inside) / double(rep.n_samples);
    return rep;
}

} // namespace

ContainmentReport containment_report(const ApproxFamily& family, const Polygon& reference,
                                     double t, int n_samples, double over_band) {
    if (family.problem.state_dim() != 2)
        throw Error(Errc::DimensionUnsupported, "containment report requires a 2-D state space");
    const EllipsoidFamily fam = family.family_at(t);
    if (family.kind == ApproxKind::Under) {
        const std::vector<Point2> pts = union_boundary_samples(fam, n_samples);
        return report_fraction(pts, [&](const Point2& pt) {
            if (polygon_contains(reference, pt)) return -1.0;
            return std::max(polygon_boundary_distance(reference, pt) - 1e-9, 0.0);
        });
    }
    const std::vector<Point2> pts = subsample(reference.vertices, n_samples);
    return report_fraction(pts, [&](const Point2& pt) {
        return intersection_value(fam, {pt[0], pt[1]}) - over_band;
    });
}

ContainmentReport containment_report(const ApproxFamily& family, const GridSolution& reference,
                                     double t, int n_samples, double over_band) {
    if (family.problem.state_dim() != 2)
        throw Error(Errc::DimensionUnsupported, "containment report requires a 2-D state space");
    const EllipsoidFamily fam = family.family_at(t);
    const std::size_t ti = reference.time_index(t);
    const double eps = 2.0 * std::max(reference.dx(), reference.dy());
    if (family.kind == ApproxKind::Under) {
        const std::vector<Point2> pts = union_boundary_samples(fam, n_samples);
        return report_fraction(pts, [&](const Point2& pt) {
            const double v = reference.value_at(ti, pt[0], pt[1]);
            const auto g = reference.gradient_at(ti, pt[0], pt[1]);
            const double band = eps * std::hypot(g[0], g[1]);
            return v - band;
        });
    }
    const std::vector<Point2> pts = subsample(grid_zero_level_points(reference, t), n_samples);
    return report_fraction(pts, [&](const Point2& pt) {
        return intersection_value(fam, {pt[0], pt[1]}) - over_band;
    });
}

std::vector<Point2> ellipse_polyline(const Ellipsoid& e, int segments) {
    if (e.dim() != 2)
        throw Error(Errc::DimensionUnsupported, "outline polyline requires a 2-D ellipsoid");
    std::vector<Point2> pts;
    pts.reserve(segments + 1);
    for (int k = 0; k <= segments; ++k) {
        const double th = 2.0 * M_PI * double(k % segments) / double(segments);
        const Vector pt = e.boundary_point({std::cos(th), std::sin(th)});
        pts.push_back({pt[0], pt[1]});
    }
    return pts;
}

} // namespace ellreach
