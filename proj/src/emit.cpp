#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ellreach/cli.hpp"

namespace ellreach {

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary); // '\n' endings on every platform
    if (!out)
        throw Error(Errc::IoError, "cannot write '" + path + "'");
    return out;
}

} // namespace

void write_family_csv(const ApproxFamily& family, const std::string& path) {
    std::ofstream out = open_out(path);
    const int n = family.problem.state_dim();
    out << "t,i";
    for (int k = 1; k <= n; ++k) out << ",q" << k;
    for (int r = 1; r <= n; ++r)
        for (int c = 1; c <= n; ++c) out << ",Q" << r << c;
    for (int k = 1; k <= n; ++k) out << ",xstar" << k;
    out << "\n";
    for (std::size_t ti = 0; ti < family.times.size(); ++ti) {
        for (std::size_t i = 0; i < family.snapshots[ti].size(); ++i) {
            const EllipsoidState& st = family.snapshots[ti][i];
            out << format_float(family.times[ti]) << "," << i;
            for (int k = 0; k < n; ++k) out << "," << format_float(st.q[k]);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) out << "," << format_float(st.Q(r, c));
            for (int k = 0; k < n; ++k) out << "," << format_float(st.x_star[k]);
            out << "\n";
        }
    }
}

void write_boundary_csv(const std::vector<std::pair<double, Polygon>>& polygons,
                        const std::string& path) {
    std::ofstream out = open_out(path);
    out << "t,k,x1,x2\n";
    for (const auto& [t, poly] : polygons) {
        for (std::size_t k = 0; k < poly.vertices.size(); ++k)
            out << format_float(t) << "," << k << "," << format_float(poly.vertices[k][0]) << ","
                << format_float(poly.vertices[k][1]) << "\n";
    }
}

namespace {

constexpr double kCanvas = 720.0;
constexpr double kMargin = 40.0;

struct SvgMapper {
    Box2 box;
    double sx(double x) const {
        return kMargin + (x - box.lo[0]) / (box.hi[0] - box.lo[0]) * (kCanvas - 2 * kMargin);
    }
    double sy(double y) const {
        return kCanvas - kMargin -
               (y - box.lo[1]) / (box.hi[1] - box.lo[1]) * (kCanvas - 2 * kMargin);
    }
};

std::string fmt_px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

void emit_polyline(std::ostream& out, const SvgMapper& map, const std::vector<Point2>& pts,
                   const char* style) {
    out << "<polyline fill=\"none\" " << style << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) out << " ";
        out << fmt_px(map.sx(pts[i][0])) << "," << fmt_px(map.sy(pts[i][1]));
    }
    out << "\"/>\n";
}

// Zero-level segments of the family value on a sampling grid; enough for a
// plot-quality envelope outline.
void emit_envelope(std::ostream& out, const SvgMapper& map, const EllipsoidFamily& fam,
                   const Box2& box, const char* style) {
    const int cells = 256;
    const double hx = (box.hi[0] - box.lo[0]) / cells;
    const double hy = (box.hi[1] - box.lo[1]) / cells;
    std::vector<double> grid((cells + 1) * (cells + 1));
    Vector pt(2);
    for (int iy = 0; iy <= cells; ++iy) {
        pt[1] = box.lo[1] + iy * hy;
        for (int ix = 0; ix <= cells; ++ix) {
            pt[0] = box.lo[0] + ix * hx;
            grid[ix + (cells + 1) * iy] = family_value(fam, pt);
        }
    }
    auto at = [&](int ix, int iy) { return grid[ix + (cells + 1) * iy]; };
    out << "<g " << style << ">\n";
    for (int iy = 0; iy < cells; ++iy) {
        const double y0 = box.lo[1] + iy * hy;
        for (int ix = 0; ix < cells; ++ix) {
            const double x0 = box.lo[0] + ix * hx;
            const double v[4] = {at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1), at(ix, iy + 1)};
            const double cx[4] = {x0, x0 + hx, x0 + hx, x0};
            const double cy[4] = {y0, y0, y0 + hy, y0 + hy};
            Point2 cross[4];
            int nc = 0;
            for (int e = 0; e < 4 && nc < 4; ++e) {
                const int f = (e + 1) % 4;
                if ((v[e] <= 0.0) != (v[f] <= 0.0)) {
                    const double u = v[e] / (v[e] - v[f]);
                    cross[nc++] = {cx[e] + u * (cx[f] - cx[e]), cy[e] + u * (cy[f] - cy[e])};
                }
            }
            for (int s = 0; s + 1 < nc; s += 2)
                out << "<line x1=\"" << fmt_px(map.sx(cross[s][0])) << "\" y1=\""
                    << fmt_px(map.sy(cross[s][1])) << "\" x2=\"" << fmt_px(map.sx(cross[s + 1][0]))
                    << "\" y2=\"" << fmt_px(map.sy(cross[s + 1][1])) << "\"/>\n";
        }
    }
    out << "</g>\n";
}

} // namespace

void write_plot_svg(const ApproxFamily* family, const Polygon* reference, const Box2& box,
                    double t, const std::string& path) {
    std::ofstream out = open_out(path);
    const SvgMapper map{box};
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kCanvas << " " << kCanvas
        << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kCanvas << "\" height=\"" << kCanvas
        << "\" fill=\"white\"/>\n";
    out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kCanvas - 2 * kMargin
        << "\" height=\"" << kCanvas - 2 * kMargin
        << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

    if (family) {
        const EllipsoidFamily fam = family->family_at(t);
        for (const Ellipsoid& e : fam.members)
            emit_polyline(out, map, ellipse_polyline(e, 128),
                          "stroke=\"#999999\" stroke-width=\"1\" stroke-dasharray=\"4 3\"");
        emit_envelope(out, map, fam, box, "stroke=\"#1f4e8c\" stroke-width=\"1.6\"");
    }
    if (reference) {
        std::vector<Point2> closed = reference->vertices;
        if (!closed.empty()) closed.push_back(closed.front());
        emit_polyline(out, map, closed,
                      "stroke=\"#000000\" stroke-width=\"1.4\" stroke-dasharray=\"2 4\"");
    }
    if (family) {
        for (const EllipsoidState& st : family->snapshot_at(t))
            out << "<circle cx=\"" << fmt_px(map.sx(st.x_star[0])) << "\" cy=\""
                << fmt_px(map.sy(st.x_star[1])) << "\" r=\"3\" fill=\"#c03020\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace ellreach
