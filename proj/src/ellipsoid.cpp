#include "ellreach/ellipsoid.hpp"

#include <algorithm>
#include <cmath>

namespace ellreach {

Ellipsoid::Ellipsoid(Vector center, Matrix shape)
    : center_(std::move(center)), shape_(std::move(shape)) {
    if (!shape_.square() || shape_.rows() != int(center_.size()))
        throw Error(Errc::DimensionMismatch, "ellipsoid: center/shape dimensions differ");
    if (!is_symmetric(shape_, 1e-12))
        throw Error(Errc::NotSymmetric, "ellipsoid: shape matrix not symmetric");
    eig_ = sym_eigen(shape_);
    if (eig_.eigenvalues.front() <= 0.0)
        throw Error(Errc::NotPsd, "ellipsoid: shape matrix not strictly positive definite");
    Vector roots(eig_.eigenvalues.size());
    for (std::size_t i = 0; i < roots.size(); ++i) roots[i] = std::sqrt(eig_.eigenvalues[i]);
    sqrt_ = eig_.assemble(roots);
}

double Ellipsoid::quad_value(const Vector& x) const {
    if (int(x.size()) != dim())
        throw Error(Errc::DimensionMismatch, "quad_value: point dimension differs");
    // <d, Q^{-1} d> = sum_k <v_k, d>^2 / lambda_k over the cached basis.
    const int n = dim();
    const Matrix& v = eig_.eigenvectors;
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
        double proj = 0.0;
        for (int i = 0; i < n; ++i) proj += v(i, k) * (x[i] - center_[i]);
        s += proj * proj / eig_.eigenvalues[k];
    }
    return s - 1.0;
}

Vector Ellipsoid::boundary_point(const Vector& w) const {
    if (int(w.size()) != dim())
        throw Error(Errc::DimensionMismatch, "boundary_point: direction dimension differs");
    if (std::abs(norm2(w) - 1.0) > 1e-10)
        throw Error(Errc::NotUnitNorm, "boundary_point: direction must be unit norm");
    return sqrt_ * w + center_;
}

double Ellipsoid::support_value(const Vector& l) const {
    if (int(l.size()) != dim())
        throw Error(Errc::DimensionMismatch, "support_value: direction dimension differs");
    return dot(l, center_) + std::sqrt(std::max(0.0, dot(l, shape_ * l)));
}

Vector Ellipsoid::support_argmax(const Vector& l) const {
    if (int(l.size()) != dim())
        throw Error(Errc::DimensionMismatch, "support_argmax: direction dimension differs");
    const double scale = std::sqrt(std::max(0.0, dot(l, shape_ * l)));
    if (scale == 0.0) return center_;
    return center_ - (1.0 / scale) * (shape_ * l);
}

namespace {

double extremal_value(const EllipsoidFamily& family, const Vector& x, bool take_min) {
    if (family.members.empty())
        throw Error(Errc::EmptyFamily, "family value requested for empty family");
    double best = family.members.front().quad_value(x);
    for (std::size_t i = 1; i < family.members.size(); ++i) {
        const double v = family.members[i].quad_value(x);
        best = take_min ? std::min(best, v) : std::max(best, v);
    }
    return best;
}

} // namespace

double union_value(const EllipsoidFamily& family, const Vector& x) {
    return extremal_value(family, x, true);
}

double intersection_value(const EllipsoidFamily& family, const Vector& x) {
    return extremal_value(family, x, false);
}

double family_value(const EllipsoidFamily& family, const Vector& x) {
    return extremal_value(family, x, family.kind == EllipsoidFamily::Kind::Union);
}

} // namespace ellreach
