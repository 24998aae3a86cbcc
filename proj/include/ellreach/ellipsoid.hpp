#ifndef ELLREACH_ELLIPSOID_HPP
#define ELLREACH_ELLIPSOID_HPP

#include <vector>

#include "ellreach/matcore.hpp"

namespace ellreach {

/// Solid ellipsoid { x : <x - q, Q^{-1}(x - q)> <= 1 } with strictly SPD
/// shape. The eigendecomposition of Q is cached at construction; quadratic
/// evaluation is the hot loop of area estimation.
class Ellipsoid {
  public:
    Ellipsoid() = default; // empty placeholder (dim 0); assign before use
    Ellipsoid(Vector center, Matrix shape);

    int dim() const { return int(center_.size()); }
    const Vector& center() const { return center_; }
    const Matrix& shape() const { return shape_; }
    const Matrix& sqrt_shape() const { return sqrt_; }

    /// <x - q, Q^{-1}(x - q)> - 1: zero on the boundary, negative inside.
    double quad_value(const Vector& x) const;

    bool contains(const Vector& x) const { return quad_value(x) <= 0.0; }

    /// Q^{1/2} w + q for unit-norm w (tolerance 1e-10).
    Vector boundary_point(const Vector& w) const;

    /// max over the ellipsoid of <l, u> = <l, q> + sqrt(<l, Q l>).
    double support_value(const Vector& l) const;

    /// A maximiser of <-l, u> over the ellipsoid:
    /// q - Q l / ||Q^{1/2} l|| when l != 0, the center otherwise.
    Vector support_argmax(const Vector& l) const;

  private:
    Vector center_;
    Matrix shape_;
    EigenDecomposition eig_;
    Matrix sqrt_;
};

struct EllipsoidFamily {
    enum class Kind { Union, Intersection };
    Kind kind = Kind::Union;
    std::vector<Ellipsoid> members;
};

/// min over members of quad_value; <= 0 iff x lies in the union.
double union_value(const EllipsoidFamily& family, const Vector& x);

/// max over members of quad_value; <= 0 iff x lies in the intersection.
double intersection_value(const EllipsoidFamily& family, const Vector& x);

/// quad_value with the family's own semantics (min for Union, max for
/// Intersection).
double family_value(const EllipsoidFamily& family, const Vector& x);

} // namespace ellreach

#endif
