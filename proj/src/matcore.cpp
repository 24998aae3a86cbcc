#include "ellreach/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ellreach {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::NotPsd: return "NotPsd";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotUnitNorm: return "NotUnitNorm";
    case Errc::EmptyFamily: return "EmptyFamily";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonPositive: return "NonPositive";
    case Errc::NotOrthogonal: return "NotOrthogonal";
    case Errc::NonPositiveKappa: return "NonPositiveKappa";
    case Errc::ShapeDegenerate: return "ShapeDegenerate";
    case Errc::StepTooLarge: return "StepTooLarge";
    case Errc::DimensionUnsupported: return "DimensionUnsupported";
    case Errc::DegeneratePolygon: return "DegeneratePolygon";
    case Errc::CflViolation: return "CflViolation";
    case Errc::TimeNotStored: return "TimeNotStored";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::IoError: return "IoError";
    }
    return "Error";
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw Error(Errc::DimensionMismatch, "dot: vector sizes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

Vector operator+(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw Error(Errc::DimensionMismatch, "vector add: sizes differ");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Vector operator-(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw Error(Errc::DimensionMismatch, "vector sub: sizes differ");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vector operator*(double s, const Vector& a) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

Matrix::Matrix(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), a_(std::move(entries)) {
    if (a_.size() != std::size_t(rows) * cols)
        throw Error(Errc::DimensionMismatch, "matrix literal has wrong entry count");
    for (double v : a_)
        if (!std::isfinite(v))
            throw Error(Errc::ValidationError, "matrix entries must be finite");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diag(const Vector& d) {
    Matrix m(int(d.size()), int(d.size()));
    for (int i = 0; i < int(d.size()); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::frobenius() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

Matrix& Matrix::operator+=(const Matrix& rhs) {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
        throw Error(Errc::DimensionMismatch, "matrix add: shapes differ");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += rhs.a_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& rhs) {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
        throw Error(Errc::DimensionMismatch, "matrix sub: shapes differ");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= rhs.a_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw Error(Errc::DimensionMismatch, "matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vector operator*(const Matrix& a, const Vector& x) {
    if (a.cols() != int(x.size()))
        throw Error(Errc::DimensionMismatch, "matvec: dimensions differ");
    Vector y(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Matrix outer(const Vector& a, const Vector& b) {
    Matrix m(int(a.size()), int(b.size()));
    for (int i = 0; i < int(a.size()); ++i)
        for (int j = 0; j < int(b.size()); ++j) m(i, j) = a[i] * b[j];
    return m;
}

Matrix symmetrize(const Matrix& s) {
    if (!s.square())
        throw Error(Errc::DimensionMismatch, "symmetrize: matrix not square");
    Matrix r(s.rows(), s.cols());
    for (int i = 0; i < s.rows(); ++i)
        for (int j = 0; j < s.cols(); ++j) r(i, j) = 0.5 * (s(i, j) + s(j, i));
    return r;
}

bool is_symmetric(const Matrix& s, double rel_tol) {
    if (!s.square()) return false;
    double asym = 0.0;
    for (int i = 0; i < s.rows(); ++i)
        for (int j = i + 1; j < s.cols(); ++j) {
            const double d = s(i, j) - s(j, i);
            asym += 2.0 * d * d;
        }
    return std::sqrt(asym) <= rel_tol * std::max(1.0, s.frobenius());
}

bool is_orthogonal(const Matrix& s, double tol) {
    if (!s.square()) return false;
    const Matrix g = s.transpose() * s - Matrix::identity(s.rows());
    return g.frobenius() <= tol;
}

Matrix EigenDecomposition::assemble(const Vector& transformed) const {
    const Matrix& v = eigenvectors;
    const int n = v.rows();
    Matrix r(n, n);
    for (int k = 0; k < n; ++k) {
        const double lk = transformed[k];
        if (lk == 0.0) continue;
        for (int i = 0; i < n; ++i) {
            const double vik = v(i, k) * lk;
            for (int j = 0; j < n; ++j) r(i, j) += vik * v(j, k);
        }
    }
    return symmetrize(r);
}

namespace {

double offdiag_norm(const Matrix& a) {
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = i + 1; j < a.cols(); ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
}

} // namespace

EigenDecomposition sym_eigen(const Matrix& s) {
    if (!s.square())
        throw Error(Errc::DimensionMismatch, "sym_eigen: matrix not square");
    if (!is_symmetric(s, 1e-12))
        throw Error(Errc::NotSymmetric, "sym_eigen: input asymmetry exceeds tolerance");

    const int n = s.rows();
    Matrix a = symmetrize(s); // exact symmetry for the sweep updates
    Matrix v = Matrix::identity(n);

    const double scale = std::max(1.0, a.frobenius());
    const int max_sweeps = 100;
    bool converged = (n == 1);

    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        const double off = offdiag_norm(a);
        if (off <= 1e-15 * scale) {
            converged = true;
            break;
        }
        // Threshold sweep: early sweeps skip entries that are small against
        // the remaining off-diagonal mass, later sweeps rotate everything.
        const double thresh = (sweep < 3) ? 0.2 * off * off / (n * n) : 0.0;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= thresh || apq == 0.0) continue;

                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                const double tau = sn / (1.0 + c);

                const double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = akp - sn * (akq + tau * akp);
                    a(p, k) = a(k, p);
                    a(k, q) = akq + sn * (akp - tau * akq);
                    a(q, k) = a(k, q);
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = vkp - sn * (vkq + tau * vkp);
                    v(k, q) = vkq + sn * (vkp - tau * vkq);
                }
            }
        }
        if (offdiag_norm(a) <= 1e-15 * scale) converged = true;
    }
    if (!converged)
        throw Error(Errc::NoConvergence, "sym_eigen: cyclic sweeps exceeded 100");

    EigenDecomposition dec;
    dec.eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) dec.eigenvalues[i] = a(i, i);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        return dec.eigenvalues[i] < dec.eigenvalues[j];
    });

    Vector sorted(n);
    Matrix vs(n, n);
    for (int k = 0; k < n; ++k) {
        sorted[k] = dec.eigenvalues[order[k]];
        for (int i = 0; i < n; ++i) vs(i, k) = v(i, order[k]);
    }
    dec.eigenvalues = std::move(sorted);
    dec.eigenvectors = std::move(vs);
    return dec;
}

double min_eigenvalue(const Matrix& s) { return sym_eigen(s).eigenvalues.front(); }

Matrix spd_sqrt(const Matrix& q, bool semidefinite_ok) {
    EigenDecomposition dec = sym_eigen(q);
    double scale = 0.0;
    for (double l : dec.eigenvalues) scale = std::max(scale, std::abs(l));
    const double tol = 1e-12 * std::max(1.0, scale);
    (void)semidefinite_ok; // caller intent marker; clamp policy is uniform
    Vector roots(dec.eigenvalues.size());
    for (std::size_t i = 0; i < dec.eigenvalues.size(); ++i) {
        double l = dec.eigenvalues[i];
        if (l < -tol)
            throw Error(Errc::NotPsd, "spd_sqrt: eigenvalue below -1e-12 tolerance");
        roots[i] = std::sqrt(std::max(l, 0.0));
    }
    return dec.assemble(roots);
}

Matrix spd_inv_sqrt(const Matrix& q, double floor) {
    EigenDecomposition dec = sym_eigen(q);
    Vector inv_roots(dec.eigenvalues.size());
    for (std::size_t i = 0; i < dec.eigenvalues.size(); ++i) {
        const double l = dec.eigenvalues[i];
        if (l < floor)
            throw Error(Errc::NotPsd, "spd_inv_sqrt: matrix not strictly positive definite");
        inv_roots[i] = 1.0 / std::sqrt(l);
    }
    return dec.assemble(inv_roots);
}

} // namespace ellreach
