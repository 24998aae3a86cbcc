#ifndef ELLREACH_MATCORE_HPP
#define ELLREACH_MATCORE_HPP

#include <cstddef>
#include <vector>

#include "ellreach/error.hpp"

namespace ellreach {

using Vector = std::vector<double>;

// Vector helpers (kept free-standing; states are plain std::vector<double>).
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator*(double s, const Vector& a);

/// Dense row-major matrix. Sized for desk-scale problems (n <= 64); every
/// operation returns a fresh value.
class Matrix {
  public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(std::size_t(rows) * cols, 0.0) {}
    Matrix(int rows, int cols, std::vector<double> entries);

    static Matrix identity(int n);
    static Matrix diag(const Vector& d);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool square() const { return rows_ == cols_ && rows_ > 0; }

    double& operator()(int i, int j) { return a_[std::size_t(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[std::size_t(i) * cols_ + j]; }

    Matrix transpose() const;
    double frobenius() const;

    Matrix& operator+=(const Matrix& rhs);
    Matrix& operator-=(const Matrix& rhs);
    Matrix& operator*=(double s);

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    const std::vector<double>& data() const { return a_; }

  private:
    int rows_, cols_;
    std::vector<double> a_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, const Vector& x);
Matrix outer(const Vector& a, const Vector& b);

/// 0.5 * (S + S^T).
Matrix symmetrize(const Matrix& s);

/// Asymmetry check relative to the matrix scale: ||S - S^T||_F <= tol * max(1, ||S||_F).
bool is_symmetric(const Matrix& s, double rel_tol = 1e-12);

/// True iff ||S^T S - I||_F <= tol.
bool is_orthogonal(const Matrix& s, double tol);

/// Eigenvalues ascending; eigenvectors orthonormal, stored as columns, so
/// that S = V diag(lambda) V^T.
struct EigenDecomposition {
    Vector eigenvalues;
    Matrix eigenvectors;

    /// V diag(f(lambda)) V^T for an already-transformed eigenvalue list.
    Matrix assemble(const Vector& transformed) const;
};

/// Cyclic Jacobi rotations with threshold sweeps. Throws NotSymmetric for
/// asymmetric input and NoConvergence if 100 sweeps do not reduce the
/// off-diagonal mass to rounding level.
EigenDecomposition sym_eigen(const Matrix& s);

double min_eigenvalue(const Matrix& s);

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// [-1e-12, 0) (relative scale) are clamped to zero; anything lower throws
/// NotPsd. `semidefinite_ok` marks call sites that expect a semi-definite
/// input (the clamp is the intended path there, not noise absorption).
Matrix spd_sqrt(const Matrix& q, bool semidefinite_ok = false);

/// Q^{-1/2}; requires strictly positive eigenvalues (min > `floor`).
Matrix spd_inv_sqrt(const Matrix& q, double floor = 1e-12);

} // namespace ellreach

#endif
