#include "ellreach/ltv.hpp"

#include <algorithm>
#include <cmath>

namespace ellreach {

MatrixSignal MatrixSignal::constant(Matrix value) {
    MatrixSignal s;
    s.rows_ = value.rows();
    s.cols_ = value.cols();
    s.name_ = "constant";
    s.fn_ = [m = std::move(value)](double) { return m; };
    return s;
}

MatrixSignal MatrixSignal::sampled(std::vector<double> times, std::vector<Matrix> values) {
    if (times.size() < 2 || times.size() != values.size())
        throw Error(Errc::ValidationError, "sampled signal needs matching times/values, >= 2 samples");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw Error(Errc::ValidationError, "sampled signal times must be strictly ascending");
    for (const Matrix& m : values)
        if (m.rows() != values.front().rows() || m.cols() != values.front().cols())
            throw Error(Errc::ValidationError, "sampled signal values must share one shape");
    MatrixSignal s;
    s.rows_ = values.front().rows();
    s.cols_ = values.front().cols();
    s.name_ = "sampled";
    s.times_ = std::move(times);
    s.values_ = std::move(values);
    return s;
}

MatrixSignal MatrixSignal::closed_form(int rows, int cols, std::string name,
                                       std::function<Matrix(double)> eval) {
    MatrixSignal s;
    s.rows_ = rows;
    s.cols_ = cols;
    s.name_ = std::move(name);
    s.fn_ = std::move(eval);
    return s;
}

Matrix MatrixSignal::eval(double t) const {
    if (fn_) return fn_(t);
    if (times_.empty())
        throw Error(Errc::ValidationError, "evaluated an empty matrix signal");
    const double span = times_.back() - times_.front();
    const double tol = 1e-12 * std::max(1.0, std::abs(span));
    if (t < times_.front() - tol || t > times_.back() + tol)
        throw Error(Errc::OutOfRange, "signal evaluated outside sample coverage");
    const double tc = std::clamp(t, times_.front(), times_.back());
    auto it = std::upper_bound(times_.begin(), times_.end(), tc);
    std::size_t hi = std::min(std::size_t(it - times_.begin()), times_.size() - 1);
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double u = (tc - times_[lo]) / (times_[hi] - times_[lo]);
    Matrix m = values_[lo];
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            m(i, j) += u * (values_[hi](i, j) - values_[lo](i, j));
    return m;
}

MatrixSignal MatrixSignal::reversed(double pivot) const {
    if (is_sampled()) {
        // Mirror the sample grid so double reversal is exact at sample times.
        std::vector<double> times(times_.size());
        std::vector<Matrix> values(values_.size());
        const std::size_t n = times_.size();
        for (std::size_t k = 0; k < n; ++k) {
            times[k] = pivot - times_[n - 1 - k];
            values[k] = -1.0 * values_[n - 1 - k];
        }
        return sampled(std::move(times), std::move(values));
    }
    MatrixSignal s;
    s.rows_ = rows_;
    s.cols_ = cols_;
    s.name_ = "reversed(" + name_ + ")";
    s.fn_ = [base = fn_, pivot](double t) { return -1.0 * base(pivot - t); };
    return s;
}

Matrix eval_signal(const MatrixSignal& sig, double t) { return sig.eval(t); }

void validate_problem(const ReachProblem& prob) {
    const int n = prob.terminal.dim();
    const int m = prob.input.dim();
    if (prob.A.rows() != n || prob.A.cols() != n)
        throw Error(Errc::ValidationError, "A signal shape must be n x n");
    if (prob.B.rows() != n || prob.B.cols() != m)
        throw Error(Errc::ValidationError, "B signal shape must be n x m");
    if (!(prob.t0 < prob.T))
        throw Error(Errc::ValidationError, "horizon requires t0 < T");
}

ReachProblem builtin_parametric_oscillator() {
    MatrixSignal a = MatrixSignal::closed_form(2, 2, "parametric_oscillator_A", [](double t) {
        Matrix m(2, 2);
        m(0, 1) = 1.0;
        m(1, 0) = -(4.0 + 2.0 * std::cos(2.0 * t));
        return m;
    });
    Matrix b(2, 1);
    b(1, 0) = 1.0;
    ReachProblem prob{
        std::move(a),
        MatrixSignal::constant(b),
        Ellipsoid({0.0}, Matrix(1, 1, {1.0})),
        Ellipsoid({0.0, 0.0}, Matrix(2, 2, {0.01, 0.0, 0.0, 0.01})),
        0.0,
        1.5,
        ReachProblem::Direction::Backward,
    };
    return prob;
}

ReachProblem builtin_single_integrator(double r, double T) {
    if (!(r > 0.0) || !(T > 0.0))
        throw Error(Errc::NonPositive, "single integrator requires r > 0 and T > 0");
    ReachProblem prob{
        MatrixSignal::constant(Matrix(1, 1)),
        MatrixSignal::constant(Matrix(1, 1, {1.0})),
        Ellipsoid({0.0}, Matrix(1, 1, {1.0})),
        Ellipsoid({0.0}, Matrix(1, 1, {r * r})),
        0.0,
        T,
        ReachProblem::Direction::Backward,
    };
    return prob;
}

ReachProblem time_reverse(const ReachProblem& prob) {
    const double pivot = prob.T + prob.t0;
    ReachProblem rev = prob;
    rev.A = prob.A.reversed(pivot);
    rev.B = prob.B.reversed(pivot);
    rev.direction = prob.direction == ReachProblem::Direction::Backward
                        ? ReachProblem::Direction::Forward
                        : ReachProblem::Direction::Backward;
    return rev;
}

} // namespace ellreach
