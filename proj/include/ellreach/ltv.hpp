#ifndef ELLREACH_LTV_HPP
#define ELLREACH_LTV_HPP

#include <functional>
#include <string>
#include <vector>

#include "ellreach/ellipsoid.hpp"
#include "ellreach/matcore.hpp"

namespace ellreach {

/// Time-varying matrix signal: a named closed form, sampled data with linear
/// interpolation, or a closed-form lambda (used for reversed views).
class MatrixSignal {
  public:
    MatrixSignal() = default; // empty; eval() throws until assigned

    static MatrixSignal constant(Matrix value);
    static MatrixSignal sampled(std::vector<double> times, std::vector<Matrix> values);
    static MatrixSignal closed_form(int rows, int cols, std::string name,
                                    std::function<Matrix(double)> eval);

    Matrix eval(double t) const;
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const std::string& name() const { return name_; }
    bool is_sampled() const { return !times_.empty(); }
    const std::vector<double>& sample_times() const { return times_; }
    const std::vector<Matrix>& sample_values() const { return values_; }

    /// -M(pivot - t); applying twice restores the original evaluations.
    MatrixSignal reversed(double pivot) const;

  private:
    int rows_ = 0, cols_ = 0;
    std::string name_;
    std::function<Matrix(double)> fn_;   // closed-form path
    std::vector<double> times_;          // sampled path
    std::vector<Matrix> values_;
};

struct ReachProblem {
    enum class Direction { Backward, Forward };

    MatrixSignal A; // n x n
    MatrixSignal B; // n x m
    Ellipsoid input;    // E(p, P) in input space
    Ellipsoid terminal; // E(x_e, X_e) in state space
    double t0 = 0.0;
    double T = 0.0;
    Direction direction = Direction::Backward;

    int state_dim() const { return terminal.dim(); }
    int input_dim() const { return input.dim(); }
};

/// Checks signal shapes, set dimensions and horizon ordering; throws
/// ValidationError with context on the first violation.
void validate_problem(const ReachProblem& prob);

Matrix eval_signal(const MatrixSignal& sig, double t);

/// Forced parametric oscillator: x'' = -omega^2(t) x + u with
/// omega^2(t) = 4 + 2 cos(2t), unit input ball, terminal ball of radius 0.1,
/// horizon [0, 1.5].
ReachProblem builtin_parametric_oscillator();

/// 1-D single integrator x' = u with unit input interval and terminal
/// interval of radius r on [0, T].
ReachProblem builtin_single_integrator(double r, double T);

/// Same horizon; signals become -A(T + t0 - s), -B(T + t0 - s); direction
/// flag flipped. Double application restores the original evaluations.
ReachProblem time_reverse(const ReachProblem& prob);

} // namespace ellreach

#endif
