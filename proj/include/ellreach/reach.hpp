#ifndef ELLREACH_REACH_HPP
#define ELLREACH_REACH_HPP

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "ellreach/ellipsoid.hpp"
#include "ellreach/ltv.hpp"
#include "ellreach/matcore.hpp"

namespace ellreach {

/// One family member at one time instant. `w_hat` caches
/// Q^{-1/2}(x_star - q), refreshed after every accepted step.
struct EllipsoidState {
    Vector q;      // center
    Matrix Q;      // shape, strictly SPD
    Vector x_star; // tight boundary solution
    Vector lambda; // costate (under mode only; unused by over runs)
    Vector w_hat;
};

struct GuardEvent {
    enum class Kind { ZeroDirection, MinAxis, KappaFloor };
    double t = 0.0;
    int member = 0;
    Kind kind = Kind::ZeroDirection;
};

struct RunConfig {
    int n_q = 1;
    double dt = 0.01;
    double q_min = 1e-4;     // squared-axis floor for the rotation guard
    double kappa_min = 1e-4; // lower bound for the over-mode scalar
    std::vector<double> t_eval; // output times; empty records every step

    /// Test hook: when set, replaces the rotation selection of the under
    /// scheme for every step (used to force degenerate shape dynamics).
    std::function<Matrix(double t, int member, const EllipsoidState&)> rotation_override;
};

enum class ApproxKind { Under, Over };

struct ApproxFamily {
    ApproxKind kind = ApproxKind::Under;
    std::vector<double> times; // recorded, descending from T to t0
    std::vector<std::vector<EllipsoidState>> snapshots; // [time][member]
    ReachProblem problem;
    std::vector<GuardEvent> diagnostics;

    int n_members() const { return snapshots.empty() ? 0 : int(snapshots.front().size()); }
    const std::vector<EllipsoidState>& snapshot_at(double t) const;

    /// Union family for under runs, intersection family for over runs.
    EllipsoidFamily family_at(double t) const;
};

/// Degeneracy failure carrying the time and member it occurred at.
class DegeneracyError : public Error {
  public:
    DegeneracyError(double t, int member);
    double time() const { return t_; }
    int member() const { return member_; }

  private:
    double t_;
    int member_;
};

/// Q^{-1/2} B(t) P B^T(t) Q^{-1/2}; symmetric PSD.
Matrix qstar(double t, const Matrix& Q, const ReachProblem& prob);

/// A(t) q + B(t) p.
Vector center_rhs(double t, const Vector& q, const ReachProblem& prob);

/// A(t) Q + Q A^T(t) - Q^{1/2}(Qs^{1/2} S + S^T Qs^{1/2}) Q^{1/2} with
/// Qs = qstar(t, Q). S must be orthogonal within 1e-8.
Matrix under_shape_rhs(double t, const Matrix& Q, const Matrix& S, const ReachProblem& prob);

/// A(t) Q + Q A^T(t) - (1/kappa) B(t) P B^T(t) - kappa Q.
Matrix over_shape_rhs(double t, const Matrix& Q, double kappa, const ReachProblem& prob);

/// Plane rotation taking unit vector w to unit vector w_star:
/// I + sin(theta)(r_perp r^T - r r_perp^T) + (cos(theta)-1)(r r^T + r_perp r_perp^T).
/// Identity when w == w_star.
Matrix jacobi_rotation(const Vector& w, const Vector& w_star);

struct RotationChoice {
    Matrix S;
    bool guard_zero_direction = false;
    bool guard_min_axis = false;
};

/// Identity when ||Qs^{1/2} w_hat|| vanishes or the smallest squared axis of
/// Q drops below q_min; otherwise the rotation aligning w_hat with
/// Qs^{1/2} w_hat.
RotationChoice select_rotation(const EllipsoidState& state, const Matrix& q_star, double q_min);

struct KappaChoice {
    double kappa = 0.0;
    bool guard_floor = false;
};

/// ||Qs^{1/2} w_hat|| / ||w_hat||, floored at kappa_min when the numerator
/// vanishes.
KappaChoice select_kappa(const EllipsoidState& state, const Matrix& q_star, double kappa_min);

/// Extremal boundary dynamics (under mode):
/// x_dot = A x_star + B u_star, lambda_dot = -A^T lambda, with u_star the
/// maximiser of <-lambda, B u> over the input ellipsoid.
std::pair<Vector, Vector> pmp_rhs(const EllipsoidState& state, double t, const ReachProblem& prob);

/// Boundary dynamics of the over scheme: u_star maximises
/// <-Q^{-1/2} w_hat, B u> over the input ellipsoid.
Vector over_boundary_rhs(const EllipsoidState& state, double t, const ReachProblem& prob);

/// Members at the final time: q = x_e, Q = X_e, x_star on the terminal
/// boundary along uniformly spread unit directions, lambda = 2 X_e^{-1}(x_star - x_e).
std::vector<EllipsoidState> terminal_states(const ReachProblem& prob, int n_q);

/// Uniformly spread unit directions (equal angles in 2-D, Fibonacci sphere
/// in 3-D, seeded low-discrepancy normal deviates above).
std::vector<Vector> spread_directions(int dim, int count);

/// One classical RK4 step of length dt from t toward t - dt for every
/// member, with A, B, S (or kappa) and u_star frozen at t. Shapes are
/// symmetrized after the stage sum; a shape losing definiteness raises
/// DegeneracyError.
std::vector<EllipsoidState> rk4_coupled_step(const std::vector<EllipsoidState>& states, double t,
                                             double dt, ApproxKind mode, const ReachProblem& prob,
                                             const RunConfig& cfg,
                                             std::vector<GuardEvent>* diagnostics = nullptr);

ApproxFamily run_under(const ReachProblem& prob, const RunConfig& cfg);
ApproxFamily run_over(const ReachProblem& prob, const RunConfig& cfg);

} // namespace ellreach

#endif
