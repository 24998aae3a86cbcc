#include "ellreach/reach.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "ellreach/parallel.hpp"

namespace ellreach {

namespace {

std::string fmt_time(double t) {
    std::ostringstream os;
    os << t;
    return os.str();
}

} // namespace

DegeneracyError::DegeneracyError(double t, int member)
    : Error(Errc::ShapeDegenerate,
            "shape lost positive definiteness at t=" + fmt_time(t) + ", member " +
                std::to_string(member)),
      t_(t), member_(member) {}

Matrix qstar(double t, const Matrix& Q, const ReachProblem& prob) {
    const Matrix b = prob.B.eval(t);
    const Matrix qis = spd_inv_sqrt(Q);
    const Matrix bpbt = b * prob.input.shape() * b.transpose();
    return symmetrize(qis * bpbt * qis);
}

Vector center_rhs(double t, const Vector& q, const ReachProblem& prob) {
    return prob.A.eval(t) * q + prob.B.eval(t) * prob.input.center();
}

namespace {

/// Time-frozen problem data for one integration step.
struct FrozenCoeffs {
    Matrix A;
    Matrix At;
    Matrix BPBt;
    Vector Bp;
    Matrix B;
};

FrozenCoeffs freeze(double t, const ReachProblem& prob) {
    FrozenCoeffs f;
    f.A = prob.A.eval(t);
    f.At = f.A.transpose();
    f.B = prob.B.eval(t);
    f.BPBt = f.B * prob.input.shape() * f.B.transpose();
    f.Bp = f.B * prob.input.center();
    return f;
}

Matrix under_shape_rhs_frozen(const FrozenCoeffs& f, const Matrix& Q, const Matrix& S) {
    const EigenDecomposition dec = sym_eigen(Q);
    if (dec.eigenvalues.front() < 1e-12)
        throw Error(Errc::NotPsd, "under shape dynamics need strictly SPD shape");
    Vector roots(dec.eigenvalues.size()), inv_roots(dec.eigenvalues.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
        roots[i] = std::sqrt(dec.eigenvalues[i]);
        inv_roots[i] = 1.0 / roots[i];
    }
    const Matrix qh = dec.assemble(roots);
    const Matrix qih = dec.assemble(inv_roots);
    const Matrix qs = symmetrize(qih * f.BPBt * qih);
    const Matrix qsh = spd_sqrt(qs, true);
    const Matrix forcing = qh * (qsh * S + S.transpose() * qsh) * qh;
    return symmetrize(f.A * Q + Q * f.At - forcing);
}

Matrix over_shape_rhs_frozen(const FrozenCoeffs& f, const Matrix& Q, double kappa) {
    Matrix r = f.A * Q + Q * f.At;
    r -= (1.0 / kappa) * f.BPBt;
    r -= kappa * Q;
    return symmetrize(r);
}

} // namespace

Matrix under_shape_rhs(double t, const Matrix& Q, const Matrix& S, const ReachProblem& prob) {
    if (!is_orthogonal(S, 1e-8))
        throw Error(Errc::NotOrthogonal, "under shape dynamics require an orthogonal S");
    return under_shape_rhs_frozen(freeze(t, prob), Q, S);
}

Matrix over_shape_rhs(double t, const Matrix& Q, double kappa, const ReachProblem& prob) {
    if (!(kappa > 0.0))
        throw Error(Errc::NonPositiveKappa, "over shape dynamics require kappa > 0");
    return over_shape_rhs_frozen(freeze(t, prob), Q, kappa);
}

Matrix jacobi_rotation(const Vector& w, const Vector& w_star) {
    if (w.size() != w_star.size())
        throw Error(Errc::DimensionMismatch, "jacobi_rotation: direction dimensions differ");
    if (std::abs(norm2(w) - 1.0) > 1e-10 || std::abs(norm2(w_star) - 1.0) > 1e-10)
        throw Error(Errc::NotUnitNorm, "jacobi_rotation: directions must be unit norm");

    const int n = int(w.size());
    if (n == 1) {
        Matrix s(1, 1);
        s(0, 0) = (w[0] * w_star[0] > 0.0) ? 1.0 : -1.0;
        return s;
    }

    const double cos_theta = dot(w, w_star);
    Vector resid = w_star - cos_theta * w;
    const double sin_theta = norm2(resid);

    if (sin_theta < 1e-12) {
        if (cos_theta > 0.0) return Matrix::identity(n);
        // Antipodal pair: rotate by pi in the plane of w and any unit vector
        // orthogonal to it.
        int k = 0;
        for (int i = 1; i < n; ++i)
            if (std::abs(w[i]) < std::abs(w[k])) k = i;
        Vector axis(n, 0.0);
        axis[k] = 1.0;
        Vector perp = axis - dot(axis, w) * w;
        perp = (1.0 / norm2(perp)) * perp;
        Matrix s = Matrix::identity(n);
        s -= 2.0 * outer(w, w);
        s -= 2.0 * outer(perp, perp);
        return s;
    }

    const Vector r = w;
    const Vector r_perp = (1.0 / sin_theta) * resid;
    Matrix s = Matrix::identity(n);
    s += sin_theta * (outer(r_perp, r) - outer(r, r_perp));
    s += (cos_theta - 1.0) * (outer(r, r) + outer(r_perp, r_perp));
    return s;
}

RotationChoice select_rotation(const EllipsoidState& state, const Matrix& q_star, double q_min) {
    RotationChoice choice;
    const int n = int(state.q.size());
    const Matrix qsh = spd_sqrt(q_star, true);
    const Vector dir = qsh * state.w_hat;
    choice.guard_zero_direction = norm2(dir) < 1e-12;
    choice.guard_min_axis = min_eigenvalue(state.Q) < q_min;
    if (choice.guard_zero_direction || choice.guard_min_axis) {
        choice.S = Matrix::identity(n);
        return choice;
    }
    const Vector w = (1.0 / norm2(state.w_hat)) * state.w_hat;
    const Vector w_target = (1.0 / norm2(dir)) * dir;
    choice.S = jacobi_rotation(w, w_target);
    return choice;
}

KappaChoice select_kappa(const EllipsoidState& state, const Matrix& q_star, double kappa_min) {
    KappaChoice choice;
    const Matrix qsh = spd_sqrt(q_star, true);
    const double num = norm2(qsh * state.w_hat);
    if (num < 1e-12) {
        choice.kappa = kappa_min;
        choice.guard_floor = true;
        return choice;
    }
    choice.kappa = num / norm2(state.w_hat);
    return choice;
}

std::pair<Vector, Vector> pmp_rhs(const EllipsoidState& state, double t, const ReachProblem& prob) {
    const Matrix a = prob.A.eval(t);
    const Matrix b = prob.B.eval(t);
    const Vector u_star = prob.input.support_argmax(b.transpose() * state.lambda);
    Vector x_dot = a * state.x_star + b * u_star;
    Vector lambda_dot = -1.0 * (a.transpose() * state.lambda);
    return {std::move(x_dot), std::move(lambda_dot)};
}

Vector over_boundary_rhs(const EllipsoidState& state, double t, const ReachProblem& prob) {
    const Matrix a = prob.A.eval(t);
    const Matrix b = prob.B.eval(t);
    const Vector normal = spd_inv_sqrt(state.Q) * state.w_hat; // = Q^{-1}(x_star - q)
    const Vector u_star = prob.input.support_argmax(b.transpose() * normal);
    return a * state.x_star + b * u_star;
}

std::vector<Vector> spread_directions(int dim, int count) {
    if (dim < 1 || count < 1)
        throw Error(Errc::ValidationError, "directions need dim >= 1 and count >= 1");
    std::vector<Vector> dirs(count);
    if (dim == 1) {
        for (int i = 0; i < count; ++i) dirs[i] = Vector{i % 2 == 0 ? 1.0 : -1.0};
        return dirs;
    }
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            const double th = 2.0 * M_PI * double(i) / double(count);
            dirs[i] = Vector{std::cos(th), std::sin(th)};
        }
        return dirs;
    }
    if (dim == 3) {
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / double(count);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            dirs[i] = Vector{r * std::cos(golden * i), r * std::sin(golden * i), z};
        }
        return dirs;
    }
    // Higher dimensions: seeded normal deviates, normalized.
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
    auto next_uniform = [&seed]() {
        seed += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = seed;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return (double(z >> 11) + 0.5) * 0x1.0p-53;
    };
    for (int i = 0; i < count; ++i) {
        Vector w(dim);
        double n2 = 0.0;
        do {
            for (int j = 0; j < dim; j += 2) {
                const double u1 = next_uniform(), u2 = next_uniform();
                const double rad = std::sqrt(-2.0 * std::log(u1));
                w[j] = rad * std::cos(2.0 * M_PI * u2);
                if (j + 1 < dim) w[j + 1] = rad * std::sin(2.0 * M_PI * u2);
            }
            n2 = norm2(w);
        } while (n2 < 1e-6);
        dirs[i] = (1.0 / n2) * w;
    }
    return dirs;
}

std::vector<EllipsoidState> terminal_states(const ReachProblem& prob, int n_q) {
    if (n_q < 1)
        throw Error(Errc::ValidationError, "terminal_states: n_q must be >= 1");
    const Ellipsoid& terminal = prob.terminal;
    const Matrix inv_sqrt = spd_inv_sqrt(terminal.shape());
    const std::vector<Vector> dirs = spread_directions(terminal.dim(), n_q);

    std::vector<EllipsoidState> states(n_q);
    for (int i = 0; i < n_q; ++i) {
        EllipsoidState st;
        st.q = terminal.center();
        st.Q = terminal.shape();
        st.x_star = terminal.boundary_point(dirs[i]);
        const Vector diff = st.x_star - terminal.center();
        st.lambda = 2.0 * (inv_sqrt * (inv_sqrt * diff)); // 2 X_e^{-1}(x_star - x_e)
        st.w_hat = dirs[i];
        states[i] = std::move(st);
    }
    return states;
}

namespace {

struct StateDeriv {
    Vector dq;
    Matrix dQ;
    Vector dx;
    Vector dl;
};

EllipsoidState advance(const EllipsoidState& s, double h, const StateDeriv& d, bool with_lambda) {
    EllipsoidState r = s;
    r.q = s.q + h * d.dq;
    r.Q = s.Q + h * d.dQ;
    r.x_star = s.x_star + h * d.dx;
    if (with_lambda) r.lambda = s.lambda + h * d.dl;
    return r;
}

/// Steps one member from t to t - dt. Everything held per-step constant
/// (A, B, u_star, S or kappa) is decided here from the state at t.
EllipsoidState step_member(const EllipsoidState& state, double t, double dt, ApproxKind mode,
                           int member, const ReachProblem& prob, const RunConfig& cfg,
                           std::vector<GuardEvent>* diagnostics) {
    const FrozenCoeffs f = freeze(t, prob);
    const bool under = mode == ApproxKind::Under;

    Matrix S;
    double kappa = 0.0;
    Vector u_star;
    try {
        const Matrix qis = spd_inv_sqrt(state.Q);
        const Matrix q_star = symmetrize(qis * f.BPBt * qis);
        if (under) {
            if (cfg.rotation_override) {
                S = cfg.rotation_override(t, member, state);
            } else {
                RotationChoice choice = select_rotation(state, q_star, cfg.q_min);
                S = std::move(choice.S);
                if (diagnostics) {
                    if (choice.guard_zero_direction)
                        diagnostics->push_back({t, member, GuardEvent::Kind::ZeroDirection});
                    if (choice.guard_min_axis)
                        diagnostics->push_back({t, member, GuardEvent::Kind::MinAxis});
                }
            }
            u_star = prob.input.support_argmax(f.B.transpose() * state.lambda);
        } else {
            KappaChoice choice = select_kappa(state, q_star, cfg.kappa_min);
            kappa = choice.kappa;
            if (diagnostics && choice.guard_floor)
                diagnostics->push_back({t, member, GuardEvent::Kind::KappaFloor});
            u_star = prob.input.support_argmax(f.B.transpose() * (qis * state.w_hat));
        }
    } catch (const Error& e) {
        if (e.code() == Errc::NotPsd) throw DegeneracyError(t, member);
        throw;
    }

    auto rhs = [&](const EllipsoidState& s) {
        StateDeriv d;
        d.dq = f.A * s.q + f.Bp;
        try {
            d.dQ = under ? under_shape_rhs_frozen(f, s.Q, S) : over_shape_rhs_frozen(f, s.Q, kappa);
        } catch (const Error& e) {
            if (e.code() == Errc::NotPsd) throw DegeneracyError(t, member);
            throw;
        }
        d.dx = f.A * s.x_star + f.B * u_star;
        if (under) d.dl = -1.0 * (f.At * s.lambda);
        return d;
    };

    const double h = -dt; // marching backward in time
    const StateDeriv k1 = rhs(state);
    const StateDeriv k2 = rhs(advance(state, h / 2.0, k1, under));
    const StateDeriv k3 = rhs(advance(state, h / 2.0, k2, under));
    const StateDeriv k4 = rhs(advance(state, h, k3, under));

    EllipsoidState next = state;
    const double h6 = h / 6.0;
    for (std::size_t i = 0; i < next.q.size(); ++i) {
        next.q[i] += h6 * (k1.dq[i] + 2.0 * k2.dq[i] + 2.0 * k3.dq[i] + k4.dq[i]);
        next.x_star[i] += h6 * (k1.dx[i] + 2.0 * k2.dx[i] + 2.0 * k3.dx[i] + k4.dx[i]);
        if (under)
            next.lambda[i] += h6 * (k1.dl[i] + 2.0 * k2.dl[i] + 2.0 * k3.dl[i] + k4.dl[i]);
    }
    Matrix dQ = k1.dQ;
    dQ += 2.0 * k2.dQ;
    dQ += 2.0 * k3.dQ;
    dQ += k4.dQ;
    next.Q = symmetrize(next.Q + h6 * dQ);

    // Refresh the cached direction and reject degenerate shapes.
    const EigenDecomposition dec = sym_eigen(next.Q);
    if (dec.eigenvalues.front() < 1e-12) throw DegeneracyError(t - dt, member);
    Vector inv_roots(dec.eigenvalues.size());
    for (std::size_t i = 0; i < inv_roots.size(); ++i)
        inv_roots[i] = 1.0 / std::sqrt(dec.eigenvalues[i]);
    next.w_hat = dec.assemble(inv_roots) * (next.x_star - next.q);
    return next;
}

std::vector<double> step_grid(double t0, double T, double dt) {
    const double span = T - t0;
    const int n_steps = std::max(1, int(std::ceil(span / dt - 1e-9)));
    std::vector<double> times(n_steps + 1);
    for (int k = 0; k < n_steps; ++k) times[k] = T - k * dt;
    times[n_steps] = t0;
    return times;
}

std::vector<bool> recording_mask(const std::vector<double>& times, const RunConfig& cfg,
                                 double dt) {
    std::vector<bool> record(times.size(), cfg.t_eval.empty());
    for (double te : cfg.t_eval) {
        std::size_t best = 0;
        double best_gap = std::abs(times[0] - te);
        for (std::size_t k = 1; k < times.size(); ++k) {
            const double gap = std::abs(times[k] - te);
            if (gap < best_gap) {
                best_gap = gap;
                best = k;
            }
        }
        if (best_gap > 0.5 * dt + 1e-9)
            throw Error(Errc::ValidationError,
                        "requested output time " + fmt_time(te) + " lies outside the step grid");
        record[best] = true;
    }
    return record;
}

ApproxFamily run(const ReachProblem& prob, const RunConfig& cfg, ApproxKind mode) {
    validate_problem(prob);
    if (!(cfg.dt > 0.0))
        throw Error(Errc::ValidationError, "dt must be positive");
    if (cfg.dt > prob.T - prob.t0 + 1e-12)
        throw Error(Errc::StepTooLarge, "dt exceeds the horizon length");
    if (cfg.n_q < 1)
        throw Error(Errc::ValidationError, "n_q must be >= 1");

    const std::vector<double> times = step_grid(prob.t0, prob.T, cfg.dt);
    const std::vector<bool> record = recording_mask(times, cfg, cfg.dt);

    ApproxFamily fam;
    fam.kind = mode;
    fam.problem = prob;

    std::vector<EllipsoidState> states = terminal_states(prob, cfg.n_q);
    if (record[0]) {
        fam.times.push_back(times[0]);
        fam.snapshots.push_back(states);
    }

    std::vector<std::vector<GuardEvent>> member_diag(cfg.n_q);
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double t = times[k];
        const double h = times[k] - times[k + 1];
        std::vector<EllipsoidState> next(states.size());
        parallel_for(cfg.n_q, [&](int i) {
            next[i] = step_member(states[i], t, h, mode, i, prob, cfg, &member_diag[i]);
        });
        states = std::move(next);
        if (record[k + 1]) {
            fam.times.push_back(times[k + 1]);
            fam.snapshots.push_back(states);
        }
    }

    // Merge per-member guard logs, ordered by time (descending) then member.
    for (int i = 0; i < cfg.n_q; ++i)
        fam.diagnostics.insert(fam.diagnostics.end(), member_diag[i].begin(),
                               member_diag[i].end());
    std::stable_sort(fam.diagnostics.begin(), fam.diagnostics.end(),
                     [](const GuardEvent& a, const GuardEvent& b) {
                         if (a.t != b.t) return a.t > b.t;
                         return a.member < b.member;
                     });
    return fam;
}

} // namespace

std::vector<EllipsoidState> rk4_coupled_step(const std::vector<EllipsoidState>& states, double t,
                                             double dt, ApproxKind mode, const ReachProblem& prob,
                                             const RunConfig& cfg,
                                             std::vector<GuardEvent>* diagnostics) {
    if (!(dt > 0.0))
        throw Error(Errc::ValidationError, "rk4_coupled_step: dt must be positive");
    std::vector<EllipsoidState> next(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
        next[i] = step_member(states[i], t, dt, mode, int(i), prob, cfg, diagnostics);
    return next;
}

ApproxFamily run_under(const ReachProblem& prob, const RunConfig& cfg) {
    return run(prob, cfg, ApproxKind::Under);
}

ApproxFamily run_over(const ReachProblem& prob, const RunConfig& cfg) {
    return run(prob, cfg, ApproxKind::Over);
}

const std::vector<EllipsoidState>& ApproxFamily::snapshot_at(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - t) <= 1e-9) return snapshots[k];
    throw Error(Errc::TimeNotStored, "no snapshot stored at t=" + fmt_time(t));
}

EllipsoidFamily ApproxFamily::family_at(double t) const {
    const std::vector<EllipsoidState>& snap = snapshot_at(t);
    EllipsoidFamily fam;
    fam.kind = kind == ApproxKind::Under ? EllipsoidFamily::Kind::Union
                                         : EllipsoidFamily::Kind::Intersection;
    fam.members.reserve(snap.size());
    for (const EllipsoidState& st : snap) fam.members.emplace_back(st.q, st.Q);
    return fam;
}

} // namespace ellreach
