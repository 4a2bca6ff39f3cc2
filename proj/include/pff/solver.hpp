#pragma once

#include "pff/assembly.hpp"
#include "pff/linear_solver.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

namespace pff
{

enum class SolverMode
{
    monolithic_full,
    monolithic_block,
    staggered,
};

inline const char* to_string(SolverMode m)
{
    switch (m) {
    case SolverMode::monolithic_full: return "monolithic-full";
    case SolverMode::monolithic_block: return "monolithic-block";
    case SolverMode::staggered: return "staggered";
    }
    return "?";
}

inline SolverMode parse_mode(const std::string& s)
{
    for (SolverMode m : {SolverMode::monolithic_full, SolverMode::monolithic_block, SolverMode::staggered})
        if (s == to_string(m))
            return m;
    throw ParameterError("unknown solver mode '" + s + "'");
}

struct StepControl
{
    double u_max = 0.1;  // mm
    int n_steps = 100;
    double cutback_factor = 0.5;
    int max_cutbacks = 8;
    double newton_tol_rel = 1e-6;
    double newton_tol_abs = 1e-8;  // N
    // max |R_phi,i / K_phiphi,ii|, i.e. roughly the size of the next phi update
    double phi_tol = 1e-8;
    int max_newton_iters = 15;
    double stagger_tol = 1e-6;
    int max_stagger_iters = 1000;
    int anderson_depth = 5;  // staggered passes mixed per update; 0: plain alternation
    double post_peak_fraction = 0.05;
    // Peak bracketing: a converged step whose force falls below
    // (1 - peak_drop) of the previous one is rejected and retried with a
    // smaller increment until it has been cut peak_refinements times. The
    // staggered fallback is held back until then as well.
    double peak_drop = 0.2;
    int peak_refinements = 4;
    // Maximum number of step halvings in the Newton line search (0: off).
    int line_search = 6;
    // Extrapolate the displacement field from the previous increment.
    bool predictor = true;

    void validate() const
    {
        if (!(u_max >= 0) || !std::isfinite(u_max))
            throw ParameterError("u_max must be non-negative");
        if (n_steps < 1)
            throw ParameterError("n_steps must be positive");
        if (!(cutback_factor > 0 && cutback_factor < 1))
            throw ParameterError("cutback_factor must lie in (0, 1)");
        if (max_cutbacks < 0)
            throw ParameterError("max_cutbacks must be non-negative");
        if (!(newton_tol_rel > 0) || !(newton_tol_abs > 0) || !(phi_tol > 0) || !(stagger_tol > 0))
            throw ParameterError("tolerances must be positive");
        if (max_newton_iters < 1 || max_stagger_iters < 1 || line_search < 0 || anderson_depth < 0)
            throw ParameterError("iteration limits must be positive");
        if (!(post_peak_fraction >= 0 && post_peak_fraction < 1))
            throw ParameterError("post_peak_fraction must lie in [0, 1)");
        if (!(peak_drop > 0 && peak_drop <= 1) || peak_refinements < 0)
            throw ParameterError("invalid peak bracketing settings");
    }
};

/// Where the force is measured. The sign is taken so that the force is
/// positive in the direction of the prescribed motion.
struct LoadSpec
{
    std::string node_set = "load_line";
    Component component = Component::uy;
};

struct SolverState
{
    Eigen::VectorXd x;
    std::vector<QuadState> qp;
    double displacement = 0.0;
};

struct StepRecord
{
    int step = 0;
    double load_factor = 0.0;
    double displacement = 0.0;  // mm
    double force = 0.0;         // N
    double max_phi = 0.0;
    double elastic_energy = 0.0;
    double fracture_energy = 0.0;
    int iterations = 0;
    int cutbacks = 0;
    SolverMode scheme = SolverMode::monolithic_full;
};

struct SimulationRecord
{
    std::vector<StepRecord> steps;
    bool completed = false;
    std::string failure;

    /// Index of the first maximum of the force column, -1 when empty.
    int peak_index() const
    {
        int k = -1;
        for (int i = 0; i < static_cast<int>(steps.size()); ++i)
            if (k < 0 || steps[i].force > steps[k].force)
                k = i;
        return k;
    }
    double peak_force() const { return steps.empty() ? 0.0 : steps[peak_index()].force; }
    double displacement_at_peak() const { return steps.empty() ? 0.0 : steps[peak_index()].displacement; }
};

using StepObserver = std::function<void(const StepRecord&, const SolverState&)>;

struct RunOptions
{
    SolverMode mode = SolverMode::monolithic_full;
    PhaseForm form = PhaseForm::direct;
    int threads = 1;
    bool override_resolution = false;
    StepObserver observer;
};

/// Throws ResolutionError unless h <= ell/5 in the crack zone (whole mesh if
/// no "crack_zone" node set exists).
inline ResolutionReport check_resolution(const Mesh& mesh, double ell)
{
    std::optional<std::string> region;
    if (mesh.node_sets.count("crack_zone"))
        region = "crack_zone";
    const ResolutionReport r = characteristic_size(mesh, ell, region);
    if (!r.pass) {
        std::ostringstream s;
        s << "mesh too coarse for ell = " << ell << " mm: crack-zone element size " << r.h_crackzone
          << " mm gives ell/h = " << r.ratio << ", the rule requires h <= ell/5";
        throw ResolutionError(s.str());
    }
    return r;
}

class Simulation
{
public:
    Simulation(const Mesh& mesh, const MaterialParams& params, const std::vector<BoundaryCondition>& bcs,
               LoadSpec load = {}, int threads = 1, PhaseForm form = PhaseForm::direct)
        : mesh_(mesh), params_(params), dofs_(mesh, bcs), asmb_(mesh, dofs_, threads), load_(std::move(load)),
          form_(form)
    {
        params_.validate();
        mesh.node_set(load_.node_set);
        for (const BoundaryCondition& bc : bcs)
            if (bc.node_set == load_.node_set && bc.component == load_.component && bc.value != 0.0)
                sign_ = bc.value > 0 ? 1.0 : -1.0;
        if (sign_ == 0.0)
            throw ParameterError("no non-zero boundary condition on the load set '" + load_.node_set + "'");
        fixed_ = dofs_.constrained();
    }

    const Mesh& mesh() const { return mesh_; }
    const DofMap& dofs() const { return dofs_; }
    const Assembler& assembler() const { return asmb_; }
    const MaterialParams& params() const { return params_; }

    SolverState initial_state() const
    {
        SolverState s;
        s.x = Eigen::VectorXd::Zero(dofs_.n_dof());
        s.qp.assign(asmb_.num_qp(), QuadState{});
        return s;
    }

    /// Solves for prescribed displacement `disp` starting from the converged
    /// state `s`. On success `s` holds the new converged fields (history not
    /// yet committed) and the number of linear solves is returned.
    std::optional<int> solve(SolverState& s, double disp, SolverMode mode, const StepControl& c,
                             const Eigen::VectorXd* guess = nullptr)
    {
        dofs_.set_load_factor(disp);
        Eigen::VectorXd x = guess ? *guess : s.x;
        dofs_.impose(x);
        const std::optional<int> it = mode == SolverMode::staggered ? staggered(x, s.qp, c) : newton(x, s.qp, c, mode);
        if (!it)
            return std::nullopt;
        s.x = std::move(x);
        s.displacement = disp;
        return it;
    }

    /// Internal-force sum on the load set, signed along the applied motion.
    double force(const Eigen::VectorXd& x, std::span<const QuadState> qp) const
    {
        Eigen::VectorXd R;
        asmb_.assemble(x, qp, params_, Coupling::block_diagonal, PhaseForm::direct, R, nullptr);
        return sign_ * reaction_force(mesh_, dofs_, R, load_.node_set, load_.component);
    }

    double reaction(const SolverState& s, const std::string& node_set, Component c) const
    {
        Eigen::VectorXd R;
        asmb_.assemble(s.x, s.qp, params_, Coupling::block_diagonal, PhaseForm::direct, R, nullptr);
        return reaction_force(mesh_, dofs_, R, node_set, c);
    }

    /// u residual norms (N) of the iterates of the last Newton solve.
    const std::vector<double>& newton_residuals() const { return residuals_; }

    double max_phi(const Eigen::VectorXd& x) const
    {
        double m = 0.0;
        for (int v = 0; v < dofs_.n_nodes(); ++v)
            m = std::max(m, x(dofs_.phi(v)));
        return m;
    }

    SimulationRecord run(const StepControl& c, SolverMode mode, const StepObserver& observer = {},
                         SolverState* final_state = nullptr)
    {
        c.validate();
        SimulationRecord rec;
        SolverState s = initial_state();
        const auto finish = [&](const StepRecord& r) {
            asmb_.commit_history(s.x, s.qp, params_);
            rec.steps.push_back(r);
            if (observer)
                observer(rec.steps.back(), s);
        };
        const auto make_record = [&](int it, int cuts, SolverMode used) {
            StepRecord r;
            r.step = static_cast<int>(rec.steps.size()) + 1;
            r.displacement = s.displacement;
            r.load_factor = c.u_max > 0 ? s.displacement / c.u_max : 1.0;
            r.force = force(s.x, s.qp);
            r.max_phi = max_phi(s.x);
            const Energies en = asmb_.energies(s.x, params_);
            r.elastic_energy = en.elastic * mesh_.thickness;
            r.fracture_energy = en.fracture * mesh_.thickness;
            r.iterations = it;
            r.cutbacks = cuts;
            r.scheme = used;
            return r;
        };

        if (c.u_max == 0.0) {
            const auto it = solve(s, 0.0, mode, c);
            if (!it) {
                rec.failure = "trivial step did not converge";
                return rec;
            }
            finish(make_record(*it, 0, mode));
            rec.completed = true;
            if (final_state)
                *final_state = s;
            return rec;
        }

        const double d0 = c.u_max / c.n_steps;
        double d = d0;
        int level = 0;
        int failures = 0;
        int stagger_failures = 0;
        double peak = 0.0;
        Eigen::VectorXd prev_x = s.x;
        double prev_disp = 0.0;
        while (s.displacement < c.u_max) {
            const SolverMode used =
                failures >= 2 && level >= std::min(c.peak_refinements, c.max_cutbacks) ? SolverMode::staggered : mode;
            // The fallback is meant for snap-through, where small increments
            // only creep along the unstable branch: it restarts from the
            // nominal increment and halves on its own failures.
            const double inc = used == SolverMode::staggered ? d0 * std::pow(c.cutback_factor, stagger_failures) : d;
            double target = s.displacement + inc;
            if (target > c.u_max * (1.0 - 1e-12))
                target = c.u_max;
            std::optional<Eigen::VectorXd> guess;
            if (c.predictor && rec.steps.size() >= 1 && s.displacement > prev_disp) {
                // linear extrapolation of u only; phi starts from the converged field
                const double a = (target - s.displacement) / (s.displacement - prev_disp);
                guess = s.x;
                for (int i = 0; i < dofs_.n_dof(); ++i)
                    if (!dofs_.is_phi(i))
                        (*guess)(i) += a * (s.x(i) - prev_x(i));
            }
            const Eigen::VectorXd x_before = s.x;
            const double disp_before = s.displacement;
            const auto it = solve(s, target, used, c, guess ? &*guess : nullptr);
            if (!it) {
                ++failures;
                if (used == SolverMode::staggered && ++stagger_failures <= c.max_cutbacks)
                    continue;
                if (level >= c.max_cutbacks) {
                    std::ostringstream m;
                    m << "step to u = " << target << " mm failed after " << level << " cutbacks";
                    rec.failure = m.str();
                    break;
                }
                d *= c.cutback_factor;
                ++level;
                continue;
            }
            const StepRecord r = make_record(*it, level, used);
            if (level < std::min(c.peak_refinements, c.max_cutbacks) && !rec.steps.empty() &&
                r.force < (1.0 - c.peak_drop) * rec.steps.back().force) {
                s.x = x_before;
                s.displacement = disp_before;
                d *= c.cutback_factor;
                ++level;
                continue;
            }
            prev_x = x_before;
            prev_disp = disp_before;
            finish(r);
            failures = 0;
            stagger_failures = 0;
            if (level > 0) {
                d = std::min(d0, d / c.cutback_factor);
                --level;
            }
            peak = std::max(peak, r.force);
            if (peak > 0 && r.force < c.post_peak_fraction * peak) {
                rec.completed = true;
                break;
            }
        }
        if (rec.failure.empty())
            rec.completed = true;
        if (final_state)
            *final_state = s;
        return rec;
    }

private:
    struct Norms
    {
        double u = 0.0;
        double phi = 0.0;
    };

    Norms norms(const Eigen::VectorXd& R, const SparseMatrix& K, const std::vector<char>& fixed) const
    {
        Norms n;
        double su = 0.0;
        for (int i = 0; i < dofs_.n_dof(); ++i) {
            if (fixed[i])
                continue;
            if (dofs_.is_phi(i))
                n.phi = std::max(n.phi, std::abs(R(i) / K.coeff(i, i)));
            else
                su += R(i) * R(i);
        }
        n.u = std::sqrt(su) * mesh_.thickness;
        return n;
    }

    bool sane(const Eigen::VectorXd& x) const
    {
        if (!x.allFinite())
            return false;
        for (int v = 0; v < dofs_.n_nodes(); ++v)
            if (std::abs(x(dofs_.phi(v))) > 2.0)
                return false;
        return true;
    }

    // Jacobi-scaled residual energy sum R_i^2 / D_i over the free DOFs. Heat
    // form phi rows are the direct ones divided by Gc ell; weighting them back
    // keeps the line search, and so the iterates, identical in both forms.
    double merit(const Eigen::VectorXd& R, const Eigen::VectorXd& D) const
    {
        const double w_phi = form_ == PhaseForm::heat ? params_.Gc * params_.ell : 1.0;
        double m = 0.0;
        for (int i = 0; i < dofs_.n_dof(); ++i)
            if (!fixed_[i])
                m += R(i) * R(i) / D(i) * (dofs_.is_phi(i) ? w_phi : 1.0);
        return m;
    }

    // Newton with backtracking on merit(). The history switch makes the
    // residual only piecewise smooth and full steps can cycle between
    // active sets; the line search breaks such cycles.
    std::optional<int> newton(Eigen::VectorXd& x, const std::vector<QuadState>& qp, const StepControl& c,
                              SolverMode mode)
    {
        const Coupling coupling = mode == SolverMode::monolithic_full ? Coupling::full : Coupling::block_diagonal;
        Eigen::VectorXd R, dx, D, R_trial, x_trial;
        SparseMatrix K;
        double ru0 = -1.0;
        residuals_.clear();
        for (int it = 0;; ++it) {
            asmb_.assemble(x, qp, params_, coupling, form_, R, &K);
            if (!R.allFinite())
                return std::nullopt;
            const Norms n = norms(R, K, fixed_);
            residuals_.push_back(n.u);
            if (ru0 < 0) {
                ru0 = n.u;
                D = K.diagonal().cwiseAbs().cwiseMax(std::numeric_limits<double>::min());
            }
            if (n.u <= std::max(c.newton_tol_abs, c.newton_tol_rel * ru0) && n.phi <= c.phi_tol)
                return it;
            if (it == c.max_newton_iters || n.u > 1e4 * std::max(ru0, c.newton_tol_abs))
                return std::nullopt;
            const double m0 = merit(R, D);
            apply_constraints(K, R, x, fixed_, dofs_.prescribed());
            if (!lin_.factorize(K) || !lin_.solve(-R, dx))
                return std::nullopt;
            double alpha = 1.0;
            for (int ls = 0;; ++ls) {
                x_trial = x + alpha * dx;
                if (ls == c.line_search)
                    break;
                asmb_.assemble(x_trial, qp, params_, coupling, form_, R_trial, nullptr);
                if (R_trial.allFinite() && merit(R_trial, D) < m0)
                    break;
                alpha *= 0.5;
            }
            x = std::move(x_trial);
            if (!sane(x))
                return std::nullopt;
        }
    }

    // Rows/columns of K selected by `local` (>= 0), in increasing global order.
    static SparseMatrix extract(const SparseMatrix& K, const std::vector<int>& local, int m)
    {
        std::vector<int> outer(m + 1, 0), inner;
        std::vector<double> val;
        int col = 0;
        for (int j = 0; j < K.outerSize(); ++j) {
            if (local[j] < 0)
                continue;
            for (SparseMatrix::InnerIterator it(K, j); it; ++it)
                if (local[it.row()] >= 0) {
                    inner.push_back(local[it.row()]);
                    val.push_back(it.value());
                }
            outer[++col] = static_cast<int>(inner.size());
        }
        return Eigen::Map<const SparseMatrix>(m, m, static_cast<int>(inner.size()), outer.data(), inner.data(),
                                              val.data());
    }

    // Alternate minimization. Each pass makes one Newton update of u with phi
    // frozen, then solves the phi equation with u frozen (linear in phi, since
    // H_eff depends on u only). Stops once the u residual meets the Newton
    // tolerance and a pass changed neither field by more than stagger_tol.
    // Near a snap-through the plain map contracts very slowly, so the passes
    // are mixed by Anderson acceleration (type II, depth c.anderson_depth).
    std::optional<int> staggered(Eigen::VectorXd& x, const std::vector<QuadState>& qp, const StepControl& c)
    {
        const int n = dofs_.n_dof();
        std::vector<int> lu(n, -1), lp(n, -1);
        int mu = 0, mp = 0;
        for (int i = 0; i < n; ++i)
            if (!fixed_[i])
                (dofs_.is_phi(i) ? lp[i] : lu[i]) = dofs_.is_phi(i) ? mp++ : mu++;
        Eigen::VectorXd R, r, dx, g, f, f_prev, g_prev, w(n);
        SparseMatrix K;
        std::vector<Eigen::VectorXd> dF, dG;
        int solves = 0;
        double ru0 = -1.0, f_norm_prev = 0.0;
        bool small_change = false;
        for (int pass = 0; pass < c.max_stagger_iters; ++pass) {
            asmb_.assemble(x, qp, params_, Coupling::block_diagonal, form_, R, &K);
            if (!R.allFinite())
                return std::nullopt;
            const Norms nrm = norms(R, K, fixed_);
            if (ru0 < 0)
                ru0 = nrm.u;
            const bool u_ok = nrm.u <= std::max(c.newton_tol_abs, c.newton_tol_rel * ru0);
            if (small_change && u_ok && nrm.phi <= c.phi_tol)
                return solves;

            g = x;
            if (!u_ok) {
                r.resize(mu);
                for (int i = 0; i < n; ++i)
                    if (lu[i] >= 0)
                        r(lu[i]) = -R(i);
                if (!lin_u_.factorize(extract(K, lu, mu)) || !lin_u_.solve(r, dx))
                    return std::nullopt;
                ++solves;
                for (int i = 0; i < n; ++i)
                    if (lu[i] >= 0)
                        g(i) += dx(lu[i]);
                asmb_.assemble(g, qp, params_, Coupling::block_diagonal, form_, R, &K);
                if (!R.allFinite())
                    return std::nullopt;
            }
            r.resize(mp);
            for (int i = 0; i < n; ++i)
                if (lp[i] >= 0)
                    r(lp[i]) = -R(i);
            if (!lin_phi_.factorize(extract(K, lp, mp)) || !lin_phi_.solve(r, dx))
                return std::nullopt;
            ++solves;
            for (int i = 0; i < n; ++i)
                if (lp[i] >= 0)
                    g(i) += dx(lp[i]);

            f = g - x;
            double du = 0.0, un = 0.0, dphi = 0.0;
            for (int i = 0; i < n; ++i) {
                if (dofs_.is_phi(i))
                    dphi = std::max(dphi, std::abs(f(i)));
                else {
                    du = std::max(du, std::abs(f(i)));
                    un = std::max(un, std::abs(g(i)));
                }
            }
            small_change = (un > 0 ? du / un : du) < c.stagger_tol && dphi < c.stagger_tol;

            // displacements and phase field weighted to comparable size
            for (int i = 0; i < n; ++i)
                w(i) = dofs_.is_phi(i) ? 1.0 : (un > 0 ? 1.0 / un : 1.0);
            const double f_norm = f.cwiseProduct(w).norm();
            if (c.anderson_depth > 0 && pass > 0) {
                if (f_norm > f_norm_prev) {
                    dF.clear();
                    dG.clear();
                } else {
                    dF.push_back(f - f_prev);
                    dG.push_back(g - g_prev);
                    if (static_cast<int>(dF.size()) > c.anderson_depth) {
                        dF.erase(dF.begin());
                        dG.erase(dG.begin());
                    }
                }
            }
            f_prev = f;
            g_prev = g;
            f_norm_prev = f_norm;
            if (!dF.empty()) {
                Eigen::MatrixXd A(n, dF.size());
                for (std::size_t j = 0; j < dF.size(); ++j)
                    A.col(j) = dF[j].cwiseProduct(w);
                const Eigen::VectorXd gamma = A.colPivHouseholderQr().solve(f.cwiseProduct(w));
                x = g;
                for (std::size_t j = 0; j < dG.size(); ++j)
                    x -= gamma(j) * dG[j];
                for (int i = 0; i < n; ++i)
                    if (lp[i] >= 0)
                        x(i) = std::clamp(x(i), 0.0, 1.0);
            } else
                x = g;
            if (!sane(x))
                return std::nullopt;
        }
        return std::nullopt;
    }

    const Mesh& mesh_;
    MaterialParams params_;
    DofMap dofs_;
    Assembler asmb_;
    LoadSpec load_;
    PhaseForm form_;
    double sign_ = 0.0;
    std::vector<char> fixed_;
    std::vector<double> residuals_;
    LinearSolver lin_, lin_u_, lin_phi_;
};

/// Full displacement-controlled run. Checks the resolution rule first unless
/// overridden.
inline SimulationRecord run(const Mesh& mesh, const MaterialParams& params, const std::vector<BoundaryCondition>& bcs,
                            const LoadSpec& load, const StepControl& control, const RunOptions& opt = {},
                            SolverState* final_state = nullptr)
{
    params.validate();
    if (!opt.override_resolution)
        check_resolution(mesh, params.ell);
    Simulation sim(mesh, params, bcs, load, opt.threads, opt.form);
    return sim.run(control, opt.mode, opt.observer, final_state);
}

} // namespace pff
