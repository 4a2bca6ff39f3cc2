#include "pff/benchmarks.hpp"
#include "pff/verify.hpp"

#include <gtest/gtest.h>

using namespace pff;

namespace
{

MaterialParams sent_params()
{
    MaterialParams p;
    p.E = 210000.0;
    p.nu = 0.3;
    p.Gc = 2.7;
    p.ell = 0.5;
    return p;
}

StepControl tight(double u_max, int n_steps)
{
    StepControl c;
    c.u_max = u_max;
    c.n_steps = n_steps;
    c.newton_tol_rel = 1e-12;
    c.newton_tol_abs = 1e-10;
    c.stagger_tol = 1e-11;
    return c;
}

std::vector<StepRecord> run_sent(const MaterialParams& p, const StepControl& c, SolverMode mode,
                                 const StepObserver& obs = {})
{
    const Benchmark b = builtin_benchmark(Specimen::SENT);
    Simulation sim(b.mesh, p, b.bcs, b.load);
    const SimulationRecord r = sim.run(c, mode, obs);
    EXPECT_TRUE(r.completed) << r.failure;
    return r.steps;
}

} // namespace

TEST(Solver, UndamagedProblemTakesOneIteration)
{
    MaterialParams p = sent_params();
    p.Gc = 1e12;
    const Benchmark b = builtin_benchmark(Specimen::SENT);
    Simulation sim(b.mesh, p, b.bcs, b.load);
    SolverState s = sim.initial_state();
    StepControl c;
    for (SolverMode m : {SolverMode::monolithic_full, SolverMode::monolithic_block}) {
        s = sim.initial_state();
        const auto it = sim.solve(s, 0.002, m, c);
        ASSERT_TRUE(it);
        EXPECT_EQ(*it, 1) << to_string(m);
    }
    EXPECT_LT(sim.max_phi(s.x), 1e-6);
}

TEST(Solver, SingleElementFollowsHomogeneousSolution)
{
    MaterialParams p;
    const Benchmark b = uniaxial_element();
    Simulation sim(b.mesh, p, b.bcs, b.load);
    StepControl c;
    c.u_max = 3.0 * critical_strain(p);
    c.n_steps = 60;
    c.post_peak_fraction = 0.0;
    int checked = 0;
    const auto rec = sim.run(c, SolverMode::monolithic_full, [&](const StepRecord& r, const SolverState& s) {
        const Homogeneous1D h = homogeneous_1d(p, r.displacement);
        for (int v = 0; v < b.mesh.num_nodes(); ++v)
            EXPECT_NEAR(s.x(sim.dofs().phi(v)), h.phi, 1e-4) << "step " << r.step;
        EXPECT_NEAR(r.force, h.sigma, 1e-4 * critical_stress(p));
        ++checked;
    });
    EXPECT_TRUE(rec.completed);
    EXPECT_EQ(checked, 60);
}

// Same displacement sequence through every scheme, history committed after
// each converged step.
TEST(Solver, MonolithicAndStaggeredAgree)
{
    const Benchmark b = builtin_benchmark(Specimen::SENT);
    const MaterialParams p = sent_params();
    StepControl c = tight(0.0, 1);
    c.max_newton_iters = 100;  // the block scheme converges linearly
    std::vector<std::vector<StepRecord>> runs;
    for (SolverMode m : {SolverMode::monolithic_full, SolverMode::monolithic_block, SolverMode::staggered}) {
        Simulation sim(b.mesh, p, b.bcs, b.load);
        SolverState s = sim.initial_state();
        auto& steps = runs.emplace_back();
        for (int k = 1; k <= 8; ++k) {
            ASSERT_TRUE(sim.solve(s, 0.0004 * k, m, c)) << to_string(m) << " step " << k;
            sim.assembler().commit_history(s.x, s.qp, p);
            StepRecord r;
            r.force = sim.force(s.x, s.qp);
            r.max_phi = sim.max_phi(s.x);
            steps.push_back(r);
        }
    }
    const auto& full = runs[0];
    for (std::size_t j : {1u, 2u})
        for (std::size_t i = 0; i < full.size(); ++i) {
            EXPECT_NEAR(runs[j][i].force, full[i].force, 1e-6 * std::abs(full[i].force)) << "scheme " << j << " step " << i;
            EXPECT_NEAR(runs[j][i].max_phi, full[i].max_phi, 1e-6);
        }
    EXPECT_GT(full.back().max_phi, 0.1);
}

TEST(Solver, AndersonMixingDoesNotChangeTheSolution)
{
    const MaterialParams p = sent_params();
    const Benchmark b = builtin_benchmark(Specimen::SENT);
    Simulation sim(b.mesh, p, b.bcs, b.load);
    StepControl c = tight(0.0, 1);
    SolverState plain = sim.initial_state(), mixed = sim.initial_state();
    c.anderson_depth = 0;
    const auto n0 = sim.solve(plain, 0.003, SolverMode::staggered, c);
    c.anderson_depth = 5;
    const auto n5 = sim.solve(mixed, 0.003, SolverMode::staggered, c);
    ASSERT_TRUE(n0 && n5);
    EXPECT_LE(*n5, *n0);
    EXPECT_LT((plain.x - mixed.x).lpNorm<Eigen::Infinity>(), 1e-8 * plain.x.lpNorm<Eigen::Infinity>());
}

TEST(Solver, PeakScalesWithSqrtOfToughness)
{
    StepControl c;
    c.u_max = 0.02;
    c.n_steps = 200;
    c.post_peak_fraction = 0.3;
    MaterialParams p = sent_params();
    const Benchmark b = builtin_benchmark(Specimen::SENT);
    const auto r1 = run(b.mesh, p, b.bcs, b.load, c);
    p.Gc *= 4;
    const auto r4 = run(b.mesh, p, b.bcs, b.load, c);
    ASSERT_TRUE(r1.completed && r4.completed);
    ASSERT_GT(r1.peak_index(), 0);
    ASSERT_LT(r1.peak_index() + 1, static_cast<int>(r1.steps.size()));
    const double ratio = r4.peak_force() / r1.peak_force();
    EXPECT_GE(ratio, 1.9);
    EXPECT_LE(ratio, 2.1);
}

TEST(Solver, ZeroLoadIsOneTrivialStep)
{
    StepControl c;
    c.u_max = 0.0;
    const auto steps = run_sent(sent_params(), c, SolverMode::monolithic_full);
    ASSERT_EQ(steps.size(), 1u);
    EXPECT_EQ(steps[0].force, 0.0);
    EXPECT_EQ(steps[0].max_phi, 0.0);
}

TEST(Solver, UnloadedReactionIsZero)
{
    const Benchmark b = builtin_benchmark(Specimen::HC);
    Simulation sim(b.mesh, MaterialParams{}, b.bcs, b.load);
    const SolverState s = sim.initial_state();
    EXPECT_EQ(sim.force(s.x, s.qp), 0.0);
    EXPECT_EQ(sim.reaction(s, "support_left", Component::uy), 0.0);
}

TEST(Solver, BeamReactionsBalance)
{
    const Benchmark b = builtin_benchmark(Specimen::HC);
    Simulation sim(b.mesh, MaterialParams{}, b.bcs, b.load);
    StepControl c = tight(0.0, 1);
    SolverState s = sim.initial_state();
    ASSERT_TRUE(sim.solve(s, 0.05, SolverMode::monolithic_full, c));
    const double load = sim.reaction(s, "load_line", Component::uy);
    const double left = sim.reaction(s, "support_left", Component::uy);
    const double right = sim.reaction(s, "support_right", Component::uy);
    EXPECT_LT(load, 0.0);
    EXPECT_NEAR(load + left + right, 0.0, 10 * c.newton_tol_abs);
    EXPECT_NEAR(sim.force(s.x, s.qp), -load, 1e-12 * std::abs(load));
}

TEST(Solver, ElasticBeamMatchesBendingStiffness)
{
    // slender simply supported beam, point load at mid span
    const double L = 200.0, h = 10.0;
    Mesh m = rectangle_mesh(L, h, 400, 20);
    auto node_at = [&](double x, double y) {
        for (int v = 0; v < m.num_nodes(); ++v)
            if (std::abs(m.nodes[v](0) - x) < 1e-9 && std::abs(m.nodes[v](1) - y) < 1e-9)
                return std::vector<int>{v};
        return std::vector<int>{};
    };
    m.node_sets["left"] = node_at(0.0, 0.0);
    m.node_sets["right"] = node_at(L, 0.0);
    m.node_sets["mid"] = node_at(L / 2, h);
    MaterialParams p;
    p.Gc = 1e12;
    p.ell = 1.0;
    const std::vector<BoundaryCondition> bcs{
        {"left", Component::uy, 0.0}, {"right", Component::uy, 0.0}, {"mid", Component::ux, 0.0}, {"mid", Component::uy, -1.0}};
    Simulation sim(m, p, bcs, {"mid", Component::uy});
    SolverState s = sim.initial_state();
    const double delta = 0.01;
    ASSERT_TRUE(sim.solve(s, delta, SolverMode::monolithic_full, StepControl{}));
    const double E_ps = p.E / (1 - p.nu * p.nu);
    const double I = m.thickness * h * h * h / 12;
    const double k = 48 * E_ps * I / (L * L * L);
    EXPECT_NEAR(sim.force(s.x, s.qp) / delta, k, 0.05 * k);
}

TEST(Solver, HydrostaticCompressionDoesNotDamage)
{
    Benchmark b = uniaxial_element();
    Mesh& m = b.mesh;
    m.node_sets["y1"] = nodes_on_plane(m, 1, 1.0);
    m.node_sets["z1"] = nodes_on_plane(m, 2, 1.0);
    b.bcs = {{"x0", Component::ux, 0.0}, {"y0", Component::uy, 0.0}, {"z0", Component::uz, 0.0},
             {"x1", Component::ux, -1.0}, {"y1", Component::uy, -1.0}, {"z1", Component::uz, -1.0}};
    MaterialParams p;
    Simulation sim(m, p, b.bcs, b.load);
    StepControl c;
    c.u_max = 0.05;  // far beyond the tensile critical strain
    c.n_steps = 10;
    const auto rec = sim.run(c, SolverMode::monolithic_full);
    ASSERT_TRUE(rec.completed);
    for (const StepRecord& r : rec.steps)
        EXPECT_LE(r.max_phi, 1e-6);
    const double K = p.E / (3 * (1 - 2 * p.nu));
    EXPECT_NEAR(rec.steps.back().force, 3 * K * c.u_max, 1e-9 * K);
}

TEST(SolverProperty, RunInvariants)
{
    StepControl c;
    c.u_max = 0.012;
    c.n_steps = 60;
    const Benchmark b = builtin_benchmark(Specimen::SENT);
    Simulation sim(b.mesh, sent_params(), b.bcs, b.load);
    std::vector<double> H_prev;
    double max_phi_prev = 0.0;
    const auto rec = sim.run(c, SolverMode::monolithic_full, [&](const StepRecord& r, const SolverState& s) {
        if (!H_prev.empty())
            for (std::size_t q = 0; q < s.qp.size(); ++q)
                ASSERT_GE(s.qp[q].H, H_prev[q]) << "qp " << q << " step " << r.step;
        H_prev.resize(s.qp.size());
        for (std::size_t q = 0; q < s.qp.size(); ++q)
            H_prev[q] = s.qp[q].H;
        for (int v = 0; v < b.mesh.num_nodes(); ++v) {
            const double phi = s.x(sim.dofs().phi(v));
            EXPECT_GE(phi, -1e-6);
            EXPECT_LE(phi, 1 + 1e-6);
        }
        EXPECT_GE(r.max_phi, max_phi_prev);
        max_phi_prev = r.max_phi;
    });
    ASSERT_TRUE(rec.completed) << rec.failure;
    EXPECT_GT(max_phi_prev, 0.9);
}

TEST(SolverProperty, RerunsAreBitIdentical)
{
    StepControl c;
    c.u_max = 0.008;
    c.n_steps = 20;
    const auto a = run_sent(sent_params(), c, SolverMode::monolithic_full);
    const auto b = run_sent(sent_params(), c, SolverMode::monolithic_full);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].displacement, b[i].displacement);
        EXPECT_EQ(a[i].force, b[i].force);
        EXPECT_EQ(a[i].max_phi, b[i].max_phi);
        EXPECT_EQ(a[i].iterations, b[i].iterations);
    }
}

// Smooth step from a damaged converged state (active set settled): the
// last two residual ratios must each be at most one half.
TEST(SolverProperty, NewtonConvergesSuperlinearly)
{
    const Benchmark b = builtin_benchmark(Specimen::SENT);
    const MaterialParams p = sent_params();
    Simulation sim(b.mesh, p, b.bcs, b.load);
    SolverState s = sim.initial_state();
    for (int k = 1; k <= 4; ++k) {
        ASSERT_TRUE(sim.solve(s, 0.0004 * k, SolverMode::monolithic_full, StepControl{}));
        sim.assembler().commit_history(s.x, s.qp, p);
    }
    StepControl c;
    c.newton_tol_rel = 1e-11;
    c.newton_tol_abs = 1e-300;
    ASSERT_TRUE(sim.solve(s, 0.002, SolverMode::monolithic_full, c));
    const auto& r = sim.newton_residuals();
    ASSERT_GE(r.size(), 3u);
    const std::size_t n = r.size();
    EXPECT_LE(r[n - 1], 0.5 * r[n - 2]);
    EXPECT_LE(r[n - 2], 0.5 * r[n - 3]);
}

TEST(Solver, PadsPinPhaseFieldOnBeams)
{
    const Benchmark b = builtin_benchmark(Specimen::HC);
    ASSERT_TRUE(b.mesh.node_sets.count("no_damage"));
    const DofMap dofs(b.mesh, b.bcs);
    for (int v : b.mesh.node_set("no_damage"))
        EXPECT_TRUE(dofs.constrained()[dofs.phi(v)]);
    GeometryOptions g;
    g.pad_radius = 0.0;
    EXPECT_FALSE(builtin_benchmark(Specimen::HC, g).mesh.node_sets.count("no_damage"));

    Mesh m = rectangle_mesh(1.0, 1.0, 2, 2);
    m.node_sets["a"] = {0};
    EXPECT_THROW(DofMap(m, {{"a", Component::phi, 0.5}}), MeshError);
}

namespace
{

// Default material on the builtin SENT, run to failure once for the suite.
struct SentRegression
{
    Benchmark b = builtin_benchmark(Specimen::SENT);
    MaterialParams p;
    SimulationRecord rec;
    SolverState final;

    SentRegression()
    {
        StepControl c;
        c.u_max = 0.05;
        c.n_steps = 100;
        rec = run(b.mesh, p, b.bcs, b.load, c, {}, &final);
    }

    static const SentRegression& get()
    {
        static const SentRegression r;
        return r;
    }
};

} // namespace

TEST(SentRegression, SinglePeakThenDecay)
{
    const auto& r = SentRegression::get();
    ASSERT_TRUE(r.rec.completed) << r.rec.failure;
    const auto& s = r.rec.steps;
    for (std::size_t i = 1; i < s.size(); ++i)
        EXPECT_GT(s[i].displacement, s[i - 1].displacement);
    const int k = r.rec.peak_index();
    ASSERT_GT(k, 0);
    for (int i = 1; i <= k; ++i)
        EXPECT_GE(s[i].force, s[i - 1].force) << "step " << i;
    for (std::size_t i = k + 1; i < s.size(); ++i)
        EXPECT_LE(s[i].force, s[i - 1].force + 1e-9 * s[k].force) << "step " << i;
    EXPECT_LT(s.back().force, 0.1 * r.rec.peak_force());
    double m = 0.0;
    for (const StepRecord& x : s)
        m = std::max(m, x.force);
    EXPECT_EQ(r.rec.peak_force(), m);
}

// The phi >= 0.5 band across the broken ligament. On this specimen the
// half height equals ell, and the zero-flux edges keep the AT2 profile
// above 1/cosh(1) there, so the band spans the specimen.
TEST(SentRegression, CrackBandHalfWidth)
{
    const auto& r = SentRegression::get();
    const DofMap dofs(r.b.mesh, r.b.bcs);
    const Mesh& m = r.b.mesh;
    for (double x : {0.7, 0.8, 0.9}) {
        double lo = 1e9, hi = -1e9;
        for (int v = 0; v < m.num_nodes(); ++v)
            if (std::abs(m.nodes[v](0) - x) < 1e-9 && r.final.x(dofs.phi(v)) >= 0.5) {
                lo = std::min(lo, m.nodes[v](1));
                hi = std::max(hi, m.nodes[v](1));
            }
        ASSERT_LE(lo, hi) << "x = " << x;
        const double half = 0.5 * (hi - lo);
        EXPECT_GE(half, r.p.ell) << "x = " << x;
        EXPECT_LE(half, 4 * r.p.ell) << "x = " << x;
    }
}

TEST(Solver, HeatFormulationGivesTheSamePhaseField)
{
    const Benchmark b = builtin_benchmark(Specimen::SENT);
    const MaterialParams p;
    StepControl c = tight(0.05, 50);
    c.phi_tol = 1e-12;
    std::vector<Eigen::VectorXd> fields[2];
    std::vector<double> disp[2];
    for (int k = 0; k < 2; ++k) {
        Simulation sim(b.mesh, p, b.bcs, b.load, 1, k == 0 ? PhaseForm::direct : PhaseForm::heat);
        const auto rec = sim.run(c, SolverMode::monolithic_full, [&](const StepRecord& r, const SolverState& s) {
            Eigen::VectorXd phi(b.mesh.num_nodes());
            for (int v = 0; v < b.mesh.num_nodes(); ++v)
                phi(v) = s.x(sim.dofs().phi(v));
            fields[k].push_back(phi);
            disp[k].push_back(r.displacement);
        });
        ASSERT_TRUE(rec.completed) << rec.failure;
    }
    ASSERT_EQ(fields[0].size(), fields[1].size());
    for (std::size_t i = 0; i < fields[0].size(); ++i) {
        ASSERT_EQ(disp[0][i], disp[1][i]);
        EXPECT_LE((fields[0][i] - fields[1][i]).lpNorm<Eigen::Infinity>(), 1e-8) << "step " << i;
    }
    EXPECT_GT(fields[0].back().maxCoeff(), 0.9);
}
