#pragma once

#include "pff/benchmarks.hpp"
#include "pff/postproc.hpp"
#include "pff/solver.hpp"

#include <atomic>
#include <thread>

namespace pff
{

enum class SweepParam
{
    E,
    Gc,
    ell
};

inline SweepParam parse_sweep_param(const std::string& s)
{
    if (s == "E")
        return SweepParam::E;
    if (s == "Gc")
        return SweepParam::Gc;
    if (s == "ell")
        return SweepParam::ell;
    throw ParameterError("unknown sweep parameter '" + s + "' (expected E, Gc or ell)");
}

inline double& param_ref(MaterialParams& p, SweepParam which)
{
    switch (which) {
    case SweepParam::E: return p.E;
    case SweepParam::Gc: return p.Gc;
    case SweepParam::ell: return p.ell;
    }
    return p.E;
}

struct SweepAxis
{
    SweepParam param = SweepParam::Gc;
    std::vector<double> values;
};

struct SweepPlan
{
    MaterialParams base;
    std::vector<SweepAxis> axes;  // first axis varies slowest
    Specimen benchmark = Specimen::HC;
    GeometryOptions geometry;
    StepControl control;
    SolverMode mode = SolverMode::monolithic_full;
    PhaseForm form = PhaseForm::direct;
    int workers = 1;          // concurrent runs
    int threads_per_run = 1;  // assembly threads inside each run
    bool override_resolution = false;

    std::size_t size() const
    {
        std::size_t n = 1;
        for (const SweepAxis& a : axes)
            n *= a.values.size();
        return n;
    }

    /// Material parameters of run i in plan order.
    MaterialParams point(std::size_t i) const
    {
        MaterialParams p = base;
        for (auto a = axes.rbegin(); a != axes.rend(); ++a) {
            param_ref(p, a->param) = a->values[i % a->values.size()];
            i /= a->values.size();
        }
        return p;
    }

    /// Checks every point before any run starts.
    void validate() const
    {
        for (const SweepAxis& a : axes) {
            if (a.values.empty())
                throw ParameterError("sweep axis without values");
            for (double v : a.values)
                if (!(v > 0.0) || !std::isfinite(v))
                    throw ParameterError("sweep axis values must be positive");
        }
        for (std::size_t i = 0; i < size(); ++i)
            point(i).validate();
        control.validate();
        if (workers < 1 || threads_per_run < 1)
            throw ParameterError("worker and thread counts must be at least 1");
    }
};

struct SweepRow
{
    MaterialParams params;
    double sigma_c = 0.0;
    double peak_force = 0.0;
    double disp_at_peak = 0.0;
    bool converged = false;
    std::string failure;
    SimulationRecord record;
};

struct SweepResult
{
    std::vector<SweepRow> rows;  // plan order

    bool all_converged() const
    {
        return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.converged; });
    }
};

/// Runs every point of the plan on one shared mesh. Resolution is checked
/// once, against the smallest ell of the plan.
inline SweepResult run_sweep(const SweepPlan& plan)
{
    plan.validate();
    const Benchmark b = builtin_benchmark(plan.benchmark, plan.geometry);
    double ell_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < plan.size(); ++i)
        ell_min = std::min(ell_min, plan.point(i).ell);
    if (!plan.override_resolution)
        check_resolution(b.mesh, ell_min);

    SweepResult res;
    res.rows.resize(plan.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < plan.size();) {
            SweepRow& row = res.rows[i];
            row.params = plan.point(i);
            row.sigma_c = critical_stress(row.params);
            RunOptions opt;
            opt.mode = plan.mode;
            opt.form = plan.form;
            opt.threads = plan.threads_per_run;
            opt.override_resolution = true;
            try {
                row.record = run(b.mesh, row.params, b.bcs, b.load, plan.control, opt);
                row.converged = row.record.completed && !row.record.steps.empty();
                row.failure = row.record.failure;
            } catch (const std::exception& e) {
                row.converged = false;
                row.failure = e.what();
            }
            row.peak_force = row.record.peak_force();
            row.disp_at_peak = row.record.displacement_at_peak();
        }
    };
    const int n = static_cast<int>(std::min<std::size_t>(plan.workers, plan.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    return res;
}

inline void write_sweep_csv(const SweepResult& r, std::ostream& out)
{
    using detail::fmt;
    out << "E,Gc,ell,sigma_c,peak_force,disp_at_peak,converged\n";
    for (const SweepRow& row : r.rows)
        out << fmt("%.12g", row.params.E) << ',' << fmt("%.12g", row.params.Gc) << ',' << fmt("%.12g", row.params.ell)
            << ',' << fmt("%.12g", row.sigma_c) << ',' << fmt("%.12g", row.peak_force) << ','
            << fmt("%.12g", row.disp_at_peak) << ',' << (row.converged ? 1 : 0) << '\n';
}

inline void write_sweep_csv(const SweepResult& r, const std::filesystem::path& path)
{
    auto out = detail::open_out(path);
    write_sweep_csv(r, out);
    detail::close_out(out, path);
}

} // namespace pff
