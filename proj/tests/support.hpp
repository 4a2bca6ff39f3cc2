#pragma once

#include "pff/assembly.hpp"
#include "pff/geometry.hpp"

#include <random>
#include <vector>

namespace pff_test
{

using namespace pff;

// Quad mesh of a rectangle with interior nodes jittered by `jitter` * h.
inline Mesh jittered_rectangle(int nx, int ny, double jitter, unsigned seed)
{
    Mesh m = rectangle_mesh(1.0, 1.0, nx, ny);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    for (Vec3& x : m.nodes)
        if (x(0) > 0 && x(0) < 1 && x(1) > 0 && x(1) < 1) {
            x(0) += jitter * u(rng) / nx;
            x(1) += jitter * u(rng) / ny;
        }
    return m;
}

// Random nodal state: displacements of order `u_scale`, phase field in [0, phi_max).
inline Eigen::VectorXd random_fields(const DofMap& dofs, std::mt19937& rng, double u_scale = 1e-2,
                                     double phi_max = 0.9)
{
    std::uniform_real_distribution<double> u(-1, 1), p(0, phi_max);
    Eigen::VectorXd x(dofs.n_dof());
    for (int d = 0; d < dofs.n_dof(); ++d)
        x(d) = dofs.is_phi(d) ? p(rng) : u_scale * u(rng);
    return x;
}

// History at each qp set to psi0+ times a random factor in {0.5, 2}, keeping
// every point well away from the activation switch.
inline std::vector<QuadState> states_away_from_switch(const Assembler& asmb, const Eigen::VectorXd& x,
                                                      const MaterialParams& p, std::mt19937& rng)
{
    std::vector<QuadState> st(asmb.num_qp());
    asmb.commit_history(x, st, p);
    std::bernoulli_distribution coin(0.5);
    for (QuadState& s : st)
        s.H = s.psi_plus * (coin(rng) ? 0.5 : 2.0);
    return st;
}

} // namespace pff_test
