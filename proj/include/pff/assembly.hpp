#ifndef PFF_ASSEMBLY_HPP
#define PFF_ASSEMBLY_HPP

// Global coupled residual and Jacobian of the displacement / phase field
// system. Unknowns are interleaved per node: (u_x, u_y, [u_z], phi).
// Body forces are zero and tractions only appear as reactions on
// constrained DOFs.

#include "pff/error.hpp"
#include "pff/fem.hpp"
#include "pff/material.hpp"
#include "pff/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace pff
{

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

enum class Component : int
{
    ux = 0,
    uy = 1,
    uz = 2,
    phi = 3  // only the value 0: keeps a region undamaged
};

struct BoundaryCondition
{
    std::string node_set;
    Component component = Component::ux;
    double value = 0.0;  // mm at load factor 1
};

enum class Coupling
{
    full,
    block_diagonal
};

/// How the phase field rows are formed: directly from the weak form, or as
/// steady heat conduction with a nonlinear source (rows scaled by 1/(Gc ell)).
enum class PhaseForm
{
    direct,
    heat
};

class DofMap
{
public:
    DofMap(const Mesh& mesh, const std::vector<BoundaryCondition>& bcs)
        : dim_(mesh.dim), per_node_(mesh.dim + 1), n_nodes_(mesh.num_nodes())
    {
        const int n = n_dof();
        constrained_.assign(n, 0);
        unit_value_ = Eigen::VectorXd::Zero(n);
        prescribed_ = Eigen::VectorXd::Zero(n);

        std::vector<char> used(n_nodes_, 0);
        for (const Element& el : mesh.elements)
            for (int v : el.nodes)
                used[v] = 1;
        for (int v = 0; v < n_nodes_; ++v)
            if (!used[v])
                for (int c = 0; c < per_node_; ++c)
                    constrained_[v * per_node_ + c] = 1;

        for (const BoundaryCondition& bc : bcs) {
            const int c = static_cast<int>(bc.component);
            const bool on_phi = bc.component == Component::phi;
            if (!on_phi && c >= dim_)
                throw MeshError("boundary condition component out of range for a " + std::to_string(dim_) +
                                "D mesh");
            if (on_phi && bc.value != 0.0)
                throw MeshError("phase field boundary conditions must have value 0");
            for (int v : mesh.node_set(bc.node_set)) {
                const int d = on_phi ? phi(v) : u(v, c);
                if (constrained_[d] && unit_value_(d) != bc.value)
                    throw MeshError("conflicting boundary conditions on node " + std::to_string(v));
                constrained_[d] = 1;
                unit_value_(d) = bc.value;
            }
        }
    }

    int dim() const { return dim_; }
    int per_node() const { return per_node_; }
    int n_nodes() const { return n_nodes_; }
    int n_dof() const { return n_nodes_ * per_node_; }
    int u(int node, int c) const { return node * per_node_ + c; }
    int phi(int node) const { return node * per_node_ + dim_; }
    bool is_phi(int dof) const { return dof % per_node_ == dim_; }

    const std::vector<char>& constrained() const { return constrained_; }
    const Eigen::VectorXd& prescribed() const { return prescribed_; }

    /// Prescribed values at the given load factor.
    void set_load_factor(double lambda) { prescribed_ = lambda * unit_value_; }

    /// Writes the prescribed values into the constrained entries of x.
    void impose(Eigen::VectorXd& x) const
    {
        for (int d = 0; d < n_dof(); ++d)
            if (constrained_[d])
                x(d) = prescribed_(d);
    }

private:
    int dim_;
    int per_node_;
    int n_nodes_;
    std::vector<char> constrained_;
    Eigen::VectorXd unit_value_;
    Eigen::VectorXd prescribed_;
};

/// Global DOF indices of an element in block order: all displacement
/// components node-major, then the phase field of each node.
template <ElementKind K>
std::array<int, ElementTraits<K>::ndof> element_dofs(const Element& el, const DofMap& dofs)
{
    using T = ElementTraits<K>;
    std::array<int, T::ndof> g{};
    for (int a = 0; a < T::nodes; ++a) {
        for (int c = 0; c < T::dim; ++c)
            g[a * T::dim + c] = dofs.u(el.nodes[a], c);
        g[T::ndof_u + a] = dofs.phi(el.nodes[a]);
    }
    return g;
}

/// Sparse structure of the Jacobian: union of the element DOF cliques
/// (node adjacency expanded to full per-node blocks, so it is symmetric).
inline SparseMatrix sparse_pattern(const Mesh& mesh, const DofMap& dofs)
{
    const int nn = mesh.num_nodes();
    std::vector<std::vector<int>> adj(nn);
    for (const Element& el : mesh.elements)
        for (int a : el.nodes)
            for (int b : el.nodes)
                adj[a].push_back(b);
    for (int v = 0; v < nn; ++v) {
        adj[v].push_back(v);
        std::sort(adj[v].begin(), adj[v].end());
        adj[v].erase(std::unique(adj[v].begin(), adj[v].end()), adj[v].end());
    }
    const int pn = dofs.per_node();
    const int n = dofs.n_dof();
    std::vector<int> outer(n + 1, 0);
    std::vector<int> inner;
    for (int v = 0; v < nn; ++v)
        for (int c = 0; c < pn; ++c) {
            const int col = v * pn + c;
            for (int w : adj[v])
                for (int r = 0; r < pn; ++r)
                    inner.push_back(w * pn + r);
            outer[col + 1] = static_cast<int>(inner.size());
        }
    std::vector<double> zeros(inner.size(), 0.0);
    SparseMatrix K = Eigen::Map<const SparseMatrix>(n, n, static_cast<int>(inner.size()), outer.data(),
                                                    inner.data(), zeros.data());
    return K;
}

template <ElementKind Kind>
struct ElementSystem
{
    using T = ElementTraits<Kind>;
    Eigen::Matrix<double, T::ndof, 1> R;
    Eigen::Matrix<double, T::ndof, T::ndof> K;
};

/// How the local (non-gradient) phase field terms are integrated.
///   consistent: g, phi^2 and the driving term evaluated at the qp value of phi.
///   lumped:     nodal values, i.e. g_q = sum_a N_a g(phi_a) and row a of the
///               phi equation sees only phi_a. The discrete energy stays a
///               single functional (so the tangent is still its Hessian) and
///               the phi block keeps the maximum principle phi in [0, 1].
enum class PhaseQuadrature
{
    lumped,
    consistent,
};

/// Residual and (optionally) tangent of one element in block order.
/// `d` holds (u_e, phi_e); `states` the per-qp committed history.
/// The driving force is H_eff = max(H, psi0+(eps)); the u-phi coupling
/// blocks are only added for Coupling::full, and the phi-u block only where
/// the history is being exceeded (psi0+ > H).
template <ElementKind K>
void element_system(const typename ElementTraits<K>::Coords& x, const Eigen::Matrix<double, ElementTraits<K>::ndof, 1>& d,
                    std::span<const QuadState> states, const MaterialParams& p, Coupling coupling, PhaseForm form,
                    PhaseQuadrature pq, bool want_tangent, ElementSystem<K>& out, int eid = -1)
{
    using T = ElementTraits<K>;
    using NodeVec = Eigen::Matrix<double, T::nodes, 1>;
    constexpr int nu = T::ndof_u;
    constexpr int nn = T::nodes;
    out.R.setZero();
    if (want_tangent)
        out.K.setZero();
    const auto u_e = d.template head<nu>();
    const NodeVec phi_e = d.template tail<nn>();
    const double Gc = p.Gc, ell = p.ell;
    const bool lumped = pq == PhaseQuadrature::lumped;
    NodeVec g_nodes;
    for (int a = 0; a < nn; ++a)
        g_nodes(a) = degradation(phi_e(a), p.kappa);

    for (int q = 0; q < T::nqp; ++q) {
        const Kinematics<K> k = kinematics_at<K>(x, q, eid);
        const Voigt<T::nv> eps = k.B_u * u_e;
        const SplitResult<T::nv> s = split<T::nv>(eps, p);
        const double phi = k.N.dot(phi_e);
        // phi seen by each row of the local terms
        const NodeVec phi_at = lumped ? phi_e : NodeVec::Constant(phi);
        const Eigen::Matrix<double, T::dim, 1> grad_phi = k.B_phi * phi_e;
        const double H = states[q].H;
        const bool active = s.psi_plus > H;
        const double H_eff = active ? s.psi_plus : H;
        const double g = lumped ? k.N.dot(g_nodes) : degradation(phi, p.kappa);
        const double w = k.detJxW;

        const Voigt<T::nv> sigma = g * s.sigma0_plus + s.sigma0_minus;
        out.R.template head<nu>().noalias() += w * (k.B_u.transpose() * sigma);

        NodeVec local, dlocal, dR_dH;
        for (int a = 0; a < nn; ++a) {
            if (form == PhaseForm::direct) {
                local(a) = -2.0 * (1.0 - phi_at(a)) * H_eff + Gc * phi_at(a) / ell;
                dlocal(a) = 2.0 * H_eff + Gc / ell;
                dR_dH(a) = -2.0 * (1.0 - phi_at(a));
            } else {
                const HeatSource src = heat_source(phi_at(a), H_eff, p);
                local(a) = -src.r;
                dlocal(a) = -src.dr_dphi;
                dR_dH(a) = -2.0 * (1.0 - phi_at(a)) / (ell * Gc);
            }
        }
        const double diffusion = form == PhaseForm::direct ? Gc * ell : 1.0;
        out.R.template tail<nn>().noalias() +=
            w * (k.N.cwiseProduct(local) + diffusion * (k.B_phi.transpose() * grad_phi));

        if (!want_tangent)
            continue;

        const VoigtMatrix<T::nv> C = g * s.C0_plus + s.C0_minus;
        out.K.template topLeftCorner<nu, nu>().noalias() += w * (k.B_u.transpose() * C * k.B_u);

        auto Kpp = out.K.template bottomRightCorner<nn, nn>();
        Kpp.noalias() += (w * diffusion) * (k.B_phi.transpose() * k.B_phi);
        if (lumped)
            Kpp.diagonal() += w * k.N.cwiseProduct(dlocal);
        else
            Kpp.noalias() += (w * dlocal(0)) * (k.N * k.N.transpose());

        if (coupling == Coupling::full) {
            const Eigen::Matrix<double, nu, 1> Bs = k.B_u.transpose() * s.sigma0_plus;
            // dg/dphi_a at this qp: N_a g'(phi_a) (lumped) or g'(phi) N_a
            const NodeVec dg = k.N.cwiseProduct((-2.0 * (NodeVec::Ones() - phi_at)).eval());
            out.K.template topRightCorner<nu, nn>().noalias() += w * Bs * dg.transpose();
            if (active)
                out.K.template bottomLeftCorner<nn, nu>().noalias() += w * k.N.cwiseProduct(dR_dH) * Bs.transpose();
        }
    }
}

/// Element residual split into its displacement and phase field parts.
struct ElementResidual
{
    Eigen::VectorXd R_u;
    Eigen::VectorXd R_phi;
};

inline ElementResidual element_residual(const Mesh& mesh, int e, std::span<const double> u_nodal,
                                        std::span<const double> phi_nodal, std::span<const QuadState> states,
                                        const MaterialParams& p, PhaseForm form = PhaseForm::direct,
                                        PhaseQuadrature pq = PhaseQuadrature::lumped)
{
    return dispatch(mesh.elements[e].kind, [&](auto t) {
        using T = decltype(t);
        if (u_nodal.size() != T::ndof_u || phi_nodal.size() != T::nodes)
            throw MeshError("nodal field size does not match element " + std::to_string(e));
        Eigen::Matrix<double, T::ndof, 1> d;
        d << Eigen::Map<const Eigen::VectorXd>(u_nodal.data(), u_nodal.size()),
            Eigen::Map<const Eigen::VectorXd>(phi_nodal.data(), phi_nodal.size());
        ElementSystem<T::kind> sys;
        element_system<T::kind>(element_coords<T::kind>(mesh, e), d, states, p, Coupling::full, form, pq, false, sys, e);
        return ElementResidual{sys.R.template head<T::ndof_u>(), sys.R.template tail<T::nodes>()};
    });
}

/// Element tangent in block order (u node-major, then phi).
inline Eigen::MatrixXd element_tangent(const Mesh& mesh, int e, std::span<const double> u_nodal,
                                       std::span<const double> phi_nodal, std::span<const QuadState> states,
                                       const MaterialParams& p, Coupling coupling, PhaseForm form = PhaseForm::direct,
                                       PhaseQuadrature pq = PhaseQuadrature::lumped)
{
    return dispatch(mesh.elements[e].kind, [&](auto t) {
        using T = decltype(t);
        if (u_nodal.size() != T::ndof_u || phi_nodal.size() != T::nodes)
            throw MeshError("nodal field size does not match element " + std::to_string(e));
        Eigen::Matrix<double, T::ndof, 1> d;
        d << Eigen::Map<const Eigen::VectorXd>(u_nodal.data(), u_nodal.size()),
            Eigen::Map<const Eigen::VectorXd>(phi_nodal.data(), phi_nodal.size());
        ElementSystem<T::kind> sys;
        element_system<T::kind>(element_coords<T::kind>(mesh, e), d, states, p, coupling, form, pq, true, sys, e);
        return Eigen::MatrixXd(sys.K);
    });
}

struct Energies
{
    double elastic = 0.0;
    double fracture = 0.0;
};

/// Element-loop driver over a fixed mesh and DOF layout.
class Assembler
{
public:
    Assembler(const Mesh& mesh, const DofMap& dofs, int threads = 1, PhaseQuadrature pq = PhaseQuadrature::lumped)
        : mesh_(mesh), dofs_(dofs), threads_(std::max(1, threads)), pq_(pq), pattern_(sparse_pattern(mesh, dofs))
    {
        qp_offset_.resize(mesh.num_elements() + 1, 0);
        for (int e = 0; e < mesh.num_elements(); ++e)
            qp_offset_[e + 1] = qp_offset_[e] + qp_count(mesh.elements[e].kind);
    }

    const Mesh& mesh() const { return mesh_; }
    const DofMap& dofs() const { return dofs_; }
    const SparseMatrix& pattern() const { return pattern_; }
    int threads() const { return threads_; }
    void set_threads(int t) { threads_ = std::max(1, t); }
    PhaseQuadrature quadrature() const { return pq_; }
    int num_qp() const { return qp_offset_.back(); }
    int qp_offset(int e) const { return qp_offset_[e]; }

    /// Unconstrained residual (and tangent if K != nullptr). The scatter is
    /// split over contiguous element ranges; per-thread partial sums are
    /// merged in thread order so results are reproducible for a fixed
    /// thread count.
    void assemble(const Eigen::VectorXd& x, std::span<const QuadState> states, const MaterialParams& p,
                  Coupling coupling, PhaseForm form, Eigen::VectorXd& R, SparseMatrix* K) const
    {
        const int n = dofs_.n_dof();
        R = Eigen::VectorXd::Zero(n);
        if (K) {
            *K = pattern_;
            std::fill(K->valuePtr(), K->valuePtr() + K->nonZeros(), 0.0);
        }
        const int ne = mesh_.num_elements();
        const int nt = std::min(threads_, std::max(1, ne));
        if (nt == 1) {
            scatter_range(0, ne, x, states, p, coupling, form, R.data(), K ? K->valuePtr() : nullptr, K);
            return;
        }
        const long nnz = K ? K->nonZeros() : 0;
        std::vector<std::vector<double>> R_part(nt, std::vector<double>(n, 0.0));
        std::vector<std::vector<double>> K_part(nt, std::vector<double>(K ? nnz : 0, 0.0));
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(nt);
        for (int t = 0; t < nt; ++t) {
            const int e0 = static_cast<int>(static_cast<long>(ne) * t / nt);
            const int e1 = static_cast<int>(static_cast<long>(ne) * (t + 1) / nt);
            pool.emplace_back([&, t, e0, e1] {
                try {
                    scatter_range(e0, e1, x, states, p, coupling, form, R_part[t].data(),
                                  K ? K_part[t].data() : nullptr, K);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool)
            th.join();
        for (auto& err : errors)
            if (err)
                std::rethrow_exception(err);
        for (int t = 0; t < nt; ++t) {
            R += Eigen::Map<const Eigen::VectorXd>(R_part[t].data(), n);
            if (K) {
                double* v = K->valuePtr();
                for (long i = 0; i < nnz; ++i)
                    v[i] += K_part[t][i];
            }
        }
    }

    /// Elastic (degraded) and fracture energy of a state.
    Energies energies(const Eigen::VectorXd& x, const MaterialParams& p) const
    {
        Energies en;
        for (int e = 0; e < mesh_.num_elements(); ++e) {
            dispatch(mesh_.elements[e].kind, [&](auto t) {
                using T = decltype(t);
                const auto xe = element_coords<T::kind>(mesh_, e);
                const auto d = gather<T::kind>(e, x);
                for (int q = 0; q < T::nqp; ++q) {
                    const auto k = kinematics_at<T::kind>(xe, q, e);
                    const Voigt<T::nv> eps = k.B_u * d.template head<T::ndof_u>();
                    const auto s = split<T::nv>(eps, p);
                    const auto phi_e = d.template tail<T::nodes>();
                    const double phi = k.N.dot(phi_e);
                    const auto gp = k.B_phi * phi_e;
                    double g = degradation(phi, p.kappa), phi2 = phi * phi;
                    if (pq_ == PhaseQuadrature::lumped) {
                        g = phi2 = 0.0;
                        for (int a = 0; a < T::nodes; ++a) {
                            g += k.N(a) * degradation(phi_e(a), p.kappa);
                            phi2 += k.N(a) * phi_e(a) * phi_e(a);
                        }
                    }
                    en.elastic += k.detJxW * (g * s.psi_plus + s.psi_minus);
                    en.fracture += k.detJxW * p.Gc * (phi2 / (2.0 * p.ell) + 0.5 * p.ell * gp.squaredNorm());
                }
                return 0;
            });
        }
        return en;
    }

    /// Commits the history at a converged state: H <- max(H, psi0+), and
    /// refreshes the stored split energies and qp phase field.
    void commit_history(const Eigen::VectorXd& x, std::span<QuadState> states, const MaterialParams& p) const
    {
        for (int e = 0; e < mesh_.num_elements(); ++e) {
            dispatch(mesh_.elements[e].kind, [&](auto t) {
                using T = decltype(t);
                const auto xe = element_coords<T::kind>(mesh_, e);
                const auto d = gather<T::kind>(e, x);
                for (int q = 0; q < T::nqp; ++q) {
                    const auto k = kinematics_at<T::kind>(xe, q, e);
                    const Voigt<T::nv> eps = k.B_u * d.template head<T::ndof_u>();
                    const auto s = split<T::nv>(eps, p);
                    QuadState& st = states[qp_offset_[e] + q];
                    st = update_history(st, s.psi_plus);
                    st.psi_plus = s.psi_plus;
                    st.psi_minus = s.psi_minus;
                    st.phi = k.N.dot(d.template tail<T::nodes>());
                }
                return 0;
            });
        }
    }

    template <ElementKind K>
    Eigen::Matrix<double, ElementTraits<K>::ndof, 1> gather(int e, const Eigen::VectorXd& x) const
    {
        const auto g = element_dofs<K>(mesh_.elements[e], dofs_);
        Eigen::Matrix<double, ElementTraits<K>::ndof, 1> d;
        for (int i = 0; i < ElementTraits<K>::ndof; ++i)
            d(i) = x(g[i]);
        return d;
    }

private:
    void scatter_range(int e0, int e1, const Eigen::VectorXd& x, std::span<const QuadState> states,
                       const MaterialParams& p, Coupling coupling, PhaseForm form, double* R, double* Kv,
                       const SparseMatrix* Kpat) const
    {
        for (int e = e0; e < e1; ++e) {
            dispatch(mesh_.elements[e].kind, [&](auto t) {
                using T = decltype(t);
                const Element& el = mesh_.elements[e];
                const auto g = element_dofs<T::kind>(el, dofs_);
                const auto d = gather<T::kind>(e, x);
                ElementSystem<T::kind> sys;
                element_system<T::kind>(element_coords<T::kind>(mesh_, e), d,
                                        states.subspan(qp_offset_[e], T::nqp), p, coupling, form, pq_, Kv != nullptr,
                                        sys, e);
                for (int i = 0; i < T::ndof; ++i)
                    R[g[i]] += sys.R(i);
                if (!Kv)
                    return 0;
                const int* outer = Kpat->outerIndexPtr();
                const int* inner = Kpat->innerIndexPtr();
                for (int j = 0; j < T::ndof; ++j) {
                    const int* b = inner + outer[g[j]];
                    const int* en = inner + outer[g[j] + 1];
                    for (int i = 0; i < T::ndof; ++i) {
                        const int* pos = std::lower_bound(b, en, g[i]);
                        Kv[pos - inner] += sys.K(i, j);
                    }
                }
                return 0;
            });
        }
    }

    const Mesh& mesh_;
    const DofMap& dofs_;
    int threads_;
    PhaseQuadrature pq_;
    SparseMatrix pattern_;
    std::vector<int> qp_offset_;
};

/// Condenses fixed DOFs: their rows and columns become identity and their
/// residual entries x_c - target_c.
inline void apply_constraints(SparseMatrix& K, Eigen::VectorXd& R, const Eigen::VectorXd& x,
                              const std::vector<char>& fixed, const Eigen::VectorXd& target)
{
    for (int j = 0; j < K.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(K, j); it; ++it)
            if (fixed[it.row()] || fixed[j])
                it.valueRef() = it.row() == j ? 1.0 : 0.0;
    for (int i = 0; i < static_cast<int>(R.size()); ++i)
        if (fixed[i])
            R(i) = x(i) - target(i);
}

struct GlobalSystem
{
    Eigen::VectorXd R;
    SparseMatrix K;
};

/// Condensed global residual and Jacobian with the DOF map's constraints.
inline GlobalSystem assemble(const Assembler& asmb, const Eigen::VectorXd& x, std::span<const QuadState> states,
                             const MaterialParams& p, Coupling coupling, PhaseForm form = PhaseForm::direct)
{
    GlobalSystem s;
    asmb.assemble(x, states, p, coupling, form, s.R, &s.K);
    apply_constraints(s.K, s.R, x, asmb.dofs().constrained(), asmb.dofs().prescribed());
    return s;
}

/// Phase field block in heat-conduction form: R_i = int grad N_i . grad phi -
/// N_i r(phi, H_eff), with unit conductivity. Sized by node.
struct HeatSystem
{
    Eigen::VectorXd R_phi;
    SparseMatrix K_phiphi;
};

inline HeatSystem assemble_phi_heat(const Assembler& asmb, const Eigen::VectorXd& x, std::span<const QuadState> states,
                                    const MaterialParams& p)
{
    Eigen::VectorXd R;
    SparseMatrix K;
    asmb.assemble(x, states, p, Coupling::block_diagonal, PhaseForm::heat, R, &K);
    const DofMap& dofs = asmb.dofs();
    const int nn = dofs.n_nodes();
    HeatSystem h;
    h.R_phi.resize(nn);
    std::vector<int> node_of(dofs.n_dof(), -1);
    for (int v = 0; v < nn; ++v) {
        h.R_phi(v) = R(dofs.phi(v));
        node_of[dofs.phi(v)] = v;
    }
    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 0; j < K.outerSize(); ++j) {
        if (node_of[j] < 0)
            continue;
        for (SparseMatrix::InnerIterator it(K, j); it; ++it)
            if (node_of[it.row()] >= 0)
                trip.emplace_back(node_of[it.row()], node_of[j], it.value());
    }
    h.K_phiphi.resize(nn, nn);
    h.K_phiphi.setFromTriplets(trip.begin(), trip.end());
    return h;
}

/// Sum of the unconstrained internal force over a node set component,
/// scaled by the mesh thickness (N for plane strain and 3D alike).
inline double reaction_force(const Mesh& mesh, const DofMap& dofs, const Eigen::VectorXd& internal_force,
                             const std::string& node_set, Component c)
{
    double f = 0.0;
    for (int v : mesh.node_set(node_set))
        f += internal_force(dofs.u(v, static_cast<int>(c)));
    return f * mesh.thickness;
}

} // namespace pff

#endif // PFF_ASSEMBLY_HPP
