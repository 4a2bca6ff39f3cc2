#pragma once

#include "pff/assembly.hpp"

#include <Eigen/SparseCore>
#ifdef PFF_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>
#endif

namespace pff
{

// Direct sparse LU. The symbolic analysis is done on the first factorization
// and reused while the pattern stays fixed (it never changes within a run).
class LinearSolver
{
public:
    bool factorize(const SparseMatrix& K)
    {
        if (!analyzed_ || K.nonZeros() != nnz_) {
            lu_.analyzePattern(K);
            analyzed_ = true;
            nnz_ = K.nonZeros();
        }
        lu_.factorize(K);
        ok_ = lu_.info() == Eigen::Success;
        return ok_;
    }

    bool solve(const Eigen::VectorXd& b, Eigen::VectorXd& x)
    {
        if (!ok_)
            return false;
        x = lu_.solve(b);
        return lu_.info() == Eigen::Success && x.allFinite();
    }

    static const char* backend()
    {
#ifdef PFF_HAVE_UMFPACK
        return "umfpack";
#else
        return "eigen-sparselu";
#endif
    }

private:
#ifdef PFF_HAVE_UMFPACK
    Eigen::UmfPackLU<SparseMatrix> lu_;
#else
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
#endif
    bool analyzed_ = false;
    bool ok_ = false;
    Eigen::Index nnz_ = -1;
};

} // namespace pff
