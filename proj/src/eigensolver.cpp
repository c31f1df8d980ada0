#include "qcl/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace qcl {

void fix_phase(CVector& v) {
    if (v.size() == 0) return;
    const double scale = v.cwiseAbs().maxCoeff();
    if (scale == 0.0) return;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-8 * scale) {
            v *= std::conj(v(i)) / std::abs(v(i));
            v(i) = Complex(std::abs(v(i)), 0.0);
            return;
        }
    }
}

namespace {

CVector gaussian_vector(Eigen::Index dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    CVector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = Complex(normal(rng), normal(rng));
    return v;
}

// Krylov basis V with images W = H V and projection Hp = V^H H V.
class KrylovSpace {
public:
    KrylovSpace(const LinearOperator& apply, Eigen::Index dim, int capacity)
        : apply_(apply), dim_(dim), hp_(CMatrix::Zero(capacity, capacity)) {}

    int size() const { return static_cast<int>(v_.size()); }
    const CVector& last_image() const { return w_.back(); }
    int matvecs() const { return matvecs_; }

    // Orthonormalizes `candidate` against the basis and appends it; false if it lies in the span.
    bool expand(CVector candidate) {
        const double original = candidate.norm();
        if (original == 0.0) return false;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : v_) candidate -= b * b.dot(candidate);
        }
        const double remaining = candidate.norm();
        if (remaining <= 1e-10 * original) return false;
        candidate /= remaining;

        CVector image(dim_);
        apply_(candidate, image);
        ++matvecs_;
        const int j = size();
        for (int i = 0; i < j; ++i) {
            const Complex hij = v_[static_cast<std::size_t>(i)].dot(image);
            hp_(i, j) = hij;
            hp_(j, i) = std::conj(hij);
        }
        hp_(j, j) = Complex(candidate.dot(image).real(), 0.0);
        v_.push_back(std::move(candidate));
        w_.push_back(std::move(image));
        return true;
    }

    struct Ritz {
        double value;
        CVector vector;
        CVector residual;
    };

    Ritz lowest(Eigen::SelfAdjointEigenSolver<CMatrix>& es) const {
        const int j = size();
        es.compute(hp_.topLeftCorner(j, j));
        const CVector y = es.eigenvectors().col(0);
        Ritz r{es.eigenvalues()(0), CVector::Zero(dim_), CVector::Zero(dim_)};
        CVector image = CVector::Zero(dim_);
        for (int i = 0; i < j; ++i) {
            r.vector += y(i) * v_[static_cast<std::size_t>(i)];
            image += y(i) * w_[static_cast<std::size_t>(i)];
        }
        r.residual = image - r.value * r.vector;
        return r;
    }

    // Thick restart: compress the basis onto the `keep` lowest Ritz vectors.
    void restart(const Eigen::SelfAdjointEigenSolver<CMatrix>& es, int keep) {
        const int j = size();
        std::vector<CVector> nv(static_cast<std::size_t>(keep), CVector::Zero(dim_));
        std::vector<CVector> nw(static_cast<std::size_t>(keep), CVector::Zero(dim_));
        for (int c = 0; c < keep; ++c) {
            for (int i = 0; i < j; ++i) {
                const Complex y = es.eigenvectors()(i, c);
                nv[static_cast<std::size_t>(c)] += y * v_[static_cast<std::size_t>(i)];
                nw[static_cast<std::size_t>(c)] += y * w_[static_cast<std::size_t>(i)];
            }
        }
        v_ = std::move(nv);
        w_ = std::move(nw);
        hp_.setZero();
        for (int c = 0; c < keep; ++c) hp_(c, c) = es.eigenvalues()(c);
    }

private:
    const LinearOperator& apply_;
    Eigen::Index dim_;
    std::vector<CVector> v_;
    std::vector<CVector> w_;
    CMatrix hp_;
    int matvecs_ = 0;
};

}  // namespace

EigenPair lowest_eigenpair(const LinearOperator& apply, Eigen::Index dim, const EigenOptions& options) {
    if (dim <= 0) throw SolverError("eigenproblem of dimension zero", 0.0);

    // Cap the Krylov dimension so the basis and its image stay below ~256 MB.
    const auto memory_cap = std::max<Eigen::Index>(16, static_cast<Eigen::Index>(256e6 / (32.0 * dim)));
    const int capacity = static_cast<int>(std::min<Eigen::Index>({options.krylov_dim, dim, memory_cap}));
    const int keep = std::clamp(options.keep, 1, std::max(1, capacity - 2));

    std::mt19937_64 rng(options.seed);
    CVector start;
    if (options.start && options.start->size() == dim) {
        start = *options.start;
    } else {
        start = CVector::Ones(dim) + 0.01 * gaussian_vector(dim, rng);
    }

    KrylovSpace space(apply, dim, capacity);
    if (!space.expand(start)) space.expand(gaussian_vector(dim, rng));

    Eigen::SelfAdjointEigenSolver<CMatrix> es;
    int restarts = 0;
    double last_residual = 0.0;
    while (true) {
        bool exhausted = false;
        while (space.size() < capacity) {
            if (!space.expand(space.last_image())) {
                if (space.size() == dim) {
                    exhausted = true;
                    break;
                }
                // Invariant subspace found; continue with a fresh deterministic direction.
                bool grew = false;
                for (int attempt = 0; attempt < 4 && !grew; ++attempt) grew = space.expand(gaussian_vector(dim, rng));
                if (!grew) {
                    exhausted = true;
                    break;
                }
            }
            if (space.size() % 10 == 0 && space.size() < capacity) {
                auto ritz = space.lowest(es);
                if (ritz.residual.norm() <= 0.1 * options.tolerance) break;
            }
        }

        auto ritz = space.lowest(es);
        last_residual = ritz.residual.norm();
        if (last_residual <= 0.1 * options.tolerance || exhausted) {
            EigenPair result;
            result.vector = ritz.vector / ritz.vector.norm();
            fix_phase(result.vector);
            CVector image(dim);
            apply(result.vector, image);
            result.value = result.vector.dot(image).real();
            result.residual = (image - result.value * result.vector).norm();
            result.matvecs = space.matvecs() + 1;
            if (result.residual > options.tolerance) {
                throw SolverError("eigensolver residual " + std::to_string(result.residual) +
                                      " above tolerance after convergence",
                                  result.residual);
            }
            return result;
        }
        if (++restarts > options.max_restarts) {
            throw SolverError("eigensolver did not converge; residual " + std::to_string(last_residual),
                              last_residual);
        }
        const CVector residual = ritz.residual;
        space.restart(es, std::min(keep, space.size() - 1));
        space.expand(residual);
    }
}

EigenPair lowest_eigenpair(const SparseMatrix& h, const EigenOptions& options) {
    if (h.rows() != h.cols()) throw SolverError("eigenproblem matrix is not square", 0.0);
    LinearOperator op = [&h](const CVector& in, CVector& out) { out.noalias() = h * in; };
    return lowest_eigenpair(op, h.rows(), options);
}

}  // namespace qcl
