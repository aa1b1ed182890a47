#pragma once

#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ips
{

/// Generator of a finite continuous-time Markov chain, templated on the scalar.
template <typename Scalar = double>
class Generator
{
public:
    using Index = Eigen::Index;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Sparse = Eigen::SparseMatrix<Scalar>;

    explicit Generator(Index n) : n_(n), exit_(Vector::Zero(n)) {}

    Index size() const { return n_; }

    /// Add rate from -> to; self transitions are ignored.
    void add(Index from, Index to, Scalar rate)
    {
        if (from == to || rate == Scalar(0))
            return;
        if (rate < Scalar(0))
            throw std::invalid_argument("negative transition rate");
        triplets_.emplace_back(from, to, rate);
        exit_(from) += rate;
    }

    Scalar exit_rate(Index i) const { return exit_(i); }
    Scalar max_exit_rate() const { return n_ ? exit_.maxCoeff() : Scalar(0); }

    Sparse matrix() const
    {
        Sparse q(n_, n_);
        std::vector<Eigen::Triplet<Scalar>> all = triplets_;
        for (Index i = 0; i < n_; ++i)
            all.emplace_back(i, i, -exit_(i));
        q.setFromTriplets(all.begin(), all.end());
        return q;
    }

    /// Distribution at time t from the row distribution p0 (uniformization,
    /// Poisson series cut when the neglected mass drops below tol).
    Vector transient(const Vector& p0, Scalar t, Scalar tol = Scalar(1e-10)) const
    {
        if (p0.size() != n_)
            throw std::invalid_argument("initial distribution has the wrong size");
        if (t < Scalar(0))
            throw std::invalid_argument("negative time");
        const Scalar lambda = max_exit_rate();
        if (lambda == Scalar(0) || t == Scalar(0))
            return p0;
        // P^T = I + Q^T / lambda
        Sparse pt(n_, n_);
        {
            std::vector<Eigen::Triplet<Scalar>> all;
            all.reserve(triplets_.size() + static_cast<std::size_t>(n_));
            for (const auto& tr : triplets_)
                all.emplace_back(tr.col(), tr.row(), tr.value() / lambda);
            for (Index i = 0; i < n_; ++i)
                all.emplace_back(i, i, Scalar(1) - exit_(i) / lambda);
            pt.setFromTriplets(all.begin(), all.end());
        }
        using std::ceil;
        const Scalar total = lambda * t;
        const int pieces = total > Scalar(100) ? static_cast<int>(ceil(total / Scalar(100))) : 1;
        const Scalar step = total / Scalar(pieces);
        Vector cur = p0;
        for (int piece = 0; piece < pieces; ++piece)
            cur = poisson_mix(pt, cur, step, tol / Scalar(pieces));
        return cur;
    }

    Vector transient_from(Index start, Scalar t, Scalar tol = Scalar(1e-10)) const
    {
        Vector p0 = Vector::Zero(n_);
        p0(start) = Scalar(1);
        return transient(p0, t, tol);
    }

private:
    Index n_;
    Vector exit_;
    std::vector<Eigen::Triplet<Scalar>> triplets_;

    static Vector poisson_mix(const Sparse& pt, const Vector& v0, Scalar mean, Scalar tol)
    {
        using std::exp;
        Scalar w = exp(-mean);
        Scalar mass = w;
        Vector term = v0;
        Vector acc = w * v0;
        for (int k = 1; Scalar(1) - mass > tol; ++k)
        {
            term = pt * term;
            w *= mean / Scalar(k);
            mass += w;
            acc += w * term;
            if (k > 100000)
                throw std::runtime_error("uniformization did not converge");
        }
        return acc;
    }
};

} // namespace ips
