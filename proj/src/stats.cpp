#include "ips/stats.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ips
{

void Accumulator::add(double x)
{
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

void Accumulator::merge(const Accumulator& o)
{
    if (o.n_ == 0)
        return;
    if (n_ == 0)
    {
        *this = o;
        return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
}

double Accumulator::variance() const
{
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double Accumulator::se() const
{
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

Estimate normal_estimate(const Accumulator& acc, double z)
{
    Estimate e;
    e.mean = acc.mean();
    e.se = acc.se();
    e.ci_low = e.mean - z * e.se;
    e.ci_high = e.mean + z * e.se;
    e.n = acc.count();
    return e;
}

Estimate wilson(std::uint64_t successes, std::uint64_t n, double z)
{
    Estimate e;
    e.n = n;
    if (n == 0)
    {
        e.ci_high = 1.0;
        return e;
    }
    const double nn = static_cast<double>(n);
    const double ph = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double centre = (ph + z2 / (2 * nn)) / (1 + z2 / nn);
    const double half = z / (1 + z2 / nn) * std::sqrt(ph * (1 - ph) / nn + z2 / (4 * nn * nn));
    e.mean = ph;
    e.se = std::sqrt(ph * (1 - ph) / nn);
    e.ci_low = std::max(0.0, centre - half);
    e.ci_high = std::min(1.0, centre + half);
    return e;
}

double pooled_se(double se_a, double se_b)
{
    return std::sqrt(se_a * se_a + se_b * se_b);
}

bool intervals_disjoint(const Estimate& a, const Estimate& b)
{
    return a.ci_high < b.ci_low || b.ci_high < a.ci_low;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty())
        throw std::invalid_argument("KS test needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size())
    {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x)
            ++i;
        while (j < b.size() && b[j] == x)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    // Kolmogorov distribution tail: 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)
    double p = 0.0;
    if (lambda < 0.2)
        p = 1.0;
    else
    {
        for (int k = 1; k <= 100; ++k)
        {
            const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
            p += term;
            if (std::abs(term) < 1e-12)
                break;
        }
        p = std::clamp(p, 0.0, 1.0);
    }
    return KsResult{d, p};
}

namespace
{

ChiSquareResult finish_chi(double stat, int dof)
{
    ChiSquareResult r;
    r.statistic = stat;
    r.dof = dof;
    if (dof <= 0)
    {
        r.p_value = 1.0;
        return r;
    }
    boost::math::chi_squared dist(dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, stat));
    return r;
}

} // namespace

ChiSquareResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probabilities,
                               double min_expected)
{
    if (observed.size() != probabilities.size())
        throw std::invalid_argument("chi-square: size mismatch");
    double n = 0.0;
    for (double o : observed)
        n += o;
    double stat = 0.0;
    int cells = 0;
    double pool_o = 0.0, pool_e = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i)
    {
        const double e = n * probabilities[i];
        if (e < min_expected)
        {
            pool_o += observed[i];
            pool_e += e;
            continue;
        }
        stat += (observed[i] - e) * (observed[i] - e) / e;
        ++cells;
    }
    if (pool_e >= min_expected)
    {
        stat += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
        ++cells;
    }
    else if (pool_e > 0.0 && cells > 0)
    {
        // too little mass to stand alone; still count it without a dof
        stat += (pool_o - pool_e) * (pool_o - pool_e) / std::max(pool_e, 1.0);
    }
    return finish_chi(stat, cells - 1);
}

ChiSquareResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                      double min_expected)
{
    if (a.size() != b.size())
        throw std::invalid_argument("chi-square: size mismatch");
    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        na += a[i];
        nb += b[i];
    }
    const double n = na + nb;
    double stat = 0.0;
    int cells = 0;
    double pa = 0.0, pb = 0.0;
    auto cell = [&](double oa, double ob) {
        const double tot = oa + ob;
        const double ea = tot * na / n;
        const double eb = tot * nb / n;
        stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
        ++cells;
    };
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        const double tot = a[i] + b[i];
        if (tot * std::min(na, nb) / n < min_expected)
        {
            pa += a[i];
            pb += b[i];
            continue;
        }
        cell(a[i], b[i]);
    }
    if ((pa + pb) * std::min(na, nb) / n >= min_expected)
        cell(pa, pb);
    return finish_chi(stat, cells - 1);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& weights)
{
    const auto n = static_cast<Eigen::Index>(x.size());
    if (n < 3 || y.size() != x.size() || (!weights.empty() && weights.size() != x.size()))
        throw std::invalid_argument("linear fit needs at least three matching points");
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd Y(n), W(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        X(i, 0) = 1.0;
        X(i, 1) = x[static_cast<std::size_t>(i)];
        Y(i) = y[static_cast<std::size_t>(i)];
        W(i) = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd sw = W.cwiseSqrt();
    const Eigen::MatrixXd Xw = sw.asDiagonal() * X;
    const Eigen::VectorXd Yw = sw.asDiagonal() * Y;
    const Eigen::Vector2d beta = Xw.colPivHouseholderQr().solve(Yw);
    const Eigen::VectorXd resid = Yw - Xw * beta;
    const double sigma2 = resid.squaredNorm() / static_cast<double>(n - 2);
    const Eigen::Matrix2d cov = sigma2 * (Xw.transpose() * Xw).inverse();
    LinearFit f;
    f.intercept = beta(0);
    f.slope = beta(1);
    f.slope_se = std::sqrt(std::max(cov(1, 1), 0.0));
    boost::math::students_t t(static_cast<double>(n - 2));
    const double q = boost::math::quantile(boost::math::complement(t, 0.025));
    f.slope_ci_low = f.slope - q * f.slope_se;
    f.slope_ci_high = f.slope + q * f.slope_se;
    return f;
}

double normal_quantile(double q)
{
    return boost::math::quantile(boost::math::normal(0.0, 1.0), q);
}

} // namespace ips
