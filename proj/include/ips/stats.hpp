#pragma once

#include <cstdint>
#include <vector>

namespace ips
{

inline constexpr double kZ95 = 1.959963984540054;

struct Estimate
{
    double mean = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t n = 0;
};

/// Welford running mean and variance.
class Accumulator
{
public:
    void add(double x);
    void merge(const Accumulator& o);
    std::uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;
    double se() const;

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

Estimate normal_estimate(const Accumulator& acc, double z = kZ95);
/// Wilson score interval for a binomial proportion; se is the plug-in one.
Estimate wilson(std::uint64_t successes, std::uint64_t n, double z = kZ95);

double pooled_se(double se_a, double se_b);
bool intervals_disjoint(const Estimate& a, const Estimate& b);

struct KsResult
{
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct ChiSquareResult
{
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Goodness of fit of observed counts against exact probabilities; cells with
/// expected count below `min_expected` are pooled into one.
ChiSquareResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probabilities,
                               double min_expected = 5.0);

/// Homogeneity of two count vectors over the same cells.
ChiSquareResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                      double min_expected = 5.0);

struct LinearFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double slope_ci_low = 0.0;
    double slope_ci_high = 0.0;
};

/// Weighted least squares y = a + b x; weights default to 1.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& weights = {});

double normal_quantile(double q);

} // namespace ips
