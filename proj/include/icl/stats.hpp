#ifndef ICL_STATS_HPP_
#define ICL_STATS_HPP_

#include <optional>
#include <span>

namespace icl
{
    double mean(std::span<const double> values);
    // Sample standard deviation (n - 1); zero for fewer than two values.
    double sample_stddev(std::span<const double> values);

    struct ConfidenceInterval
    {
        double mean = 0.0;
        std::optional<double> half_width;  // absent for a single value
    };

    // Two-sided Student-t interval with n - 1 degrees of freedom.
    ConfidenceInterval confidence_interval(std::span<const double> values, double level = 0.95);

    struct Correlation
    {
        double r = 0.0;
        double p_value = 1.0;
        std::size_t n = 0;
    };

    // Sample Pearson correlation with a two-sided t-test on n - 2 degrees of freedom.
    Correlation pearson_r(std::span<const double> x, std::span<const double> y);
}  // namespace icl

#endif  // ICL_STATS_HPP_
