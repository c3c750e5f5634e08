#include "icl/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "icl/errors.hpp"

namespace icl
{
    double mean(std::span<const double> values)
    {
        if (values.empty())
            throw UsageError("mean of an empty sample");
        double s = 0.0;
        for (double v : values)
            s += v;
        return s / static_cast<double>(values.size());
    }

    double sample_stddev(std::span<const double> values)
    {
        if (values.size() < 2)
            return 0.0;
        const double m = mean(values);
        double ss = 0.0;
        for (double v : values)
            ss += (v - m) * (v - m);
        return std::sqrt(ss / static_cast<double>(values.size() - 1));
    }

    ConfidenceInterval confidence_interval(std::span<const double> values, double level)
    {
        ConfidenceInterval ci;
        ci.mean = mean(values);
        if (values.size() < 2)
            return ci;
        boost::math::students_t dist(static_cast<double>(values.size() - 1));
        const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
        ci.half_width = t * sample_stddev(values) / std::sqrt(static_cast<double>(values.size()));
        return ci;
    }

    Correlation pearson_r(std::span<const double> x, std::span<const double> y)
    {
        if (x.size() != y.size())
            throw UsageError("pearson_r needs equally long samples");
        if (x.size() < 3)
            throw UsageError("pearson_r needs at least three points");
        const double mx = mean(x), my = mean(y);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        if (sxx == 0.0 || syy == 0.0)
            throw NumericError("correlation is undefined for a constant sample");
        Correlation c;
        c.n = x.size();
        c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
        const double df = static_cast<double>(c.n - 2);
        if (std::abs(c.r) >= 1.0)
        {
            c.p_value = 0.0;
            return c;
        }
        const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
        boost::math::students_t dist(df);
        c.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
        return c;
    }
}  // namespace icl
