#include "icl/qnetwork.hpp"

#include <cmath>

#include "icl/errors.hpp"

namespace icl
{
    std::size_t QNetworkParams::parameter_count() const
    {
        std::size_t n = 0;
        for (const auto& l : layers)
            n += l.weights.size() + l.bias.size();
        return n;
    }

    std::vector<double> QNetworkParams::flatten() const
    {
        std::vector<double> out;
        out.reserve(parameter_count());
        for (const auto& l : layers)
        {
            out.insert(out.end(), l.weights.begin(), l.weights.end());
            out.insert(out.end(), l.bias.begin(), l.bias.end());
        }
        return out;
    }

    void QNetworkParams::assign(std::span<const double> flat)
    {
        if (flat.size() != parameter_count())
            throw UsageError("flat parameter vector has the wrong length");
        std::size_t k = 0;
        for (auto& l : layers)
        {
            for (double& w : l.weights)
                w = flat[k++];
            for (double& b : l.bias)
                b = flat[k++];
        }
    }

    QNetworkParams QNetworkParams::zeros_like() const
    {
        QNetworkParams z;
        z.dropout = dropout;
        for (const auto& l : layers)
            z.layers.emplace_back(l.in, l.out);
        return z;
    }

    bool QNetworkParams::all_finite() const
    {
        for (const auto& l : layers)
        {
            for (double w : l.weights)
                if (!std::isfinite(w))
                    return false;
            for (double b : l.bias)
                if (!std::isfinite(b))
                    return false;
        }
        return true;
    }

    QNetworkParams make_q_network(std::size_t input_dim, std::size_t hidden_dim, std::size_t hidden_layers,
                                  double dropout, InitScheme init, std::mt19937_64& rng)
    {
        if (input_dim == 0 || (hidden_layers > 0 && hidden_dim == 0))
            throw ConfigError("q-network dimensions must be positive");
        if (dropout < 0.0 || dropout >= 1.0)
            throw ConfigError("dropout must lie in [0, 1)");
        QNetworkParams p;
        p.dropout = dropout;
        std::size_t in = input_dim;
        for (std::size_t h = 0; h < hidden_layers; ++h)
        {
            p.layers.emplace_back(in, hidden_dim);
            in = hidden_dim;
        }
        p.layers.emplace_back(in, 1);

        if (init == InitScheme::uniform_fan_in)
            for (auto& l : p.layers)
            {
                std::uniform_real_distribution<double> u(-1.0 / std::sqrt(double(l.in)), 1.0 / std::sqrt(double(l.in)));
                for (double& w : l.weights)
                    w = u(rng);
                for (double& b : l.bias)
                    b = u(rng);
            }
        return p;
    }

    double mlp_forward(const QNetworkParams& params, std::span<const double> input, bool train_mode,
                       std::mt19937_64* rng, ForwardTrace* trace)
    {
        if (params.layers.empty())
            throw UsageError("q-network has no layers");
        if (input.size() != params.input_dim())
            throw UsageError("q-network input has dimension " + std::to_string(input.size()) + ", expected " +
                             std::to_string(params.input_dim()));
        const bool drop = train_mode && params.dropout > 0.0;
        if (drop && !rng)
            throw UsageError("dropout in training mode needs an rng");
        if (trace)
        {
            trace->inputs.clear();
            trace->masks.clear();
        }

        std::vector<double> act(input.begin(), input.end());
        std::bernoulli_distribution keep(1.0 - params.dropout);
        const double scale = drop ? 1.0 / (1.0 - params.dropout) : 1.0;
        for (std::size_t li = 0; li < params.layers.size(); ++li)
        {
            const auto& l = params.layers[li];
            std::vector<double> z(l.out);
            for (std::size_t r = 0; r < l.out; ++r)
            {
                double s = l.bias[r];
                const double* row = &l.weights[r * l.in];
                for (std::size_t c = 0; c < l.in; ++c)
                    s += row[c] * act[c];
                z[r] = s;
            }
            if (trace)
                trace->inputs.push_back(std::move(act));
            if (li + 1 == params.layers.size())
                return z[0];

            std::vector<double> mask(l.out);
            for (std::size_t r = 0; r < l.out; ++r)
            {
                double m = z[r] > 0.0 ? 1.0 : 0.0;
                if (drop)
                    m *= keep(*rng) ? scale : 0.0;
                mask[r] = m;
                z[r] *= m;
            }
            if (trace)
                trace->masks.push_back(std::move(mask));
            act = std::move(z);
        }
        return 0.0;
    }

    void mlp_backward(const QNetworkParams& params, const ForwardTrace& trace, double upstream, QNetworkParams& grads)
    {
        if (trace.inputs.size() != params.layers.size())
            throw UsageError("forward trace does not match the network");
        std::vector<double> delta{upstream};
        for (std::size_t li = params.layers.size(); li-- > 0;)
        {
            const auto& l = params.layers[li];
            auto& g = grads.layers[li];
            const auto& in = trace.inputs[li];
            for (std::size_t r = 0; r < l.out; ++r)
            {
                if (delta[r] == 0.0)
                    continue;
                g.bias[r] += delta[r];
                double* grow = &g.weights[r * l.in];
                for (std::size_t c = 0; c < l.in; ++c)
                    grow[c] += delta[r] * in[c];
            }
            if (li == 0)
                break;
            std::vector<double> prev(l.in, 0.0);
            for (std::size_t r = 0; r < l.out; ++r)
            {
                if (delta[r] == 0.0)
                    continue;
                const double* row = &l.weights[r * l.in];
                for (std::size_t c = 0; c < l.in; ++c)
                    prev[c] += row[c] * delta[r];
            }
            const auto& mask = trace.masks[li - 1];
            for (std::size_t c = 0; c < l.in; ++c)
                prev[c] *= mask[c];
            delta = std::move(prev);
        }
    }

    nlohmann::json to_json(const QNetworkParams& p)
    {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : p.layers)
            layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
        return {{"activation", "relu"}, {"dropout", p.dropout}, {"layers", layers}};
    }

    QNetworkParams q_network_from_json(const nlohmann::json& j)
    {
        QNetworkParams p;
        try
        {
            p.dropout = j.value("dropout", 0.0);
            for (const auto& lj : j.at("layers"))
            {
                DenseLayer l(lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>());
                auto w = lj.at("weights").get<std::vector<double>>();
                auto b = lj.at("bias").get<std::vector<double>>();
                if (w.size() != l.weights.size() || b.size() != l.bias.size())
                    throw DataError("q-network layer arrays do not match declared shape");
                l.weights = std::move(w);
                l.bias = std::move(b);
                p.layers.push_back(std::move(l));
            }
        }
        catch (const nlohmann::json::exception& e)
        {
            throw DataError(std::string("q-network: ") + e.what());
        }
        if (p.layers.empty() || p.layers.back().out != 1)
            throw DataError("q-network must end in a single output");
        for (std::size_t i = 1; i < p.layers.size(); ++i)
            if (p.layers[i].in != p.layers[i - 1].out)
                throw DataError("q-network layer shapes do not chain");
        return p;
    }
}  // namespace icl
