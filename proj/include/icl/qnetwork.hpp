#ifndef ICL_QNETWORK_HPP_
#define ICL_QNETWORK_HPP_

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace icl
{
    struct DenseLayer
    {
        std::size_t in = 0;
        std::size_t out = 0;
        std::vector<double> weights;  // out x in, row-major
        std::vector<double> bias;     // out

        DenseLayer() = default;
        DenseLayer(std::size_t in_dim, std::size_t out_dim) :
            in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0)
        {
        }

        double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
        double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
    };

    enum class InitScheme
    {
        uniform_fan_in,  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases
        zeros,
    };

    /// Scalar-output MLP: hidden affine layers with ReLU (and dropout in training),
    /// then an affine output. Zero hidden layers gives a linear model.
    struct QNetworkParams
    {
        std::vector<DenseLayer> layers;
        double dropout = 0.0;

        std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
        std::size_t hidden_layer_count() const { return layers.empty() ? 0 : layers.size() - 1; }
        std::size_t parameter_count() const;

        std::vector<double> flatten() const;
        void assign(std::span<const double> flat);
        // Same shapes, all zeros.
        QNetworkParams zeros_like() const;
        bool all_finite() const;
    };

    QNetworkParams make_q_network(std::size_t input_dim, std::size_t hidden_dim, std::size_t hidden_layers,
                                  double dropout, InitScheme init, std::mt19937_64& rng);

    // Activations kept for the backward pass.
    struct ForwardTrace
    {
        std::vector<std::vector<double>> inputs;  // input to each layer
        std::vector<std::vector<double>> masks;   // per hidden layer: relu'(z) times dropout scale
    };

    // Train mode draws inverted-dropout masks from rng; eval mode is deterministic.
    double mlp_forward(const QNetworkParams& params, std::span<const double> input, bool train_mode = false,
                       std::mt19937_64* rng = nullptr, ForwardTrace* trace = nullptr);

    // Accumulates upstream * dQ/dtheta into grads.
    void mlp_backward(const QNetworkParams& params, const ForwardTrace& trace, double upstream, QNetworkParams& grads);

    nlohmann::json to_json(const QNetworkParams& params);
    QNetworkParams q_network_from_json(const nlohmann::json& j);
}  // namespace icl

#endif  // ICL_QNETWORK_HPP_
