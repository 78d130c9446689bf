#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include "certkit/additive.hpp"
#include "certkit/bounds.hpp"
#include "certkit/complete.hpp"
#include "certkit/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace testing {

using certkit::Activation;
using certkit::AffineLayer;
using certkit::BoxSet;
using certkit::LinearSpec;
using certkit::Matrix;
using certkit::Network;

inline Network affine_net(std::vector<std::vector<std::vector<double>>> weights,
                          std::vector<std::vector<double>> biases) {
    std::vector<AffineLayer> layers;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const auto& w = weights[l];
        Matrix m(w.size(), w.empty() ? 0 : w[0].size());
        for (std::size_t r = 0; r < w.size(); ++r)
            for (std::size_t c = 0; c < w[r].size(); ++c) m(r, c) = w[r][c];
        layers.push_back({std::move(m), biases[l], l + 1 < weights.size() ? Activation::ReLU : Activation::Identity});
    }
    return Network(std::move(layers));
}

// relu(x) as a two-layer net with an identity output.
inline Network relu_1d() { return affine_net({{{1.0}}, {{1.0}}}, {{0.0}, {0.0}}); }

inline Network random_net(std::mt19937_64& rng, std::vector<std::size_t> dims, double bias_scale = 0.5) {
    std::vector<AffineLayer> layers;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        std::normal_distribution<double> w(0.0, 1.0 / std::sqrt(static_cast<double>(dims[l - 1])));
        std::normal_distribution<double> b(0.0, bias_scale);
        Matrix m(dims[l], dims[l - 1]);
        for (std::size_t r = 0; r < dims[l]; ++r)
            for (std::size_t c = 0; c < dims[l - 1]; ++c) m(r, c) = w(rng);
        std::vector<double> bias(dims[l]);
        for (auto& v : bias) v = b(rng);
        layers.push_back({std::move(m), std::move(bias), l + 1 < dims.size() ? Activation::ReLU : Activation::Identity});
    }
    return Network(std::move(layers));
}

// Random architecture: 1..max_layers layers, widths in [1, max_width].
inline std::vector<std::size_t> random_dims(std::mt19937_64& rng, std::size_t input, std::size_t output,
                                            std::size_t max_layers, std::size_t max_width) {
    std::uniform_int_distribution<std::size_t> nl(1, max_layers), wd(1, max_width);
    const auto layers = nl(rng);
    std::vector<std::size_t> dims{input};
    for (std::size_t l = 1; l < layers; ++l) dims.push_back(wd(rng));
    dims.push_back(output);
    return dims;
}

inline BoxSet random_box(std::mt19937_64& rng, std::size_t dim, double max_radius) {
    std::uniform_real_distribution<double> c(-1.0, 1.0), r(0.0, max_radius);
    std::vector<double> lo(dim), hi(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const double center = c(rng), rad = r(rng);
        lo[i] = center - rad;
        hi[i] = center + rad;
    }
    return BoxSet(lo, hi);
}

inline LinearSpec random_spec(std::mt19937_64& rng, std::size_t outputs) {
    std::normal_distribution<double> n(0.0, 1.0);
    LinearSpec s;
    s.a.resize(outputs);
    for (auto& v : s.a) v = n(rng);
    s.beta = 0.5 * n(rng);
    return s;
}

inline std::vector<double> sample_point(std::mt19937_64& rng, const BoxSet& box) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(box.dim());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = box.lo(i) + u(rng) * (box.hi(i) - box.lo(i));
    return x;
}

// Independent forward pass (no shared code with certkit::evaluate).
inline std::vector<double> forward(const Network& net, std::vector<double> z) {
    for (const auto& layer : net.layers()) {
        std::vector<double> next(layer.out_width(), 0.0);
        for (std::size_t r = 0; r < next.size(); ++r) {
            double acc = layer.bias[r];
            for (std::size_t c = 0; c < z.size(); ++c) acc += layer.weight(r, c) * z[c];
            next[r] = layer.activation == Activation::ReLU ? std::max(acc, 0.0) : acc;
        }
        z = std::move(next);
    }
    return z;
}

inline double spec_at(const Network& net, const LinearSpec& s, const std::vector<double>& x) {
    const auto y = forward(net, x);
    double v = -s.beta;
    for (std::size_t i = 0; i < y.size(); ++i) v += s.a[i] * y[i];
    return v;
}

// Closed-form k-fold tent map.
inline double tent_iterate(double x, int k) {
    for (int i = 0; i < k; ++i) x = x <= 0.5 ? 2.0 * x : 2.0 - 2.0 * x;
    return x;
}

// Soundness slack for float comparisons of bounds against evaluations.
inline double slack(double v) { return 1e-9 * (1.0 + std::abs(v)); }

// Ordinary least squares fit y ~ a + b x; returns R^2.
inline double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
}

// Random continuous piecewise-linear component on [lo, hi].
inline certkit::UnivariateComponent random_pwl(std::mt19937_64& rng, double lo, double hi, int pieces) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> knots{lo, hi};
    for (int i = 1; i < pieces; ++i) knots.push_back(lo + (hi - lo) * u(rng));
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    std::vector<double> values(knots.size());
    for (auto& v : values) v = n(rng);
    return certkit::UnivariateComponent(certkit::PiecewiseLinear{knots, values});
}

inline certkit::UnivariateComponent random_poly(std::mt19937_64& rng, double lo, double hi) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_int_distribution<int> deg(0, 3);
    std::vector<double> c(static_cast<std::size_t>(deg(rng)) + 1);
    for (auto& v : c) v = n(rng);
    return certkit::UnivariateComponent(certkit::Polynomial{c}, {lo, hi});
}

// Random additive model in dimension d with `active` components on [-1, 1]
// (or the given interval) reference intervals.
inline certkit::AdditiveModel random_additive(std::mt19937_64& rng, std::size_t d, std::size_t active,
                                              bool polys = true) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<certkit::Interval> ref(d);
    std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.5, 2.0);
    for (auto& r : ref) {
        r.lo = u(rng);
        r.hi = r.lo + w(rng);
    }
    std::vector<std::size_t> coords(d);
    for (std::size_t j = 0; j < d; ++j) coords[j] = j;
    std::shuffle(coords.begin(), coords.end(), rng);
    std::vector<certkit::AdditiveTerm> terms;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t k = 0; k < std::min(active, d); ++k) {
        const auto j = coords[k];
        if (polys && coin(rng)) terms.push_back({j, random_poly(rng, ref[j].lo, ref[j].hi)});
        else terms.push_back({j, random_pwl(rng, ref[j].lo, ref[j].hi, 1 + static_cast<int>(rng() % 6))});
    }
    return certkit::AdditiveModel(n(rng), ref, std::move(terms));
}

}  // namespace testing
