#pragma once

#include "certkit/network.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace certkit {

/// Axis-aligned input region [lo, hi].
class BoxSet {
public:
    BoxSet(std::vector<double> lo, std::vector<double> hi);

    /// The l-infinity ball of `radius` around `center`.
    static BoxSet around(std::span<const double> center, double radius);

    std::size_t dim() const noexcept { return lo_.size(); }
    const std::vector<double>& lo() const noexcept { return lo_; }
    const std::vector<double>& hi() const noexcept { return hi_; }
    double lo(std::size_t i) const { return lo_[i]; }
    double hi(std::size_t i) const { return hi_[i]; }

    std::vector<double> center() const;
    /// Radius of the largest l-infinity ball inside the box (min half-width).
    double inner_radius() const;
    bool contains(std::span<const double> x) const;
    bool contains(const BoxSet& other) const;

private:
    std::vector<double> lo_;
    std::vector<double> hi_;
};

/// The specification a^T f(x) <= beta.
struct LinearSpec {
    std::vector<double> a;
    double beta = 0.0;

    /// Logit-margin spec f_k(x) - f_t(x) <= 0 for a network with `outputs` logits.
    static LinearSpec margin(std::size_t outputs, std::size_t target, std::size_t other);
};

double spec_value(const Network& net, const LinearSpec& spec, std::span<const double> x);

struct LayerBounds {
    std::vector<double> lower;
    std::vector<double> upper;
    bool relu = true;
};

/// Preactivation bounds for every layer before the output layer, in layer
/// order (entry l belongs to layer l).
struct PreactBounds {
    std::vector<LayerBounds> layers;

    bool all_stable() const;
    std::size_t unstable_count() const;
};

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
    double operator()(double s) const { return slope * s + intercept; }
};

struct ReluRelaxation {
    Line upper;
    Line lower;
};

/// Linear sandwich of max(s, 0) on [lower, upper]. Stable neurons get the exact
/// line; unstable ones get the chord above and, below, s -> s when
/// upper >= -lower and s -> 0 otherwise.
ReluRelaxation relu_triangle(double lower, double upper);

enum class BoundMethod { Interval, BackwardLinear, CompleteBaB };
enum class Verdict { Safe, Unknown, Unsafe };

const char* to_string(BoundMethod m);
const char* to_string(Verdict v);

struct Certificate {
    double upper = 0.0;  // >= sup_{x in box} a^T f(x) - beta
    double lower = 0.0;  // <= inf_{x in box} a^T f(x) - beta
    BoundMethod method = BoundMethod::BackwardLinear;
    int passes = 0;
    Verdict verdict = Verdict::Unknown;
    std::optional<std::vector<double>> witness;
    std::uint64_t wall_ops = 0;
};

/// How hidden-layer preactivation bounds are obtained before the final pass.
enum class IntermediateBounds {
    Interval,        // one interval forward pass; total cost O(M)
    BackwardLinear,  // one batched backward pass per hidden layer, intersected with intervals
};

struct BoundOptions {
    IntermediateBounds intermediate = IntermediateBounds::BackwardLinear;
};

/// Forward interval propagation; adds the multiply-add count to `ops` when given.
PreactBounds interval_bounds(const Network& net, const BoxSet& box, std::uint64_t* ops = nullptr);

/// Preactivation bounds according to `options` (always at least as tight as
/// interval_bounds).
PreactBounds preactivation_bounds(const Network& net, const BoxSet& box, const BoundOptions& options = {},
                                  std::uint64_t* ops = nullptr);

/// Interval-arithmetic certificate for the spec (method Interval, K = 1).
Certificate interval_output_bounds(const Network& net, const BoxSet& box, const LinearSpec& spec);

/// Backward linear bound propagation through the ReLU triangle relaxation. The
/// reported upper is the smaller of the backward bound and the interval bound
/// on the same preactivation bounds, so it never exceeds interval_output_bounds.
Certificate linear_output_bounds(const Network& net, const BoxSet& box, const LinearSpec& spec,
                                 const BoundOptions& options = {});

/// Runs linear_output_bounds for several specs, optionally on `threads` worker
/// threads. The result is identical to sequential evaluation.
std::vector<Certificate> linear_output_bounds_batch(const Network& net, const BoxSet& box,
                                                    std::span<const LinearSpec> specs, unsigned threads = 1,
                                                    const BoundOptions& options = {});

/// Everything the branch-and-bound verifier needs from one bounding call.
struct BoundDetail {
    Certificate certificate;
    PreactBounds preact;
    // Backward upper bound as an affine function of the input:
    // a^T f(x) - beta <= input_coeffs . x + input_const on the box, with
    // equality when every hidden neuron is stable.
    std::vector<double> input_coeffs;
    double input_const = 0.0;
};

BoundDetail linear_output_bounds_detail(const Network& net, const BoxSet& box, const LinearSpec& spec,
                                        const BoundOptions& options = {});

/// Certified upper bound on sup - inf of a^T f over the box (beta is ignored).
double oscillation(const Network& net, const BoxSet& box, const LinearSpec& spec);

/// osc / r, a Lipschitz surrogate valid on a box containing a ball of radius r.
double local_lipschitz_surrogate(double osc, double r);

/// Flat `key=value` record with fields method, K, upper, lower, verdict,
/// witness (only when present) and wall_ops.
std::string serialize(const Certificate& cert);

}  // namespace certkit
