#include "certkit/bounds.hpp"

#include "certkit/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace certkit {

BoxSet::BoxSet(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size()) throw Error(ErrorCode::DimensionMismatch, "box lo/hi lengths differ");
    if (lo_.empty()) throw Error(ErrorCode::InvalidArgument, "box must have at least one coordinate");
    for (std::size_t i = 0; i < lo_.size(); ++i) {
        if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]))
            throw Error(ErrorCode::NonFinite, "box bounds must be finite");
        if (lo_[i] > hi_[i]) throw Error(ErrorCode::InvalidArgument, "box has lo > hi at coordinate " + std::to_string(i));
    }
}

BoxSet BoxSet::around(std::span<const double> center, double radius) {
    if (!(radius >= 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be nonnegative");
    std::vector<double> lo(center.size()), hi(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) {
        lo[i] = center[i] - radius;
        hi[i] = center[i] + radius;
    }
    return BoxSet(std::move(lo), std::move(hi));
}

std::vector<double> BoxSet::center() const {
    std::vector<double> c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lo_[i] + hi_[i]);
    return c;
}

double BoxSet::inner_radius() const {
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dim(); ++i) r = std::min(r, 0.5 * (hi_[i] - lo_[i]));
    return r;
}

bool BoxSet::contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
        if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
    return true;
}

bool BoxSet::contains(const BoxSet& other) const {
    if (other.dim() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
        if (other.lo_[i] < lo_[i] || other.hi_[i] > hi_[i]) return false;
    return true;
}

LinearSpec LinearSpec::margin(std::size_t outputs, std::size_t target, std::size_t other) {
    if (target >= outputs || other >= outputs)
        throw Error(ErrorCode::InvalidArgument, "class index out of range");
    if (target == other) throw Error(ErrorCode::InvalidArgument, "margin needs two distinct classes");
    LinearSpec spec;
    spec.a.assign(outputs, 0.0);
    spec.a[other] = 1.0;
    spec.a[target] = -1.0;
    spec.beta = 0.0;
    return spec;
}

namespace {

void check_dims(const Network& net, const BoxSet& box) {
    if (box.dim() != net.input_dim())
        throw Error(ErrorCode::DimensionMismatch, "box has dimension " + std::to_string(box.dim()) +
                                                      ", network expects " + std::to_string(net.input_dim()));
}

void check_spec(const Network& net, const LinearSpec& spec) {
    if (spec.a.size() != net.output_dim())
        throw Error(ErrorCode::DimensionMismatch, "spec has " + std::to_string(spec.a.size()) +
                                                      " coefficients, network has " +
                                                      std::to_string(net.output_dim()) + " outputs");
    if (!std::isfinite(spec.beta) || !std::all_of(spec.a.begin(), spec.a.end(), [](double v) { return std::isfinite(v); }))
        throw Error(ErrorCode::NonFinite, "spec coefficients must be finite");
}

// Image of the box [lo, hi] under z -> W z + b, via center/radius form.
LayerBounds affine_interval(const AffineLayer& layer, std::span<const double> lo, std::span<const double> hi,
                            std::uint64_t& ops) {
    const std::size_t n = layer.in_width();
    std::vector<double> mid(n), rad(n);
    for (std::size_t i = 0; i < n; ++i) {
        mid[i] = 0.5 * (lo[i] + hi[i]);
        rad[i] = 0.5 * (hi[i] - lo[i]);
    }
    LayerBounds out;
    out.lower.resize(layer.out_width());
    out.upper.resize(layer.out_width());
    for (std::size_t r = 0; r < layer.out_width(); ++r) {
        const auto row = layer.weight.row(r);
        double c = layer.bias[r];
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            c += row[i] * mid[i];
            w += std::abs(row[i]) * rad[i];
        }
        out.lower[r] = c - w;
        out.upper[r] = c + w;
    }
    ops += 2 * static_cast<std::uint64_t>(n) * layer.out_width();
    return out;
}

LayerBounds relu_image(const LayerBounds& pre) {
    LayerBounds post{pre.lower, pre.upper, pre.relu};
    for (auto& v : post.lower) v = std::max(v, 0.0);
    for (auto& v : post.upper) v = std::max(v, 0.0);
    return post;
}

struct Sweep {
    std::vector<double> coeffs;  // on the network input
    double constant = 0.0;
    double value = 0.0;  // sup over the box of coeffs . x + constant
};

// Upper bound of lambda . z_top + cst over the box, where z_top is the output
// (post-activation) of layer `top`. Walks down through layers top..0, relaxing
// every ReLU with relu_triangle on `bounds`.
Sweep sweep_down(const Network& net, const BoxSet& box, const PreactBounds& bounds, std::size_t top,
                 std::vector<double> lambda, double cst, std::uint64_t& ops) {
    std::vector<double> mu;
    for (std::size_t l = top + 1; l-- > 0;) {
        const auto& layer = net.layer(l);
        mu = std::move(lambda);
        if (layer.activation == Activation::ReLU) {
            const auto& b = bounds.layers[l];
            for (std::size_t k = 0; k < mu.size(); ++k) {
                const auto relax = relu_triangle(b.lower[k], b.upper[k]);
                // coefficient 0 takes the upper line; the choice is value-irrelevant
                const Line& line = mu[k] >= 0.0 ? relax.upper : relax.lower;
                cst += mu[k] * line.intercept;
                mu[k] *= line.slope;
            }
            ops += mu.size();
        }
        lambda.assign(layer.in_width(), 0.0);
        for (std::size_t r = 0; r < layer.out_width(); ++r) {
            const double m = mu[r];
            cst += m * layer.bias[r];
            if (m == 0.0) continue;
            const auto row = layer.weight.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) lambda[c] += m * row[c];
        }
        ops += static_cast<std::uint64_t>(layer.in_width()) * layer.out_width();
    }
    Sweep out;
    out.value = cst;
    for (std::size_t i = 0; i < lambda.size(); ++i) out.value += lambda[i] >= 0.0 ? lambda[i] * box.hi(i) : lambda[i] * box.lo(i);
    ops += lambda.size();
    out.coeffs = std::move(lambda);
    out.constant = cst;
    return out;
}

// Bounds for every layer before the output layer, so bounds.layers[l] lines
// up with layer l. Identity layers in the middle are kept but never relaxed.
PreactBounds compute_preact(const Network& net, const BoxSet& box, const BoundOptions& options, std::uint64_t& ops) {
    PreactBounds bounds;
    const std::size_t hidden = net.depth() - 1;
    bounds.layers.reserve(hidden);
    std::vector<double> lo = box.lo(), hi = box.hi();
    for (std::size_t l = 0; l < hidden; ++l) {
        const auto& layer = net.layer(l);
        LayerBounds pre = affine_interval(layer, lo, hi, ops);
        if (options.intermediate == IntermediateBounds::BackwardLinear && l > 0) {
            for (std::size_t r = 0; r < layer.out_width(); ++r) {
                const auto row = layer.weight.row(r);
                std::vector<double> up(row.begin(), row.end());
                std::vector<double> down(row.size());
                for (std::size_t c = 0; c < row.size(); ++c) down[c] = -row[c];
                const double u = sweep_down(net, box, bounds, l - 1, std::move(up), layer.bias[r], ops).value;
                const double d = -sweep_down(net, box, bounds, l - 1, std::move(down), -layer.bias[r], ops).value;
                pre.upper[r] = std::min(pre.upper[r], u);
                pre.lower[r] = std::max(pre.lower[r], d);
                // rounding can cross the two for a zero-width box
                if (pre.lower[r] > pre.upper[r]) pre.lower[r] = pre.upper[r] = 0.5 * (pre.lower[r] + pre.upper[r]);
            }
        }
        pre.relu = layer.activation == Activation::ReLU;
        if (pre.relu) {
            const auto post = relu_image(pre);
            lo = post.lower;
            hi = post.upper;
        } else {
            lo = pre.lower;
            hi = pre.upper;
        }
        bounds.layers.push_back(std::move(pre));
    }
    return bounds;
}

// Interval bound of a^T (W_L z + b_L) - beta with z in the image of the last
// hidden layer.
std::pair<double, double> interval_spec(const Network& net, const BoxSet& box, const PreactBounds& bounds,
                                        const LinearSpec& spec, std::uint64_t& ops) {
    const auto& last = net.layer(net.depth() - 1);
    std::vector<double> lo, hi;
    if (net.depth() == 1) {
        lo = box.lo();
        hi = box.hi();
    } else {
        const auto& pre = bounds.layers.back();
        const auto post = net.layer(net.depth() - 2).activation == Activation::ReLU ? relu_image(pre) : pre;
        lo = post.lower;
        hi = post.upper;
    }
    std::vector<double> c(last.in_width(), 0.0);
    double cst = -spec.beta;
    for (std::size_t r = 0; r < last.out_width(); ++r) {
        cst += spec.a[r] * last.bias[r];
        const auto row = last.weight.row(r);
        for (std::size_t i = 0; i < row.size(); ++i) c[i] += spec.a[r] * row[i];
    }
    ops += static_cast<std::uint64_t>(last.in_width()) * last.out_width();
    double center = cst, radius = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        center += c[i] * 0.5 * (lo[i] + hi[i]);
        radius += std::abs(c[i]) * 0.5 * (hi[i] - lo[i]);
    }
    ops += 2 * c.size();
    return {center - radius, center + radius};
}

std::vector<double> vertex_for(const std::vector<double>& coeffs, const BoxSet& box) {
    std::vector<double> x(box.dim());
    for (std::size_t i = 0; i < box.dim(); ++i) x[i] = coeffs[i] >= 0.0 ? box.hi(i) : box.lo(i);
    return x;
}

}  // namespace

double spec_value(const Network& net, const LinearSpec& spec, std::span<const double> x) {
    check_spec(net, spec);
    const auto y = evaluate(net, x);
    double v = -spec.beta;
    for (std::size_t i = 0; i < y.size(); ++i) v += spec.a[i] * y[i];
    return v;
}

bool PreactBounds::all_stable() const { return unstable_count() == 0; }

std::size_t PreactBounds::unstable_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers)
        if (layer.relu)
            for (std::size_t k = 0; k < layer.lower.size(); ++k)
                if (layer.lower[k] < 0.0 && layer.upper[k] > 0.0) ++n;
    return n;
}

ReluRelaxation relu_triangle(double lower, double upper) {
    if (lower > upper) throw Error(ErrorCode::InvalidArgument, "relu_triangle needs lower <= upper");
    if (lower >= 0.0) return {{1.0, 0.0}, {1.0, 0.0}};
    if (upper <= 0.0) return {{0.0, 0.0}, {0.0, 0.0}};
    const double slope = upper / (upper - lower);
    ReluRelaxation r;
    r.upper = {slope, -slope * lower};
    r.lower = {upper >= -lower ? 1.0 : 0.0, 0.0};
    return r;
}

const char* to_string(BoundMethod m) {
    switch (m) {
        case BoundMethod::Interval: return "Interval";
        case BoundMethod::BackwardLinear: return "BackwardLinear";
        case BoundMethod::CompleteBaB: return "CompleteBaB";
    }
    return "?";
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Safe: return "Safe";
        case Verdict::Unknown: return "Unknown";
        case Verdict::Unsafe: return "Unsafe";
    }
    return "?";
}

PreactBounds interval_bounds(const Network& net, const BoxSet& box, std::uint64_t* ops) {
    check_dims(net, box);
    std::uint64_t local = 0;
    auto bounds = compute_preact(net, box, {IntermediateBounds::Interval}, local);
    if (ops) *ops += local;
    return bounds;
}

PreactBounds preactivation_bounds(const Network& net, const BoxSet& box, const BoundOptions& options,
                                  std::uint64_t* ops) {
    check_dims(net, box);
    std::uint64_t local = 0;
    auto bounds = compute_preact(net, box, options, local);
    if (ops) *ops += local;
    return bounds;
}

Certificate interval_output_bounds(const Network& net, const BoxSet& box, const LinearSpec& spec) {
    check_dims(net, box);
    check_spec(net, spec);
    Certificate cert;
    cert.method = BoundMethod::Interval;
    cert.passes = 1;
    const auto bounds = compute_preact(net, box, {IntermediateBounds::Interval}, cert.wall_ops);
    const auto [lo, hi] = interval_spec(net, box, bounds, spec, cert.wall_ops);
    cert.lower = lo;
    cert.upper = hi;
    cert.verdict = cert.upper <= 0.0 ? Verdict::Safe : Verdict::Unknown;
    return cert;
}

BoundDetail linear_output_bounds_detail(const Network& net, const BoxSet& box, const LinearSpec& spec,
                                        const BoundOptions& options) {
    check_dims(net, box);
    check_spec(net, spec);
    BoundDetail detail;
    Certificate& cert = detail.certificate;
    cert.method = BoundMethod::BackwardLinear;
    cert.passes = 1 + static_cast<int>(net.depth() - 1);

    detail.preact = compute_preact(net, box, options, cert.wall_ops);
    const std::size_t top = net.depth() - 1;
    auto up = sweep_down(net, box, detail.preact, top, spec.a, -spec.beta, cert.wall_ops);
    std::vector<double> neg(spec.a.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -spec.a[i];
    const auto down = sweep_down(net, box, detail.preact, top, std::move(neg), spec.beta, cert.wall_ops);
    const auto [ilo, ihi] = interval_spec(net, box, detail.preact, spec, cert.wall_ops);

    cert.upper = std::min(up.value, ihi);
    cert.lower = std::max(-down.value, ilo);
    if (cert.lower > cert.upper) cert.lower = cert.upper = 0.5 * (cert.lower + cert.upper);
    detail.input_coeffs = std::move(up.coeffs);
    detail.input_const = up.constant;

    // The vertex is evaluated even for a safe bound so the op count depends on
    // the architecture only.
    auto x = vertex_for(detail.input_coeffs, box);
    const double v = spec_value(net, spec, x);
    cert.wall_ops += param_count(net);
    if (cert.upper <= 0.0) {
        cert.verdict = Verdict::Safe;
    } else if (v > 0.0) {
        cert.verdict = Verdict::Unsafe;
        cert.witness = std::move(x);
    } else {
        cert.verdict = Verdict::Unknown;
    }
    return detail;
}

Certificate linear_output_bounds(const Network& net, const BoxSet& box, const LinearSpec& spec,
                                 const BoundOptions& options) {
    return linear_output_bounds_detail(net, box, spec, options).certificate;
}

std::vector<Certificate> linear_output_bounds_batch(const Network& net, const BoxSet& box,
                                                    std::span<const LinearSpec> specs, unsigned threads,
                                                    const BoundOptions& options) {
    std::vector<Certificate> out(specs.size());
    if (threads <= 1 || specs.size() <= 1) {
        for (std::size_t i = 0; i < specs.size(); ++i) out[i] = linear_output_bounds(net, box, specs[i], options);
        return out;
    }
    // Worker w handles specs w, w + threads, ...; each result lands in its own slot.
    std::vector<std::future<void>> workers;
    const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(specs.size()));
    for (unsigned w = 0; w < n; ++w) {
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < specs.size(); i += n) out[i] = linear_output_bounds(net, box, specs[i], options);
        }));
    }
    for (auto& f : workers) f.get();
    return out;
}

double oscillation(const Network& net, const BoxSet& box, const LinearSpec& spec) {
    LinearSpec centered{spec.a, 0.0};
    const auto cert = linear_output_bounds(net, box, centered);
    return std::max(0.0, cert.upper - cert.lower);
}

double local_lipschitz_surrogate(double osc, double r) {
    if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
    if (osc < 0.0) throw Error(ErrorCode::InvalidArgument, "oscillation must be nonnegative");
    return osc / r;
}

std::string serialize(const Certificate& cert) {
    std::ostringstream out;
    out << "method=" << to_string(cert.method) << '\n';
    out << "K=" << cert.passes << '\n';
    out << "upper=" << text::format_double(cert.upper) << '\n';
    out << "lower=" << text::format_double(cert.lower) << '\n';
    out << "verdict=" << to_string(cert.verdict) << '\n';
    if (cert.witness) {
        out << "witness=";
        for (std::size_t i = 0; i < cert.witness->size(); ++i) out << (i ? "," : "") << text::format_double((*cert.witness)[i]);
        out << '\n';
    }
    out << "wall_ops=" << cert.wall_ops << '\n';
    return out.str();
}

}  // namespace certkit
