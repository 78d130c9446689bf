#include "certkit/complete.hpp"

#include "certkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <queue>
#include <random>

namespace certkit {

const char* to_string(BabVerdict v) {
    switch (v) {
        case BabVerdict::Safe: return "Safe";
        case BabVerdict::Unsafe: return "Unsafe";
        case BabVerdict::Budget: return "Budget";
    }
    return "?";
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Node {
    BoxSet box;
    double upper;
    double lower;
    std::uint64_t id;
};

// Max-heap on the certified upper bound; equal bounds pop oldest first.
struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.upper != b.upper) return a.upper < b.upper;
        return a.id > b.id;
    }
};

struct Bounded {
    BoxSet box;
    double upper;
    double lower;
    bool resolved;  // affine on the box (or too small to split): upper is final
    std::vector<double> best_point;
    double best_value;
};

std::vector<double> vertex_for(const std::vector<double>& coeffs, const BoxSet& box) {
    std::vector<double> x(box.dim());
    for (std::size_t i = 0; i < box.dim(); ++i) x[i] = coeffs[i] >= 0.0 ? box.hi(i) : box.lo(i);
    return x;
}

bool splittable(const BoxSet& box) {
    for (std::size_t i = 0; i < box.dim(); ++i) {
        const double mid = 0.5 * (box.lo(i) + box.hi(i));
        if (mid > box.lo(i) && mid < box.hi(i)) return true;
    }
    return false;
}

Bounded bound_box(const Network& net, const LinearSpec& spec, const BoundOptions& options, BoxSet box,
                  double parent_upper, double parent_lower) {
    const auto detail = linear_output_bounds_detail(net, box, spec, options);
    const bool affine = detail.preact.all_stable();
    Bounded b{box, std::min(detail.certificate.upper, parent_upper),
              std::max(detail.certificate.lower, parent_lower), affine || !splittable(box), {}, kNegInf};

    auto consider = [&](std::vector<double> x) {
        const double v = spec_value(net, spec, x);
        if (v > b.best_value) {
            b.best_value = v;
            b.best_point = std::move(x);
        }
    };
    consider(vertex_for(detail.input_coeffs, box));
    if (!affine) consider(box.center());
    // On an affine box the bound is the exact maximum at the chosen vertex.
    if (affine) b.upper = std::max(std::min(b.upper, detail.certificate.upper), b.best_value);
    return b;
}

std::pair<BoxSet, BoxSet> bisect(const BoxSet& box) {
    std::size_t axis = 0;
    double widest = -1.0;
    for (std::size_t i = 0; i < box.dim(); ++i) {
        const double w = box.hi(i) - box.lo(i);
        if (w > widest) {
            widest = w;
            axis = i;
        }
    }
    const double mid = 0.5 * (box.lo(axis) + box.hi(axis));
    auto left_hi = box.hi();
    auto right_lo = box.lo();
    left_hi[axis] = mid;
    right_lo[axis] = mid;
    return {BoxSet(box.lo(), std::move(left_hi)), BoxSet(std::move(right_lo), box.hi())};
}

}  // namespace

BabResult verify_complete(const Network& net, const BoxSet& box, const LinearSpec& spec,
                          std::uint64_t node_budget, double gap_tol, const BabOptions& options) {
    if (node_budget < 1) throw Error(ErrorCode::InvalidArgument, "node budget must be at least 1");
    if (!(gap_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "gap tolerance must be positive");
    if (box.dim() != net.input_dim())
        throw Error(ErrorCode::DimensionMismatch, "box dimension does not match network input");

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    BabResult result;
    double closed_upper = kNegInf;
    double best = kNegInf;
    std::uint64_t next_id = 0;

    auto absorb = [&](Bounded b) {
        ++result.nodes_expanded;
        if (b.best_value > best) {
            best = b.best_value;
            result.witness = std::move(b.best_point);
        }
        // A box that cannot beat the incumbent, or whose bound is already
        // nonpositive, never needs splitting.
        if (b.resolved || b.upper <= 0.0 || b.upper <= best)
            closed_upper = std::max(closed_upper, b.upper);
        else
            open.push(Node{std::move(b.box), b.upper, b.lower, next_id++});
    };

    const double inf = std::numeric_limits<double>::infinity();
    absorb(bound_box(net, spec, options.bounds, box, inf, -inf));

    const unsigned threads = std::max(1u, options.threads);
    for (;;) {
        result.upper = std::max(closed_upper, open.empty() ? kNegInf : open.top().upper);
        result.lower = best;
        if (options.observer)
            options.observer(BabSnapshot{result.lower, result.upper, result.nodes_expanded, open.size()});

        if (best > 0.0) {
            result.verdict = BabVerdict::Unsafe;
            break;
        }
        if (result.upper <= 0.0) {
            result.verdict = BabVerdict::Safe;
            result.witness.reset();
            break;
        }
        if (open.empty() || result.upper - result.lower <= gap_tol ||
            result.nodes_expanded + 2 > node_budget) {
            result.verdict = BabVerdict::Budget;
            break;
        }

        std::vector<Node> batch;
        while (!open.empty() && batch.size() < threads &&
               result.nodes_expanded + 2 * (batch.size() + 1) <= node_budget) {
            batch.push_back(open.top());
            open.pop();
        }

        std::vector<Bounded> children;
        if (batch.size() == 1) {
            auto [left, right] = bisect(batch[0].box);
            children.push_back(bound_box(net, spec, options.bounds, std::move(left), batch[0].upper, batch[0].lower));
            children.push_back(bound_box(net, spec, options.bounds, std::move(right), batch[0].upper, batch[0].lower));
        } else {
            std::vector<std::future<std::pair<Bounded, Bounded>>> jobs;
            for (const auto& node : batch) {
                jobs.push_back(std::async(std::launch::async, [&net, &spec, &options, &node] {
                    auto [left, right] = bisect(node.box);
                    return std::make_pair(
                        bound_box(net, spec, options.bounds, std::move(left), node.upper, node.lower),
                        bound_box(net, spec, options.bounds, std::move(right), node.upper, node.lower));
                }));
            }
            for (auto& job : jobs) {
                auto pair = job.get();
                children.push_back(std::move(pair.first));
                children.push_back(std::move(pair.second));
            }
        }
        for (auto& child : children) absorb(std::move(child));
    }
    return result;
}

Network make_sawtooth(int k) {
    if (k < 1 || k > kMaxSawtooth)
        throw Error(ErrorCode::InvalidArgument, "sawtooth depth must be in [1, " + std::to_string(kMaxSawtooth) + "]");
    std::vector<AffineLayer> layers;
    layers.push_back({Matrix(2, 1, {1.0, 1.0}), {0.0, -0.5}, Activation::ReLU});
    for (int level = 1; level < k; ++level)
        layers.push_back({Matrix(2, 2, {2.0, -4.0, 2.0, -4.0}), {0.0, -0.5}, Activation::ReLU});
    layers.push_back({Matrix(1, 2, {2.0, -4.0}), {0.0}, Activation::Identity});
    return Network(std::move(layers));
}

namespace {

struct Form {
    double slope;
    double intercept;
    double at(double x) const { return slope * x + intercept; }
};

bool same_forms(const AffinePiece& a, const AffinePiece& b) {
    auto close = [](double u, double v) { return std::abs(u - v) <= 1e-12 * std::max({1.0, std::abs(u), std::abs(v)}); };
    for (std::size_t i = 0; i < a.slope.size(); ++i)
        if (!close(a.slope[i], b.slope[i]) || !close(a.intercept[i], b.intercept[i])) return false;
    return true;
}

}  // namespace

PieceDecomposition enumerate_pieces_1d(const Network& net, const BoxSet& interval) {
    if (net.input_dim() != 1 || interval.dim() != 1)
        throw Error(ErrorCode::DimensionMismatch, "piece enumeration needs a network and interval of dimension 1");

    struct Region {
        double lo, hi;
        std::vector<Form> forms;  // current layer's units as affine functions of x
    };
    std::vector<Region> regions{{interval.lo(0), interval.hi(0), {Form{1.0, 0.0}}}};

    for (const auto& layer : net.layers()) {
        std::vector<Region> next;
        for (const auto& region : regions) {
            std::vector<Form> pre(layer.out_width());
            for (std::size_t r = 0; r < layer.out_width(); ++r) {
                const auto row = layer.weight.row(r);
                Form f{0.0, layer.bias[r]};
                for (std::size_t c = 0; c < row.size(); ++c) {
                    f.slope += row[c] * region.forms[c].slope;
                    f.intercept += row[c] * region.forms[c].intercept;
                }
                pre[r] = f;
            }
            if (layer.activation != Activation::ReLU) {
                next.push_back({region.lo, region.hi, std::move(pre)});
                continue;
            }
            std::vector<double> cuts{region.lo};
            for (const auto& f : pre) {
                if (f.slope == 0.0) continue;
                const double x = -f.intercept / f.slope;
                if (x > region.lo && x < region.hi) cuts.push_back(x);
            }
            cuts.push_back(region.hi);
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            if (cuts.size() == 1) cuts.push_back(region.hi);  // degenerate interval
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
                std::vector<Form> post(pre.size());
                for (std::size_t r = 0; r < pre.size(); ++r)
                    post[r] = pre[r].at(mid) > 0.0 ? pre[r] : Form{0.0, 0.0};
                next.push_back({cuts[i], cuts[i + 1], std::move(post)});
            }
        }
        regions = std::move(next);
    }

    PieceDecomposition out;
    for (auto& region : regions) {
        AffinePiece piece{region.lo, region.hi, {}, {}};
        for (const auto& f : region.forms) {
            piece.slope.push_back(f.slope);
            piece.intercept.push_back(f.intercept);
        }
        if (!out.pieces.empty() && same_forms(out.pieces.back(), piece)) {
            out.pieces.back().hi = piece.hi;
        } else {
            if (!out.pieces.empty()) out.breakpoints.push_back(piece.lo);
            out.pieces.push_back(std::move(piece));
        }
    }
    return out;
}

double PieceDecomposition::max_value(const LinearSpec& spec, double* argmax) const {
    double best = kNegInf;
    for (const auto& piece : pieces) {
        if (spec.a.size() != piece.slope.size())
            throw Error(ErrorCode::DimensionMismatch, "spec length does not match network outputs");
        double slope = 0.0, icpt = -spec.beta;
        for (std::size_t i = 0; i < spec.a.size(); ++i) {
            slope += spec.a[i] * piece.slope[i];
            icpt += spec.a[i] * piece.intercept[i];
        }
        for (double x : {piece.lo, piece.hi}) {
            const double v = slope * x + icpt;
            if (v > best) {
                best = v;
                if (argmax) *argmax = x;
            }
        }
    }
    return best;
}

std::optional<std::vector<double>> sampling_attack(const Network& net, const BoxSet& box, const LinearSpec& spec,
                                                   std::uint64_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "attack needs at least one sample");
    if (box.dim() != net.input_dim())
        throw Error(ErrorCode::DimensionMismatch, "box dimension does not match network input");
    std::mt19937_64 rng(seed);
    std::vector<std::uniform_real_distribution<double>> coords;
    for (std::size_t i = 0; i < box.dim(); ++i) coords.emplace_back(box.lo(i), box.hi(i));
    std::vector<double> x(box.dim());
    for (std::uint64_t n = 0; n < n_samples; ++n) {
        for (std::size_t i = 0; i < box.dim(); ++i) x[i] = coords[i](rng);
        if (spec_value(net, spec, x) > 0.0) return x;
    }
    return std::nullopt;
}

Network make_bump(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
    // Hidden units work in units of delta with integer offsets, so past the
    // bump the output sums z - (z-1) - (z-99) + (z-100) without rounding and is
    // exactly 0. Unscaled offsets leave residues of either sign there.
    const double scale = 100.0 / epsilon;
    std::vector<AffineLayer> layers;
    layers.push_back({Matrix(4, 1, {scale, scale, scale, scale}), {0.0, -1.0, -99.0, -100.0}, Activation::ReLU});
    layers.push_back({Matrix(1, 4, {1.0, -1.0, -1.0, 1.0}), {0.0}, Activation::Identity});
    return Network(std::move(layers));
}

double AttackReport::standard_error() const {
    if (n_trials == 0) return 0.0;
    return std::sqrt(predicted_miss_prob * (1.0 - predicted_miss_prob) / static_cast<double>(n_trials));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

AttackReport attack_gap_experiment(double epsilon, std::uint64_t n_samples, std::uint64_t n_trials, std::uint64_t seed) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
    if (n_samples < 1 || n_trials < 1) throw Error(ErrorCode::InvalidArgument, "samples and trials must be >= 1");
    const Network bump = make_bump(epsilon);
    const BoxSet unit({0.0}, {1.0});
    const LinearSpec spec{{1.0}, 0.0};

    AttackReport report;
    report.n_trials = n_trials;
    report.epsilon = epsilon;
    report.n_samples_per_trial = n_samples;
    report.predicted_miss_prob = std::pow(1.0 - epsilon, static_cast<double>(n_samples));
    for (std::uint64_t t = 0; t < n_trials; ++t)
        if (!sampling_attack(bump, unit, spec, n_samples, splitmix64(seed * 0x100000001b3ULL + t))) ++report.n_missed;
    return report;
}

}  // namespace certkit
