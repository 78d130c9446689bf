#pragma once

#include "certkit/bounds.hpp"
#include "certkit/network.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace certkit {

enum class BabVerdict { Safe, Unsafe, Budget };
const char* to_string(BabVerdict v);

struct BabResult {
    BabVerdict verdict = BabVerdict::Budget;
    // Sound bracket on the violation value V = sup_{x in box} a^T f(x) - beta.
    double lower = 0.0;
    double upper = 0.0;
    std::uint64_t nodes_expanded = 0;
    std::optional<std::vector<double>> witness;
};

/// Bracket after each refinement step, for callers that audit the search.
struct BabSnapshot {
    double lower;
    double upper;
    std::uint64_t nodes_expanded;
    std::size_t open_nodes;
};

struct BabOptions {
    unsigned threads = 1;
    BoundOptions bounds;
    std::function<void(const BabSnapshot&)> observer;
};

/// Best-first branch and bound over input-box bisections. Each node is bounded
/// with linear_output_bounds; nodes whose neurons are all stable are affine and
/// are resolved exactly at the maximizing vertex. The bracket [lower, upper]
/// on V is sound at every step: lower is the best evaluated point, upper the
/// largest certified bound among open and resolved nodes.
///
/// Stops with Safe once upper <= 0, Unsafe once an evaluated point violates
/// the spec, and Budget when `node_budget` boxes have been bounded or the
/// bracket has narrowed to `gap_tol` around 0 without a decision.
BabResult verify_complete(const Network& net, const BoxSet& box, const LinearSpec& spec,
                          std::uint64_t node_budget, double gap_tol, const BabOptions& options = {});

/// k-fold composition of the tent map T(x) = 2 relu(x) - 4 relu(x - 1/2),
/// one hidden layer of two units per level. Has 2^k affine pieces on [0, 1].
Network make_sawtooth(int k);
constexpr int kMaxSawtooth = 20;

struct AffinePiece {
    double lo;
    double hi;
    std::vector<double> slope;      // per output
    std::vector<double> intercept;  // per output
};

struct PieceDecomposition {
    std::vector<double> breakpoints;  // interior piece boundaries, increasing
    std::vector<AffinePiece> pieces;  // pieces.size() == breakpoints.size() + 1

    /// Exact max over the interval of a^T f(x) - beta, attained at a piece end.
    double max_value(const LinearSpec& spec, double* argmax = nullptr) const;
};

/// Exact affine decomposition of a network with one input over a 1-D box,
/// obtained by pushing breakpoints through the layers. Adjacent pieces with the
/// same affine form are merged.
PieceDecomposition enumerate_pieces_1d(const Network& net, const BoxSet& interval);

/// Uniform random search; returns the first sampled point with a^T f(x) > beta.
std::optional<std::vector<double>> sampling_attack(const Network& net, const BoxSet& box, const LinearSpec& spec,
                                                   std::uint64_t n_samples, std::uint64_t seed);

/// Network on [0, 1] that is 1 on [delta, eps - delta], 0 outside (0, eps) and
/// linear in between, delta = eps / 100. Its strict violation set for f <= 0
/// is (0, eps).
Network make_bump(double epsilon);

struct AttackReport {
    std::uint64_t n_trials = 0;
    std::uint64_t n_missed = 0;
    double epsilon = 0.0;
    std::uint64_t n_samples_per_trial = 0;
    double predicted_miss_prob = 0.0;  // (1 - epsilon)^N

    double empirical_miss_rate() const {
        return n_trials ? static_cast<double>(n_missed) / static_cast<double>(n_trials) : 0.0;
    }
    double standard_error() const;
};

AttackReport attack_gap_experiment(double epsilon, std::uint64_t n_samples, std::uint64_t n_trials, std::uint64_t seed);

}  // namespace certkit
