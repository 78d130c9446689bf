#include "certkit/bounds.hpp"
#include "certkit/error.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace certkit;
using namespace testing;

TEST_SUITE("bounds") {

TEST_CASE("box validation") {
    CHECK_THROWS_AS(BoxSet({0.0}, {-1.0}), Error);
    CHECK_THROWS_AS(BoxSet({0.0, 1.0}, {1.0}), Error);
    CHECK_THROWS_AS(BoxSet({0.0}, {INFINITY}), Error);
    const auto b = BoxSet::around(std::vector<double>{1.0, 2.0}, 0.5);
    CHECK(b.lo() == std::vector<double>{0.5, 1.5});
    CHECK(b.inner_radius() == 0.5);
    CHECK(BoxSet({0.0, 0.0}, {1.0, 4.0}).inner_radius() == 0.5);
}

TEST_CASE("interval bounds of an affine layer") {
    // one relu layer 2x+1 so the preactivation is reported
    const auto net = affine_net({{{2.0}}, {{1.0}}}, {{1.0}, {0.0}});
    const auto pb = interval_bounds(net, BoxSet({-1.0}, {1.0}));
    REQUIRE(pb.layers.size() == 1);
    CHECK(pb.layers[0].lower[0] == -1.0);
    CHECK(pb.layers[0].upper[0] == 3.0);

    const auto zero = affine_net({{{0.0, 0.0}, {0.0, 0.0}}, {{1.0, 1.0}}}, {{0.25, -0.5}, {0.0}});
    const auto zb = interval_bounds(zero, BoxSet({-3.0, -1.0}, {5.0, 1.0}));
    CHECK(zb.layers[0].lower == std::vector<double>{0.25, -0.5});
    CHECK(zb.layers[0].upper == std::vector<double>{0.25, -0.5});
}

TEST_CASE("preactivation bounds contain sampled preactivations") {
    std::mt19937_64 rng(21);
    for (auto mode : {IntermediateBounds::Interval, IntermediateBounds::BackwardLinear}) {
        for (int t = 0; t < 10; ++t) {
            const auto net = random_net(rng, {3, 8, 8, 2});
            const auto box = BoxSet::around(sample_point(rng, BoxSet({-1, -1, -1}, {1, 1, 1})), 0.1);
            const auto pb = preactivation_bounds(net, box, {mode});
            for (int s = 0; s < 10000; ++s) {
                std::vector<double> z = sample_point(rng, box);
                for (std::size_t l = 0; l + 1 < net.depth(); ++l) {
                    const auto& layer = net.layer(l);
                    std::vector<double> next(layer.out_width());
                    for (std::size_t r = 0; r < next.size(); ++r) {
                        double acc = layer.bias[r];
                        for (std::size_t c = 0; c < z.size(); ++c) acc += layer.weight(r, c) * z[c];
                        REQUIRE(acc >= pb.layers[l].lower[r] - slack(acc));
                        REQUIRE(acc <= pb.layers[l].upper[r] + slack(acc));
                        next[r] = std::max(acc, 0.0);
                    }
                    z = std::move(next);
                }
            }
        }
    }
}

TEST_CASE("linear intermediate bounds are never looser than intervals") {
    std::mt19937_64 rng(22);
    for (int t = 0; t < 50; ++t) {
        const auto net = random_net(rng, random_dims(rng, 3, 2, 4, 12));
        const auto box = random_box(rng, 3, 0.5);
        const auto ib = interval_bounds(net, box);
        const auto lb = preactivation_bounds(net, box);
        for (std::size_t l = 0; l < ib.layers.size(); ++l)
            for (std::size_t r = 0; r < ib.layers[l].lower.size(); ++r) {
                CHECK(lb.layers[l].lower[r] >= ib.layers[l].lower[r] - slack(ib.layers[l].lower[r]));
                CHECK(lb.layers[l].upper[r] <= ib.layers[l].upper[r] + slack(ib.layers[l].upper[r]));
            }
    }
}

TEST_CASE("interval bounds are monotone in the box") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 50; ++t) {
        const auto net = random_net(rng, random_dims(rng, 4, 3, 4, 10));
        const auto outer = random_box(rng, 4, 1.0);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> lo(4), hi(4);
        for (std::size_t i = 0; i < 4; ++i) {
            const double a = outer.lo(i) + u(rng) * (outer.hi(i) - outer.lo(i));
            const double b = outer.lo(i) + u(rng) * (outer.hi(i) - outer.lo(i));
            lo[i] = std::min(a, b);
            hi[i] = std::max(a, b);
        }
        const BoxSet inner(lo, hi);
        const auto bo = interval_bounds(net, outer), bi = interval_bounds(net, inner);
        for (std::size_t l = 0; l < bo.layers.size(); ++l)
            for (std::size_t r = 0; r < bo.layers[l].lower.size(); ++r) {
                CHECK(bi.layers[l].lower[r] >= bo.layers[l].lower[r] - slack(bo.layers[l].lower[r]));
                CHECK(bi.layers[l].upper[r] <= bo.layers[l].upper[r] + slack(bo.layers[l].upper[r]));
            }
    }
}

TEST_CASE("relu triangle") {
    SUBCASE("unstable, upper side wins the lower line") {
        const auto t = relu_triangle(-1.0, 1.0);
        CHECK(t.upper.slope == 0.5);
        CHECK(t.upper.intercept == 0.5);
        CHECK(t.lower.slope == 1.0);
        CHECK(t.lower.intercept == 0.0);
    }
    SUBCASE("unstable, lower side wins") {
        const auto t = relu_triangle(-3.0, 1.0);
        CHECK(t.lower.slope == 0.0);
        CHECK(t.upper.slope == 0.25);
        CHECK(t.upper.intercept == 0.75);
    }
    SUBCASE("stable active") {
        const auto t = relu_triangle(0.5, 2.0);
        CHECK(t.upper.slope == 1.0);
        CHECK(t.upper.intercept == 0.0);
        CHECK(t.lower.slope == 1.0);
        CHECK(t.lower.intercept == 0.0);
    }
    SUBCASE("stable inactive") {
        const auto t = relu_triangle(-2.0, -0.5);
        CHECK(t.upper.slope == 0.0);
        CHECK(t.upper.intercept == 0.0);
        CHECK(t.lower.slope == 0.0);
        CHECK(t.lower.intercept == 0.0);
    }
    SUBCASE("degenerate and invalid") {
        CHECK_THROWS_AS(relu_triangle(1.0, 0.0), Error);
        const auto z = relu_triangle(0.0, 0.0);
        CHECK(z.upper(0.0) == 0.0);
    }
}

TEST_CASE("triangle sandwich on 1e3 grid points") {
    std::mt19937_64 rng(24);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int t = 0; t < 500; ++t) {
        double l = n(rng), u = n(rng);
        if (l > u) std::swap(l, u);
        const auto tri = relu_triangle(l, u);
        for (int i = 0; i < 1000; ++i) {
            const double s = l + (u - l) * i / 999.0;
            const double r = std::max(s, 0.0);
            REQUIRE(tri.lower(s) <= r + 1e-12);
            REQUIRE(r <= tri.upper(s) + 1e-12);
        }
    }
}

TEST_CASE("linear bound on relu over [-1, 1]") {
    const auto c = linear_output_bounds(relu_1d(), BoxSet({-1.0}, {1.0}), LinearSpec{{1.0}, 0.0});
    CHECK(c.upper == doctest::Approx(1.0));
    CHECK(c.verdict == Verdict::Unsafe);  // the maximizing vertex x = 1 violates
    REQUIRE(c.witness);
    CHECK((*c.witness)[0] == 1.0);
    CHECK(c.lower <= 0.0);
    CHECK(c.method == BoundMethod::BackwardLinear);

    const auto safe = linear_output_bounds(relu_1d(), BoxSet({-1.0}, {1.0}), LinearSpec{{1.0}, 1.5});
    CHECK(safe.verdict == Verdict::Safe);
    CHECK(safe.upper <= 0.0);
    CHECK(!safe.witness);

    // interval bound tighter than the backward one here
    const auto neg = linear_output_bounds(relu_1d(), BoxSet({-1.0}, {2.0}), LinearSpec{{-1.0}, 0.0});
    CHECK(neg.upper == doctest::Approx(0.0));
    CHECK(neg.verdict == Verdict::Safe);
}

TEST_CASE("affine networks are bounded exactly") {
    std::mt19937_64 rng(25);
    for (int t = 0; t < 50; ++t) {
        const auto net = random_net(rng, {4, 3});
        const auto box = random_box(rng, 4, 1.0);
        const auto spec = random_spec(rng, 3);
        const auto& L = net.layer(0);
        double expect = -spec.beta;
        for (std::size_t i = 0; i < 4; ++i) {
            double aw = 0.0;
            for (std::size_t r = 0; r < 3; ++r) aw += spec.a[r] * L.weight(r, i);
            expect += std::abs(aw) * 0.5 * (box.hi(i) - box.lo(i)) + aw * 0.5 * (box.hi(i) + box.lo(i));
        }
        for (std::size_t r = 0; r < 3; ++r) expect += spec.a[r] * L.bias[r];
        const auto c = linear_output_bounds(net, box, spec);
        CHECK(c.upper == doctest::Approx(expect).epsilon(1e-12));
        CHECK(interval_output_bounds(net, box, spec).upper == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("soundness and relaxation dominance on random instances") {
    std::mt19937_64 rng(26);
    for (int t = 0; t < 60; ++t) {
        const auto net = random_net(rng, random_dims(rng, 1 + rng() % 4, 1 + rng() % 3, 4, 16));
        const auto box = random_box(rng, net.input_dim(), 0.6);
        const auto spec = random_spec(rng, net.output_dim());
        const auto lin = linear_output_bounds(net, box, spec);
        const auto itv = interval_output_bounds(net, box, spec);
        CHECK(lin.upper <= itv.upper + slack(itv.upper));
        CHECK(lin.lower >= itv.lower - slack(itv.lower));
        CHECK(lin.lower <= lin.upper);
        for (int s = 0; s < 2000; ++s) {
            const double v = spec_at(net, spec, sample_point(rng, box));
            REQUIRE(v <= lin.upper + slack(v));
            REQUIRE(v >= lin.lower - slack(v));
        }
        if (lin.verdict == Verdict::Safe) CHECK(lin.upper <= 0.0);
        if (lin.verdict == Verdict::Unsafe) {
            REQUIRE(lin.witness);
            CHECK(spec_at(net, spec, *lin.witness) > 0.0);
        }
    }
}

TEST_CASE("dimension errors") {
    const auto net = relu_1d();
    CHECK_THROWS_AS(linear_output_bounds(net, BoxSet({0, 0}, {1, 1}), LinearSpec{{1.0}, 0.0}), Error);
    CHECK_THROWS_AS(linear_output_bounds(net, BoxSet({0}, {1}), LinearSpec{{1.0, 2.0}, 0.0}), Error);
    CHECK_THROWS_AS(interval_bounds(net, BoxSet({0, 0}, {1, 1})), Error);
    CHECK_THROWS_AS(oscillation(net, BoxSet({0, 0}, {1, 1}), LinearSpec{{1.0}, 0.0}), Error);
}

TEST_CASE("batch results equal sequential results bit for bit") {
    std::mt19937_64 rng(27);
    const auto net = random_net(rng, {10, 30, 20, 10});
    const auto box = random_box(rng, 10, 0.2);
    std::vector<LinearSpec> specs;
    for (std::size_t k = 1; k < 10; ++k) specs.push_back(LinearSpec::margin(10, 0, k));
    const auto seq = linear_output_bounds_batch(net, box, specs, 1);
    const auto par = linear_output_bounds_batch(net, box, specs, 4);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        CHECK(seq[i].upper == par[i].upper);
        CHECK(seq[i].lower == par[i].lower);
        CHECK(seq[i].wall_ops == par[i].wall_ops);
    }
}

TEST_CASE("margin spec") {
    const auto s = LinearSpec::margin(4, 1, 3);
    CHECK(s.a == std::vector<double>{0, -1, 0, 1});
    CHECK(s.beta == 0.0);
    CHECK_THROWS_AS(LinearSpec::margin(4, 1, 1), Error);
    CHECK_THROWS_AS(LinearSpec::margin(4, 1, 4), Error);
}

TEST_CASE("oscillation and Lipschitz surrogate") {
    const auto constant = affine_net({{{0.0, 0.0}}}, {{3.0}});
    CHECK(oscillation(constant, BoxSet({-1, -1}, {1, 1}), LinearSpec{{1.0}, 0.0}) <= 1e-12);
    const auto twice = affine_net({{{2.0}}}, {{0.0}});
    CHECK(oscillation(twice, BoxSet({0.0}, {1.0}), LinearSpec{{1.0}, 0.0}) == doctest::Approx(2.0));
    CHECK(local_lipschitz_surrogate(2.0, 1.0) == 2.0);
    CHECK(local_lipschitz_surrogate(0.0, 0.3) == 0.0);
    CHECK_THROWS_AS(local_lipschitz_surrogate(1.0, 0.0), Error);
    CHECK_THROWS_AS(local_lipschitz_surrogate(1.0, -1.0), Error);

    const auto line = affine_net({{{3.0}}}, {{1.0}});
    const BoxSet box({-1.0}, {1.0});
    const double osc = oscillation(line, box, LinearSpec{{1.0}, 0.0});
    CHECK(osc == doctest::Approx(6.0));
    CHECK(local_lipschitz_surrogate(osc, box.inner_radius()) >= 3.0);

    std::mt19937_64 rng(28);
    for (int t = 0; t < 20; ++t) {
        const auto net = random_net(rng, {2, 8, 8, 1});
        const auto b = random_box(rng, 2, 0.5);
        const LinearSpec s{{1.0}, 0.0};
        double lo = INFINITY, hi = -INFINITY;
        for (int k = 0; k < 3000; ++k) {
            const double v = spec_at(net, s, sample_point(rng, b));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(oscillation(net, b, s) >= hi - lo - 1e-9);
    }
}

TEST_CASE("certificate serialization") {
    Certificate c;
    c.upper = 0.5;
    c.lower = -0.25;
    c.passes = 2;
    c.verdict = Verdict::Unsafe;
    c.witness = std::vector<double>{1.0, -2.0};
    c.wall_ops = 42;
    CHECK(serialize(c) == "method=BackwardLinear\nK=2\nupper=0.5\nlower=-0.25\nverdict=Unsafe\nwitness=1,-2\nwall_ops=42\n");
    c.witness.reset();
    c.method = BoundMethod::Interval;
    CHECK(serialize(c).find("witness") == std::string::npos);
    CHECK(serialize(c).rfind("method=Interval\n", 0) == 0);
}

TEST_CASE("operation count is affine in M at fixed K") {
    std::mt19937_64 rng(29);
    std::vector<double> ms, ops;
    for (std::size_t w : {10, 50, 200, 1000, 5000, 20000}) {
        const auto net = random_net(rng, {50, w, 10});
        const auto box = random_box(rng, 50, 0.1);
        const auto c = linear_output_bounds(net, box, LinearSpec::margin(10, 0, 1));
        CHECK(c.passes == 2);
        ms.push_back(static_cast<double>(param_count(net)));
        ops.push_back(static_cast<double>(c.wall_ops));
    }
    CHECK(r_squared(ms, ops) >= 0.99);
}

}  // TEST_SUITE
