#include "certkit/error.hpp"
#include "certkit/transport.hpp"
#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace certkit;
using namespace testing;

namespace {

EmpiricalSample random_sample(std::mt19937_64& rng, std::size_t n, bool labels = false) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> xs(n);
    for (auto& x : xs) x = g(rng);
    if (!labels) return EmpiricalSample(xs);
    std::vector<int> ys(n);
    for (auto& y : ys) y = (rng() & 1) ? 1 : -1;
    return EmpiricalSample(xs, ys);
}

EmpiricalSample parse(const std::string& s) {
    std::istringstream in(s);
    return parse_sample(in);
}

}  // namespace

TEST_SUITE("transport") {

TEST_CASE("sample files") {
    const auto s = parse("x,y\n0.5,1\n-2,-1\n");
    CHECK(s.size() == 2);
    CHECK(s.labeled());
    CHECK((*s.ys)[1] == -1);
    const auto u = parse("x\n1\n2\n3\n");
    CHECK(!u.labeled());
    CHECK_THROWS_AS(parse("z\n1\n"), Error);
    CHECK_THROWS_AS(parse("x,y\n1,0\n"), Error);
    CHECK_THROWS_AS(parse("x,y\n1\n"), Error);
    CHECK_THROWS_AS(parse("x\n"), Error);
    CHECK_THROWS_AS(parse("x\nabc\n"), Error);
    CHECK_THROWS_AS(load_sample("/nonexistent.csv"), Error);
    CHECK_THROWS_AS(EmpiricalSample(std::vector<double>{}), Error);
    CHECK_THROWS_AS(EmpiricalSample({1.0, 2.0}, {1}), Error);

    std::stringstream buf;
    write_sample(buf, s);
    const auto back = parse_sample(buf);
    CHECK(back.xs == s.xs);
    CHECK(*back.ys == *s.ys);
}

TEST_CASE("W1 examples") {
    const EmpiricalSample a({0.0, 1.0}), b({0.5, 1.5});
    CHECK(w1_empirical_1d(a, a) == 0.0);
    CHECK(w1_empirical_1d(a, b) == doctest::Approx(0.5));
    CHECK(w1_lp_oracle(a, b) == doctest::Approx(0.5));
    const EmpiricalSample c({0.0}), d({0.0, 1.0});
    CHECK(w1_empirical_1d(c, d) == doctest::Approx(0.5));
    CHECK(w1_lp_oracle(c, d) == doctest::Approx(0.5));
    CHECK(w1_lp_oracle(EmpiricalSample({0.0}), EmpiricalSample({0.3})) == doctest::Approx(0.3));
    CHECK(w1_lp_oracle(d, d) == 0.0);
}

TEST_CASE("LP oracle size cap") {
    std::mt19937_64 rng(40);
    const auto big = random_sample(rng, kLpOracleMaxSize + 1);
    CHECK_THROWS_AS(w1_lp_oracle(big, random_sample(rng, 3)), Error);
    CHECK_NOTHROW(w1_empirical_1d(big, random_sample(rng, 3)));
}

TEST_CASE("sorting and LP agree on random instances") {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 100; ++t) {
        const auto a = random_sample(rng, 20), b = random_sample(rng, 20);
        CHECK(std::abs(w1_empirical_1d(a, b) - w1_lp_oracle(a, b)) <= 1e-9);
    }
    for (int t = 0; t < 100; ++t) {
        const auto a = random_sample(rng, 1 + rng() % 64), b = random_sample(rng, 1 + rng() % 64);
        CHECK(std::abs(w1_empirical_1d(a, b) - w1_lp_oracle(a, b)) <= 1e-9);
    }
}

TEST_CASE("W1 metric axioms") {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 100; ++t) {
        const auto a = random_sample(rng, 1 + rng() % 30), b = random_sample(rng, 1 + rng() % 30),
                   c = random_sample(rng, 1 + rng() % 30);
        const double ab = w1_empirical_1d(a, b), ba = w1_empirical_1d(b, a);
        CHECK(ab >= 0.0);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab <= w1_empirical_1d(a, c) + w1_empirical_1d(c, b) + 1e-9);
        auto shuffled = a.xs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(w1_empirical_1d(a, EmpiricalSample(shuffled)) <= 1e-12);
        // the same multiset stored twice is the same measure
        auto doubled = a.xs;
        doubled.insert(doubled.end(), a.xs.begin(), a.xs.end());
        CHECK(w1_empirical_1d(a, EmpiricalSample(doubled)) <= 1e-12);
    }
}

TEST_CASE("losses and risks") {
    CHECK(loss_lipschitz(LossKind::Hinge) == 1.0);
    CHECK(!loss_lipschitz(LossKind::ZeroOne));
    CHECK(loss_value(LossKind::ZeroOne, 0.0, 1) == 0.0);
    CHECK(loss_value(LossKind::ZeroOne, 0.0, -1) == 1.0);
    CHECK(loss_value(LossKind::Hinge, 0.0, -1) == 1.0);

    std::mt19937_64 rng(43);
    const auto s = random_sample(rng, 30, true);
    CHECK(empirical_risk(AffinePredictor{0.0, 0.0}, s, LossKind::Hinge) == 1.0);
    const EmpiricalSample sep({-3.0, -1.0, 1.0, 2.0}, {-1, -1, 1, 1});
    CHECK(empirical_risk(AffinePredictor{1.0, 0.0}, sep, LossKind::Hinge) == 0.0);
    CHECK_THROWS_AS(empirical_risk(AffinePredictor{}, EmpiricalSample({1.0}), LossKind::Hinge), Error);

    // a scalar network gives the same risk as the affine predictor it encodes
    const auto net = affine_net({{{1.5}}}, {{-0.25}});
    CHECK(empirical_risk(net, s, LossKind::Hinge) == doctest::Approx(empirical_risk(AffinePredictor{1.5, -0.25}, s, LossKind::Hinge)));
    CHECK_THROWS_AS(empirical_risk(affine_net({{{1.0, 1.0}}}, {{0.0}}), s, LossKind::Hinge), Error);
}

TEST_CASE("risk certificates") {
    const auto zero = shift_certificate(0.3, 0.0, 1.0, 5.0, true);
    CHECK(zero.certified_shift_risk == 0.3);
    const auto c = shift_certificate(0.2, 0.1, 1.0, 2.5, true);
    CHECK(c.sensitivity == 2.5);
    CHECK(c.certified_shift_risk == c.train_risk + c.rho * c.sensitivity);
    CHECK(!c.vacuous());
    CHECK_NOTHROW(require_stamped(c));
    CHECK_THROWS_AS(shift_certificate(0.2, -0.1, 1.0, 1.0, true), Error);
    CHECK_THROWS_AS(shift_certificate(NAN, 0.1, 1.0, 1.0, true), Error);
    const auto open = shift_certificate(0.2, 0.1, 1.0, 1.0, false);
    CHECK(open.vacuous());
    CHECK_THROWS_AS(require_stamped(open), Error);
    // sensitivity of the additive example, alpha = 1 and beta = 0.5
    CHECK(shift_certificate(0.0, 1.0, 1.0, 1.0 + 2.0 * 0.5, true).sensitivity == 2.0);

    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int t = 0; t < 1000; ++t) {
        const double train = u(rng), rho = u(rng), l_loss = u(rng), l_f = u(rng);
        const auto r = shift_certificate(train, rho, l_loss, l_f, true);
        REQUIRE(r.sensitivity == l_loss * l_f);
        REQUIRE(r.certified_shift_risk == r.train_risk + r.rho * r.sensitivity);
    }

    const auto text = serialize(c);
    CHECK(text.find("covariate_shift_assumed=true\n") != std::string::npos);
    CHECK(text.find("status=certified\n") != std::string::npos);
    CHECK(serialize(open).find("status=vacuous\n") != std::string::npos);
}

TEST_CASE("empirical shift check") {
    std::mt19937_64 rng(45);
    const auto train = random_sample(rng, 25, true);
    const AffinePredictor f{0.8, 0.1};
    const auto same = empirical_shift_check(f, train, EmpiricalSample(train.xs), LossKind::Hinge, 0.8);
    const double risk = empirical_risk(f, train, LossKind::Hinge);
    CHECK(same.lhs == doctest::Approx(risk));
    CHECK(same.rhs == doctest::Approx(risk));

    auto moved = train.xs;
    for (auto& x : moved) x += 0.37;
    const auto shifted = empirical_shift_check(f, train, EmpiricalSample(moved), LossKind::Hinge, 0.8);
    CHECK(shifted.w1 == doctest::Approx(0.37));
    CHECK(shifted.lhs <= shifted.rhs + 1e-9);

    for (int t = 0; t < 200; ++t) {
        std::normal_distribution<double> g(0.0, 1.0);
        const auto tr = random_sample(rng, 1 + rng() % 40, true);
        std::vector<double> tx(tr.size());
        for (auto& x : tx) x = 1.5 * g(rng) + g(rng);
        const AffinePredictor p{2.0 * g(rng), g(rng)};
        const auto chk = empirical_shift_check(p, tr, EmpiricalSample(tx), LossKind::Hinge, std::abs(p.w));
        REQUIRE(chk.lhs <= chk.rhs + 1e-9);
    }
    CHECK_THROWS_AS(empirical_shift_check(f, train, random_sample(rng, 3), LossKind::Hinge, 1.0), Error);
    CHECK_THROWS_AS(empirical_shift_check(f, EmpiricalSample(train.xs), train, LossKind::Hinge, 1.0), Error);
    CHECK_THROWS_AS(empirical_shift_check(f, train, EmpiricalSample(train.xs), LossKind::ZeroOne, 1.0), Error);
}

TEST_CASE("shift flip construction") {
    for (double rho : {0.01, 0.1, 0.5}) {
        const auto s = shift_flip_construction(rho, 100, 7);
        CHECK(s.risk_train == 0.0);
        CHECK(s.risk_target == 1.0);
        CHECK(s.w1 <= rho + 1e-9);
        CHECK(!s.covariate_shift_assumed);
        const auto cert = shift_certificate(s.risk_train, s.w1, 1.0, 0.0, s.covariate_shift_assumed);
        CHECK(cert.vacuous());
        CHECK_THROWS_AS(require_stamped(cert), Error);
    }
    CHECK_THROWS_AS(shift_flip_construction(0.0, 10, 1), Error);
    CHECK_THROWS_AS(shift_flip_construction(0.1, 0, 1), Error);
    const auto a = shift_flip_construction(0.2, 50, 3), b = shift_flip_construction(0.2, 50, 3);
    CHECK(a.train.xs == b.train.xs);
}

}  // TEST_SUITE
