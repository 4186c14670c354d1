#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "opa/measurement.hpp"
#include "opa/metrics.hpp"
#include "opa/observables.hpp"
#include "test_helpers.hpp"

using namespace opa;

TEST_CASE("perfect detection projects on a single photon-added state") {
    SchemeParams p;
    p.alpha = 5.0;
    p.r = 1.5;
    p.eta = 1.0;
    p.n_det = 2;
    p.n_max = choose_truncation(p);
    const auto ens = condition_on_idler(p);
    REQUIRE(ens.weights.size() == 1);
    CHECK(ens.weights[0] == 1.0);
    CHECK(ens.m_indices[0] == 2);
    const auto expected = photon_added_coherent(coherent_state(p.alpha_prime(), p.n_max), 2);
    for (int k = 0; k <= p.n_max; ++k)
        CHECK_THAT(std::abs(ens.states[0].amps[std::size_t(k)] - expected.amps[std::size_t(k)]),
                   Catch::Matchers::WithinAbs(0.0, 1e-15));
}

TEST_CASE("no gain leaves the coherent input") {
    SchemeParams p;
    p.alpha = 3.0;
    p.r = 0.0;
    p.eta = 0.4;
    p.n_det = 0;
    p.n_max = choose_truncation(p);
    const auto ens = condition_on_idler(p);
    REQUIRE(ens.weights.size() == 1);
    CHECK(ens.m_indices[0] == 0);
    const auto rho = ensemble_to_density(ens, p.n_max);
    const auto proj = opa_test::rank1(coherent_state(3.0, p.n_max), p.n_max + 1);
    CHECK(trace_distance_within(rho, proj, 1e-12) < 1e-12);
}

TEST_CASE("ensemble weights at the reference point") {
    const auto p = opa_test::fig2_params();
    const auto ens = condition_on_idler(p);

    double wsum = 0.0;
    for (double w : ens.weights) {
        CHECK(w >= 0.0);
        wsum += w;
    }
    CHECK_THAT(wsum, Catch::Matchers::WithinAbs(1.0, 1e-12));

    // contiguous m range starting at n_det
    for (std::size_t j = 0; j < ens.m_indices.size(); ++j)
        CHECK(ens.m_indices[j] == static_cast<int>(j));

    // raw series coefficients eps^m/m! die after a handful of terms ...
    const double eps = p.epsilon();
    double raw_head = 0.0;
    for (int m = 0; m <= 5; ++m) {
        double t = 1.0;
        for (int j = 1; j <= m; ++j) t *= eps / j;
        raw_head += t;
    }
    CHECK(raw_head / std::exp(eps) > 0.999);

    // ... but the norm-carrying mixture weights peak far higher: the norm
    // m! L_m(-a'^2) shifts the mass to m ~ 46
    std::size_t argmax = 0;
    for (std::size_t j = 0; j < ens.weights.size(); ++j)
        if (ens.weights[j] > ens.weights[argmax]) argmax = j;
    CHECK(ens.m_indices[argmax] == 46);
    double head = 0.0;
    for (int m = 0; m <= 5; ++m) head += ens.weights[std::size_t(m)];
    CHECK(head < 0.01);
    CHECK(ens.m_indices.back() >= 240);
    CHECK(ens.m_indices.back() <= 360);
}

TEST_CASE("ensemble to density: rank-1 and reference diagnostics") {
    SchemeParams p;
    p.alpha = 2.0;
    p.r = 0.7;
    p.eta = 1.0;
    p.n_det = 1;
    p.n_max = choose_truncation(p);
    const auto rho1 = ensemble_to_density(condition_on_idler(p), p.n_max);
    CHECK_THAT(rho1.purity(), Catch::Matchers::WithinAbs(1.0, 1e-12));

    const auto pf = opa_test::fig2_params();
    const auto rho = ensemble_to_density(condition_on_idler(pf), pf.n_max, pf.tail_tol);
    CHECK_THAT(rho.trace_real(), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(rho.max_hermiticity_defect() == 0.0);
}

TEST_CASE("both conditioning routes agree entrywise at the reference point") {
    const auto p = opa_test::fig2_params();
    const auto rho_e = ensemble_to_density(condition_on_idler(p), p.n_max, p.tail_tol);
    const auto rho_o = condition_via_oracle(p);
    REQUIRE(rho_e.dim == rho_o.dim);
    double worst = 0.0;
    for (std::size_t i = 0; i < rho_e.a.size(); ++i)
        worst = std::max(worst, std::abs(rho_e.a[i] - rho_o.a[i]));
    CHECK(worst < 1e-10);
    CHECK(trace_distance_within(rho_e, rho_o, 1e-9) < 1e-9);
}

TEST_CASE("oracle route: pure endpoints") {
    SchemeParams p;
    p.alpha = 4.0;
    p.r = 1.1;
    p.eta = 1.0;
    p.n_det = 0;
    p.n_max = choose_truncation(p);
    const auto rho = condition_via_oracle(p);
    CHECK_THAT(rho.purity(), Catch::Matchers::WithinAbs(1.0, 1e-10));
    const auto proj = opa_test::rank1(coherent_state(p.alpha_prime(), p.n_max), p.n_max + 1);
    CHECK(trace_distance_within(rho, proj, 1e-10) < 1e-10);

    SchemeParams v;
    v.alpha = 0.0;
    v.r = 1.3;
    v.eta = 1.0;
    v.n_det = 0;
    v.n_max = 40;
    const auto rho_vac = condition_via_oracle(v);
    CHECK_THAT(std::abs(rho_vac.at(0, 0)), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("blind detector: conditioning on zero counts is a no-op") {
    // eta = 0 reports vacuum regardless of the idler, so the conditional
    // state is the full reduced signal state, i.e. eps = tanh^2 r
    SchemeParams p;
    p.alpha = 2.5;
    p.r = 0.9;
    p.eta = 0.0;
    p.n_det = 0;
    p.n_max = choose_truncation(p);
    const auto rho = ensemble_to_density(condition_on_idler(p), p.n_max, p.tail_tol);
    const auto mom = moments(rho);
    const double eps = std::tanh(0.9) * std::tanh(0.9);
    const double q = p.alpha_prime() * p.alpha_prime();
    const double expected = (eps - eps * eps + q) / ((1.0 - eps) * (1.0 - eps));
    CHECK_THAT(mom.mean_n, Catch::Matchers::WithinRel(expected, 1e-10));
}

TEST_CASE("zero-probability conditioning is rejected") {
    SchemeParams p;
    p.alpha = 1.0;
    p.r = 0.0;
    p.eta = 0.5;
    p.n_det = 1;
    p.n_max = 32;
    CHECK_THROWS_AS(condition_on_idler(p), std::invalid_argument);
    CHECK_THROWS_AS(condition_via_oracle(p), std::invalid_argument);
    p.r = 0.8;
    p.eta = 0.0;
    CHECK_THROWS_AS(condition_on_idler(p), std::invalid_argument);
}

TEST_CASE("undersized truncation is detected") {
    SchemeParams p;
    p.alpha = 5.0;
    p.r = 1.5;
    p.eta = 0.1;
    p.n_det = 0;
    p.n_max = 40;
    CHECK_THROWS_AS(condition_on_idler(p), truncation_error);
    CHECK_THROWS_AS(condition_via_oracle(p), truncation_error);
}

TEST_CASE("purity decreases strictly as the detector degrades") {
    const double expected[] = {1.0, 0.718421701660, 0.506344711387, 0.340863608479,
                               0.208141893762};
    const double etas[] = {1.0, 0.8, 0.6, 0.4, 0.2};
    double prev = 2.0;
    for (int i = 0; i < 5; ++i) {
        SchemeParams p;
        p.alpha = 5.0;
        p.r = 1.5;
        p.eta = etas[i];
        p.n_det = 0;
        p.n_max = choose_truncation(p);
        const double pur = condition_via_oracle(p).purity();
        CHECK_THAT(pur, Catch::Matchers::WithinAbs(expected[i], 1e-9));
        CHECK(pur < prev);
        prev = pur;
    }
}

TEST_CASE("property: route agreement over random parameter draws") {
    std::mt19937 gen(133713372u);
    auto unit = [&] { return gen() / 4294967296.0; };
    for (int draw = 0; draw < 8; ++draw) {
        SchemeParams p;
        p.alpha = 6.0 * unit();
        p.r = 1.8 * unit();
        p.eta = 0.05 + 0.95 * unit();
        p.n_det = static_cast<int>(gen() % 3);
        if (p.r == 0.0) p.n_det = 0;
        p.n_max = choose_truncation(p);
        CAPTURE(p.alpha, p.r, p.eta, p.n_det, p.n_max);
        const auto rho_e = ensemble_to_density(condition_on_idler(p), p.n_max, p.tail_tol);
        const auto rho_o = condition_via_oracle(p);
        CHECK(trace_distance_within(rho_e, rho_o, 1e-9) < 1e-9);
        CHECK(photon_distribution(rho_o).norm_residual < 1e-11);
    }
}

TEST_CASE("phase covariance: complex amplitudes only rotate the state") {
    const double mag = 2.0;
    const double theta = M_PI / 3.0;
    SchemeParams p;
    p.alpha = mag;
    p.r = 0.9;
    p.eta = 0.5;
    p.n_det = 0;
    p.n_max = choose_truncation(p);

    const auto rho_real = condition_via_oracle(p);
    const auto rho_rot = detail::condition_via_oracle_c(std::polar(mag, theta), p);

    // photon statistics depend on alpha only through |alpha|
    for (int n = 0; n <= p.n_max; ++n)
        CHECK_THAT(rho_rot.at(n, n).real(),
                   Catch::Matchers::WithinAbs(rho_real.at(n, n).real(), 1e-12));

    // the phase-space center rotates by arg(alpha)
    const cplx c_real = mean_annihilation(rho_real);
    const cplx c_rot = mean_annihilation(rho_rot);
    CHECK_THAT(std::abs(c_rot - c_real * std::polar(1.0, theta)),
               Catch::Matchers::WithinAbs(0.0, 1e-10));

    // and the Wigner function rotates rigidly with it
    const cplx probe = c_real + cplx(0.3, 0.1);
    CHECK_THAT(wigner_point(rho_rot, probe * std::polar(1.0, theta)),
               Catch::Matchers::WithinAbs(wigner_point(rho_real, probe), 1e-10));
}
