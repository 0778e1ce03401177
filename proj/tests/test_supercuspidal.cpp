#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "torper/supercuspidal.hpp"

using namespace torper;

namespace {

struct Setup {
    Setup(LocalFieldParams prm_, ScDatum sc_) : prm(prm_), model(sc_, CycField(sc_field_modulus(sc_))) {}
    LocalFieldParams prm;
    ScModel<CycField> model;
};

LocalFieldParams ext_params(std::int64_t p, ExtKind kind, std::int64_t xi = 1) {
    return kind == ExtKind::inert ? make_params(p, kind, 8) : make_params(p, kind, 8, std::nullopt, xi);
}

std::unique_ptr<Setup> setup(std::int64_t p, ExtKind kind, int c_theta, std::size_t theta_idx = 0, std::int64_t xi = 1) {
    auto prm = ext_params(p, kind, xi);
    UnitGroupE E(prm, c_theta);
    auto thetas = admissible_thetas(E);
    REQUIRE(theta_idx < thetas.size());
    return std::make_unique<Setup>(prm, build_sc(E, thetas[theta_idx]));
}

mpq_class ppow(std::int64_t p, int k) {
    mpq_class r = 1;
    for (int t = 0; t < std::abs(k); ++t) r *= static_cast<long>(p);
    return k >= 0 ? r : 1 / r;
}

}  // namespace

TEST_CASE("build_sc conductors and rejections") {
    auto in = ext_params(5, ExtKind::inert);
    UnitGroupE E1(in, 1);
    CHECK(build_sc(E1, admissible_thetas(E1).front()).c_pi == 2);
    auto ra = ext_params(5, ExtKind::ramified);
    UnitGroupE R2(ra, 2);
    CHECK(build_sc(R2, admissible_thetas(R2).front()).c_pi == 3);

    UnitGroupF G(5, 1);
    CHECK_THROWS_AS(build_sc(E1, E1.norm_lift(G, G.quadratic())), GaloisFixed);
    bool found_central = false;
    for (const auto& chi : E1.of_level(1, false))
        if (!E1.trivial_on_base_units(chi)) {
            CHECK_THROWS_AS(build_sc(E1, chi), NontrivialCentral);
            found_central = true;
            break;
        }
    CHECK(found_central);
    UnitGroupE E2(in, 2);
    CHECK_THROWS_AS(build_sc(E2, admissible_thetas(E1).front()), std::invalid_argument);
    UnitGroupE R1(ra, 1);
    for (const auto& th : admissible_thetas(R1)) CHECK_THROWS_AS(build_sc(R1, th), LevelMismatch);
}

TEST_CASE("epsilon unitarity and C_nu C_{nu^-1} = 1") {
    struct Case {
        ExtKind kind;
        int ct;
    };
    for (auto [kind, ct] : {Case{ExtKind::inert, 1}, Case{ExtKind::inert, 2}, Case{ExtKind::ramified, 2}}) {
        auto s = setup(5, kind, ct);
        auto& M = s->model;
        const auto& G = M.group();
        int checked = 0;
        for (const auto& nu : G.enumerate(G.level())) {
            if (!M.in_range(nu)) {
                CHECK_THROWS_AS(M.C(nu), EpsilonOutOfRange);
                continue;
            }
            auto eps = M.epsilon(nu);
            CHECK((eps * conj(eps)).equals_rational(1));
            CHECK((M.C(nu) * M.C(G.inv(nu))).equals_rational(1));
            CHECK(M.n_nu(nu) == -std::max(M.c(), 2 * G.conductor(nu)));
            ++checked;
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("epsilon unitarity across thetas at p=5, c_pi=2") {
    auto in = ext_params(5, ExtKind::inert);
    UnitGroupE E1(in, 1);
    for (const auto& th : admissible_thetas(E1)) {
        auto sc = build_sc(E1, th);
        ScModel<CycField> M(sc, CycField(sc_field_modulus(sc)));
        for (const auto& eta : M.group().enumerate(1)) {
            auto eps = M.epsilon(eta);
            CHECK((eps * conj(eps)).equals_rational(1));
        }
    }
}

TEST_CASE("C quotients: formula against the ratio of sums") {
    struct Case {
        ExtKind kind;
        int ct;
        std::int64_t xi;
    };
    int checked = 0;
    for (auto [kind, ct, xi] : {Case{ExtKind::inert, 1, 1}, Case{ExtKind::inert, 2, 1}, Case{ExtKind::ramified, 2, 1},
                                Case{ExtKind::ramified, 2, 2}}) {
        auto s = setup(5, kind, ct, 0, xi);
        auto& M = s->model;
        const auto& G = M.group();
        const int e = s->prm.e();
        for (const auto& nu : G.enumerate(G.level())) {
            int cn = G.conductor(nu);
            bool nu_ok = cn == 0 || 2 * (e * cn - e + 1) <= ct;
            for (const auto& eta : G.enumerate(G.level())) {
                if (!M.in_range(eta)) continue;
                if (!nu_ok) {
                    CHECK_THROWS_AS(M.c_quotient(nu, eta), EpsilonOutOfRange);
                    continue;
                }
                CHECK(M.c_quotient_holds(nu, eta));
                if (cn == 0) CHECK(M.c_quotient(nu, eta).equals_rational(1));
                ++checked;
            }
        }
    }
    CHECK(checked > 30);
}

TEST_CASE("quadratic quotient signs") {
    // inert, c(eta) < c(theta): -((-1)/q)
    for (std::int64_t p : {5, 7}) {
        auto s = setup(p, ExtKind::inert, 2);
        auto& M = s->model;
        const auto& G = M.group();
        int want = is_square_mod_p(p - 1, p) ? -1 : 1;
        for (const auto& eta : G.enumerate(1)) {
            auto eta_inv = G.inv(eta);
            auto lhs = M.C(G.mul(G.quadratic(), eta_inv));
            CHECK(lhs == M.field().rational(want) * M.C(eta_inv));
        }
    }
    // ramified: ((-xi)/q) for eta of level <= 1
    for (std::int64_t xi : {1, 2, 3}) {
        auto s = setup(5, ExtKind::ramified, 2, 0, xi);
        auto& M = s->model;
        const auto& G = M.group();
        int want = is_square_mod_p(mod_pos(-xi, 5), 5) ? 1 : -1;
        for (const auto& eta : G.enumerate(1)) {
            auto eta_inv = G.inv(eta);
            CHECK(M.C(G.mul(G.quadratic(), eta_inv)) == M.field().rational(want) * M.C(eta_inv));
        }
    }
}

TEST_CASE("Kirillov actions") {
    auto s = setup(5, ExtKind::inert, 2);
    auto& M = s->model;
    const auto& G = M.group();
    const auto& K = M.field();
    auto nu = G.of_level(1).front();

    SUBCASE("diag by a unit") {
        auto v = kirillov_apply(M, DiagOp{3, 1}, basis_vector(M, nu, 0));
        REQUIRE(v.terms.size() == 1);
        CHECK(v.terms[0].shell == 0);
        CHECK(v.terms[0].coeff == K.root(G.value(nu, 3)));
        auto w = kirillov_apply(M, DiagOp{25, 1}, basis_vector(M, nu, 0));
        CHECK(w.terms[0].shell == -2);
    }

    SUBCASE("omega squared is the identity") {
        std::mt19937_64 rng(7);
        auto chars = G.enumerate(2);
        for (int rep = 0; rep < 20; ++rep) {
            KirillovVector<CycField> v;
            for (int t = 0; t < 3; ++t) {
                auto chi = chars[rng() % chars.size()];
                v.terms.push_back({chi, static_cast<int>(rng() % 5) - 2, 0, K.rational(static_cast<long>(rng() % 7) + 1)});
            }
            auto w = kirillov_apply(M, OmegaOp{}, kirillov_apply(M, OmegaOp{}, v));
            for (const auto& term : v.terms) {
                auto want = pair_with_basis(M, v, term.nu, term.shell);
                CHECK(pair_with_basis(M, w, term.nu, term.shell) == want);
            }
        }
    }

    SUBCASE("unip expansion reproduces psi(m x) on O^*") {
        for (int j = 1; j <= 2; ++j) {
            for (std::int64_t u : {1, 2, 7, 13}) {
                mpq_class m = mpq_class(u) * ppow(5, -j);
                auto v = fourier_expand(M, kirillov_apply(M, UnipOp{m}, basis_vector(M, G.trivial(), 0)));
                AddChar psi{5, 1};
                for (std::int64_t x = 1; x < 25; ++x) {
                    if (x % 5 == 0) continue;
                    auto sum = K.zero();
                    for (const auto& term : v.terms) {
                        CHECK(term.shell == 0);
                        sum += K.times_root(term.coeff, G.value(term.nu, x));
                    }
                    CHECK(sum == K.root(psi(m * x)));
                }
            }
        }
    }

    SUBCASE("deep phases raise EpsilonOutOfRange") {
        auto v = kirillov_apply(M, UnipOp{ppow(5, -3)}, basis_vector(M, G.trivial(), 0));
        CHECK_THROWS_AS(kirillov_apply(M, OmegaOp{}, v), EpsilonOutOfRange);
    }
}

TEST_CASE("newform values") {
    for (std::int64_t p : {5, 7}) {
        auto s = setup(p, ExtKind::inert, 2);
        auto& M = s->model;
        auto one = M.group().trivial();
        const auto& K = M.field();
        for (mpq_class m : {mpq_class(0), mpq_class(3), mpq_class(p)}) {
            for (mpq_class x : {mpq_class(1), mpq_class(2), mpq_class(p + 1)}) {
                CHECK(mc_closed_form(M, one, x, m, 4) == K.one());
                CHECK(mc_closed_form(M, one, x, m, 3) == K.rational(-1, p - 1));
                CHECK(mc_oracle(M, one, x, m, 3) == K.rational(-1, p - 1));
            }
        }
    }
}

TEST_CASE("newform support for 0 < i < c - 1") {
    auto s = setup(5, ExtKind::inert, 2);
    auto& M = s->model;
    auto one = M.group().trivial();
    const int c = 4;
    for (int i = 1; i < c - 1; ++i)
        for (int vx = -4; vx <= 2; ++vx)
            for (int vm = -5; vm <= 1; ++vm)
                for (std::int64_t ux : {1, 3}) {
                    mpq_class x = ux * ppow(5, vx), m = 2 * ppow(5, vm);
                    auto val = mc_closed_form(M, one, x, m, i);
                    if (vx != std::min(0, 2 * i - c) || vm != i - c) CHECK(val.is_zero());
                    CHECK(val == mc_oracle(M, one, x, m, i));
                }
}

TEST_CASE("closed form against the Kirillov oracle") {
    struct Case {
        std::int64_t p;
        ExtKind kind;
        int ct;
    };
    for (auto [p, kind, ct] : {Case{5, ExtKind::inert, 1}, Case{5, ExtKind::inert, 2}, Case{7, ExtKind::inert, 1},
                               Case{5, ExtKind::ramified, 2}}) {
        auto s = setup(p, kind, ct);
        auto& M = s->model;
        const auto& G = M.group();
        const int c = M.c();
        std::mt19937_64 rng(11);
        int nonzero = 0, total = 0;
        for (const auto& eta : G.enumerate(c / 2)) {
            for (int i = 0; i <= c; ++i) {
                for (int rep = 0; rep < 6; ++rep) {
                    int vx = 2 * i - c <= 0 && rep % 2 ? 2 * i - c : 0;
                    std::int64_t ux = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(p * p - 1));
                    if (ux % p == 0) ++ux;
                    int vm = static_cast<int>(rng() % static_cast<std::uint64_t>(c + 2)) - c;
                    std::int64_t um = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(p * p));
                    mpq_class x = ux * ppow(p, vx), m = um * ppow(p, vm);
                    auto br = mc_branches(M, eta, x, m, i);
                    if (br.upper && br.lower) CHECK(*br.upper == *br.lower);
                    auto closed = mc_closed_form(M, eta, x, m, i);
                    CHECK(closed == mc_oracle(M, eta, x, m, i));
                    nonzero += !closed.is_zero();
                    ++total;
                }
            }
        }
        CHECK(nonzero > total / 10);
    }
}

TEST_CASE("torus points: closed form, oracle, identity and Hermitian symmetry") {
    auto s = setup(5, ExtKind::inert, 2);
    auto& M = s->model;
    const auto& G = M.group();
    const auto& K = M.field();
    for (auto kind : {ExtKind::inert, ExtKind::ramified}) {
        auto tp = ext_params(5, kind);
        int depth = kind == ExtKind::inert ? 2 : 4;
        for (const auto& eta : G.enumerate(2)) {
            if (G.index(eta) % 3 != 0) continue;
            CHECK(mc_torus(M, eta, torus_point(tp, 1, 0, 2)) == K.one());
            for (const auto& cs : torus_cosets(tp, depth)) {
                auto pt = torus_point(tp, cs.a, cs.b, 2);
                auto closed = mc_torus(M, eta, pt);
                CHECK(closed == mc_torus(M, eta, pt, McMethod::oracle));
                auto back = torus_point(tp, cs.a, -cs.b, 2);
                CHECK(mc_torus(M, eta, back) == conj(closed));
            }
        }
    }
}

TEST_CASE("torus_point agrees with the matrix") {
    for (auto kind : {ExtKind::inert, ExtKind::ramified}) {
        auto prm = ext_params(7, kind);
        for (int d : {0, 1, 2, 3})
            for (const auto& cs : torus_cosets(prm, 2)) {
                auto pt = torus_point(prm, cs.a, cs.b, d);
                mpq_class a = cs.a, b = cs.b, D = static_cast<long>(prm.D);
                if (pt.kind == TorusDecomposition::Case::identity) {
                    CHECK(cs.b == 0);
                    continue;
                }
                if (pt.kind == TorusDecomposition::Case::upper) {
                    // top-left entry of scalar * [[x, m], [0, 1]] n^-(p^i) kappa is scalar (x + m p^i)
                    mpq_class diff = pt.scalar * (pt.x + pt.m * ppow(7, pt.i)) - a;
                    CHECK((diff == 0 || vp(diff.get_num(), 7) - vp(diff.get_den(), 7) >= 8));
                }
                CHECK(pt.i >= 0);
            }
    }
}
