#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "torper/characters.hpp"

using namespace torper;

namespace {

std::uint64_t field_for(std::int64_t p, int L) { return static_cast<std::uint64_t>((p - 1) * ipow(p, L)); }

ResidueElem inv_power(std::int64_t p, int j, std::int64_t unit = 1) { return ResidueElem::make(p, -j, unit, 6); }

// conductor of a function on (Z/p^L)^*: the least k with f invariant under
// 1 + p^k, equivalently the largest conductor in its character expansion
int invariance_level(const UnitGroupF& G, const std::vector<Phase>& f) {
    const std::int64_t p = G.prime(), M = G.modulus();
    auto at = [&](std::int64_t u) { return f[static_cast<std::size_t>(u - u / p - 1)]; };
    int k = G.level();
    while (k > 0) {
        std::int64_t step = ipow(p, k - 1);
        bool invariant = true;
        for (std::int64_t u = 1; u < M && invariant; ++u) {
            if (u % p == 0) continue;
            std::int64_t v = static_cast<std::int64_t>((static_cast<__int128>(u) * (1 + step)) % M);
            if (!(at(v) == at(u))) invariant = false;
        }
        if (!invariant) break;
        --k;
    }
    return k;
}

}  // namespace

TEST_CASE("additive character examples") {
    AddChar psi{5, 1};
    CHECK(psi(ResidueElem::from_int(5, 7, 4)).is_one());
    CHECK(psi(mpq_class(1, 5)) == Phase(1, 5));
    CHECK(psi(mpq_class(3, 25)) == Phase(3, 25));
    auto prm = make_params(5, ExtKind::inert, 6);
    CHECK(psi_E(prm, 1, 0, 1, 1).is_one());  // Tr(sqrt 2 / 5) = 0
    CHECK(psi_E(prm, 1, 1, 0, 1) == Phase(2, 5));
}

TEST_CASE("psi_E level is 0 inert and -1 ramified") {
    for (auto kind : {ExtKind::inert, ExtKind::ramified}) {
        auto prm = make_params(5, kind, 6);
        int c = kind == ExtKind::inert ? 0 : -1;
        // trivial on p_E^c O_E: shift j = -c
        bool trivial = true, nontrivial_below = false;
        for (int a = 0; a < 25; ++a)
            for (int b = 0; b < 25; ++b) {
                if (!psi_E(prm, 1, a, b, -c).is_one()) trivial = false;
                if (!psi_E(prm, 1, a, b, -c + 1).is_one()) nontrivial_below = true;
            }
        CHECK(trivial);
        CHECK(nontrivial_below);
    }
}

TEST_CASE("F-side enumeration counts") {
    UnitGroupF G(5, 3);
    auto l1 = G.enumerate(1);
    CHECK(l1.size() == 4);
    int trivial = 0, quad = 0;
    for (auto& chi : l1) {
        if (G.conductor(chi) == 0) ++trivial;
        if (G.pow(chi, 2) == G.trivial() && G.conductor(chi) == 1) ++quad;
    }
    CHECK(trivial == 1);
    CHECK(quad == 1);
    CHECK(G.enumerate(2).size() == 20);
    CHECK(G.of_level(2).size() == 16);
    CHECK(G.conductor(G.quadratic()) == 1);
}

TEST_CASE("E-side enumeration counts") {
    auto prm = make_params(5, ExtKind::inert, 6);
    UnitGroupE E(prm, 1);
    CHECK(E.order() == 24);
    CHECK(E.enumerate(true).size() == 6);
    UnitGroupE E2(prm, 2);
    CHECK(E2.order() == 24 * 25);
    auto ram = make_params(5, ExtKind::ramified, 6);
    for (int n = 1; n <= 4; ++n) {
        UnitGroupE R(ram, n);
        CHECK(R.order() == 4 * ipow(5, n - 1));
    }
}

TEST_CASE("conductors agree with brute force") {
    for (std::int64_t p : {5, 7}) {
        UnitGroupF G(p, 3);
        for (auto& chi : G.enumerate(3)) CHECK(G.conductor(chi) == G.conductor_bruteforce(chi));
    }
    for (auto kind : {ExtKind::inert, ExtKind::ramified}) {
        auto prm = make_params(5, kind, 6);
        for (int n = 1; n <= (kind == ExtKind::inert ? 2 : 4); ++n) {
            UnitGroupE E(prm, n);
            for (auto& chi : E.enumerate(false)) CHECK(E.conductor(chi) == E.conductor_bruteforce(chi));
        }
        UnitGroupE E3(prm, 3);
        auto all = E3.enumerate(false);
        for (std::size_t i = 0; i < all.size(); i += 37) CHECK(E3.conductor(all[i]) == E3.conductor_bruteforce(all[i]));
    }
}

TEST_CASE("alpha constants: shell identity, squaring, surjectivity") {
    UnitGroupF G(5, 3);
    std::set<std::int64_t> hit;
    for (auto& chi : G.of_level(2)) {
        auto a = alpha_of(G, chi);
        CHECK(a.modulus_exp == 1);
        hit.insert(a.alpha);
        auto a2 = alpha_of(G, G.pow(chi, 2));
        CHECK(a2.alpha == mod_pos(2 * a.alpha, 5));
    }
    CHECK(hit.size() == 4);
    for (auto& chi : G.of_level(3)) {
        auto a = alpha_of(G, chi);
        CHECK(a.modulus_exp == 1);
    }
    CHECK_THROWS_AS(alpha_of(G, G.quadratic()), CharacterError);
}

TEST_CASE("norm lift: values, conductor law and alpha transfer") {
    const std::int64_t p = 5;
    UnitGroupF G(p, 4);
    for (auto kind : {ExtKind::inert, ExtKind::ramified}) {
        auto prm = make_params(p, kind, 8);
        int e = prm.e();
        UnitGroupE E(prm, kind == ExtKind::inert ? 3 : 5);
        CHECK(E.norm_lift(G, G.trivial()) == E.trivial());
        for (auto& chi : G.enumerate(3)) {
            int c = G.conductor(chi);
            auto chiE = E.norm_lift(G, chi);
            // a unit norm from the ramified extension is a square mod p, so a character
            // that is quadratic on units lifts to one trivial on units
            bool quadratic_on_units = c == 1 && G.conductor(G.pow(chi, 2)) == 0;
            if (kind == ExtKind::ramified && quadratic_on_units)
                CHECK(E.conductor(chiE) == 0);
            else
                CHECK(E.conductor(chiE) == (c == 0 ? 0 : e * c - e + 1));
            CHECK(E.trivial_on_base_units(chiE) == (G.conductor(G.pow(chi, 2)) == 0));
            for (std::size_t f = 0; f < E.units().size(); f += 11) {
                auto [a, b] = E.units()[f];
                std::int64_t N = mod_pos(a * a - b * b * prm.D, G.modulus());
                CHECK(E.unit_value(chiE, static_cast<std::int64_t>(f)) == G.value(chi, N));
            }
            if (c == 2) {
                // chi_E(1+x) = psi_E(alpha_chi p^{-c} x) on v_E(x) >= ceil((e c - e + 2)/2)
                auto alpha = alpha_of(G, chi).alpha;
                int h = (e * c - e + 3) / 2;
                std::int64_t amod = kind == ExtKind::inert ? ipow(p, h) : ipow(p, (h + 1) / 2);
                std::int64_t bmod = kind == ExtKind::inert ? ipow(p, h) : ipow(p, h / 2);
                std::int64_t scale = kind == ExtKind::inert ? alpha : alpha * prm.xi * prm.xi;
                int shift = kind == ExtKind::inert ? c : 2 * c;
                for (std::int64_t xa = 0; xa < 625; xa += amod)
                    for (std::int64_t xb = 0; xb < 625; xb += bmod)
                        CHECK(E.value(chiE, 1 + xa, xb) == psi_E(prm, 1, scale * xa, scale * xb, shift));
            }
        }
    }
}

TEST_CASE("Galois conjugation and regularity") {
    auto prm = make_params(5, ExtKind::inert, 6);
    UnitGroupE E(prm, 2);
    UnitGroupF G(5, 3);
    auto lift = E.norm_lift(G, G.from_index(1));
    CHECK(E.galois_fixed(lift));
    int regular = 0;
    for (auto& th : E.of_level(1, true)) {
        auto conj = E.galois_conjugate(th);
        CHECK(E.galois_conjugate(conj) == th);
        if (!E.galois_fixed(th)) ++regular;
    }
    CHECK(regular == 4);  // six characters of level <= 1 less the two fixed ones
}

TEST_CASE("Gauss sum examples") {
    const std::int64_t p = 5;
    UnitGroupF G(p, 3);
    CycField K(field_for(p, 3));
    auto g = gauss_sum(K, G, G.quadratic(), inv_power(p, 1));
    CHECK((g * conj(g)).equals_rational(mpq_class(5, 16)));
    CHECK((g - conj(g)).is_zero());  // (-1/5) = 1
    auto direct = K.zero();
    const int leg[5] = {0, 1, -1, -1, 1};
    for (int u = 1; u < 5; ++u) direct += K.rational(leg[u], 4) * K.root(Phase(u, 5));
    CHECK((g - direct).is_zero());
    CHECK(std::abs(to_float(g) - std::complex<double>(std::sqrt(5.0) / 4, 0)) < 1e-12);
}

TEST_CASE("Gauss sum vanishing and magnitude law, with an alternate psi embedding") {
    for (std::int64_t p : {5, 7}) {
        UnitGroupF G(p, 3);
        CycField K(field_for(p, 3));
        for (std::int64_t twist : {1, 2}) {
            for (int k = 1; k <= 3; ++k)
                for (auto& chi : G.of_level(k))
                    for (int j = 1; j <= 3; ++j) {
                        auto g = gauss_sum(K, G, chi, inv_power(p, j, 2), twist);
                        if (j != k && !(j == 1 && k == 1)) {
                            CHECK(g.is_zero());
                        } else if (j == k) {
                            mpq_class want(p, (p - 1) * (p - 1) * ipow(p, k - 1));
                            want.canonicalize();
                            CHECK((g * conj(g)).equals_rational(want));
                        }
                    }
        }
    }
}

TEST_CASE("Gauss sums are independent of the working level") {
    const std::int64_t p = 5;
    UnitGroupF G(p, 4);
    CycField K(field_for(p, 4));
    for (int k = 0; k <= 2; ++k)
        for (auto& chi : G.of_level(k))
            for (int j = 0; j <= 2; ++j) {
                auto m = j == 0 ? ResidueElem::from_int(p, 3, 6) : inv_power(p, j, 3);
                int L = std::max({k, j, 1});
                auto a = gauss_sum_at_level(K, G, chi, m, L);
                auto b = gauss_sum_at_level(K, G, chi, m, L + 1);
                CHECK((a - b).is_zero());
            }
}

TEST_CASE("fast Gauss integral agrees with the direct sum") {
    const std::int64_t p = 5;
    auto G = std::make_shared<UnitGroupF>(p, 4);
    CycField K(field_for(p, 4));
    GaussIntegrator<CycField> gint(K, G);
    for (int k = 0; k <= 3; ++k)
        for (auto& chi : G->of_level(k))
            for (int j = -1; j <= 3; ++j)
                for (std::int64_t unit : {1, 2, 7, 13}) {
                    auto t = j <= 0 ? ResidueElem::make(p, -j, unit, 6) : inv_power(p, j, unit);
                    auto fast = gint(t, chi);
                    auto slow = gauss_sum(K, *G, chi, t);
                    CHECK((fast - slow).is_zero());
                }
}

TEST_CASE("stationary phase identity") {
    const std::int64_t p = 5;
    UnitGroupF G(p, 3);
    CycField K(field_for(p, 3));
    int checked = 0;
    for (std::int64_t twist : {1, 2})
        for (int c = 2; c <= 3; ++c)
            for (auto& chi : G.of_level(c))
                for (auto& nu : G.of_level(1)) {
                    auto r = stationary_phase_shift(K, G, chi, nu, twist);
                    CHECK(r.holds);
                    ++checked;
                }
    CHECK(checked == 2 * (16 + 80) * 3);
    auto chi = G.of_level(2).front();
    auto triv = stationary_phase_shift(K, G, chi, G.trivial());
    CHECK(triv.factor.is_one());
    CHECK_THROWS_AS(stationary_phase_shift(K, G, chi, G.of_level(2).back()), CharacterError);
}

TEST_CASE("b -> chi(b^2 D / (1 - b^2 D)) keeps the level of chi unless chi is quadratic") {
    for (std::int64_t p : {5, 7}) {
        auto prm = make_params(p, ExtKind::inert, 6);
        const int L = 4;
        UnitGroupF G(p, L);
        for (int j = 1; j <= 3; ++j)
            for (auto& chi : G.of_level(j)) {
                // the shell v(b) = 1, as a function of the unit part
                std::vector<Phase> f;
                for (std::int64_t u = 1; u < G.modulus(); ++u) {
                    if (u % p == 0) continue;
                    mpq_class b = mpq_class(p * u);
                    mpq_class bd = b * b * prm.D;
                    f.push_back(G.value_rational(chi, bd / (1 - bd)));
                }
                bool quadratic = G.pow(chi, 2) == G.trivial();
                int lvl = invariance_level(G, f);
                if (quadratic)
                    CHECK(lvl < j);
                else
                    CHECK(lvl == j);
            }
    }
}
