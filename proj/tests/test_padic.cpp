#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "torper/padic.hpp"

using namespace torper;

namespace {

ResidueElem R(std::int64_t p, std::int64_t x, int prec = 10) { return ResidueElem::from_int(p, x, prec); }

// exact rational image of a matrix entry, compared at absolute precision
bool agree(const ResidueElem& x, const mpq_class& want, std::int64_t p, int abs_prec) {
    mpq_class diff = x.to_rational() - want;
    if (diff == 0) return true;
    auto d = ResidueElem::from_rational(p, diff, abs_prec + 8);
    return d.is_zero() ? true : d.val() >= abs_prec;
}

}  // namespace

TEST_CASE("make_params defaults and errors") {
    auto in5 = make_params(5, ExtKind::inert, 6);
    CHECK(in5.D == 2);
    auto in7 = make_params(7, ExtKind::inert, 6);
    CHECK(in7.D == 3);
    auto ra = make_params(5, ExtKind::ramified, 6);
    CHECK(ra.D == 5);
    CHECK(ra.xi == 1);
    CHECK(make_params(5, ExtKind::ramified, 6, std::nullopt, 2).D == 10);
    CHECK_THROWS_AS(make_params(4, ExtKind::inert, 6), InvalidPrime);
    CHECK_THROWS_AS(make_params(3, ExtKind::inert, 6), InvalidPrime);
    CHECK_THROWS_AS(make_params(2, ExtKind::inert, 6), InvalidPrime);
    CHECK_THROWS_AS(make_params(5, ExtKind::inert, 6, 4), InvalidParameter);
    CHECK_THROWS_AS(make_params(5, ExtKind::ramified, 6, 25), InvalidParameter);
    CHECK_THROWS_AS(parse_ext_kind("split"), InvalidParameter);
}

TEST_CASE("residue arithmetic keeps valuations and precision") {
    auto a = R(5, 50), b = R(5, 3);
    CHECK(a.val() == 2);
    CHECK(a.unit() == 2);
    CHECK((a * b).val() == 2);
    CHECK((a * b).to_rational() == 150);
    auto c = R(5, 1, 4) - R(5, 626, 4);  // 625 vanishes mod 5^4
    CHECK(c.is_zero());
    CHECK(c.val() == 4);
    auto s = R(5, 7) + R(5, 18);  // 25
    CHECK(s.val() == 2);
    CHECK(s.to_rational() == 25);
    auto inv = R(5, 3).inverse();
    CHECK((inv * R(5, 3)).to_rational() == 1);
    auto f = ResidueElem::from_rational(5, mpq_class(3, 25), 6);
    CHECK(f.val() == -2);
    CHECK((f * R(5, 25)).unit_mod(3) == 3);
    CHECK_THROWS_AS(R(5, 3, 2).unit_mod(3), PrecisionError);
}

TEST_CASE("extension arithmetic examples") {
    auto prm = make_params(5, ExtKind::inert, 6);
    auto x = ext_make(prm, 1, 1, 6);
    CHECK((ext_norm(prm, x) - R(5, -1, 6)).is_zero());
    CHECK(ext_norm(prm, x).residue_mod(1) == 4);
    auto y = ext_make(prm, 2, 3, 6);
    auto yy = ext_mul(prm, ext_conj(y), y);
    CHECK((yy.a - R(5, -14, 6)).is_zero());
    CHECK(yy.b.is_zero());
    auto ram = make_params(5, ExtKind::ramified, 6);
    CHECK(ext_val(ram, ext_make(ram, 0, 1, 6)) == 1);
    CHECK(ext_val(ram, ext_make(ram, 5, 0, 6)) == 2);
}

TEST_CASE("norm and valuation are multiplicative, exhaustive at p=5 precision 3") {
    for (auto kind : {ExtKind::inert, ExtKind::ramified}) {
        auto prm = make_params(5, kind, 3);
        std::vector<ExtElem> xs;
        for (int a = 0; a < 125; a += 3)
            for (int b = 0; b < 125; b += 7)
                if (a % 5 != 0 || b % 5 != 0) xs.push_back(ext_make(prm, a, b, 3));
        int checked = 0;
        for (std::size_t i = 0; i < xs.size(); i += 5)
            for (std::size_t j = 0; j < xs.size(); j += 3) {
                auto xy = ext_mul(prm, xs[i], xs[j]);
                auto nxy = ext_norm(prm, xy);
                auto nn = ext_norm(prm, xs[i]) * ext_norm(prm, xs[j]);
                auto diff = nxy - nn;
                CHECK(diff.is_zero());
                if (!xy.a.is_zero() || !xy.b.is_zero()) {
                    try {
                        CHECK(ext_val(prm, xy) == ext_val(prm, xs[i]) + ext_val(prm, xs[j]));
                        ++checked;
                    } catch (const PrecisionError&) {
                    }
                }
            }
        CHECK(checked > 1000);
    }
}

TEST_CASE("Iwasawa decomposition examples") {
    const std::int64_t p = 5;
    auto one = R(p, 1), zero = ResidueElem::zero(p, 10);
    auto r = iwasawa_decompose(Mat2{one, zero, zero, one}, 2);
    CHECK(r.i == 2);
    CHECK(iwasawa_decompose(Mat2{one, zero, R(p, 5), one}, 2).i == 1);
    Mat2 g{R(p, 1), R(p, 1), R(p, 1), R(p, 2)};
    auto s = iwasawa_decompose(g, 2);
    CHECK(s.i == 0);
    CHECK(in_K0(s.k0, 2));
    CHECK(mat_equal(mat_mul(mat_mul(s.borel, mat_lower_unipotent(p, s.i, 10)), s.k0), g, 8));
    CHECK(s.borel.c.is_zero());
}

TEST_CASE("Iwasawa recomposition on random matrices") {
    std::mt19937_64 rng(2024);
    for (std::int64_t p : {5, 7}) {
        std::uniform_int_distribution<std::int64_t> ent(-3000, 3000);
        std::uniform_int_distribution<int> sh(0, 4), lev(0, 4);
        int done = 0;
        while (done < 1000) {
            std::int64_t A = ent(rng), B = ent(rng), C = ent(rng) * ipow(p, sh(rng)), Dd = ent(rng) * ipow(p, sh(rng));
            if (A * Dd - B * C == 0 || (C == 0 && Dd == 0)) continue;
            const int prec = 14;
            Mat2 g{R(p, A, prec), R(p, B, prec), R(p, C, prec), R(p, Dd, prec)};
            int c = lev(rng);
            IwasawaResult r;
            try {
                r = iwasawa_decompose(g, c);
            } catch (const PrecisionError&) {
                continue;
            }
            CHECK(r.i >= 0);
            CHECK(r.i <= c);
            CHECK(in_K0(r.k0, c));
            CHECK(r.borel.c.is_zero());
            auto back = mat_mul(mat_mul(r.borel, mat_lower_unipotent(p, r.i, prec)), r.k0);
            CHECK(agree(back.a, mpq_class(A), p, 8));
            CHECK(agree(back.b, mpq_class(B), p, 8));
            CHECK(agree(back.c, mpq_class(C), p, 8));
            CHECK(agree(back.d, mpq_class(Dd), p, 8));
            ++done;
        }
    }
}

TEST_CASE("conjugated torus decomposition examples") {
    auto prm = make_params(5, ExtKind::inert, 8);
    auto t0 = conjugated_torus_decompose(R(5, 1), ResidueElem::zero(5, 10), 2, prm);
    CHECK(t0.kind == TorusDecomposition::Case::identity);
    auto t1 = conjugated_torus_decompose(R(5, 1), R(5, 1), 2, prm);
    CHECK(t1.kind == TorusDecomposition::Case::upper);
    CHECK(t1.i == 2);
    CHECK(t1.top_right.val() == -2);
    auto t2 = conjugated_torus_decompose(R(5, 25), R(5, 1), 1, prm);
    CHECK(t2.kind == TorusDecomposition::Case::lower);
    CHECK((t2.top_right + t2.top_left).val() == 1);
}

TEST_CASE("conjugated torus recomposition over full coset traversals") {
    for (std::int64_t p : {5, 7}) {
        for (auto kind : {ExtKind::inert, ExtKind::ramified}) {
            auto prm = make_params(p, kind, 10);
            for (int k = 1; k <= 2; ++k) {
                for (int d : {k - 1, k, k + 1, 2 * k + 1}) {
                    for (const auto& cs : torus_cosets(prm, kind == ExtKind::inert ? k : 2 * k)) {
                        auto a = R(p, cs.a), b = R(p, cs.b);
                        auto t = conjugated_torus_decompose(a, b, d, prm);
                        auto g = recompose(t, p);
                        auto want = conjugated_torus_matrix(a, b, d, prm);
                        CHECK(agree(g.a, want.a.to_rational(), p, 6));
                        CHECK(agree(g.b, want.b.to_rational(), p, 6 - d));
                        CHECK(agree(g.c, want.c.to_rational(), p, 6));
                        CHECK(agree(g.d, want.d.to_rational(), p, 6));
                    }
                }
            }
        }
    }
}

TEST_CASE("coset counts and weights") {
    for (std::int64_t p : {5, 7}) {
        auto in = make_params(p, ExtKind::inert, 8);
        auto ra = make_params(p, ExtKind::ramified, 8);
        for (int k = 1; k <= 3; ++k) {
            auto ci = torus_cosets(in, k);
            CHECK(static_cast<std::int64_t>(ci.size()) == (p + 1) * ipow(p, k - 1));
            auto cr = torus_cosets(ra, 2 * k);
            CHECK(static_cast<std::int64_t>(cr.size()) == 2 * ipow(p, k));
            mpq_class total = 0;
            for (const auto& c : ci) total += c.weight;
            CHECK(total == 1);
            total = 0;
            for (const auto& c : cr) total += c.weight;
            CHECK(total == 1);
        }
    }
}
