#include "scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <mutex>
#include <random>
#include <sstream>

namespace torper::cli {

using nlohmann::json;

namespace {

// pinned acceptance tolerances
constexpr double kDecaySlopeBound = -3.0 / 8.0 + 0.05;
constexpr double kDecayDriftBound = 1e-9;
constexpr double kDeepScaledLow = 0.5;
constexpr double kDeepScaledHigh = 8.0;
constexpr std::size_t kMinTorusPoints = 100;
constexpr std::size_t kOmegaSamples = 3;

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string verdict(bool ok) { return ok ? "pass" : "fail"; }

std::vector<std::int64_t> primes_or(const Overrides& o, std::vector<std::int64_t> fallback) {
    if (o.p) return {*o.p};
    return fallback;
}

std::int64_t least_nonresidue(std::int64_t p) {
    for (std::int64_t x = 2; x < p; ++x)
        if (!is_square_mod_p(x, p)) return x;
    throw InvalidPrime("no quadratic non-residue");
}

int legendre(std::int64_t a, std::int64_t p) { return is_square_mod_p(mod_pos(a, p), p) ? 1 : -1; }

std::string torus_label(const LocalFieldParams& prm) {
    return prm.kind == ExtKind::inert ? "inert" : "ramified";
}

json torus_params(const LocalFieldParams& prm, const TorusCharacter& om) {
    json j = {{"torus", torus_label(prm)}, {"omega_conductor", om.conductor()}};
    if (prm.kind == ExtKind::ramified) j["torus_xi"] = prm.xi;
    return j;
}

// fills value, verdict and details from one integral against a rational expectation
RunReport integral_report(const IntegralReport& r, const std::optional<mpq_class>& want) {
    RunReport out;
    out.value_exact = r.exact ? exact_json(r) : json();
    out.value_float = r.value;
    if (want) {
        out.expected = rational_string(*want);
        out.verdict = verdict(r.verdict == IntegralReport::Verdict::match || r.verdict == IntegralReport::Verdict::vanish);
    } else {
        out.expected = "none";
        out.verdict = "skipped(no expected value)";
    }
    out.details = {{"representation", r.representation},
                   {"test_vector", r.test_vector},
                   {"depth", r.depth},
                   {"cosets", r.coset_count},
                   {"field_modulus", r.modulus}};
    return out;
}

// ---------------------------------------------------------------- scenarios

std::vector<RunReport> gauss_law(const Overrides& o, unsigned) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5, 7})) {
        Stopwatch sw;
        UnitGroupF G(p, 3);
        CycField K(static_cast<std::uint64_t>((p - 1) * ipow(p, 3)));
        std::size_t cases = 0, failures = 0;
        for (int k = 1; k <= 3; ++k)
            for (const auto& chi : G.of_level(k))
                for (int j = 1; j <= 3; ++j) {
                    auto g = gauss_sum(K, G, chi, ResidueElem::make(p, -j, 1, 6));
                    bool ok;
                    if (j != k) {
                        ok = g.is_zero();
                    } else {
                        mpq_class want(p, (p - 1) * (p - 1) * ipow(p, k - 1));
                        want.canonicalize();
                        ok = !g.is_zero() && (g * conj(g)).equals_rational(want);
                    }
                    ++cases;
                    failures += !ok;
                }
        RunReport r;
        r.params = {{"p", p}, {"conductors", {1, 2, 3}}, {"shells", {1, 2, 3}}};
        r.expected = "zero iff j != k; |G|^2 = q/((q-1)^2 q^(k-1)) at j = k";
        r.verdict = verdict(failures == 0);
        r.details = {{"cases", cases}, {"failures", failures}};
        r.seconds = sw.seconds();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RunReport> stationary_phase(const Overrides& o, unsigned) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5})) {
        Stopwatch sw;
        UnitGroupF G(p, 3);
        CycField K(static_cast<std::uint64_t>((p - 1) * ipow(p, 3)));
        std::size_t cases = 0, failures = 0;
        for (int c = 2; c <= 3; ++c)
            for (const auto& chi : G.of_level(c))
                for (const auto& nu : G.of_level(1)) {
                    failures += !stationary_phase_shift(K, G, chi, nu).holds;
                    ++cases;
                }
        RunReport r;
        r.params = {{"p", p}, {"chi_conductors", {2, 3}}, {"nu_conductor", 1}};
        r.expected = "identity holds for every pair";
        r.verdict = verdict(failures == 0 && cases > 0);
        r.details = {{"cases", cases}, {"failures", failures}};
        r.seconds = sw.seconds();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RunReport> epsilon_quotient(const Overrides& o, unsigned) {
    struct Case {
        std::string kind;
        int c_theta;
        std::int64_t xi;
    };
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5})) {
        const std::int64_t nr = least_nonresidue(p);
        for (const auto& cs : {Case{"inert", 1, 1}, Case{"inert", 2, 1}, Case{"ramified", 2, 1}, Case{"ramified", 2, nr}}) {
            Stopwatch sw;
            auto prm = field_params(p, cs.kind, cs.xi, o.precision);
            UnitGroupE E(prm, cs.c_theta);
            auto thetas = admissible_thetas(E);
            auto sc = build_sc(E, thetas.at(o.theta_index.value_or(0)));
            ScModel<CycField> M(sc, CycField(sc_field_modulus(sc)));
            const auto& G = M.group();
            const int e = prm.e();
            std::size_t quotients = 0, unitary = 0, failures = 0;
            for (const auto& nu : G.enumerate(G.level())) {
                if (M.in_range(nu)) {
                    failures += !(M.C(nu) * M.C(G.inv(nu))).equals_rational(1);
                    ++unitary;
                }
                const int cn = G.conductor(nu);
                if (!(cn == 0 || 2 * (e * cn - e + 1) <= cs.c_theta)) continue;
                for (const auto& eta : G.enumerate(G.level())) {
                    if (!M.in_range(eta)) continue;
                    failures += !M.c_quotient_holds(nu, eta);
                    ++quotients;
                }
            }
            RunReport r;
            r.params = {{"p", p}, {"ext", cs.kind}, {"c_theta", cs.c_theta}, {"c_pi", sc.c_pi}};
            if (cs.kind == "ramified") r.params["xi"] = cs.xi;
            r.expected = "C_{nu eta^-1} = formula * C_{eta^-1}; C_nu C_{nu^-1} = 1";
            r.verdict = verdict(failures == 0 && quotients > 0 && unitary > 0);
            r.details = {{"quotients", quotients}, {"unitarity", unitary}, {"failures", failures}};
            r.seconds = sw.seconds();
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<RunReport> mc_closed_form(const Overrides& o, unsigned jobs) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5})) {
        Stopwatch sw;
        const int c_pi = o.cpi.value_or(4);
        auto sc = supercuspidal(field_params(p, "inert", 1, o.precision), c_pi, o.theta_index.value_or(0));
        ScModel<CycField> M(sc, CycField(sc_field_modulus(sc)));
        const auto& G = M.group();
        const int c = M.c();

        struct Point {
            LocalFieldParams prm;
            std::int64_t a, b;
            int d;
        };
        std::vector<Point> points;
        for (const auto& tp : {field_params(p, "inert", 1, o.precision), field_params(p, "ramified", 1, o.precision)}) {
            const int depth = tp.kind == ExtKind::inert ? c / 2 : c;
            for (int d = c / 2 - 1; d <= c / 2 + 1; ++d)
                for (const auto& cs : torus_cosets(tp, depth)) points.push_back({tp, cs.a, cs.b, d});
        }
        auto etas = G.enumerate(c / 2);
        std::atomic<std::size_t> failures{0}, nonzero{0};
        std::vector<std::future<void>> work;
        const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(etas.size())));
        for (unsigned w = 0; w < workers; ++w)
            work.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t t = w; t < etas.size(); t += workers)
                    for (const auto& pt : points) {
                        auto tp = torus_point(pt.prm, pt.a, pt.b, pt.d);
                        auto closed = mc_torus(M, etas[t], tp);
                        if (!(closed == mc_torus(M, etas[t], tp, McMethod::oracle))) ++failures;
                        if (!closed.is_zero()) ++nonzero;
                    }
            }));
        for (auto& w : work) w.get();

        // both branches at i = c/2 on seeded random (x, m)
        std::mt19937_64 rng(7);
        std::size_t branch_cases = 0;
        for (const auto& eta : etas)
            for (int rep = 0; rep < 8; ++rep) {
                const std::int64_t ux = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(p - 1));
                const std::int64_t um = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(p * p));
                const int vm = static_cast<int>(rng() % static_cast<std::uint64_t>(c + 2)) - c;
                mpq_class x(ux), m = um * pow_q(p, vm);
                auto br = mc_branches(M, eta, x, m, c / 2);
                if (!br.upper || !br.lower || !(*br.upper == *br.lower)) ++failures;
                ++branch_cases;
            }
        RunReport r;
        r.params = {{"p", p}, {"c_pi", c}, {"eta_levels", json::array()}, {"torus", {"inert", "ramified"}}};
        for (int l = 0; l <= c / 2; ++l) r.params["eta_levels"].push_back(l);
        r.expected = "closed form = Kirillov oracle; upper branch = lower branch at 2i = c";
        r.verdict = verdict(failures == 0 && points.size() >= kMinTorusPoints && nonzero > 0);
        r.details = {{"torus_points", points.size()},
                     {"etas", etas.size()},
                     {"evaluations", points.size() * etas.size()},
                     {"nonzero", nonzero.load()},
                     {"branch_cases", branch_cases},
                     {"failures", failures.load()}};
        r.seconds = sw.seconds();
        out.push_back(std::move(r));
    }
    return out;
}

// one report per (rep, Omega): every newform translate d != k in 0..c must give exactly 0
RunReport vanishing_report(const ScDatum& sc, const LocalFieldParams& tp, const TorusCharacter& om, std::size_t idx,
                           unsigned jobs) {
    Stopwatch sw;
    auto res = vanishing_sweep(sc, om, 0, sc.c_pi, jobs);
    RunReport r;
    r.params = {{"p", sc.ext.p}, {"ext", torus_label(sc.ext)}, {"c_pi", sc.c_pi}, {"d", {0, sc.c_pi}}, {"omega_index", idx}};
    r.params.update(torus_params(tp, om));
    r.value_exact = res.all_vanish ? json("0") : json();
    r.value_float = std::complex<double>(0, 0);
    for (const auto& rep : res.reports)
        if (std::abs(rep.value) > std::abs(*r.value_float)) r.value_float = rep.value;
    r.expected = "0";
    r.verdict = verdict(res.all_vanish && !res.reports.empty());
    json ds = json::array();
    std::size_t cosets = 0;
    for (const auto& rep : res.reports) {
        ds.push_back(rep.test_vector);
        cosets += rep.coset_count;
    }
    bool volumes = std::all_of(res.volumes.begin(), res.volumes.end(), [](const VolumeIdentity& v) { return v.holds; });
    r.details = {{"specs", ds}, {"cosets", cosets}, {"volume_identities_hold", volumes}};
    r.seconds = sw.seconds();
    return r;
}

std::vector<RunReport> vanishing(const Overrides& o, unsigned jobs) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5, 7})) {
        const std::int64_t nr = least_nonresidue(p);
        for (int c_pi : {2, 3, 4}) {
            if (o.cpi && *o.cpi != c_pi) continue;
            auto sc = supercuspidal(field_params(p, c_pi % 2 ? "ramified" : "inert", 1, o.precision), c_pi,
                                    o.theta_index.value_or(0));
            for (const auto& tp : {field_params(p, "inert", 1, o.precision), field_params(p, "ramified", 1, o.precision),
                                   field_params(p, "ramified", nr, o.precision)}) {
                // (2/e) c(Omega) < c(pi); over a ramified torus only even conductors occur
                for (int lvl = 0; 2 * lvl < tp.e() * c_pi; ++lvl) {
                    auto oms = lvl == 0 ? std::vector<TorusCharacter>{trivial_torus_character(tp)}
                                        : torus_characters_of_level(tp, lvl, lvl);
                    // a few characters per level, spread over the enumeration
                    const std::size_t take = std::min(oms.size(), kOmegaSamples);
                    for (std::size_t s = 0; s < take; ++s) {
                        const std::size_t idx = take == 1 ? 0 : s * (oms.size() - 1) / (take - 1);
                        out.push_back(vanishing_report(sc, tp, oms[idx], idx, jobs));
                    }
                }
            }
        }
    }
    return out;
}

std::vector<RunReport> inert_even_value(const Overrides& o, unsigned jobs) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5, 13})) {
        if (legendre(-1, p) != 1) throw InvalidParameter("inert-even-value needs (-1/p) = 1");
        Stopwatch sw;
        const int c_pi = o.cpi.value_or(4), k = c_pi / 2;
        auto prm = field_params(p, "inert", 1, o.precision);
        auto sc = supercuspidal(prm, c_pi, o.theta_index.value_or(0));
        auto om = trivial_torus_character(prm);
        mpq_class want = mpq_class(4) / (mpq_class(p * p - 1) * pow_q(p, k - 2));
        auto rep = local_integral(sc, TestVectorSpec::twisted(eta_with_sign(sc, 1), k), om, Backend::exact, want, jobs);
        auto r = integral_report(rep, want);
        r.params = {{"p", p}, {"ext", "inert"}, {"c_pi", c_pi}, {"d", k}, {"eta_level", 1}};
        r.params.update(torus_params(prm, om));
        r.seconds = sw.seconds();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RunReport> deep_twist(const Overrides& o, unsigned jobs) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {7})) {
        Stopwatch sw;
        auto prm = field_params(p, "inert", 1, o.precision);
        auto sc = supercuspidal(prm, o.cpi.value_or(4), o.theta_index.value_or(0));
        auto om = trivial_torus_character(prm);
        auto res = deep_twist_check(sc, om, jobs);
        const bool all_hold = std::all_of(res.entries.begin(), res.entries.end(), [](const DeepTwistEntry& e) { return e.holds; });
        RunReport r;
        r.params = {{"p", p}, {"ext", "inert"}, {"c_pi", sc.c_pi}, {"d", sc.c_pi / 2}};
        r.params.update(torus_params(prm, om));
        r.expected = "0 below level k; closed-form value at level k; |I| q^k in [1/2, 8]";
        bool ok = res.lower_levels_vanish && !res.entries.empty() && all_hold && res.constructed.has_value();
        if (res.constructed) {
            const auto& e = res.entries[*res.constructed];
            r.value_exact = exact_json(e.report);
            r.value_float = e.report.value;
            ok = ok && e.scaled >= kDeepScaledLow && e.scaled <= kDeepScaledHigh;
            r.details["constructed_scaled"] = e.scaled;
            r.details["constructed_eta"] = e.report.test_vector;
        }
        json entries = json::array();
        for (const auto& e : res.entries)
            entries.push_back({{"eta", e.report.test_vector}, {"holds", e.holds}, {"root_solutions", e.root_solutions}});
        r.details["entries"] = entries;
        r.details["lower_level_count"] = res.lower_level_count;
        r.details["lower_levels_vanish"] = res.lower_levels_vanish;
        r.details["other_shells_unsolvable"] = res.other_shells_unsolvable;
        r.verdict = verdict(ok);
        r.seconds = sw.seconds();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RunReport> ramified_value(const Overrides& o, unsigned jobs) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5})) {
        auto sc = supercuspidal(field_params(p, "ramified", 1, o.precision), 3, o.theta_index.value_or(0));
        const int k = 1;
        // one torus with (-xi/p) = 1, one with (-xi/p) = -1
        std::int64_t good = 1, bad = 1;
        while (legendre(-good, p) != 1) ++good;
        while (legendre(-bad, p) != -1) ++bad;
        {
            Stopwatch sw;
            auto tp = field_params(p, "ramified", good, o.precision);
            auto om = trivial_torus_character(tp);
            mpq_class want = mpq_class(2) / (mpq_class(p - 1) * pow_q(p, k - 1));
            auto rep = local_integral(sc, TestVectorSpec::newform(k), om, Backend::exact, want, jobs);
            auto r = integral_report(rep, want);
            r.params = {{"p", p}, {"ext", "ramified"}, {"c_pi", 3}, {"d", k}};
            r.params.update(torus_params(tp, om));
            r.seconds = sw.seconds();
            out.push_back(std::move(r));
        }
        {
            Stopwatch sw;
            auto tp = field_params(p, "ramified", bad, o.precision);
            auto om = trivial_torus_character(tp);
            auto res = dichotomy_sweep(sc, om, true, jobs);
            RunReport r;
            r.params = {{"p", p}, {"ext", "ramified"}, {"c_pi", 3}, {"pool", "all"}};
            r.params.update(torus_params(tp, om));
            r.value_exact = res.nonzero == 0 ? json("0") : json();
            r.value_float = std::complex<double>(0, 0);
            r.expected = "0 for every pool spec";
            r.verdict = verdict(res.sign == -1 && res.nonzero == 0 && res.evaluated == pool_specs(sc).size());
            r.details = {{"evaluated", res.evaluated}, {"nonzero", res.nonzero}, {"epsilon", res.sign}};
            r.seconds = sw.seconds();
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<RunReport> ps_value(const Overrides& o, unsigned jobs) {
    struct Case {
        std::string kind;
        int n;
    };
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5})) {
        for (const auto& cs : {Case{"inert", 2}, Case{"inert", 3}, Case{"ramified", 2}, Case{"ramified", 3}}) {
            if (o.cpi && *o.cpi != cs.n) continue;
            for (std::size_t pick : {0, 1}) {
                Stopwatch sw;
                auto ps = principal_series(p, cs.n, pick);
                auto tp = field_params(p, cs.kind, 1, o.precision);
                int d;
                mpq_class want;
                if (cs.kind == "inert") {
                    const int k = cs.n / 2;
                    d = k;
                    want = cs.n % 2 == 0 ? 1 / (mpq_class(p + 1) * pow_q(p, k - 1)) : 1 / (mpq_class(p + 1) * pow_q(p, k));
                } else {
                    const int k = (cs.n + 1) / 2;
                    d = k - 1;
                    want = 1 / (mpq_class(2) * pow_q(p, cs.n - k));
                }
                auto om = ps_torus_character(ps, trivial_torus_character(tp));
                auto rep = local_integral(ps, TestVectorSpec::newform(d), om, Backend::exact, want, jobs);
                auto r = integral_report(rep, want);
                r.params = {{"p", p}, {"rep", "principal-series"}, {"mu_level", cs.n}, {"mu_index", pick}, {"d", d}};
                r.params.update(torus_params(tp, om));
                r.seconds = sw.seconds();
                out.push_back(std::move(r));
            }
        }
    }
    return out;
}

std::vector<RunReport> twist_identity_scenario(const Overrides& o, unsigned jobs) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5, 7})) {
        UnitGroupF G1(p, 1);
        auto taus = G1.of_level(1);
        std::vector<std::size_t> picks{0, taus.size() / 2};

        auto record = [&](const std::string& family, const Representation& rep, const TestVectorSpec& spec,
                          const TorusCharacter& om, std::size_t t) {
            Stopwatch sw;
            auto res = twist_identity(rep, spec, om, taus[t], 1, jobs);
            RunReport r;
            r.params = {{"p", p}, {"family", family}, {"chi_level", 1}, {"chi_index", t}};
            r.params.update(torus_params(om.field(), om));
            r.value_exact = exact_json(res.direct);
            r.value_float = res.direct.value;
            r.expected = "I(Phi chi(det), Omega) = I(Phi, Omega chi_E)";
            r.verdict = verdict(res.holds);
            r.details = {{"test_vector", res.direct.test_vector}, {"reduced_value", exact_json(res.reduced)}};
            r.seconds = sw.seconds();
            out.push_back(std::move(r));
        };

        auto in = field_params(p, "inert", 1, o.precision);
        auto ra = field_params(p, "ramified", 1, o.precision);
        auto sc4 = supercuspidal(in, 4, 0);
        auto sc3 = supercuspidal(ra, 3, 0);
        // with (-1/q) = -1 the interesting inert vectors are the level-k twists
        const bool deep = legendre(-1, p) == -1;
        auto inert_spec = deep ? TestVectorSpec::twisted(UnitGroupF(p, 2).of_level(2).front(), 2)
                               : TestVectorSpec::twisted(eta_with_sign(sc4, 1), 2);
        for (auto t : picks) {
            record(deep ? "supercuspidal-inert-deep" : "supercuspidal-inert", sc4, inert_spec,
                   trivial_torus_character(in), t);
            record("supercuspidal-ramified", sc3, TestVectorSpec::newform(1), trivial_torus_character(ra), t);
            for (const auto& tp : {in, ra}) {
                auto ps = principal_series(p, 2, 0);
                auto om = ps_torus_character(ps, trivial_torus_character(tp));
                record(std::string("principal-series-") + torus_label(tp), ps,
                       TestVectorSpec::newform(tp.kind == ExtKind::inert ? 1 : 0), om, t);
            }
        }
    }
    return out;
}

std::vector<RunReport> decay(const Overrides& o, unsigned jobs) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5})) {
        Stopwatch sw;
        const double angle = o.angle.value_or(1.1);
        const int n_max = o.n_max.value_or(6), shells = o.shells.value_or(48);
        auto prm = field_params(p, "inert", 1, o.precision);
        auto res = decay_experiment(p, angle, n_max, trivial_torus_character(prm), shells, jobs);
        RunReport r;
        r.params = {{"p", p}, {"angle", angle}, {"n_max", n_max}, {"shells", shells}, {"backend", "float"}};
        r.value_float = std::complex<double>(res.slope, 0.0);
        r.expected = "slope <= -3/8 + 0.05; truncation drift < 1e-9";
        r.verdict = verdict(res.slope <= kDecaySlopeBound && res.truncation_drift < kDecayDriftBound);
        json rows = json::array();
        for (const auto& row : res.rows)
            rows.push_back({{"n", row.n}, {"cosets", row.cosets}, {"magnitude", row.magnitude}});
        r.details = {{"slope", res.slope}, {"truncation_drift", res.truncation_drift}, {"rows", rows}};
        r.seconds = sw.seconds();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RunReport> dichotomy(const Overrides& o, unsigned jobs) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5})) {
        auto in = field_params(p, "inert", 1, o.precision);
        auto ra = field_params(p, "ramified", 1, o.precision);
        struct Case {
            ScDatum sc;
            TorusCharacter om;
        };
        std::vector<Case> cases;
        // odd c(pi) against every c(Omega) <= k
        auto sc3 = supercuspidal(ra, 3, 0);
        for (int lvl = 0; lvl <= sc3.c_pi / 2; ++lvl) cases.push_back({sc3, torus_character(in, lvl, 0)});
        // even c(pi) against c(Omega) < k
        for (int c_pi : {2, 4}) {
            auto sc = supercuspidal(in, c_pi, 0);
            for (int lvl = 0; lvl < c_pi / 2; ++lvl) cases.push_back({sc, torus_character(in, lvl, 0)});
        }
        for (const auto& cs : cases) {
            Stopwatch sw;
            auto res = dichotomy_sweep(cs.sc, cs.om, false, jobs);
            RunReport r;
            r.params = {{"p", p}, {"ext", torus_label(cs.sc.ext)}, {"c_pi", cs.sc.c_pi}};
            r.params.update(torus_params(in, cs.om));
            const bool odd = cs.sc.c_pi % 2 == 1;
            r.expected = odd ? "0 for every pool spec" : "some pool spec nonzero";
            if (res.first_nonzero) {
                r.value_exact = exact_json(res.reports[*res.first_nonzero]);
                r.value_float = res.reports[*res.first_nonzero].value;
            } else {
                r.value_exact = "0";
                r.value_float = std::complex<double>(0, 0);
            }
            r.verdict = verdict(res.consistent && res.sign == (odd ? -1 : 1) &&
                                (!odd || res.evaluated == pool_specs(cs.sc).size()));
            r.details = {{"epsilon", res.sign}, {"evaluated", res.evaluated}, {"nonzero", res.nonzero}};
            if (res.first_nonzero) r.details["first_nonzero"] = res.reports[*res.first_nonzero].test_vector;
            r.seconds = sw.seconds();
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<RunReport> galois(const Overrides& o, unsigned jobs) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5})) {
        auto in = field_params(p, "inert", 1, o.precision);
        auto sc = supercuspidal(in, 4, 0);
        auto oms = torus_characters_of_level(in, 1, 1);
        for (std::size_t idx : {std::size_t{0}, oms.size() - 1}) {
            Stopwatch sw;
            auto res = conjugation_symmetry(sc, TestVectorSpec::twisted(eta_with_sign(sc, 1), 2), oms[idx], jobs);
            RunReport r;
            r.params = {{"p", p}, {"ext", "inert"}, {"c_pi", 4}, {"omega_index", idx}};
            r.params.update(torus_params(in, oms[idx]));
            r.value_exact = exact_json(res.original);
            r.value_float = res.original.value;
            r.expected = "I(Omega o sigma) = conj I(Omega)";
            r.verdict = verdict(res.holds);
            r.seconds = sw.seconds();
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<RunReport> certificate(const Overrides& o, unsigned jobs) {
    std::vector<RunReport> out;
    for (auto p : primes_or(o, {5})) {
        auto in = field_params(p, "inert", 1, o.precision);
        auto ra = field_params(p, "ramified", 1, o.precision);
        struct Case {
            std::string name;
            ScDatum sc;
            TestVectorSpec spec;
            LocalFieldParams torus;
        };
        auto sc4 = supercuspidal(in, 4, 0), sc2 = supercuspidal(in, 2, 0), sc3 = supercuspidal(ra, 3, 0);
        std::vector<Case> cases{{"inert-even", sc4, TestVectorSpec::twisted(eta_with_sign(sc4, 1), 2), in},
                                {"ramified-odd", sc3, TestVectorSpec::newform(1), ra},
                                {"unramified-omega", sc2, TestVectorSpec::newform(1), in}};
        for (const auto& cs : cases) {
            Stopwatch sw;
            auto om = trivial_torus_character(cs.torus);
            auto cert = averaged_test_vector(cs.sc, cs.spec, om, 64, 1, jobs);
            RunReport r;
            r.params = {{"p", p}, {"case", cs.name}, {"c_pi", cs.sc.c_pi}};
            r.params.update(torus_params(cs.torus, om));
            r.value_exact = exact_json(cert.pairing);
            r.value_float = cert.pairing.value;
            r.expected = "normal subgroup, fixed vector, nonzero pairing";
            r.verdict = verdict(cert.normal && cert.stabilizes && !cert.pairing.is_zero);
            r.details = {{"lower_exp", cert.lower_exp}, {"diag_exp", cert.diag_exp}, {"samples", cert.samples}};
            r.seconds = sw.seconds();
            out.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- formatting

std::string rational_string(const mpq_class& q) { return to_string(q); }

mpq_class parse_rational(const std::string& s) {
    mpq_class q;
    if (s.empty() || q.set_str(s, 10) != 0) throw InvalidParameter("not a rational number: " + s);
    if (q.get_den() == 0) throw InvalidParameter("zero denominator: " + s);
    q.canonicalize();
    return q;
}

json exact_json(const IntegralReport& r) {
    if (!r.exact) return json();
    if (r.rational) return rational_string(*r.rational);
    auto expo = CycContext::make(r.modulus)->basis_exponents();
    json terms = json::array();
    for (std::size_t i = 0; i < r.coefficients.size(); ++i)
        if (r.coefficients[i] != 0) terms.push_back({expo[i], rational_string(r.coefficients[i])});
    return {{"modulus", r.modulus}, {"terms", terms}};
}

json exact_json(const CycValue& v) {
    if (auto q = v.as_rational()) return rational_string(*q);
    auto coeffs = v.coefficients();
    auto expo = v.context()->basis_exponents();
    json terms = json::array();
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        if (coeffs[i] != 0) terms.push_back({expo[i], rational_string(coeffs[i])});
    return {{"modulus", v.modulus()}, {"terms", terms}};
}

json to_json(const RunReport& r, bool timing) {
    json j;
    j["scenario"] = r.scenario;
    j["params"] = r.params;
    j["value_exact"] = r.value_exact;
    if (r.value_float)
        j["value_float"] = {{"re", r.value_float->real()}, {"im", r.value_float->imag()}};
    else
        j["value_float"] = nullptr;
    j["expected"] = r.expected;
    j["verdict"] = r.verdict;
    j["anchor"] = r.anchor;
    j["seconds"] = timing ? r.seconds : 0.0;
    j["details"] = r.details;
    return j;
}

namespace {
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}
}  // namespace

std::string csv_header() { return "scenario,params,value_exact,value_re,value_im,expected,verdict,anchor,seconds"; }

std::string to_csv(const RunReport& r, bool timing) {
    auto j = to_json(r, timing);
    std::ostringstream os;
    os << csv_field(r.scenario) << ',' << csv_field(r.params.dump()) << ','
       << csv_field(r.value_exact.is_string() ? r.value_exact.get<std::string>()
                                              : r.value_exact.is_null() ? "" : r.value_exact.dump())
       << ',';
    if (r.value_float)
        os << j["value_float"]["re"].dump() << ',' << j["value_float"]["im"].dump();
    else
        os << ',';
    os << ',' << csv_field(r.expected) << ',' << csv_field(r.verdict) << ',' << csv_field(r.anchor) << ','
       << j["seconds"].dump();
    return os.str();
}

void sort_reports(std::vector<RunReport>& reports) {
    std::stable_sort(reports.begin(), reports.end(), [](const RunReport& a, const RunReport& b) {
        if (a.scenario != b.scenario) return a.scenario < b.scenario;
        return a.params.dump() < b.params.dump();
    });
}

// ---------------------------------------------------------------- builders

LocalFieldParams field_params(std::int64_t p, const std::string& kind, std::int64_t xi, int precision) {
    if (p < 5 || !is_prime(p)) throw InvalidPrime("p must be a prime >= 5");
    auto k = parse_ext_kind(kind);
    if (k == ExtKind::inert) return make_params(p, k, precision);
    return make_params(p, k, precision, std::nullopt, xi);
}

ScDatum supercuspidal(const LocalFieldParams& prm, int c_pi, std::size_t theta_index) {
    int c_theta;
    if (prm.kind == ExtKind::inert) {
        if (c_pi < 2 || c_pi % 2) throw InvalidParameter("an inert theta gives even c(pi) >= 2");
        c_theta = c_pi / 2;
    } else {
        if (c_pi < 3 || c_pi % 2 == 0) throw InvalidParameter("a ramified theta gives odd c(pi) >= 3");
        c_theta = c_pi - 1;
    }
    UnitGroupE E(prm, c_theta);
    auto thetas = admissible_thetas(E);
    if (theta_index >= thetas.size())
        throw InvalidParameter("theta index out of range (" + std::to_string(thetas.size()) + " available)");
    return build_sc(E, thetas[theta_index]);
}

PsDatum principal_series(std::int64_t p, int n, std::size_t index) {
    if (n < 1) throw InvalidParameter("mu level must be >= 1");
    UnitGroupF G(p, n);
    std::vector<MultChar> ok;
    for (const auto& mu : G.of_level(n))
        if (G.value(mu, G.modulus() - 1).is_one()) ok.push_back(mu);
    if (index >= ok.size())
        throw InvalidParameter("mu index out of range (" + std::to_string(ok.size()) + " available)");
    return make_ps(p, ok[index], n);
}

TorusCharacter torus_character(const LocalFieldParams& prm, int level, std::size_t index) {
    if (level < 0) throw InvalidParameter("omega level must be >= 0");
    if (level == 0) return trivial_torus_character(prm);
    auto oms = torus_characters_of_level(prm, level, level);
    if (index >= oms.size())
        throw InvalidParameter("omega index out of range (" + std::to_string(oms.size()) + " of level " +
                               std::to_string(level) + ")");
    return oms[index];
}

MultChar eta_with_sign(const ScDatum& sc, int sign) {
    ScModel<CycField> model(sc, CycField(sc_field_modulus(sc)));
    const auto& G = model.group();
    auto C1 = model.C(G.trivial());
    for (const auto& eta : G.of_level(1))
        if (model.field().times_root(C1, G.value(eta, G.modulus() - 1)).equals_rational(sign)) return eta;
    throw InvalidParameter("no level-1 eta with eta(-1) C_1 = " + std::to_string(sign));
}

// ---------------------------------------------------------------- registry

const std::vector<Scenario>& registry() {
    static const std::vector<Scenario> all{
        {"gauss-sum-law", "int psi(p^-j u) chi(u) d*u = 0 iff j != c(chi); |G|^2 = q/((q-1)^2 q^(k-1))",
         "Gauss sums at p = 5, 7 over conductors and shells 1..3", gauss_law},
        {"stationary-phase", "int chi nu psi = nu(-alpha_chi) int chi psi, c(nu) = 1",
         "stationary phase shift for c(chi) = 2, 3", stationary_phase},
        {"epsilon-quotient", "C_{nu eta^-1} / C_{eta^-1} from alpha_theta, alpha_eta; C_nu C_{nu^-1} = 1",
         "epsilon quotients and unitarity for c(theta) = 1, 2", epsilon_quotient},
        {"mc-closed-form", "Phi_eta closed form = Kirillov sum; branches agree at 2i = c",
         "matrix coefficient at torus points, c(pi) = 4", mc_closed_form},
        {"vanishing", "I(Phi_d, Omega) = 0 for d != k when (2/e) c(Omega) < c(pi)",
         "newform translates away from d = k", vanishing},
        {"inert-even-value", "I = 4/((q^2-1) q^(k-2)) for c(pi) = 2k, (-1/q) = 1",
         "inert even supercuspidal value", inert_even_value},
        {"deep-twist", "(-1/q) = -1, k >= 2 c(Omega): I = 0 for c(eta) < k, size 1/q^k at c(eta) = k",
         "level-k twisted newforms", deep_twist},
        {"ramified-value", "I = 2/((q-1) q^(k-1)) when (-xi/q) = 1; all zero when (-xi/q) = -1",
         "ramified odd supercuspidal", ramified_value},
        {"principal-series-value",
         "inert I = 1/((q+1) q^(k-1)) for n = 2k, 1/((q+1) q^k) for n = 2k+1; ramified I = 1/(2 q^(n-k))",
         "pi(1, mu) newform translates", ps_value},
        {"twist-identity", "I(Phi chi(det), Omega) = I(Phi, Omega chi_E)", "twist reduction, level-1 chi",
         twist_identity_scenario},
        {"decay", "log_q |I(Phi_{-n}, Omega)| slope <= -3/8 + 0.05", "spherical translates, float backend", decay},
        {"dichotomy-sweep", "some pool spec nonzero iff epsilon(Pi x Omega) = +1",
         "full pool against the predicted sign", dichotomy},
        {"galois-symmetry", "I(Phi, Omega o sigma) = conj I(Phi, Omega)", "Galois conjugation", galois},
        {"averaged-certificate", "int Omega(t) pi(t) v dt fixed by K_1^1, pairing = I",
         "averaged test vector certificates", certificate},
    };
    return all;
}

const Scenario& find_scenario(const std::string& id) {
    for (const auto& s : registry())
        if (s.id == id) return s;
    throw InvalidParameter("unknown scenario: " + id);
}

bool glob_match(const std::string& pattern, const std::string& text) {
    // iterative '*' / '?' matcher with single backtrack point
    std::size_t pi = 0, ti = 0, star = std::string::npos, mark = 0;
    while (ti < text.size()) {
        if (pi < pattern.size() && (pattern[pi] == '?' || pattern[pi] == text[ti])) {
            ++pi;
            ++ti;
        } else if (pi < pattern.size() && pattern[pi] == '*') {
            star = pi++;
            mark = ti;
        } else if (star != std::string::npos) {
            pi = star + 1;
            ti = ++mark;
        } else {
            return false;
        }
    }
    while (pi < pattern.size() && pattern[pi] == '*') ++pi;
    return pi == pattern.size();
}

std::vector<RunReport> run_all(const std::string& filter, const Overrides& o, unsigned jobs) {
    std::vector<const Scenario*> chosen;
    for (const auto& s : registry())
        if (filter.empty() || glob_match(filter, s.id)) chosen.push_back(&s);
    if (chosen.empty()) throw InvalidParameter("no scenario matches '" + filter + "'");

    jobs = std::max(1u, jobs);
    std::vector<std::vector<RunReport>> results(chosen.size());
    std::vector<std::exception_ptr> errors(chosen.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < chosen.size();) {
            try {
                results[i] = chosen[i]->run(o, jobs);
                for (auto& r : results[i]) {
                    r.scenario = chosen[i]->id;
                    r.anchor = chosen[i]->anchor;
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::future<void>> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(jobs, chosen.size()); ++w)
        pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
    // first error in registry order, so failures are reported deterministically
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<RunReport> all;
    for (auto& rs : results)
        for (auto& r : rs) all.push_back(std::move(r));
    sort_reports(all);
    return all;
}

}  // namespace torper::cli
