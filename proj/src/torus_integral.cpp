#include "torper/torus_integral.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>

namespace torper {

namespace {

int legendre(std::int64_t a, std::int64_t p) {
    a = mod_pos(a, p);
    if (a == 0) return 0;
    return is_square_mod_p(a, p) ? 1 : -1;
}

// f(i) for i in [0, n), spread over jobs threads, results in index order
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned jobs, F f) {
    std::vector<T> out(n);
    jobs = static_cast<unsigned>(std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
        return out;
    }
    std::vector<std::future<void>> work;
    for (unsigned j = 0; j < jobs; ++j)
        work.push_back(std::async(std::launch::async, [&, j] {
            for (std::size_t i = j; i < n; i += jobs) out[i] = f(i);
        }));
    for (auto& w : work) w.get();
    return out;
}

template <class Value>
bool same(const Value& a, const Value& b) {
    return is_zero(a - b);
}

std::pair<std::int64_t, std::int64_t> ext_mul_int(const LocalFieldParams& prm, std::int64_t a, std::int64_t b,
                                                  std::int64_t c, std::int64_t d) {
    return {a * c + b * d * prm.D, a * d + b * c};
}

std::int64_t checked_pow(std::int64_t base, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) {
        if (r > std::numeric_limits<std::int64_t>::max() / std::max<std::int64_t>(std::abs(base), 1))
            throw PrecisionError("power overflows 64 bits");
        r *= base;
    }
    return r;
}

std::complex<double> phase_float(const Phase& ph) {
    return std::polar(1.0, 2.0 * M_PI * static_cast<double>(ph.num) / static_cast<double>(ph.den));
}

std::shared_ptr<const UnitGroupF> sc_group(const ScDatum& sc) {
    return std::make_shared<const UnitGroupF>(sc.ext.p, std::max(1, sc.c_pi / 2));
}

std::int64_t prime_of(const Representation& rep) {
    return std::visit([](const auto& r) -> std::int64_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, ScDatum>)
            return r.ext.p;
        else
            return r.p;
    }, rep);
}

template <class Field>
IntegralReport make_report(const TorusIntegrand<Field>& f, const typename Field::Value& total, int depth,
                           std::size_t cosets, const std::optional<mpq_class>& predicted) {
    IntegralReport r;
    r.representation = describe(f.representation());
    r.test_vector = describe(f.spec(), f.representation());
    r.depth = depth;
    r.coset_count = cosets;
    r.exact = Field::exact;
    r.is_zero = is_zero(total);
    r.modulus = f.field().modulus();
    r.value = to_float(total);
    if constexpr (Field::exact) {
        r.rational = total.as_rational();
        if (!r.rational) r.coefficients = total.coefficients();
    }
    r.predicted = predicted;
    if (predicted) {
        bool eq;
        if constexpr (Field::exact)
            eq = total.equals_rational(*predicted);
        else
            eq = std::abs(r.value - std::complex<double>(predicted->get_d(), 0.0)) < kFloatZeroTol;
        if (!eq)
            r.verdict = IntegralReport::Verdict::mismatch;
        else
            r.verdict = *predicted == 0 ? IntegralReport::Verdict::vanish : IntegralReport::Verdict::match;
    }
    return r;
}

template <class Field>
typename Field::Value integral_sum(const TorusIntegrand<Field>& f, int depth, std::size_t* count, unsigned jobs) {
    const auto& K = f.field();
    auto cosets = torus_cosets(f.torus_field(), depth);
    auto vals = parallel_map<typename Field::Value>(cosets.size(), jobs,
                                                    [&](std::size_t i) { return f(cosets[i].a, cosets[i].b); });
    auto total = K.zero();
    for (const auto& v : vals) total += v;
    if (count) *count = cosets.size();
    return total * K.rational(cosets.front().weight);
}

// one context per modulus, so values from separate integrals can be compared
CycField exact_field(std::uint64_t M) {
    static std::mutex mu;
    static std::map<std::uint64_t, CycField> fields;
    std::lock_guard<std::mutex> lock(mu);
    auto it = fields.find(M);
    if (it == fields.end()) it = fields.emplace(M, CycField(M)).first;
    return it->second;
}

// supercuspidal models keep their epsilon and Gauss caches across integrals
template <class Field>
std::shared_ptr<const ScModel<Field>> shared_sc_model(const ScDatum& sc, const Field& K) {
    if constexpr (Field::exact) {
        static std::mutex mu;
        static std::map<std::pair<const void*, std::string>, std::shared_ptr<const ScModel<Field>>> models;
        std::pair<const void*, std::string> key{K.context().get(),
                                                describe(Representation(sc)) + " D=" + std::to_string(sc.ext.D)};
        std::lock_guard<std::mutex> lock(mu);
        auto it = models.find(key);
        if (it == models.end()) it = models.emplace(key, std::make_shared<const ScModel<Field>>(sc, K)).first;
        return it->second;
    } else {
        return std::make_shared<const ScModel<Field>>(sc, K);
    }
}

}  // namespace

// ---------------------------------------------------------------- representations and characters

int conductor(const Representation& rep) {
    return std::visit([](const auto& r) {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, ScDatum>)
            return r.c_pi;
        else
            return r.n;
    }, rep);
}

int half_level(const Representation& rep) { return conductor(rep) / 2; }

std::string describe(const Representation& rep) {
    std::ostringstream os;
    if (auto* sc = std::get_if<ScDatum>(&rep)) {
        os << "supercuspidal p=" << sc->ext.p << " " << to_string(sc->ext.kind);
        if (sc->ext.kind == ExtKind::ramified) os << " xi=" << sc->ext.xi;
        os << " c_theta=" << sc->c_theta << " c_pi=" << sc->c_pi << " theta=(";
        for (std::size_t i = 0; i < sc->theta.exps.size(); ++i) os << (i ? "," : "") << sc->theta.exps[i];
        os << ")";
    } else {
        const auto& ps = std::get<PsDatum>(rep);
        UnitGroupF G(ps.p, ps.n);
        os << "principal series pi(1,mu) p=" << ps.p << " c(mu)=" << ps.n << " mu#" << G.index(ps.mu);
    }
    return os.str();
}

std::string describe(const TestVectorSpec& spec, const Representation& rep) {
    std::ostringstream os;
    if (spec.kind == TestVectorSpec::Kind::translate_newform) {
        os << "newform d=" << spec.d;
    } else {
        const auto& sc = std::get<ScDatum>(rep);
        auto G = sc_group(sc);
        os << "twisted eta#" << G->index(spec.eta) << " c(eta)=" << G->conductor(spec.eta) << " d=" << spec.d;
    }
    return os.str();
}

std::string to_string(IntegralReport::Verdict v) {
    switch (v) {
        case IntegralReport::Verdict::match: return "match";
        case IntegralReport::Verdict::vanish: return "vanish";
        case IntegralReport::Verdict::mismatch: return "mismatch";
        case IntegralReport::Verdict::unchecked: return "unchecked";
    }
    return "unchecked";
}

Backend parse_backend(const std::string& s) {
    if (s == "exact") return Backend::exact;
    if (s == "float") return Backend::floating;
    throw InvalidParameter("unknown backend: " + s);
}

TorusCharacter make_torus_character(const LocalFieldParams& prm, int level, const MultChar& omega) {
    auto G = std::make_shared<const UnitGroupE>(prm, std::max(1, level));
    G->conductor(omega);  // validates the shape
    return {G, omega};
}

TorusCharacter trivial_torus_character(const LocalFieldParams& prm, int level) {
    auto G = std::make_shared<const UnitGroupE>(prm, std::max(1, level));
    return {G, G->trivial()};
}

std::vector<TorusCharacter> torus_characters_of_level(const LocalFieldParams& prm, int group_level, int c) {
    auto G = std::make_shared<const UnitGroupE>(prm, std::max({1, group_level, c}));
    std::vector<TorusCharacter> out;
    for (auto& w : G->of_level(c, true)) out.push_back({G, w});
    return out;
}

TorusCharacter relevel(const TorusCharacter& omega, int level) {
    if (level <= omega.group->level()) return omega;
    auto G = std::make_shared<const UnitGroupE>(omega.field(), level);
    MultChar r{Side::E, {0, 0, 0}, omega.omega.at_uniformizer};
    for (std::size_t i = 0; i < 3; ++i) {
        auto [a, b] = G->generators()[i];
        Phase ph = omega.at(a, b);
        std::int64_t ord = G->orders()[i];
        if (ord % ph.den != 0) throw CharacterError("relevel: value order does not divide the generator order");
        r.exps[i] = ph.num * (ord / ph.den);
    }
    return {G, r};
}

MultChar ps_half_character(const PsDatum& ps) {
    UnitGroupF G(ps.p, ps.n);
    auto target = G.inv(ps.mu);
    for (const auto& chi : G.enumerate(ps.n))
        if (G.mul(chi, chi) == target) return chi;
    throw InvalidParameter("ps_half_character: mu is not a square (mu(-1) != 1)");
}

TorusCharacter ps_torus_character(const PsDatum& ps, const TorusCharacter& omega0) {
    if (!omega0.group->trivial_on_base_units(omega0.omega))
        throw InvalidParameter("ps_torus_character: Omega0 must be trivial on O_F^*");
    const auto& prm = omega0.field();
    if (prm.p != ps.p) throw InvalidParameter("ps_torus_character: primes differ");
    auto chi = ps_half_character(ps);
    const int e = prm.e();
    auto o = relevel(omega0, std::max(e * ps.n - e + 1, omega0.group->level()));
    UnitGroupF G(ps.p, ps.n);
    return {o.group, o.group->mul(o.omega, o.group->norm_lift(G, chi))};
}

TorusCharacter twist_reduce(const TorusCharacter& omega, const UnitGroupF& G, const MultChar& tau) {
    const int e = omega.field().e();
    const int c = G.conductor(tau);
    auto o = relevel(omega, std::max(c == 0 ? 1 : e * c - e + 1, omega.group->level()));
    return {o.group, o.group->mul(o.omega, o.group->norm_lift(G, tau))};
}

std::uint64_t integral_field_modulus(const Representation& rep, const TorusCharacter& omega,
                                     const std::optional<DetTwist>& twist) {
    std::uint64_t M = std::visit([](const auto& r) -> std::uint64_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, ScDatum>)
            return sc_field_modulus(r);
        else
            return ps_field_modulus(r.p, r.n);
    }, rep);
    for (auto o : omega.group->orders()) M = std::lcm(M, static_cast<std::uint64_t>(o));
    M = std::lcm(M, static_cast<std::uint64_t>(omega.omega.at_uniformizer.den));
    if (twist) {
        M = std::lcm(M, static_cast<std::uint64_t>(twist->group->order()));
        M = std::lcm(M, static_cast<std::uint64_t>(twist->chi.at_uniformizer.den));
    }
    return M;
}

template <>
CycValue sqrt_p(const CycField& K, std::int64_t p) {
    auto acc = K.accumulator();
    for (std::int64_t a = 1; a < p; ++a) acc.add(Phase(a, p), legendre(a, p));
    auto g = acc.value();
    if (p % 4 == 1) return g;
    return K.times_root(g, Phase(-1, 4));  // g = i sqrt(p)
}

template <>
FloatValue sqrt_p(const FloatField&, std::int64_t p) {
    return {std::sqrt(static_cast<double>(p)), 0.0};
}

// ---------------------------------------------------------------- the integrand

template <class Field>
TorusIntegrand<Field>::TorusIntegrand(Representation rep, TestVectorSpec spec, TorusCharacter omega, Field K,
                                      std::optional<DetTwist> twist)
    : rep_(std::move(rep)), spec_(std::move(spec)), omega_(std::move(omega)), K_(std::move(K)), twist_(std::move(twist)) {
    c_ = conductor(rep_);
    const auto p = torus_field().p;
    if (prime_of(rep_) != p) throw InvalidParameter("TorusIntegrand: the representation and Omega use different primes");
    if (auto* sc = std::get_if<ScDatum>(&rep_)) {
        sc_ = shared_sc_model(*sc, K_);
        if (spec_.kind == TestVectorSpec::Kind::twisted_newform) {
            if (2 * sc_->group().conductor(spec_.eta) > c_)
                throw InvalidParameter("TorusIntegrand: eta deeper than c(pi)/2");
        } else {
            spec_.eta = sc_->group().trivial();
        }
    } else {
        if (spec_.kind == TestVectorSpec::Kind::twisted_newform)
            throw InvalidParameter("TorusIntegrand: principal series take newform translates only");
        ps_ = std::make_shared<const PsModel<Field>>(std::get<PsDatum>(rep_), K_);
    }
    if (twist_) twist_level_ = twist_->group->conductor(twist_->chi);
    sqrt_q_ = sqrt_p(K_, p);
    check_central();
}

template <class Field>
void TorusIntegrand<Field>::check_central() const {
    const auto p = torus_field().p;
    const std::int64_t g = UnitGroupF(p, 2).primitive_root();
    for (std::int64_t z : {g, 1 + p, p}) {
        Phase total = omega_.at(z, 0);
        if (ps_) total = total + ps_->group().value(ps_->datum().mu, ResidueElem::from_int(p, z, 8));
        if (twist_) total = total + twist_->group->value(twist_->chi, ResidueElem::from_int(p, z, 8)).times(2);
        if (!total.is_one())
            throw InvalidParameter("TorusIntegrand: Omega times the central character is nontrivial on F^*");
    }
}

template <class Field>
typename TorusIntegrand<Field>::Value TorusIntegrand<Field>::phi(std::int64_t a, std::int64_t b) const {
    const auto& prm = torus_field();
    const auto p = prm.p;
    auto pt = torus_point(prm, a, b, spec_.d);
    Value v;
    if (sc_) {
        v = mc_torus(*sc_, spec_.eta, pt);
    } else {
        auto r = ps_->at_torus(pt);
        const int h = r.half_exp;
        const int whole = (h >= 0) ? h / 2 : -((1 - h) / 2);  // floor(h / 2)
        v = r.coeff * K_.rational(pow_q(p, whole));
        if (h - 2 * whole == 1) v = v * sqrt_q_;
    }
    if (twist_) {
        mpq_class N = mpq_class(static_cast<long>(a)) * a - mpq_class(static_cast<long>(b)) * b * prm.D;
        v = K_.times_root(v, twist_->group->value_rational(twist_->chi, N));
    }
    return v;
}

template <class Field>
typename TorusIntegrand<Field>::Value TorusIntegrand<Field>::operator()(std::int64_t a, std::int64_t b) const {
    return K_.times_root(phi(a, b), omega_.at(a, b));
}

template <class Field>
int TorusIntegrand<Field>::proven_depth() const {
    // modulo F^*, 1 + p_E^m O_E is {1 + y sqrt(D)}; the conjugate
    // [[1, y p^-d], [y D p^d, 1]] lies in K_0(p^c) with unit diagonal 1
    const int d = spec_.d, c = c_;
    const int cO = omega_.conductor(), ct = twist_level_;
    if (torus_field().kind == ExtKind::inert) return std::max({0, d, c - d, cO, (ct + 1) / 2});
    const int t = std::max({0, d, c - d - 1, cO / 2, ct / 2});
    return 2 * t + 1;
}

std::vector<std::pair<std::int64_t, std::int64_t>> one_unit_generators(const LocalFieldParams& prm, int m) {
    const auto p = prm.p;
    if (m < 0) throw std::invalid_argument("one_unit_generators: negative depth");
    if (prm.kind == ExtKind::inert) {
        if (m == 0) {
            // a generator of F_{p^2}^* together with 1 + p O_E
            const std::int64_t ord = p * p - 1;
            for (std::int64_t x = 0; x < p; ++x)
                for (std::int64_t y = 1; y < p; ++y) {
                    std::pair<std::int64_t, std::int64_t> z{1, 0};
                    std::int64_t k = 0;
                    do {
                        z = {mod_pos(z.first * x + z.second * y % p * prm.D, p), mod_pos(z.first * y + z.second * x, p)};
                        ++k;
                    } while (!(z.first == 1 && z.second == 0) && k <= ord);
                    if (k == ord) return {{x, y}, {1 + p, 0}, {1, p}};
                }
            throw std::logic_error("one_unit_generators: no residue generator");
        }
        const std::int64_t pm = checked_pow(p, m);
        return {{1 + pm, 0}, {1, pm}};
    }
    if (m == 0) {
        std::int64_t g = UnitGroupF(p, 1).primitive_root();
        return {{g, 0}, {1, 1}, {1 + prm.D, 0}};
    }
    const int t = m / 2;
    const std::int64_t Dt = checked_pow(prm.D, t);
    if (m % 2 == 0) return {{1 + Dt, 0}, {1, Dt}};
    return {{1, Dt}, {1 + Dt * prm.D, 0}};
}

template <class Field>
int invariance_depth(const TorusIntegrand<Field>& f, unsigned jobs) {
    const auto& prm = f.torus_field();
    const int M = f.proven_depth();
    const auto cosets = torus_cosets(prm, M);
    auto base = parallel_map<typename Field::Value>(cosets.size(), jobs,
                                                    [&](std::size_t i) { return f(cosets[i].a, cosets[i].b); });
    auto invariant_at = [&](int m) {
        const auto gens = one_unit_generators(prm, m);
        auto ok = parallel_map<char>(cosets.size(), jobs, [&](std::size_t i) -> char {
            for (auto [ga, gb] : gens) {
                auto [a, b] = ext_mul_int(prm, cosets[i].a, cosets[i].b, ga, gb);
                if (!same(f(a, b), base[i])) return 0;
            }
            return 1;
        });
        return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    };
    if (!invariant_at(M)) throw PrecisionError("invariance_depth: the integrand moves under 1 + p_E^M at the proven M");
    int m = M;
    while (m > 0 && invariant_at(m - 1)) --m;
    return m;
}

template <class Field>
IntegralReport local_integral(const TorusIntegrand<Field>& f, const std::optional<mpq_class>& predicted,
                              unsigned jobs) {
    const int depth = f.proven_depth();
    std::size_t count = 0;
    auto total = integral_sum(f, depth, &count, jobs);
    return make_report(f, total, depth, count, predicted);
}

IntegralReport local_integral(const Representation& rep, const TestVectorSpec& spec, const TorusCharacter& omega,
                              Backend backend, const std::optional<mpq_class>& predicted, unsigned jobs,
                              const std::optional<DetTwist>& twist) {
    const auto M = integral_field_modulus(rep, omega, twist);
    if (backend == Backend::exact)
        return local_integral(TorusIntegrand<CycField>(rep, spec, omega, exact_field(M), twist), predicted, jobs);
    return local_integral(TorusIntegrand<FloatField>(rep, spec, omega, FloatField(M), twist), predicted, jobs);
}

// ---------------------------------------------------------------- vanishing and dichotomy

VolumeIdentity volume_identity(const LocalFieldParams& prm, int c, int d) {
    VolumeIdentity r;
    r.d = d;
    const auto p = prm.p;
    // depth chosen so that every class has a determined side of c - 1 and c
    int depth;
    if (prm.kind == ExtKind::inert)
        depth = std::max({1, c - d, d - c + 2});
    else
        depth = 2 * std::max({0, c - d - 1, d - c + 2});
    constexpr int kInf = std::numeric_limits<int>::max() / 2;
    const int vD = prm.kind == ExtKind::inert ? 0 : 1;
    for (const auto& cs : torus_cosets(prm, depth)) {
        int i;
        if (cs.b == 0)
            i = kInf;
        else if (cs.a == 0)
            i = -kInf;
        else
            i = vp(cs.b, p) + vD + d - vp(cs.a, p);
        if (i == c - 1) r.at_c_minus_1 += cs.weight;
        if (i >= c) r.at_least_c += cs.weight;
    }
    r.holds = r.at_c_minus_1 == mpq_class(p - 1) * r.at_least_c;
    return r;
}

SweepResult vanishing_sweep(const Representation& rep, const TorusCharacter& omega, int d_lo, int d_hi,
                            unsigned jobs) {
    if (!std::holds_alternative<ScDatum>(rep))
        throw InvalidParameter("vanishing_sweep: supercuspidal representations only");
    const int c = conductor(rep);
    const int e = omega.field().e();
    if (c < 2) throw InvalidParameter("vanishing_sweep: needs c(pi) >= 2");
    if (2 * omega.conductor() >= e * c) throw InvalidParameter("vanishing_sweep: needs (2/e) c(Omega) < c(pi)");
    const int k = half_level(rep);
    SweepResult out;
    for (int d = d_lo; d <= d_hi; ++d) {
        if (d == k) continue;
        auto r = local_integral(rep, TestVectorSpec::newform(d), omega, Backend::exact, mpq_class(0), jobs);
        out.all_vanish = out.all_vanish && r.is_zero;
        out.reports.push_back(std::move(r));
        out.volumes.push_back(volume_identity(omega.field(), c, d));
    }
    return out;
}

int epsilon_dichotomy(const Representation& rep, const TorusCharacter& omega) {
    if (std::holds_alternative<PsDatum>(rep)) return 1;
    const auto& sc = std::get<ScDatum>(rep);
    const int c = sc.c_pi, k = c / 2;
    const int cO = omega.conductor();
    if (omega.field().kind == ExtKind::inert) {
        if (c % 2 == 1 && cO <= k) return -1;
        if (c % 2 == 0 && cO < k) return 1;
        throw InvalidParameter("epsilon_dichotomy: c(Omega) outside the inert level hypotheses");
    }
    if (c % 2 == 0) {
        if (cO <= 2 * k - 1) return -1;
        throw InvalidParameter("epsilon_dichotomy: c(Omega) outside the ramified even hypotheses");
    }
    if (cO >= 2 * k) throw InvalidParameter("epsilon_dichotomy: c(Omega) outside the ramified odd hypotheses");
    return legendre(-omega.field().xi, sc.ext.p);
}

std::vector<TestVectorSpec> pool_specs(const Representation& rep) {
    const int c = conductor(rep);
    std::vector<TestVectorSpec> out;
    for (int d = 0; d <= c; ++d) out.push_back(TestVectorSpec::newform(d));
    if (auto* sc = std::get_if<ScDatum>(&rep)) {
        auto G = sc_group(*sc);
        for (int lvl = 1; 2 * lvl <= c; ++lvl)
            for (const auto& eta : G->of_level(lvl))
                for (int d = 0; d <= c; ++d) out.push_back(TestVectorSpec::twisted(eta, d));
    }
    return out;
}

DichotomyResult dichotomy_sweep(const Representation& rep, const TorusCharacter& omega, bool exhaustive,
                                unsigned jobs) {
    DichotomyResult out;
    out.sign = epsilon_dichotomy(rep, omega);
    if (out.sign < 0) exhaustive = true;  // vanishing needs every spec
    const auto M = integral_field_modulus(rep, omega);
    CycField K = exact_field(M);
    for (const auto& spec : pool_specs(rep)) {
        TorusIntegrand<CycField> f(rep, spec, omega, K);
        out.reports.push_back(local_integral(f, std::nullopt, jobs));
        ++out.evaluated;
        if (!out.reports.back().is_zero) {
            if (!out.first_nonzero) out.first_nonzero = out.reports.size() - 1;
            ++out.nonzero;
            if (!exhaustive) break;
        }
    }
    out.consistent = (out.nonzero > 0) == (out.sign > 0);
    return out;
}

// ---------------------------------------------------------------- twisting and conjugation

TwistCheck twist_identity(const Representation& rep, const TestVectorSpec& spec, const TorusCharacter& omega_min,
                          const MultChar& tau, int tau_level, unsigned jobs) {
    auto G = std::make_shared<const UnitGroupF>(prime_of(rep), std::max(1, tau_level));
    auto omega_direct = twist_reduce(omega_min, *G, G->inv(tau));
    auto omega_reduced = twist_reduce(omega_direct, *G, tau);
    DetTwist tw{G, tau};
    auto M = std::lcm(integral_field_modulus(rep, omega_direct, tw), integral_field_modulus(rep, omega_reduced));
    CycField K = exact_field(M);
    TorusIntegrand<CycField> direct(rep, spec, omega_direct, K, tw);
    TorusIntegrand<CycField> reduced(rep, spec, omega_reduced, K);
    std::size_t n1 = 0, n2 = 0;
    const int d1 = direct.proven_depth(), d2 = reduced.proven_depth();
    auto v1 = integral_sum(direct, d1, &n1, jobs);
    auto v2 = integral_sum(reduced, d2, &n2, jobs);
    TwistCheck out;
    out.direct = make_report(direct, v1, d1, n1, std::nullopt);
    out.reduced = make_report(reduced, v2, d2, n2, std::nullopt);
    out.holds = same(v1, v2);
    return out;
}

ConjugationCheck conjugation_symmetry(const Representation& rep, const TestVectorSpec& spec,
                                      const TorusCharacter& omega, unsigned jobs) {
    TorusCharacter sigma{omega.group, omega.group->galois_conjugate(omega.omega)};
    auto M = std::lcm(integral_field_modulus(rep, omega), integral_field_modulus(rep, sigma));
    CycField K = exact_field(M);
    TorusIntegrand<CycField> f(rep, spec, omega, K), g(rep, spec, sigma, K);
    std::size_t n1 = 0, n2 = 0;
    const int d1 = f.proven_depth(), d2 = g.proven_depth();
    auto v1 = integral_sum(f, d1, &n1, jobs);
    auto v2 = integral_sum(g, d2, &n2, jobs);
    ConjugationCheck out;
    out.original = make_report(f, v1, d1, n1, std::nullopt);
    out.conjugated = make_report(g, v2, d2, n2, std::nullopt);
    // diag(-1, 1) fixes the translated vector up to a unitary scalar, so |scalar|^2 = 1
    out.holds = same(v2, conj(v1));
    return out;
}

// ---------------------------------------------------------------- averaged test vector

AveragedCertificate averaged_test_vector(const ScDatum& sc, const TestVectorSpec& spec, const TorusCharacter& omega,
                                         std::size_t samples, std::uint64_t seed, unsigned jobs) {
    AveragedCertificate out;
    out.pairing = local_integral(sc, spec, omega, Backend::exact, std::nullopt, jobs);
    if (out.pairing.is_zero) throw VanishingIntegral("averaged_test_vector: the local integral vanishes");
    const auto& prm = omega.field();
    const auto p = prm.p;
    const int k = spec.d;
    if (k < 1) throw InvalidParameter("averaged_test_vector: needs d >= 1");
    out.diag_exp = k;
    out.lower_exp = prm.kind == ExtKind::inert ? k : k + 1;
    const int prec = max_precision(p) - 2;
    auto G = sc_group(sc);
    const MultChar eta = spec.kind == TestVectorSpec::Kind::twisted_newform ? spec.eta : G->trivial();

    std::mt19937_64 rng(seed);
    const std::int64_t span = ipow(p, 3);
    auto draw = [&] { return static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(span)); };
    auto R = [&](std::int64_t x) { return ResidueElem::from_int(p, x, prec); };
    auto Rs = [&](std::int64_t x, int s) { return ResidueElem::from_int(p, x, prec).shift(s); };
    out.normal = true;
    out.stabilizes = true;
    const auto Dr = ResidueElem::from_int(p, prm.D, prec);
    for (std::size_t s = 0; s < samples; ++s) {
        Mat2 kk{R(1) + Rs(draw(), out.diag_exp), Rs(draw(), out.diag_exp), Rs(draw(), out.lower_exp),
                R(1) + Rs(draw(), out.diag_exp)};
        std::int64_t a = draw(), b = draw();
        if (s == 0) a = 0, b = 1;  // sqrt(D), the uniformizer when ramified
        if (a % p == 0 && b % p == 0) b += 1;
        auto ar = R(a), br = R(b);
        Mat2 t{ar, br, br * Dr, ar};
        auto N = ar * ar - br * br * Dr;
        Mat2 t_inv = mat_scale(N.inverse(), Mat2{ar, -br, -(br * Dr), ar});
        if (!in_K11(mat_mul(mat_mul(t_inv, kk), t), out.lower_exp, out.diag_exp)) out.normal = false;
        // diag(p^-d, 1) k diag(p^d, 1) must fix 1_{eta,0}
        Mat2 h{kk.a, kk.b.shift(-spec.d), kk.c.shift(spec.d), kk.d};
        if (!in_K0(h, sc.c_pi) || !G->value(eta, h.a * h.d.inverse()).is_one()) out.stabilizes = false;
        ++out.samples;
    }
    return out;
}

// ---------------------------------------------------------------- deep twists

DeepTwistCheck deep_twist_check(const ScDatum& sc, const TorusCharacter& omega, unsigned jobs) {
    const auto& prm = sc.ext;
    const auto p = prm.p;
    if (prm.kind != ExtKind::inert || omega.field() != prm)
        throw InvalidParameter("deep_twist_check: theta and Omega must share the inert extension");
    const int k = sc.c_pi / 2;
    const int cO = omega.conductor();
    if (sc.c_pi % 2 != 0 || k < 2 || 2 * cO > k || legendre(-1, p) != -1 || !sc.alpha_theta)
        throw InvalidParameter("deep_twist_check: needs c(pi) = 2k, k >= 2 c(Omega), k >= 2 and (-1/q) = -1");
    const Representation rep = sc;
    const auto M = integral_field_modulus(rep, omega);
    CycField K = exact_field(M);
    const auto& model = *shared_sc_model(sc, K);
    const auto& G = model.group();
    const auto C1 = model.C(G.trivial());
    DeepTwistCheck out;

    for (int lvl = 0; lvl < k; ++lvl)
        for (const auto& eta : G.of_level(lvl)) {
            TorusIntegrand<CycField> f(rep, TestVectorSpec::twisted(eta, k), omega, K);
            auto r = local_integral(f, mpq_class(0), jobs);
            ++out.lower_level_count;
            out.lower_levels_vanish = out.lower_levels_vanish && r.is_zero;
        }

    const std::int64_t alpha = mod_pos(sc.alpha_theta->b, p);  // alpha_theta = alpha sqrt(D)
    const int L = std::max(1, cO);                              // c(Omega) - k + c(eta) with c(eta) = k
    const std::int64_t mod = ipow(p, L);
    const std::int64_t D = prm.D;
    const mpq_class scale = mpq_class(1) / (mpq_class(p * p - 1) * pow_q(p, k - 2));
    for (const auto& eta : G.of_level(k)) {
        auto ae = alpha_of(G, eta);
        const std::int64_t a_eta = mod_pos(ae.alpha, p);
        const std::int64_t den = mod_pos(a_eta * a_eta - alpha * alpha % p * D, p);
        if (legendre(den, p) != -1) continue;
        DeepTwistEntry en;
        en.eta = eta;
        en.alpha_eta = a_eta;
        // a^2 alpha^2 D = alpha_eta^2 (a^2 - D) on each shell of a
        const std::int64_t Lmod = mod;
        std::int64_t first = -1;
        for (std::int64_t a = 0; a < Lmod; ++a) {
            const std::int64_t lhs = mod_pos(a * a % Lmod * (alpha * alpha % Lmod) % Lmod * D, Lmod);
            const std::int64_t rhs = mod_pos(a_eta * a_eta % Lmod * mod_pos(a * a - D, Lmod), Lmod);
            if (lhs != rhs) continue;
            if (a % p == 0) {
                out.other_shells_unsolvable = false;
                continue;
            }
            ++en.root_solutions;
            if (first < 0) first = a;
        }
        auto f = TorusIntegrand<CycField>(rep, TestVectorSpec::twisted(eta, k), omega, K);
        en.report = local_integral(f, std::nullopt, jobs);
        CycValue pred = K.zero();
        if (first >= 0) {
            Phase eta_m1 = G.value(eta, G.modulus() - 1);
            auto bracket = K.root(omega.at(first, 1)) + K.root(omega.at(mod_pos(-first, Lmod), 1));
            pred = (K.rational(2) + K.times_root(C1, eta_m1) * bracket) * K.rational(scale);
        }
        en.predicted = pred.to_complex();
        std::size_t n = 0;
        auto value = integral_sum(f, f.proven_depth(), &n, jobs);
        en.holds = first >= 0 && same(value, pred);
        en.scaled = std::abs(en.report.value) * std::pow(static_cast<double>(p), k);
        if (!out.constructed && en.holds && en.scaled >= 0.5 && en.scaled <= 8.0) out.constructed = out.entries.size();
        out.entries.push_back(std::move(en));
    }
    return out;
}

// ---------------------------------------------------------------- decay

double spherical_whittaker(std::int64_t p, double angle, int r) {
    if (r < 0) return 0.0;
    return std::pow(static_cast<double>(p), -0.5 * r) * std::sin((r + 1) * angle) / std::sin(angle);
}

double spherical_coefficient(std::int64_t p, double angle, int vx, std::optional<int> vm, int shells) {
    const double q = static_cast<double>(p);
    double norm = 0.0;
    for (int v = 0; v <= shells; ++v) norm += std::pow(spherical_whittaker(p, angle, v), 2);
    double num = 0.0;
    const int v0 = std::max(0, -vx);
    for (int v = v0; v <= v0 + shells; ++v) {
        double gamma = 1.0;
        if (vm) {
            int j = *vm + v;
            gamma = j >= 0 ? 1.0 : (j == -1 ? -1.0 / (q - 1.0) : 0.0);
        }
        if (gamma == 0.0) continue;
        num += gamma * spherical_whittaker(p, angle, vx + v) * spherical_whittaker(p, angle, v);
    }
    return num / norm;
}

double macdonald_coefficient(std::int64_t p, double angle, int r) {
    r = std::abs(r);
    const double q = static_cast<double>(p);
    const std::complex<double> al = std::polar(1.0, angle), be = std::polar(1.0, -angle);
    auto term = [&](std::complex<double> x, std::complex<double> y) {
        return std::pow(x, r) * (1.0 - y / (q * x)) / (1.0 - y / x);
    };
    return (std::pow(q, -0.5 * r) / (1.0 + 1.0 / q) * (term(al, be) + term(be, al))).real();
}

DecayResult decay_experiment(std::int64_t p, double angle, int n_max, const TorusCharacter& omega, int shells,
                             unsigned jobs) {
    const auto& prm = omega.field();
    if (prm.kind != ExtKind::inert || prm.p != p) throw InvalidParameter("decay_experiment: needs an inert Omega over p");
    if (!omega.group->trivial_on_base_units(omega.omega))
        throw InvalidParameter("decay_experiment: Omega must be trivial on F^*");
    const int prec = max_precision(p) - 2;
    DecayResult out;
    for (int n = 0; n <= n_max; ++n) {
        const int depth = std::max(n, omega.conductor());
        const auto cosets = torus_cosets(prm, depth);
        auto eval = [&](int sh) {
            auto vals = parallel_map<std::complex<double>>(cosets.size(), jobs, [&](std::size_t i) {
                auto t = conjugated_torus_decompose(ResidueElem::from_int(p, cosets[i].a, prec),
                                                    ResidueElem::from_int(p, cosets[i].b, prec), -n, prm);
                double phi = 1.0;
                if (t.kind != TorusDecomposition::Case::identity) {
                    std::optional<int> vm;
                    if (!t.top_right.is_zero()) vm = t.top_right.val();
                    phi = spherical_coefficient(p, angle, t.top_left.val(), vm, sh);
                }
                return phi * phase_float(omega.at(cosets[i].a, cosets[i].b));
            });
            std::complex<double> s = 0.0;
            for (auto v : vals) s += v;
            return s * cosets.front().weight.get_d();
        };
        DecayRow row;
        row.n = n;
        row.cosets = cosets.size();
        row.value = eval(shells);
        row.magnitude = std::abs(row.value);
        row.magnitude_doubled = std::abs(eval(2 * shells));
        out.truncation_drift = std::max(out.truncation_drift, std::abs(row.magnitude - row.magnitude_doubled));
        out.rows.push_back(row);
    }
    // least squares slope of log_q |I(n)|
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double lq = std::log(static_cast<double>(p));
    for (const auto& r : out.rows) {
        double x = r.n, y = std::log(r.magnitude) / lq;
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double m = static_cast<double>(out.rows.size());
    out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return out;
}

template class TorusIntegrand<CycField>;
template class TorusIntegrand<FloatField>;
template int invariance_depth<CycField>(const TorusIntegrand<CycField>&, unsigned);
template int invariance_depth<FloatField>(const TorusIntegrand<FloatField>&, unsigned);
template IntegralReport local_integral<CycField>(const TorusIntegrand<CycField>&, const std::optional<mpq_class>&,
                                                 unsigned);
template IntegralReport local_integral<FloatField>(const TorusIntegrand<FloatField>&, const std::optional<mpq_class>&,
                                                   unsigned);

}  // namespace torper
