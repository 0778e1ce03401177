#include "torper/characters.hpp"

#include <algorithm>
#include <numeric>

namespace torper {

namespace {

using i128 = __int128;

std::int64_t mulmod(std::int64_t a, std::int64_t b, std::int64_t m) {
    return mod_pos(static_cast<std::int64_t>(static_cast<i128>(a) * b % m), m);
}

std::int64_t powmod(std::int64_t b, std::int64_t e, std::int64_t m) {
    std::int64_t r = 1 % m;
    b = mod_pos(b, m);
    while (e > 0) {
        if (e & 1) r = mulmod(r, b, m);
        b = mulmod(b, b, m);
        e >>= 1;
    }
    return r;
}

std::vector<std::int64_t> prime_factors(std::int64_t n) {
    std::vector<std::int64_t> f;
    for (std::int64_t d = 2; d * d <= n; ++d)
        if (n % d == 0) {
            f.push_back(d);
            while (n % d == 0) n /= d;
        }
    if (n > 1) f.push_back(n);
    return f;
}

constexpr std::int64_t kMaxTable = std::int64_t{1} << 24;

std::int64_t mpz_mod_i64(const mpz_class& x, std::int64_t m) {
    mpz_class r;
    mpz_class mm = static_cast<long>(m);
    mpz_mod(r.get_mpz_t(), x.get_mpz_t(), mm.get_mpz_t());
    return r.get_si();
}

Phase phase_of(std::int64_t e, std::int64_t k, std::int64_t order) {
    return Phase(mulmod(e, k, order), order);
}

}  // namespace

// ---------------------------------------------------------------- AddChar

Phase AddChar::at(std::int64_t t, int j) const {
    if (j <= 0) return {};
    std::int64_t m = ipow(p, j);
    return Phase(mulmod(mod_pos(t, m), twist, m), m);
}

Phase AddChar::operator()(const ResidueElem& x) const {
    if (x.is_zero()) {
        if (x.val() < 0) throw PrecisionError("psi: argument below the precision floor");
        return {};
    }
    if (x.val() >= 0) return {};
    int j = -x.val();
    return at(x.unit_mod(j), j);
}

Phase AddChar::operator()(const mpq_class& x) const {
    if (x == 0) return {};
    mpz_class den = x.get_den(), pp = static_cast<long>(p);
    int j = static_cast<int>(mpz_remove(den.get_mpz_t(), den.get_mpz_t(), pp.get_mpz_t()));
    if (j == 0) return {};
    std::int64_t m = ipow(p, j);
    std::int64_t inv = mod_inverse(mpz_mod_i64(den, m), m);
    return at(mulmod(mpz_mod_i64(x.get_num(), m), inv, m), j);
}

// ---------------------------------------------------------------- F side

UnitGroupF::UnitGroupF(std::int64_t p, int level) : p_(p), level_(level) {
    if (level < 1) throw CharacterError("UnitGroupF: level must be >= 1");
    mod_ = ipow(p, level);
    if (mod_ > kMaxTable) throw CharacterError("UnitGroupF: group too large for the discrete log table");
    pL1_ = mod_ / p;
    const std::int64_t p2 = p * p;
    auto fac = prime_factors(p * (p - 1));
    g_ = 2;
    while (true) {
        bool prim = g_ % p != 0;
        for (auto r : fac)
            if (prim && powmod(g_, p * (p - 1) / r, p2) == 1) prim = false;
        if (prim) break;
        ++g_;
    }
    std::int64_t teich = powmod(g_, pL1_, mod_);
    table_a_.assign(static_cast<std::size_t>(mod_), -1);
    table_b_.assign(static_cast<std::size_t>(mod_), -1);
    std::int64_t x = 1;
    for (std::int64_t i = 0; i < p - 1; ++i) {
        std::int64_t y = x;
        for (std::int64_t j = 0; j < pL1_; ++j) {
            table_a_[static_cast<std::size_t>(y)] = static_cast<std::int32_t>(i);
            table_b_[static_cast<std::size_t>(y)] = static_cast<std::int32_t>(j);
            y = mulmod(y, 1 + p, mod_);
        }
        x = mulmod(x, teich, mod_);
    }
}

void UnitGroupF::check(const MultChar& chi) const {
    if (chi.side != Side::F || chi.exps.size() != 2) throw CharacterError("not a character of this F-group");
}

std::pair<std::int64_t, std::int64_t> UnitGroupF::dlog(std::int64_t unit) const {
    auto r = static_cast<std::size_t>(mod_pos(unit, mod_));
    if (table_a_[r] < 0) throw CharacterError("dlog of a non-unit");
    return {table_a_[r], table_b_[r]};
}

Phase UnitGroupF::value(const MultChar& chi, std::int64_t unit) const {
    check(chi);
    auto [a, b] = dlog(unit);
    return phase_of(chi.exps[0], a, p_ - 1) + phase_of(chi.exps[1], b, pL1_);
}

Phase UnitGroupF::value(const MultChar& chi, const ResidueElem& x) const {
    check(chi);
    if (x.is_zero()) throw PrecisionError("character evaluated at zero");
    int c = conductor(chi);
    if (x.prec() < c) throw PrecisionError("unit part known below the conductor");
    int L = std::min(x.prec(), level_);
    return value(chi, x.unit_mod(L)) + chi.at_uniformizer.times(x.val());
}

Phase UnitGroupF::value_rational(const MultChar& chi, const mpq_class& x) const {
    if (x == 0) throw CharacterError("character evaluated at zero");
    int v = vp(x.get_num(), p_) - vp(x.get_den(), p_);
    return value(chi, ResidueElem::from_rational(p_, x, std::max(v, 0) + level_));
}

int UnitGroupF::conductor(const MultChar& chi) const {
    check(chi);
    std::int64_t e1 = mod_pos(chi.exps[0], p_ - 1), e2 = mod_pos(chi.exps[1], pL1_);
    if (e2 == 0) return e1 == 0 ? 0 : 1;
    return level_ - vp(e2, p_);
}

int UnitGroupF::conductor_bruteforce(const MultChar& chi) const {
    check(chi);
    for (int m = 0; m <= level_; ++m) {
        std::int64_t step = m == 0 ? 1 : ipow(p_, m);
        bool trivial = true;
        for (std::int64_t u = (m == 0 ? 1 : 1); u < mod_ && trivial; u += step)
            if (u % p_ != 0 && !value(chi, u).is_one()) trivial = false;
        if (trivial) return m;
    }
    return level_;
}

MultChar UnitGroupF::from_index(std::int64_t idx) const {
    if (idx < 0 || idx >= order()) throw CharacterError("character index out of range");
    return {Side::F, {idx % (p_ - 1), idx / (p_ - 1)}, {}};
}

std::int64_t UnitGroupF::index(const MultChar& chi) const {
    check(chi);
    return mod_pos(chi.exps[0], p_ - 1) + (p_ - 1) * mod_pos(chi.exps[1], pL1_);
}

MultChar UnitGroupF::mul(const MultChar& a, const MultChar& b) const {
    check(a);
    check(b);
    return {Side::F,
            {mod_pos(a.exps[0] + b.exps[0], p_ - 1), mod_pos(a.exps[1] + b.exps[1], pL1_)},
            a.at_uniformizer + b.at_uniformizer};
}

MultChar UnitGroupF::inv(const MultChar& a) const {
    check(a);
    return {Side::F, {mod_pos(-a.exps[0], p_ - 1), mod_pos(-a.exps[1], pL1_)}, -a.at_uniformizer};
}

MultChar UnitGroupF::pow(const MultChar& a, std::int64_t k) const {
    check(a);
    return {Side::F,
            {mulmod(a.exps[0], mod_pos(k, p_ - 1), p_ - 1), mulmod(a.exps[1], mod_pos(k, pL1_), pL1_)},
            a.at_uniformizer.times(k)};
}

std::vector<MultChar> UnitGroupF::enumerate(int n) const {
    if (n < 0 || n > level_) throw CharacterError("enumerate: level beyond the group");
    std::vector<MultChar> out;
    if (n == 0) return {trivial()};
    std::int64_t step = ipow(p_, level_ - n);
    for (std::int64_t idx = 0; idx < order(); ++idx) {
        auto chi = from_index(idx);
        if (chi.exps[1] % step == 0) out.push_back(chi);
    }
    return out;
}

std::vector<MultChar> UnitGroupF::of_level(int k) const {
    std::vector<MultChar> out;
    for (auto& chi : enumerate(k))
        if (conductor(chi) == k) out.push_back(chi);
    return out;
}

AlphaConstant alpha_of(const UnitGroupF& G, const MultChar& chi, std::int64_t psi_twist) {
    int c = G.conductor(chi);
    if (c < 2) throw CharacterError("alpha_of: conductor must be >= 2");
    const auto p = G.prime();
    AddChar psi{p, psi_twist};
    int h = (c + 1) / 2, f = c / 2;
    std::int64_t top = ipow(p, f), ph = ipow(p, h), pc = ipow(p, c);
    for (std::int64_t alpha = 1; alpha < top; ++alpha) {
        if (alpha % p == 0) continue;
        bool ok = true;
        for (std::int64_t x = 0; x < pc && ok; x += ph)
            if (!(G.value(chi, 1 + x) == psi.at(mulmod(alpha, x, pc), c))) ok = false;
        if (ok) return {alpha, f};
    }
    throw CharacterError("alpha_of: no unit satisfies the shell identity");
}

// ---------------------------------------------------------------- E side

UnitGroupE::UnitGroupE(const LocalFieldParams& prm, int level) : prm_(prm), level_(level) {
    if (level < 1) throw CharacterError("UnitGroupE: level must be >= 1");
    const auto p = prm.p;
    if (prm.kind == ExtKind::inert) {
        amod_ = bmod_ = ipow(p, level);
    } else {
        amod_ = ipow(p, (level + 1) / 2);
        bmod_ = ipow(p, level / 2);
    }
    if (amod_ * bmod_ > kMaxTable) throw CharacterError("UnitGroupE: group too large for the discrete log table");

    std::pair<std::int64_t, std::int64_t> tau;
    if (prm.kind == ExtKind::inert) {
        // generator of F_{p^2}^*, then its Teichmueller lift
        const std::int64_t ord = p * p - 1;
        auto fac = prime_factors(ord);
        auto mul_p = [&](std::pair<std::int64_t, std::int64_t> x, std::pair<std::int64_t, std::int64_t> y) {
            return std::make_pair(mod_pos(x.first * y.first + mulmod(x.second * y.second, prm.D, p), p),
                                  mod_pos(x.first * y.second + x.second * y.first, p));
        };
        auto pow_p = [&](std::pair<std::int64_t, std::int64_t> x, std::int64_t e) {
            std::pair<std::int64_t, std::int64_t> r{1, 0};
            while (e > 0) {
                if (e & 1) r = mul_p(r, x);
                x = mul_p(x, x);
                e >>= 1;
            }
            return r;
        };
        std::pair<std::int64_t, std::int64_t> gen{-1, -1};
        for (std::int64_t b = 1; b < p && gen.first < 0; ++b)
            for (std::int64_t a = 0; a < p && gen.first < 0; ++a) {
                bool prim = true;
                for (auto r : fac)
                    if (pow_p({a, b}, ord / r) == std::make_pair(std::int64_t{1}, std::int64_t{0})) prim = false;
                if (prim) gen = {a, b};
            }
        tau = gen;
        for (int i = 0; i < 2 * (level - 1); ++i) {
            auto t = tau;
            for (int k = 1; k < p; ++k) t = mulE(t, tau);
            tau = t;
        }
        orders_ = {ord, ipow(p, level - 1), ipow(p, level - 1)};
        gens_ = {tau, reduce(1 + p, 0), reduce(1, p)};
    } else {
        tau = reduce(powmod(UnitGroupF(p, 2).primitive_root(), amod_, amod_), 0);
        orders_ = {p - 1, ipow(p, level / 2), ipow(p, (level + 1) / 2 - 1)};
        gens_ = {tau, reduce(1, 1), reduce(1 + p, 0)};
    }
    base_teich_ = powmod(UnitGroupF(p, 2).primitive_root(), amod_, amod_);
    den_ = 1;
    for (auto o : orders_) den_ = std::lcm(den_, o);

    flat_.assign(static_cast<std::size_t>(amod_ * bmod_), -1);
    std::int64_t n = orders_[0] * orders_[1] * orders_[2];
    units_.resize(static_cast<std::size_t>(n));
    std::pair<std::int64_t, std::int64_t> x{1 % amod_, 0};
    std::int64_t flat = 0;
    for (std::int64_t i = 0; i < orders_[0]; ++i) {
        auto y = x;
        for (std::int64_t j = 0; j < orders_[1]; ++j) {
            auto z = y;
            for (std::int64_t k = 0; k < orders_[2]; ++k) {
                auto key = static_cast<std::size_t>(z.first * bmod_ + z.second);
                if (flat_[key] >= 0) throw std::logic_error("UnitGroupE: generators are dependent");
                flat_[key] = static_cast<std::int32_t>(flat);
                units_[static_cast<std::size_t>(flat)] = z;
                ++flat;
                z = mulE(z, gens_[2]);
            }
            y = mulE(y, gens_[1]);
        }
        x = mulE(x, gens_[0]);
    }
}

std::pair<std::int64_t, std::int64_t> UnitGroupE::reduce(std::int64_t a, std::int64_t b) const {
    return {mod_pos(a, amod_), bmod_ == 1 ? 0 : mod_pos(b, bmod_)};
}

std::pair<std::int64_t, std::int64_t> UnitGroupE::mulE(std::pair<std::int64_t, std::int64_t> x,
                                                       std::pair<std::int64_t, std::int64_t> y) const {
    // work mod a common power large enough for both coordinates
    std::int64_t M = amod_ * prm_.p;
    i128 a = static_cast<i128>(x.first) * y.first + static_cast<i128>(x.second) * y.second % M * prm_.D;
    i128 b = static_cast<i128>(x.first) * y.second + static_cast<i128>(x.second) * y.first;
    return reduce(static_cast<std::int64_t>(a % M), static_cast<std::int64_t>(b % M));
}

void UnitGroupE::check(const MultChar& chi) const {
    if (chi.side != Side::E || chi.exps.size() != 3) throw CharacterError("not a character of this E-group");
}

bool UnitGroupE::is_unit(std::int64_t a, std::int64_t b) const {
    if (prm_.kind == ExtKind::inert) return mod_pos(a, prm_.p) != 0 || mod_pos(b, prm_.p) != 0;
    return mod_pos(a, prm_.p) != 0;
}

std::int64_t UnitGroupE::dlog_flat(std::int64_t a, std::int64_t b) const {
    auto [x, y] = reduce(a, b);
    auto f = flat_[static_cast<std::size_t>(x * bmod_ + y)];
    if (f < 0) throw CharacterError("dlog of a non-unit in E");
    return f;
}

std::vector<std::int64_t> UnitGroupE::dlog(std::int64_t a, std::int64_t b) const {
    std::int64_t f = dlog_flat(a, b);
    std::int64_t k = f % orders_[2];
    f /= orders_[2];
    return {f / orders_[1], f % orders_[1], k};
}

Phase UnitGroupE::unit_value(const MultChar& chi, std::int64_t flat) const {
    check(chi);
    std::int64_t k = flat % orders_[2];
    flat /= orders_[2];
    std::int64_t j = flat % orders_[1], i = flat / orders_[1];
    return phase_of(chi.exps[0], i, orders_[0]) + phase_of(chi.exps[1], j, orders_[1]) +
           phase_of(chi.exps[2], k, orders_[2]);
}

std::pair<std::pair<mpz_class, mpz_class>, int> UnitGroupE::unit_part(const mpz_class& a, const mpz_class& b) const {
    const auto p = prm_.p;
    if (a == 0 && b == 0) throw CharacterError("E-character evaluated at zero");
    constexpr int inf = std::numeric_limits<int>::max() / 4;
    int va = a == 0 ? inf : vp(a, p), vb = b == 0 ? inf : vp(b, p);
    mpz_class pp = static_cast<long>(p);
    auto div_p = [&](const mpz_class& x, int t) {
        mpz_class r;
        mpz_class pt;
        mpz_pow_ui(pt.get_mpz_t(), pp.get_mpz_t(), static_cast<unsigned long>(t));
        mpz_divexact(r.get_mpz_t(), x.get_mpz_t(), pt.get_mpz_t());
        return r;
    };
    if (prm_.kind == ExtKind::inert) {
        int v = std::min(va, vb);
        return {{div_p(a, v), div_p(b, v)}, v};
    }
    // divide by xi^t with an inverse taken mod a modulus beyond both coordinate moduli
    std::int64_t M = amod_ * p;
    auto xi_inv = [&](int t) { return mpz_class(static_cast<long>(mod_inverse(powmod(prm_.xi, t, M), M))); };
    int vE = std::min(va == inf ? inf : 2 * va, vb == inf ? inf : 2 * vb + 1);
    if (vE % 2 == 0) {
        int t = vE / 2;
        auto s = xi_inv(t);
        return {{div_p(a, t) * s, div_p(b, t) * s}, vE};
    }
    int t = vE / 2;
    return {{div_p(b, t) * xi_inv(t), div_p(a, t + 1) * xi_inv(t + 1)}, vE};
}

Phase UnitGroupE::value(const MultChar& chi, const mpz_class& a, const mpz_class& b) const {
    check(chi);
    auto [u, v] = unit_part(a, b);
    std::int64_t ua = mpz_mod_i64(u.first, amod_), ub = mpz_mod_i64(u.second, std::max<std::int64_t>(bmod_, 1));
    return unit_value(chi, dlog_flat(ua, ub)) + chi.at_uniformizer.times(v);
}

Phase UnitGroupE::value(const MultChar& chi, std::int64_t a, std::int64_t b) const {
    return value(chi, mpz_class(static_cast<long>(a)), mpz_class(static_cast<long>(b)));
}

std::vector<std::pair<std::int64_t, std::int64_t>> UnitGroupE::one_unit_generators(int m) const {
    if (m == 0) return gens_;
    const auto p = prm_.p;
    if (prm_.kind == ExtKind::inert) {
        std::int64_t pm = m > level_ ? 0 : ipow(p, m);
        return {reduce(1 + pm, 0), reduce(1, pm)};
    }
    auto Dt = [&](int t) { return powmod(prm_.D, t, amod_ * p); };
    if (m % 2 == 0) {
        int t = m / 2;
        return {reduce(1 + Dt(t), 0), reduce(1, Dt(t))};
    }
    int t = m / 2;
    return {reduce(1, Dt(t)), reduce(1 + Dt(t + 1), 0)};
}

int UnitGroupE::conductor(const MultChar& chi) const {
    check(chi);
    for (int m = 0; m < level_; ++m) {
        bool trivial = true;
        for (auto [a, b] : one_unit_generators(m))
            if (!unit_value(chi, dlog_flat(a, b)).is_one()) trivial = false;
        if (trivial) return m;
    }
    return level_;
}

int UnitGroupE::conductor_bruteforce(const MultChar& chi) const {
    check(chi);
    const auto p = prm_.p;
    for (int m = 0; m <= level_; ++m) {
        std::int64_t ma, mb;
        if (prm_.kind == ExtKind::inert) {
            ma = mb = ipow(p, m);
        } else {
            ma = ipow(p, (m + 1) / 2);
            mb = ipow(p, m / 2);
        }
        bool trivial = true;
        for (std::size_t f = 0; f < units_.size() && trivial; ++f) {
            auto [a, b] = units_[f];
            if (m > 0 && (mod_pos(a - 1, ma) != 0 || b % mb != 0)) continue;
            if (!unit_value(chi, static_cast<std::int64_t>(f)).is_one()) trivial = false;
        }
        if (trivial) return m;
    }
    return level_;
}

bool UnitGroupE::trivial_on_base_units(const MultChar& chi) const {
    check(chi);
    return unit_value(chi, dlog_flat(base_teich_, 0)).is_one() &&
           unit_value(chi, dlog_flat(1 + prm_.p, 0)).is_one();
}

bool UnitGroupE::galois_fixed(const MultChar& chi) const {
    check(chi);
    for (auto [a, b] : gens_)
        if (!(unit_value(chi, dlog_flat(a, -b)) == unit_value(chi, dlog_flat(a, b)))) return false;
    return true;
}

MultChar UnitGroupE::trivial() const { return {Side::E, {0, 0, 0}, {}}; }

MultChar UnitGroupE::mul(const MultChar& a, const MultChar& b) const {
    check(a);
    check(b);
    MultChar r{Side::E, {0, 0, 0}, a.at_uniformizer + b.at_uniformizer};
    for (int i = 0; i < 3; ++i) r.exps[i] = mod_pos(a.exps[i] + b.exps[i], orders_[i]);
    return r;
}

MultChar UnitGroupE::inv(const MultChar& a) const {
    check(a);
    MultChar r{Side::E, {0, 0, 0}, -a.at_uniformizer};
    for (int i = 0; i < 3; ++i) r.exps[i] = mod_pos(-a.exps[i], orders_[i]);
    return r;
}

MultChar UnitGroupE::galois_conjugate(const MultChar& a) const {
    check(a);
    MultChar r{Side::E, {0, 0, 0}, a.at_uniformizer};
    for (int i = 0; i < 3; ++i) {
        auto ph = unit_value(a, dlog_flat(gens_[i].first, -gens_[i].second));
        r.exps[i] = ph.num * (orders_[i] / ph.den);
    }
    // sigma(sqrt D) = -sqrt D: the value on the uniformizer picks up chi(-1) when ramified
    if (prm_.kind == ExtKind::ramified) r.at_uniformizer = a.at_uniformizer + unit_value(a, dlog_flat(-1, 0));
    return r;
}

MultChar UnitGroupE::with_uniformizer(const MultChar& a, const Phase& ph) const {
    check(a);
    MultChar r = a;
    r.at_uniformizer = ph;
    return r;
}

std::vector<MultChar> UnitGroupE::enumerate(bool trivial_on_base) const {
    std::vector<MultChar> out;
    for (std::int64_t i = 0; i < orders_[0]; ++i)
        for (std::int64_t j = 0; j < orders_[1]; ++j)
            for (std::int64_t k = 0; k < orders_[2]; ++k) {
                MultChar chi{Side::E, {i, j, k}, {}};
                if (!trivial_on_base || trivial_on_base_units(chi)) out.push_back(chi);
            }
    return out;
}

std::vector<MultChar> UnitGroupE::of_level(int k, bool trivial_on_base) const {
    std::vector<MultChar> out;
    for (auto& chi : enumerate(trivial_on_base))
        if (conductor(chi) == k) out.push_back(chi);
    return out;
}

MultChar UnitGroupE::norm_lift(const UnitGroupF& G, const MultChar& chi) const {
    int c = G.conductor(chi);
    int e = prm_.e();
    int cE = c == 0 ? 0 : e * c - e + 1;
    if (cE > level_) throw CharacterError("norm_lift: lifted conductor exceeds the E-group level");
    std::int64_t M = G.modulus();
    MultChar r{Side::E, {0, 0, 0}, {}};
    for (int i = 0; i < 3; ++i) {
        auto [a, b] = gens_[i];
        std::int64_t N = mod_pos(mulmod(a, a, M) - mulmod(mulmod(b, b, M), mod_pos(prm_.D, M), M), M);
        auto ph = G.value(chi, N);
        r.exps[i] = ph.num * (orders_[i] / ph.den);
    }
    if (prm_.kind == ExtKind::inert)
        r.at_uniformizer = chi.at_uniformizer.times(2);
    else
        r.at_uniformizer = chi.at_uniformizer + G.value(chi, mod_pos(-prm_.xi, M));
    return r;
}

Phase psi_E(const LocalFieldParams& prm, std::int64_t psi_twist, std::int64_t a, std::int64_t b, int j) {
    AddChar psi{prm.p, psi_twist};
    if (j <= 0) {
        if (prm.kind == ExtKind::inert || j == 0) return {};
    }
    if (prm.kind == ExtKind::inert) return psi.at(2 * mod_pos(a, ipow(prm.p, j)), j);
    int t = j / 2;
    if (t == 0) return {};
    std::int64_t m = ipow(prm.p, t);
    std::int64_t xi_inv = mod_inverse(powmod(prm.xi, t, m), m);
    std::int64_t coord = j % 2 == 0 ? a : b;
    return psi.at(mulmod(2 * mod_pos(coord, m), xi_inv, m), t);
}

ExtAlpha alpha_of(const UnitGroupE& G, const MultChar& theta, std::int64_t psi_twist) {
    const auto& prm = G.params();
    int c = G.conductor(theta);
    if (c < 2) throw CharacterError("alpha_of: conductor must be >= 2");
    const auto p = prm.p;
    int e = prm.e(), h = (c + 1) / 2, f = c / 2;
    std::int64_t M = ipow(p, c + 3);
    // shell representatives x with v_E(x) >= h, modulo p_E^c
    auto coord_mods = [&](int m) -> std::pair<std::int64_t, std::int64_t> {
        if (prm.kind == ExtKind::inert) return {ipow(p, m), ipow(p, m)};
        return {ipow(p, (m + 1) / 2), ipow(p, m / 2)};
    };
    auto [sa, sb] = coord_mods(h);
    auto [ta, tb] = coord_mods(c);
    auto [fa, fb] = coord_mods(f);
    std::vector<std::pair<std::int64_t, std::int64_t>> shell;
    for (std::int64_t a = 0; a < ta; a += sa)
        for (std::int64_t b = 0; b < std::max<std::int64_t>(tb, 1); b += std::max<std::int64_t>(sb, 1))
            shell.push_back({a, b});
    for (std::int64_t a = 0; a < fa; ++a)
        for (std::int64_t b = 0; b < std::max<std::int64_t>(fb, 1); ++b) {
            if (!G.is_unit(a, b)) continue;
            bool ok = true;
            for (auto [xa, xb] : shell) {
                std::int64_t ya = mod_pos(mulmod(a, xa, M) + mulmod(mulmod(b, xb, M), mod_pos(prm.D, M), M), M);
                std::int64_t yb = mod_pos(mulmod(a, xb, M) + mulmod(b, xa, M), M);
                if (!(G.unit_value(theta, G.dlog_flat(1 + xa, xb)) == psi_E(prm, psi_twist, ya, yb, c + e - 1))) {
                    ok = false;
                    break;
                }
            }
            if (ok) return {a, b, f};
        }
    throw CharacterError("alpha_of: no unit satisfies the shell identity");
}

// ---------------------------------------------------------------- Gauss sums

template <class Field>
typename Field::Value gauss_sum_at_level(const Field& K, const UnitGroupF& G, const MultChar& chi,
                                         const ResidueElem& m, int L, std::int64_t psi_twist) {
    const auto p = G.prime();
    int c = G.conductor(chi);
    int j = 0;
    if (!m.is_zero() && m.val() < 0) j = -m.val();
    if (m.is_zero() && m.val() < 0) throw PrecisionError("gauss_sum: argument below the precision floor");
    if (L < std::max({c, j, 1})) throw PrecisionError("gauss_sum: level below max(c, -v(m), 1)");
    if (L > G.level()) throw PrecisionError("gauss_sum: level beyond the character group");
    AddChar psi{p, psi_twist};
    std::int64_t top = ipow(p, L);
    std::int64_t mu = j > 0 ? m.unit_mod(j) : 0;
    std::int64_t pj = j > 0 ? ipow(p, j) : 1;
    auto acc = K.accumulator();
    for (std::int64_t u = 1; u < top; ++u) {
        if (u % p == 0) continue;
        Phase ph = G.value(chi, u);
        if (j > 0) ph = ph + psi.at(mulmod(mu, u % pj, pj), j);
        acc.add(ph);
    }
    return acc.value(mpz_class(static_cast<long>(top / p * (p - 1))));
}

template <class Field>
typename Field::Value gauss_sum(const Field& K, const UnitGroupF& G, const MultChar& chi, const ResidueElem& m,
                                std::int64_t psi_twist) {
    int j = (!m.is_zero() && m.val() < 0) ? -m.val() : 0;
    return gauss_sum_at_level(K, G, chi, m, std::max({G.conductor(chi), j, 1}), psi_twist);
}

template <class Field>
typename Field::Value GaussIntegrator<Field>::shell(int j, const MultChar& chi) const {
    if (j <= 0) return G_->conductor(chi) == 0 ? K_.one() : K_.zero();
    auto key = std::make_pair(j, G_->index(chi));
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    auto m = ResidueElem::make(G_->prime(), -j, 1, std::max(j, 1));
    auto v = gauss_sum_at_level(K_, *G_, chi, m, std::max({j, G_->conductor(chi), 1}), twist_);
    std::lock_guard<std::mutex> lock(mu_);
    cache_.emplace(key, v);
    return v;
}

template <class Field>
typename Field::Value GaussIntegrator<Field>::operator()(const ResidueElem& t, const MultChar& chi) const {
    int c = G_->conductor(chi);
    if (t.is_zero()) {
        if (t.val() < 0) throw PrecisionError("Gauss integral: argument below the precision floor");
        return c == 0 ? K_.one() : K_.zero();
    }
    if (t.val() >= 0) return c == 0 ? K_.one() : K_.zero();
    int j = -t.val();
    if ((j >= 2 && c != j) || (j == 1 && c > 1)) return K_.zero();
    if (t.prec() < std::max(c, 1)) throw PrecisionError("Gauss integral: unit known below the conductor");
    Phase tw = G_->value(chi, t.unit_mod(std::min(t.prec(), G_->level())));
    return K_.times_root(shell(j, chi), -tw);
}

template <class Field>
StationaryPhase<Field> stationary_phase_shift(const Field& K, const UnitGroupF& G, const MultChar& chi,
                                              const MultChar& nu, std::int64_t psi_twist) {
    int c = G.conductor(chi);
    if (c < 2 || c < 2 * G.conductor(nu)) throw CharacterError("stationary_phase_shift: needs c(chi) >= 2 c(nu)");
    auto alpha = alpha_of(G, chi, psi_twist);
    auto m = ResidueElem::make(G.prime(), -c, 1, c);
    StationaryPhase<Field> r;
    r.lhs = gauss_sum_at_level(K, G, G.mul(chi, nu), m, c, psi_twist);
    r.factor = G.value(nu, mod_pos(-alpha.alpha, G.modulus())) - nu.at_uniformizer.times(c);
    r.rhs = K.times_root(gauss_sum_at_level(K, G, chi, m, c, psi_twist), r.factor);
    r.holds = is_zero(r.lhs - r.rhs);
    return r;
}

#define TORPER_INSTANTIATE(F)                                                                                    \
    template typename F::Value gauss_sum_at_level<F>(const F&, const UnitGroupF&, const MultChar&,              \
                                                     const ResidueElem&, int, std::int64_t);                     \
    template typename F::Value gauss_sum<F>(const F&, const UnitGroupF&, const MultChar&, const ResidueElem&,    \
                                            std::int64_t);                                                        \
    template class GaussIntegrator<F>;                                                                           \
    template StationaryPhase<F> stationary_phase_shift<F>(const F&, const UnitGroupF&, const MultChar&,          \
                                                          const MultChar&, std::int64_t);

TORPER_INSTANTIATE(CycField)
TORPER_INSTANTIATE(FloatField)

#undef TORPER_INSTANTIATE

}  // namespace torper
