#include "torper/principal_series.hpp"

#include <algorithm>

namespace torper {

PsDatum make_ps(std::int64_t p, const MultChar& mu, int n) {
    UnitGroupF G(p, n);
    if (n < 1) throw CharacterError("make_ps: mu must be ramified");
    if (G.conductor(mu) != n) throw LevelMismatch("make_ps: mu's conductor differs from n");
    if (!mu.at_uniformizer.is_one()) throw CharacterError("make_ps: mu must be 1 on the uniformizer");
    return {p, n, mu};
}

std::uint64_t ps_field_modulus(std::int64_t p, int n) {
    auto up = static_cast<std::uint64_t>(p);
    return (up * up - 1) * static_cast<std::uint64_t>(ipow(p, n));
}

template <class Field>
PsModel<Field>::PsModel(PsDatum ps, Field K, std::int64_t psi_twist)
    : ps_(std::move(ps)),
      K_(std::move(K)),
      twist_(psi_twist),
      G_(std::make_shared<const UnitGroupF>(ps_.p, ps_.n)),
      gauss_(K_, G_, psi_twist) {
    gn_ = gauss_.shell(ps_.n, ps_.mu);
    // |gn|^2 = q / ((q-1)^2 q^{n-1}), so the norm ((q-1)/q)^2 |gn|^2 q/(q-1) is
    norm_ = mpq_class(1) / (mpq_class(ps_.p - 1) * pow_q(ps_.p, ps_.n - 1));
}

template <class Field>
typename PsModel<Field>::Value PsModel<Field>::gint(const mpq_class& t, const MultChar& chi) const {
    if (t == 0 || val_q(t, ps_.p) >= 0) return G_->conductor(chi) == 0 ? K_.one() : K_.zero();
    return gauss_(ResidueElem::from_rational(ps_.p, t, G_->level() + 2), chi);
}

template <class Field>
QValue<Field> PsModel<Field>::whittaker(int i, const mpq_class& alpha) const {
    const auto p = ps_.p;
    const int n = ps_.n;
    if (i < 0 || i > n) throw std::invalid_argument("whittaker: i outside [0, n]");
    const int va = val_q(alpha, p);
    if (i == n) {
        if (va < 0) return {K_.zero(), 0};
        return {gn_ * K_.rational(mpq_class(p - 1, p)), -va};
    }
    // below v = i - n (v = -n for i = 0) the additive character oscillates on
    // classes where mu is constant, so the u-integral cancels
    if (va < i - n) return {K_.zero(), 0};
    return whittaker_integral(i, alpha);
}

template <class Field>
QValue<Field> PsModel<Field>::whittaker_integral(int i, const mpq_class& alpha) const {
    const auto p = ps_.p;
    const int n = ps_.n;
    const int va = val_q(alpha, p);
    const int L = std::max({1, i, 2 * i - n - va});
    const std::int64_t top = ipow(p, L);
    AddChar psi{p, twist_};
    const mpq_class base = alpha * pow_q(p, -i), step = pow_q(p, n - i);
    auto acc = K_.accumulator();
    for (std::int64_t w = 0; w < top; ++w) {
        mpq_class t = 1 - step * w;
        if (t == 0 || val_q(t, p) != 0) continue;  // only i = n reaches non-units
        mpq_class y = base * t;
        acc.add(G_->value_rational(ps_.mu, y) + psi(y));
    }
    auto v = acc.value(mpz_class(static_cast<long>(top)));
    return {v * K_.rational(pow_q(p, i - n)), -va};
}

template <class Field>
int PsModel<Field>::default_extra(const mpq_class& alpha, const mpq_class& m) const {
    int depth = 0;
    depth = std::max(depth, -val_q(alpha, ps_.p));
    if (m != 0) depth = std::max(depth, -val_q(m, ps_.p));
    return ps_.n + 2 + depth;
}

template <class Field>
QValue<Field> PsModel<Field>::raw_matrix_coefficient(const mpq_class& alpha, const mpq_class& m, int i,
                                                     int extra_shells) const {
    const auto p = ps_.p;
    const int n = ps_.n;
    const mpq_class q = static_cast<long>(p);
    i = std::clamp(i, 0, n);
    const int va = val_q(alpha, p);
    const auto conj_w = conj(gn_) * K_.rational(mpq_class(p - 1, p));  // conj W^{(n)} on v(x) = 0
    if (i == n) {
        // psi(m x) integrates to gamma(v(m) + v) over each shell; the tail is geometric
        const int v0 = std::max(0, -va);
        mpq_class sum = 0;
        if (m == 0) {
            sum = pow_q(p, -v0) * q / (q - 1);
        } else {
            const int T = -val_q(m, p);
            const int start = std::max(v0, T);
            sum = pow_q(p, -start) * q / (q - 1);
            if (T - 1 >= v0) sum -= pow_q(p, -(T - 1)) / (q - 1);
        }
        auto w = gn_ * K_.rational(mpq_class(p - 1, p));
        return {w * conj_w * K_.rational(sum), -va};
    }
    // shell v: q^{-v(alpha)/2} q^{-v-n+i} p^{-L} sum_w mu(alpha_u (1 - p^{n-i} w)) gint(p^v c_w, mu)
    // with c_w = m + alpha p^{-i} (1 - p^{n-i} w)
    const int v_lo = std::max(0, -n - va);
    const int extra = extra_shells >= 0 ? extra_shells : default_extra(alpha, m);
    const mpq_class au = unit_part_q(alpha, p);
    auto total = K_.zero();
    for (int v = v_lo; v <= v_lo + extra; ++v) {
        if (i > 0 && va + v != i - n) continue;  // W^{(i)} support
        const int L = std::max({1, i, 2 * i - n - va - v});
        const std::int64_t top = ipow(p, L);
        auto shell = K_.zero();
        for (std::int64_t w = 0; w < top; ++w) {
            mpq_class t = 1 - pow_q(p, n - i) * w;
            mpq_class c = m + alpha * pow_q(p, -i) * t;
            auto g = gint(c * pow_q(p, v), ps_.mu);
            if (is_zero(g)) continue;
            shell += K_.times_root(g, G_->value_rational(ps_.mu, au * t));
        }
        total += shell * K_.rational(pow_q(p, -v - n + i) / mpq_class(static_cast<long>(top)));
    }
    return {total * conj_w, -va};
}

template <class Field>
QValue<Field> PsModel<Field>::matrix_coefficient(const mpq_class& alpha, const mpq_class& m, int i,
                                                 int extra_shells) const {
    auto r = raw_matrix_coefficient(alpha, m, i, extra_shells);
    r.coeff = r.coeff * K_.rational(1 / norm_);
    return r;
}

template <class Field>
QValue<Field> PsModel<Field>::at_torus(const TorusPoint& pt) const {
    Phase central = G_->value_rational(ps_.mu, pt.scalar);
    if (pt.kind == TorusDecomposition::Case::identity) return {K_.root(central), 0};
    if (pt.kind == TorusDecomposition::Case::upper) {
        // kappa = diag(1, u^-1) acts through mu(d) = mu(u)^-1
        auto r = matrix_coefficient(pt.x, pt.m, std::min(pt.i, ps_.n));
        r.coeff = K_.times_root(r.coeff, central - G_->value_rational(ps_.mu, pt.kappa_unit));
        return r;
    }
    auto r = matrix_coefficient(pt.x, pt.m, 0);
    r.coeff = K_.times_root(r.coeff, central);
    return r;
}

template class PsModel<CycField>;
template class PsModel<FloatField>;

}  // namespace torper
