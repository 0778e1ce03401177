#include "torper/supercuspidal.hpp"

#include <algorithm>

namespace torper {

namespace {

int qval(const mpq_class& x, std::int64_t p) { return val_q(x, p); }
mpq_class ppow(std::int64_t p, int k) { return pow_q(p, k); }
mpq_class unit_of(const mpq_class& x, std::int64_t p) { return unit_part_q(x, p); }

template <class Value>
bool same(const Value& a, const Value& b) {
    return is_zero(a - b);
}

}  // namespace

ScDatum build_sc(const UnitGroupE& G, const MultChar& theta) {
    const auto& prm = G.params();
    int c = G.conductor(theta);
    if (c != G.level()) throw LevelMismatch("build_sc: theta's conductor differs from the group level");
    if (c == 0) throw LevelMismatch("build_sc: theta is unramified");
    if (!G.trivial_on_base_units(theta)) throw NontrivialCentral("build_sc: theta is nontrivial on O_F^*");
    if (G.galois_fixed(theta)) throw GaloisFixed("build_sc: theta factors through the norm");
    if (!theta.at_uniformizer.is_one()) throw NontrivialCentral("build_sc: theta must be 1 on the uniformizer");
    ScDatum sc;
    sc.ext = prm;
    sc.theta = theta;
    sc.c_theta = c;
    if (prm.kind == ExtKind::inert) {
        sc.c_pi = 2 * c;
    } else {
        if (c % 2 != 0) throw LevelMismatch("build_sc: ramified theta needs even level");
        sc.c_pi = c + 1;
    }
    if (c >= 2) sc.alpha_theta = alpha_of(G, theta);
    return sc;
}

std::vector<MultChar> admissible_thetas(const UnitGroupE& G) {
    std::vector<MultChar> out;
    for (auto& th : G.of_level(G.level(), true))
        if (!G.galois_fixed(th)) out.push_back(th);
    return out;
}

int epsilon_range(const ScDatum& sc) {
    int e = sc.ext.e();
    return (sc.c_theta + e - 1) / e;
}

std::uint64_t sc_field_modulus(const ScDatum& sc) {
    auto p = static_cast<std::uint64_t>(sc.ext.p);
    return (p * p - 1) * static_cast<std::uint64_t>(ipow(sc.ext.p, sc.c_pi / 2));
}

// ---------------------------------------------------------------- ScModel

template <class Field>
ScModel<Field>::ScModel(ScDatum sc, Field K, std::int64_t psi_twist)
    : sc_(std::move(sc)),
      K_(std::move(K)),
      twist_(psi_twist),
      G_(std::make_shared<const UnitGroupF>(sc_.ext.p, sc_.c_pi / 2)),
      E_(std::make_shared<const UnitGroupE>(sc_.ext, sc_.c_theta)),
      gauss_(K_, G_, psi_twist) {}

template <class Field>
bool ScModel<Field>::in_range(const MultChar& nu) const {
    int c = G_->conductor(nu);
    int e = sc_.ext.e();
    return c == 0 || e * c - e + 1 <= sc_.c_theta;
}

template <class Field>
typename ScModel<Field>::Value ScModel<Field>::epsilon(const MultChar& eta) const {
    if (!in_range(eta))
        throw EpsilonOutOfRange("epsilon: twist beyond the epsilon formula", G_->conductor(eta));
    const auto& prm = sc_.ext;
    const int n = sc_.c_theta, e = prm.e();
    MultChar chi = E_->mul(sc_.theta, E_->norm_lift(*G_, eta));
    const auto& units = E_->units();
    std::vector<Phase> inv_chi(units.size());
    for (std::size_t k = 0; k < units.size(); ++k) inv_chi[k] = -E_->unit_value(chi, static_cast<std::int64_t>(k));
    auto acc = K_.accumulator();
    for (int j = 0; j <= n + e - 1; ++j) {
        Phase at_pi = chi.at_uniformizer.times(j);
        for (std::size_t k = 0; k < units.size(); ++k)
            acc.add(psi_E(prm, twist_, units[k].first, units[k].second, j) + inv_chi[k] + at_pi);
    }
    const std::int64_t p = prm.p;
    mpq_class scale;
    if (prm.kind == ExtKind::inert)
        scale = mpq_class(p * p - 1, p * p) * ppow(p, n) * ((n % 2) ? -1 : 1);
    else
        scale = mpq_class(p - 1, p) * ppow(p, n / 2);
    return acc.value(mpz_class(static_cast<long>(units.size()))) * K_.rational(scale);
}

template <class Field>
typename ScModel<Field>::Value ScModel<Field>::C(const MultChar& nu) const {
    auto key = G_->index(nu);
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    if (!in_range(nu)) throw EpsilonOutOfRange("C: twist beyond the epsilon formula", G_->conductor(nu));
    auto v = epsilon(G_->inv(nu));
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.emplace(key, v).first->second;
}

template <class Field>
int ScModel<Field>::n_nu(const MultChar& nu) const {
    return -std::max(sc_.c_pi, 2 * G_->conductor(nu));
}

template <class Field>
typename ScModel<Field>::Value ScModel<Field>::c_quotient(const MultChar& nu, const MultChar& eta) const {
    const auto& prm = sc_.ext;
    const int e = prm.e(), c = sc_.c_theta;
    int cn = G_->conductor(nu), ce = G_->conductor(eta);
    if (cn > 0 && 2 * (e * cn - e + 1) > c)
        throw EpsilonOutOfRange("c_quotient: nu beyond half the range", cn);
    if (!in_range(eta)) throw EpsilonOutOfRange("c_quotient: eta beyond the range", ce);
    if (cn == 0) return K_.one();
    // cn >= 1 forces c >= 2, so alpha_theta exists
    const std::int64_t p = prm.p;
    const auto& at = *sc_.alpha_theta;
    mpz_class za = at.a, zb = at.b;
    if (ce >= 2) {
        auto ae = alpha_of(*G_, eta, twist_);
        if (prm.kind == ExtKind::inert) {
            za += mpz_class(static_cast<long>(ae.alpha)) * mpz_class(static_cast<long>(ipow(p, c - ce)));
        } else {
            int k = c / 2;
            mpz_class t = static_cast<long>(ae.alpha);
            for (int r = 0; r < k; ++r) t *= static_cast<long>(prm.xi);
            // ce <= k in range, so p^{k - ce} is integral
            zb += t * mpz_class(static_cast<long>(ipow(p, k - ce)));
        }
    }
    mpq_class N = mpq_class(za * za) - mpq_class(zb * zb) * static_cast<long>(prm.D);
    Phase ph = G_->value_rational(nu, N);
    if (prm.kind == ExtKind::ramified) ph = ph - G_->value_rational(nu, mpq_class(-prm.xi)).times(c + e - 1);
    return K_.root(ph);
}

template <class Field>
bool ScModel<Field>::c_quotient_holds(const MultChar& nu, const MultChar& eta) const {
    auto eta_inv = G_->inv(eta);
    return same(C(G_->mul(nu, eta_inv)), c_quotient(nu, eta) * C(eta_inv));
}

template <class Field>
const typename ScModel<Field>::Value* ScModel<Field>::kernel(const KernelKey& key,
                                                             const std::function<std::optional<Value>()>& make) const {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = kernels_.find(key);
        if (it != kernels_.end()) return it->second ? &*it->second : nullptr;
    }
    auto v = make();
    std::lock_guard<std::mutex> lock(mu_);
    const auto& slot = kernels_.emplace(key, std::move(v)).first->second;
    return slot ? &*slot : nullptr;
}

template <class Field>
typename ScModel<Field>::Value ScModel<Field>::gint(const mpq_class& t, const MultChar& chi) const {
    if (t == 0 || qval(t, sc_.ext.p) >= 0) return G_->conductor(chi) == 0 ? K_.one() : K_.zero();
    return gauss_(ResidueElem::from_rational(sc_.ext.p, t, G_->level() + 2), chi);
}

// ---------------------------------------------------------------- Kirillov model

template <class Field>
KirillovVector<Field> basis_vector(const ScModel<Field>& model, const MultChar& nu, int shell) {
    return {{{nu, shell, 0, model.field().one()}}};
}

template <class Field>
KirillovVector<Field> fourier_expand(const ScModel<Field>& model, const KirillovVector<Field>& v) {
    const auto& G = model.group();
    const auto p = G.prime();
    KirillovVector<Field> out;
    for (const auto& term : v.terms) {
        int j = term.phase == 0 ? 0 : -(qval(term.phase, p) + term.shell);
        if (j <= 0) {
            out.terms.push_back({term.nu, term.shell, 0, term.coeff});
            continue;
        }
        // psi(t x) nu(u) = sum_mu gint(t p^n, nu mu^-1) mu(u); only c(nu mu^-1) = j survives (<= 1 when j = 1)
        if (j > G.level()) throw EpsilonOutOfRange("fourier_expand: phase deeper than the character group", j);
        mpq_class t = term.phase * ppow(p, term.shell);
        for (const auto& chi : G.enumerate(j)) {
            if (j >= 2 && G.conductor(chi) != j) continue;
            auto g = model.gint(t, chi);
            if (is_zero(g)) continue;
            out.terms.push_back({G.mul(term.nu, G.inv(chi)), term.shell, 0, term.coeff * g});
        }
    }
    return out;
}

template <class Field>
KirillovVector<Field> kirillov_apply(const ScModel<Field>& model, const KirillovOp& op, const KirillovVector<Field>& v) {
    const auto& G = model.group();
    const auto p = G.prime();
    const auto& K = model.field();
    if (const auto* d = std::get_if<DiagOp>(&op)) {
        mpq_class a = d->a1 / d->a2;
        int va = qval(a, p);
        KirillovVector<Field> out;
        for (const auto& term : v.terms) {
            Phase ph = G.value_rational(term.nu, unit_of(a, p));
            out.terms.push_back({term.nu, term.shell - va, term.phase * a, K.times_root(term.coeff, ph)});
        }
        return out;
    }
    if (const auto* u = std::get_if<UnipOp>(&op)) {
        KirillovVector<Field> out = v;
        for (auto& term : out.terms) term.phase += u->m;
        return out;
    }
    KirillovVector<Field> out;
    for (const auto& term : fourier_expand(model, v).terms) {
        if (!model.in_range(term.nu))
            throw EpsilonOutOfRange("omega: basis character beyond the epsilon range", G.conductor(term.nu));
        out.terms.push_back(
            {G.inv(term.nu), -term.shell + model.n_nu(term.nu), 0, term.coeff * model.C(term.nu)});
    }
    return out;
}

template <class Field>
typename Field::Value pair_with_basis(const ScModel<Field>& model, const KirillovVector<Field>& v, const MultChar& eta,
                                      int shell) {
    const auto& G = model.group();
    auto acc = model.field().zero();
    for (const auto& term : v.terms) {
        if (term.shell != shell) continue;
        acc += term.coeff * model.gint(term.phase * ppow(G.prime(), shell), G.mul(term.nu, G.inv(eta)));
    }
    return acc;
}

// ---------------------------------------------------------------- matrix coefficients

template <class Field>
BranchValues<Field> mc_branches(const ScModel<Field>& model, const MultChar& eta, const mpq_class& x,
                                const mpq_class& m, int i) {
    const auto& G = model.group();
    const auto& K = model.field();
    const auto p = G.prime();
    const int c = model.c();
    if (2 * G.conductor(eta) > c) throw EpsilonOutOfRange("mc: eta deeper than c/2", G.conductor(eta));
    i = std::clamp(i, 0, c);
    const int vx = qval(x, p);
    const mpq_class xu = unit_of(x, p);
    BranchValues<Field> r;
    const auto chars = G.enumerate(G.level());
    const std::int64_t eta_idx = G.index(eta);
    // gint(t, chi) = gint(p^-j, chi) zeta^{-chi(u)} for t = u p^-j, j = max(0, -v(t))
    auto split = [&](const mpq_class& t) -> std::pair<int, mpq_class> {
        if (t == 0 || qval(t, p) >= 0) return {0, mpq_class(1)};
        return {-qval(t, p), unit_of(t, p)};
    };
    auto base = [&](int j, const MultChar& chi) { return model.gint(j == 0 ? mpq_class(0) : ppow(p, -j), chi); };
    using Opt = std::optional<typename Field::Value>;
    if (2 * i >= c) {
        auto total = K.zero();
        if (vx == 0) {
            auto [j2, u2] = split(m);
            for (const auto& chi : chars) {
                auto chi_inv = G.inv(chi);
                auto* k = model.kernel({0, eta_idx, i, j2, G.index(chi)}, [&]() -> Opt {
                    auto g1 = model.gint(-ppow(p, i - c), chi_inv);
                    if (is_zero(g1)) return std::nullopt;
                    auto g2 = base(j2, chi_inv);
                    if (is_zero(g2)) return std::nullopt;
                    return model.C(G.mul(chi, G.inv(eta))) * g1 * g2;
                });
                if (!k) continue;
                K.add_times_root(total, *k, G.value_rational(G.mul(chi_inv, eta), xu) - G.value_rational(chi_inv, u2));
            }
            total = model.C(eta) * total;
        }
        r.upper = total;
    }
    if (2 * i <= c) {
        auto total = K.zero();
        if (vx == 2 * i - c) {
            auto [j3, u3] = split(ppow(p, i - c) * xu + m);
            for (const auto& nu : chars) {
                auto twist = G.inv(G.mul(nu, eta));
                auto* k = model.kernel({1, eta_idx, i, j3, G.index(nu)}, [&]() -> Opt {
                    auto B = model.gint(ppow(p, -i), G.mul(eta, G.inv(nu)));
                    if (is_zero(B)) return std::nullopt;
                    auto g = base(j3, twist);
                    if (is_zero(g)) return std::nullopt;
                    return B * model.C(nu) * g;
                });
                if (!k) continue;
                K.add_times_root(total, *k, -G.value_rational(nu, xu) - G.value_rational(twist, u3));
            }
        }
        r.lower = total;
    }
    return r;
}

template <class Field>
typename Field::Value mc_closed_form(const ScModel<Field>& model, const MultChar& eta, const mpq_class& x,
                                     const mpq_class& m, int i) {
    auto r = mc_branches(model, eta, x, m, i);
    if (r.upper && r.lower && !same(*r.upper, *r.lower))
        throw std::logic_error("mc_closed_form: the two branches disagree at i = c/2");
    return r.upper ? *r.upper : *r.lower;
}

template <class Field>
typename Field::Value mc_oracle(const ScModel<Field>& model, const MultChar& eta, const mpq_class& x,
                                const mpq_class& m, int i) {
    const auto p = model.group().prime();
    const int c = model.c();
    i = std::clamp(i, 0, c);
    auto v = basis_vector(model, eta, 0);
    auto apply = [&](const KirillovOp& op) { v = kirillov_apply(model, op, v); };
    if (i < c) {
        mpq_class y = ppow(p, i);
        if (2 * i >= c) {
            // [[1,0],[y,1]] = -omega [[1,-y],[0,1]] omega
            apply(OmegaOp{});
            apply(UnipOp{-y});
            apply(OmegaOp{});
        } else {
            // [[1,0],[y,1]] = -diag(1/y,1) [[1,1],[0,1]] omega [[1,1],[0,1]] diag(y,1)
            apply(DiagOp{y, 1});
            apply(UnipOp{1});
            apply(OmegaOp{});
            apply(UnipOp{1});
            apply(DiagOp{1 / y, 1});
        }
    }
    apply(DiagOp{x, 1});
    apply(UnipOp{m});
    return pair_with_basis(model, v, eta, 0);
}


// ---------------------------------------------------------------- torus points

TorusPoint torus_point(const LocalFieldParams& prm, std::int64_t a, std::int64_t b, int d) {
    const auto p = prm.p;
    const int prec = max_precision(p) - 2;
    auto t = conjugated_torus_decompose(ResidueElem::from_int(p, a, prec), ResidueElem::from_int(p, b, prec), d, prm);
    TorusPoint pt;
    pt.kind = t.kind;
    pt.i = t.i;
    pt.scalar = t.scalar.to_rational();
    if (t.kind == TorusDecomposition::Case::identity) return pt;
    pt.x = t.top_left.to_rational();
    pt.m = t.top_right.is_zero() ? mpq_class(0) : t.top_right.to_rational();
    if (t.kind == TorusDecomposition::Case::upper)
        pt.kappa_unit = t.kappa_unit.to_rational();
    else
        pt.kappa_shift = t.kappa_shift.is_zero() ? mpq_class(0) : t.kappa_shift.to_rational();
    return pt;
}

template <class Field>
typename Field::Value mc_torus(const ScModel<Field>& model, const MultChar& eta, const TorusPoint& pt,
                               McMethod method) {
    const auto& K = model.field();
    if (pt.kind == TorusDecomposition::Case::identity) return K.one();
    auto eval = [&](const mpq_class& x, const mpq_class& m, int i) {
        return method == McMethod::closed_form ? mc_closed_form(model, eta, x, m, i) : mc_oracle(model, eta, x, m, i);
    };
    if (pt.kind == TorusDecomposition::Case::upper) {
        // kappa = diag(1, u^-1) acts on 1_{eta,0} by eta(u)
        int i = std::min(pt.i, model.c());
        return K.times_root(eval(pt.x, pt.m, i), model.char_value(eta, pt.kappa_unit));
    }
    // kappa = [[1, s], [0, 1]] with s integral fixes 1_{eta,0}
    return eval(pt.x, pt.m, 0);
}

#define TORPER_INSTANTIATE(F)                                                                                    \
    template class ScModel<F>;                                                                                   \
    template KirillovVector<F> basis_vector<F>(const ScModel<F>&, const MultChar&, int);                          \
    template KirillovVector<F> fourier_expand<F>(const ScModel<F>&, const KirillovVector<F>&);                    \
    template KirillovVector<F> kirillov_apply<F>(const ScModel<F>&, const KirillovOp&, const KirillovVector<F>&); \
    template F::Value pair_with_basis<F>(const ScModel<F>&, const KirillovVector<F>&, const MultChar&, int);      \
    template BranchValues<F> mc_branches<F>(const ScModel<F>&, const MultChar&, const mpq_class&,                 \
                                            const mpq_class&, int);                                               \
    template F::Value mc_closed_form<F>(const ScModel<F>&, const MultChar&, const mpq_class&, const mpq_class&,   \
                                        int);                                                                     \
    template F::Value mc_oracle<F>(const ScModel<F>&, const MultChar&, const mpq_class&, const mpq_class&, int); \
    template F::Value mc_torus<F>(const ScModel<F>&, const MultChar&, const TorusPoint&, McMethod);

TORPER_INSTANTIATE(CycField)
TORPER_INSTANTIATE(FloatField)

#undef TORPER_INSTANTIATE

}  // namespace torper
