#pragma once

#include "torper/supercuspidal.hpp"

namespace torper {

// coeff * q^{half_exp / 2}
template <class Field>
struct QValue {
    typename Field::Value coeff;
    int half_exp = 0;
};

// pi(1, mu) with mu ramified of level n; central character mu.
struct PsDatum {
    std::int64_t p = 5;
    int n = 1;
    MultChar mu;  // on UnitGroupF(p, n)
};

PsDatum make_ps(std::int64_t p, const MultChar& mu, int n);

std::uint64_t ps_field_modulus(std::int64_t p, int n);

template <class Field>
class PsModel {
public:
    using Value = typename Field::Value;

    PsModel(PsDatum ps, Field K, std::int64_t psi_twist = 1);

    const PsDatum& datum() const { return ps_; }
    const Field& field() const { return K_; }
    const UnitGroupF& group() const { return *G_; }
    int c() const { return ps_.n; }

    // W^{(i)}(alpha) of the newform, 0 <= i <= n, unnormalized
    QValue<Field> whittaker(int i, const mpq_class& alpha) const;
    // the u-integral expression of W^{(i)} taken literally, including i = n
    // (where only unit arguments of mu are kept)
    QValue<Field> whittaker_integral(int i, const mpq_class& alpha) const;

    // int_{v(x) >= 0} |W^{(n)}(x)|^2 d*x
    mpq_class norm() const { return norm_; }

    // int_{v(x) >= 0} psi(m x) W^{(i)}(alpha x) conj W^{(n)}(x) d*x over the
    // shells v(x) <= v0 + extra_shells, v0 the first shell in the support
    QValue<Field> raw_matrix_coefficient(const mpq_class& alpha, const mpq_class& m, int i,
                                         int extra_shells = -1) const;
    // raw / norm, so the value at the identity is 1
    QValue<Field> matrix_coefficient(const mpq_class& alpha, const mpq_class& m, int i, int extra_shells = -1) const;

    // Phi at a conjugated torus point, with the central and K_0(p^n) characters
    QValue<Field> at_torus(const TorusPoint& pt) const;

    Value gint(const mpq_class& t, const MultChar& chi) const;

private:
    PsDatum ps_;
    Field K_;
    std::int64_t twist_;
    std::shared_ptr<const UnitGroupF> G_;
    GaussIntegrator<Field> gauss_;
    Value gn_;  // int_{O^*} psi(p^{-n} u) mu(u) d*u
    mpq_class norm_;

    int default_extra(const mpq_class& alpha, const mpq_class& m) const;
};

}  // namespace torper
