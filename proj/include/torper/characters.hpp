#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "torper/padic.hpp"
#include "torper/values.hpp"

namespace torper {

enum class Side { F, E };

// Character of the unit group of the owning UnitGroupF / UnitGroupE, stored by
// exponents on that group's generators, extended by its value on the uniformizer
// (p for F, p_E for E), which defaults to 1.
struct MultChar {
    Side side = Side::F;
    std::vector<std::int64_t> exps;
    Phase at_uniformizer;
    bool operator==(const MultChar& o) const {
        return side == o.side && exps == o.exps && at_uniformizer == o.at_uniformizer;
    }
    bool operator<(const MultChar& o) const {
        if (exps != o.exps) return exps < o.exps;
        if (at_uniformizer.den != o.at_uniformizer.den) return at_uniformizer.den < o.at_uniformizer.den;
        return at_uniformizer.num < o.at_uniformizer.num;
    }
};

class CharacterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// psi(x) = exp(2 pi i {twist * x}_p); level 0. A twist other than 1 picks
// another embedding of the same character group.
struct AddChar {
    std::int64_t p = 5;
    std::int64_t twist = 1;
    Phase operator()(const ResidueElem& x) const;
    Phase operator()(const mpq_class& x) const;
    // psi(t / p^j) for an integer t
    Phase at(std::int64_t t, int j) const;
};

// (Z/p^L)^* = <teichmueller(g)> x <1+p>, g the least primitive root mod p^2
class UnitGroupF {
public:
    UnitGroupF(std::int64_t p, int level);

    std::int64_t prime() const { return p_; }
    int level() const { return level_; }
    std::int64_t modulus() const { return mod_; }
    std::int64_t order() const { return (p_ - 1) * pL1_; }
    std::int64_t primitive_root() const { return g_; }
    std::vector<std::int64_t> orders() const { return {p_ - 1, pL1_}; }

    std::pair<std::int64_t, std::int64_t> dlog(std::int64_t unit) const;
    Phase value(const MultChar& chi, std::int64_t unit) const;
    Phase value(const MultChar& chi, const ResidueElem& x) const;  // any nonzero x
    Phase value_rational(const MultChar& chi, const mpq_class& x) const;

    int conductor(const MultChar& chi) const;
    int conductor_bruteforce(const MultChar& chi) const;

    MultChar trivial() const { return {Side::F, {0, 0}, {}}; }
    MultChar from_index(std::int64_t idx) const;
    std::int64_t index(const MultChar& chi) const;
    MultChar mul(const MultChar& a, const MultChar& b) const;
    MultChar inv(const MultChar& a) const;
    MultChar pow(const MultChar& a, std::int64_t k) const;
    MultChar quadratic() const { return {Side::F, {(p_ - 1) / 2, 0}, {}}; }

    // all characters factoring through (Z/p^n)^*, by index
    std::vector<MultChar> enumerate(int n) const;
    std::vector<MultChar> of_level(int k) const;

private:
    std::int64_t p_;
    int level_;
    std::int64_t mod_, pL1_, g_;
    std::vector<std::int32_t> table_a_, table_b_;  // dlog by residue; -1 for non-units
    void check(const MultChar& chi) const;
};

// unit constant alpha with chi(1+x) = psi(alpha p^{-c} x) on v(x) >= ceil(c/2)
struct AlphaConstant {
    std::int64_t alpha = 1;
    int modulus_exp = 0;  // alpha is defined mod p^modulus_exp
};

AlphaConstant alpha_of(const UnitGroupF& G, const MultChar& chi, std::int64_t psi_twist = 1);

// E-side: (O_E / p_E^n)^*
class UnitGroupE {
public:
    UnitGroupE(const LocalFieldParams& prm, int level);

    const LocalFieldParams& params() const { return prm_; }
    int level() const { return level_; }
    std::int64_t a_mod() const { return amod_; }
    std::int64_t b_mod() const { return bmod_; }
    std::int64_t order() const { return static_cast<std::int64_t>(units_.size()); }
    const std::vector<std::int64_t>& orders() const { return orders_; }
    const std::vector<std::pair<std::int64_t, std::int64_t>>& generators() const { return gens_; }
    // units in a fixed order; dlog_flat(units()[k]) == k
    const std::vector<std::pair<std::int64_t, std::int64_t>>& units() const { return units_; }

    bool is_unit(std::int64_t a, std::int64_t b) const;
    std::int64_t dlog_flat(std::int64_t a, std::int64_t b) const;
    std::vector<std::int64_t> dlog(std::int64_t a, std::int64_t b) const;
    Phase unit_value(const MultChar& chi, std::int64_t flat) const;
    // value at a nonzero element with integer coordinates
    Phase value(const MultChar& chi, std::int64_t a, std::int64_t b) const;
    Phase value(const MultChar& chi, const mpz_class& a, const mpz_class& b) const;

    int conductor(const MultChar& chi) const;
    int conductor_bruteforce(const MultChar& chi) const;
    bool trivial_on_base_units(const MultChar& chi) const;
    bool galois_fixed(const MultChar& chi) const;

    MultChar trivial() const;
    MultChar mul(const MultChar& a, const MultChar& b) const;
    MultChar inv(const MultChar& a) const;
    MultChar galois_conjugate(const MultChar& a) const;
    MultChar with_uniformizer(const MultChar& a, const Phase& ph) const;

    std::vector<MultChar> enumerate(bool trivial_on_base) const;
    std::vector<MultChar> of_level(int k, bool trivial_on_base) const;

    // chi o N_{E/F}
    MultChar norm_lift(const UnitGroupF& G, const MultChar& chi) const;

    // reduce a+b sqrt(D) to the (a, b) of its unit part and its p_E-valuation
    std::pair<std::pair<mpz_class, mpz_class>, int> unit_part(const mpz_class& a, const mpz_class& b) const;

    // generators (as integer pairs) of 1 + p_E^m O_E, or of all units when m = 0
    std::vector<std::pair<std::int64_t, std::int64_t>> one_unit_generators(int m) const;

private:
    LocalFieldParams prm_;
    int level_;
    std::int64_t amod_, bmod_;
    std::vector<std::int64_t> orders_;
    std::vector<std::pair<std::int64_t, std::int64_t>> gens_;
    std::vector<std::pair<std::int64_t, std::int64_t>> units_;
    std::vector<std::int32_t> flat_;  // packed (a, b) -> flat index, -1 for non-units
    std::int64_t den_;                // lcm of orders
    std::int64_t base_teich_;         // Teichmueller lift of a primitive root of F
    void check(const MultChar& chi) const;
    std::pair<std::int64_t, std::int64_t> reduce(std::int64_t a, std::int64_t b) const;
    std::pair<std::int64_t, std::int64_t> mulE(std::pair<std::int64_t, std::int64_t> x,
                                               std::pair<std::int64_t, std::int64_t> y) const;
};

struct ExtAlpha {
    std::int64_t a = 1;
    std::int64_t b = 0;
    int modulus_exp = 0;  // defined mod p_E^modulus_exp
};

// theta(1+x) = psi_E(alpha p_E^{-(c+e-1)} x) on v_E(x) >= ceil(c/2)
ExtAlpha alpha_of(const UnitGroupE& G, const MultChar& theta, std::int64_t psi_twist = 1);

// psi(Tr((a + b sqrt D) * p_E^{-j})) for integers a, b
Phase psi_E(const LocalFieldParams& prm, std::int64_t psi_twist, std::int64_t a, std::int64_t b, int j);

template <class Field>
typename Field::Value gauss_sum_at_level(const Field& K, const UnitGroupF& G, const MultChar& chi,
                                         const ResidueElem& m, int L, std::int64_t psi_twist = 1);

// (1/#(O/p^L)^*) sum_u psi(m u) chi(u), L = max(c(chi), -v(m), 1)
template <class Field>
typename Field::Value gauss_sum(const Field& K, const UnitGroupF& G, const MultChar& chi, const ResidueElem& m,
                                std::int64_t psi_twist = 1);

// int_{O^*} psi(t u) chi(u) d*u via the vanishing law and cached shell sums.
template <class Field>
class GaussIntegrator {
public:
    using Value = typename Field::Value;
    GaussIntegrator(Field K, std::shared_ptr<const UnitGroupF> G, std::int64_t psi_twist = 1)
        : K_(std::move(K)), G_(std::move(G)), twist_(psi_twist) {}

    Value operator()(const ResidueElem& t, const MultChar& chi) const;
    // int_{O^*} psi(p^{-j} u) chi(u) d*u
    Value shell(int j, const MultChar& chi) const;
    const UnitGroupF& group() const { return *G_; }
    const Field& field() const { return K_; }

private:
    Field K_;
    std::shared_ptr<const UnitGroupF> G_;
    std::int64_t twist_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<int, std::int64_t>, Value> cache_;
};

template <class Field>
struct StationaryPhase {
    typename Field::Value lhs;
    typename Field::Value rhs;
    Phase factor;
    bool holds = false;
};

// int_{-c} chi nu psi  versus  nu(-alpha_chi) int_{-c} chi psi
template <class Field>
StationaryPhase<Field> stationary_phase_shift(const Field& K, const UnitGroupF& G, const MultChar& chi,
                                              const MultChar& nu, std::int64_t psi_twist = 1);

}  // namespace torper
