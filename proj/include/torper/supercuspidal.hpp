#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <variant>
#include <vector>

#include "torper/characters.hpp"

namespace torper {

class GaloisFixed : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NontrivialCentral : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class LevelMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An omega-action or epsilon factor needed a twist deeper than the
// epsilon formula covers.
class EpsilonOutOfRange : public std::range_error {
public:
    EpsilonOutOfRange(const std::string& what, int conductor) : std::range_error(what), conductor_(conductor) {}
    int conductor() const { return conductor_; }

private:
    int conductor_;
};

// Minimal supercuspidal with trivial central character, induced from theta on
// the inducing extension. theta lives on UnitGroupE(ext, c_theta).
struct ScDatum {
    LocalFieldParams ext;
    MultChar theta;
    int c_theta = 0;
    int c_pi = 0;
    std::optional<ExtAlpha> alpha_theta;  // when c_theta >= 2
};

// G must have level == conductor of theta.
ScDatum build_sc(const UnitGroupE& G, const MultChar& theta);

// Characters usable as theta: level n, trivial on O_F^*, not Galois fixed.
std::vector<MultChar> admissible_thetas(const UnitGroupE& G);

// Largest F-level nu with e c(nu) - e + 1 <= c_theta.
int epsilon_range(const ScDatum& sc);

// Smallest cyclotomic modulus holding every value an ScModel produces.
std::uint64_t sc_field_modulus(const ScDatum& sc);

template <class Field>
class ScModel {
public:
    using Value = typename Field::Value;

    ScModel(ScDatum sc, Field K, std::int64_t psi_twist = 1);

    const ScDatum& datum() const { return sc_; }
    const Field& field() const { return K_; }
    const UnitGroupF& group() const { return *G_; }
    const std::shared_ptr<const UnitGroupF>& group_ptr() const { return G_; }
    const UnitGroupE& ext_group() const { return *E_; }
    const GaussIntegrator<Field>& gauss() const { return gauss_; }
    std::int64_t psi_twist() const { return twist_; }
    int c() const { return sc_.c_pi; }

    bool in_range(const MultChar& nu) const;
    // epsilon(pi x eta, 1/2, psi) as an exact finite sum over O_E'^*
    Value epsilon(const MultChar& eta) const;
    // omega 1_{nu,n} = C_nu 1_{nu^-1, -n + n_nu}
    Value C(const MultChar& nu) const;
    int n_nu(const MultChar& nu) const;

    // predicted C_{nu eta^-1} / C_{eta^-1} from alpha_theta and alpha_eta
    Value c_quotient(const MultChar& nu, const MultChar& eta) const;
    // C_{nu eta^-1} == c_quotient * C_{eta^-1}
    bool c_quotient_holds(const MultChar& nu, const MultChar& eta) const;

    // int_{O^*} psi(t u) chi(u) d*u for an exact rational t
    Value gint(const mpq_class& t, const MultChar& chi) const;
    Phase char_value(const MultChar& chi, const mpq_class& x) const { return G_->value_rational(chi, x); }

    // memo for point-independent products in the matrix coefficient sums; nullptr when make gives nothing
    using KernelKey = std::array<std::int64_t, 5>;
    const Value* kernel(const KernelKey& key, const std::function<std::optional<Value>()>& make) const;

private:
    ScDatum sc_;
    Field K_;
    std::int64_t twist_;
    std::shared_ptr<const UnitGroupF> G_;
    std::shared_ptr<const UnitGroupE> E_;
    GaussIntegrator<Field> gauss_;
    mutable std::mutex mu_;
    mutable std::map<std::int64_t, Value> cache_;
    mutable std::map<KernelKey, std::optional<Value>> kernels_;
};

// ---------------------------------------------------------------- Kirillov model

// coeff * psi(phase * x) * 1_{nu,shell}(x)
template <class Field>
struct KirillovTerm {
    MultChar nu;
    int shell = 0;
    mpq_class phase = 0;
    typename Field::Value coeff;
};

template <class Field>
struct KirillovVector {
    std::vector<KirillovTerm<Field>> terms;
};

struct DiagOp {
    mpq_class a1 = 1, a2 = 1;
};
struct UnipOp {
    mpq_class m = 0;
};
struct OmegaOp {};
using KirillovOp = std::variant<DiagOp, UnipOp, OmegaOp>;

template <class Field>
KirillovVector<Field> basis_vector(const ScModel<Field>& model, const MultChar& nu, int shell);

template <class Field>
KirillovVector<Field> kirillov_apply(const ScModel<Field>& model, const KirillovOp& op, const KirillovVector<Field>& v);

// Re-expand every phased term into plain basis vectors.
template <class Field>
KirillovVector<Field> fourier_expand(const ScModel<Field>& model, const KirillovVector<Field>& v);

// <v, 1_{eta,shell}> with d*x, Vol(O^*) = 1
template <class Field>
typename Field::Value pair_with_basis(const ScModel<Field>& model, const KirillovVector<Field>& v, const MultChar& eta,
                                      int shell);

// ---------------------------------------------------------------- matrix coefficients

// Phi_eta([[x, m], [0, 1]] [[1, 0], [p^i, 1]]) for the vector 1_{eta,0}
template <class Field>
struct BranchValues {
    std::optional<typename Field::Value> upper;  // 2i >= c
    std::optional<typename Field::Value> lower;  // 2i <= c
};

template <class Field>
BranchValues<Field> mc_branches(const ScModel<Field>& model, const MultChar& eta, const mpq_class& x,
                                const mpq_class& m, int i);

template <class Field>
typename Field::Value mc_closed_form(const ScModel<Field>& model, const MultChar& eta, const mpq_class& x,
                                     const mpq_class& m, int i);

template <class Field>
typename Field::Value mc_oracle(const ScModel<Field>& model, const MultChar& eta, const mpq_class& x,
                                const mpq_class& m, int i);

// ---------------------------------------------------------------- torus points

// The decomposition of [[a, b p^-d], [b D p^d, a]] with exact rational entries.
struct TorusPoint {
    TorusDecomposition::Case kind = TorusDecomposition::Case::identity;
    int i = kInfiniteIndex;
    mpq_class x = 1, m = 0;
    mpq_class scalar = 1;
    mpq_class kappa_unit = 1;   // upper case
    mpq_class kappa_shift = 0;  // lower case
};

TorusPoint torus_point(const LocalFieldParams& prm, std::int64_t a, std::int64_t b, int d);

enum class McMethod { closed_form, oracle };

// Phi_eta at the torus element a + b sqrt(D) of prm (the field of Omega),
// conjugated by diag(p^d, 1)
template <class Field>
typename Field::Value mc_torus(const ScModel<Field>& model, const MultChar& eta, const TorusPoint& pt,
                               McMethod method = McMethod::closed_form);

}  // namespace torper
