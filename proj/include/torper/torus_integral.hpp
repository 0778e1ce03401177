#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "torper/principal_series.hpp"

namespace torper {

using Representation = std::variant<ScDatum, PsDatum>;

int conductor(const Representation& rep);
std::string describe(const Representation& rep);

// Newform translate diag(p^d, 1) v0, or the same translate of 1_{eta,0}.
// eta lives on the supercuspidal model's F group.
struct TestVectorSpec {
    enum class Kind { translate_newform, twisted_newform };
    Kind kind = Kind::translate_newform;
    MultChar eta;
    int d = 0;

    static TestVectorSpec newform(int d) { return {Kind::translate_newform, {}, d}; }
    static TestVectorSpec twisted(MultChar eta, int d) { return {Kind::twisted_newform, std::move(eta), d}; }
};

// Omega on E^*, stored on (O_E / p_E^level)^* with its value on p_E.
struct TorusCharacter {
    std::shared_ptr<const UnitGroupE> group;
    MultChar omega;

    const LocalFieldParams& field() const { return group->params(); }
    int conductor() const { return group->conductor(omega); }
    Phase at(std::int64_t a, std::int64_t b) const { return group->value(omega, a, b); }
};

// the same character on a deeper group
TorusCharacter relevel(const TorusCharacter& omega, int level);
TorusCharacter make_torus_character(const LocalFieldParams& prm, int level, const MultChar& omega);
TorusCharacter trivial_torus_character(const LocalFieldParams& prm, int level = 1);
// Omega trivial on F^* of exact conductor c, by position in enumeration order
std::vector<TorusCharacter> torus_characters_of_level(const LocalFieldParams& prm, int group_level, int c);

// Omega = chi_E Omega0 with chi^2 = mu^{-1}, so that Omega mu = 1 on F^*.
// Omega0 must be trivial on F^*; the result lives on a group deep enough for chi_E.
TorusCharacter ps_torus_character(const PsDatum& ps, const TorusCharacter& omega0);

// the unique chi with chi^{-2} = mu of least index; needs mu(-1) = 1
MultChar ps_half_character(const PsDatum& ps);

class VanishingIntegral : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// chi(det) applied on top of Phi
struct DetTwist {
    std::shared_ptr<const UnitGroupF> group;
    MultChar chi;
};

// the positive square root of p inside the value field (a quadratic Gauss sum)
template <class Field>
typename Field::Value sqrt_p(const Field& K, std::int64_t p);

std::uint64_t integral_field_modulus(const Representation& rep, const TorusCharacter& omega,
                                     const std::optional<DetTwist>& twist = std::nullopt);

// Phi(e) Omega(e) on F^* \ E^* for one test vector.
template <class Field>
class TorusIntegrand {
public:
    using Value = typename Field::Value;

    TorusIntegrand(Representation rep, TestVectorSpec spec, TorusCharacter omega, Field K,
                   std::optional<DetTwist> twist = std::nullopt);

    const Field& field() const { return K_; }
    const Representation& representation() const { return rep_; }
    const TestVectorSpec& spec() const { return spec_; }
    const TorusCharacter& omega() const { return omega_; }
    const LocalFieldParams& torus_field() const { return omega_.field(); }
    int c() const { return c_; }

    // Phi at the conjugated torus element a + b sqrt(D), including the det twist
    Value phi(std::int64_t a, std::int64_t b) const;
    Value operator()(std::int64_t a, std::int64_t b) const;

    // a depth on the p_E scale where invariance follows from K_0(p^c)
    int proven_depth() const;


private:
    Representation rep_;
    TestVectorSpec spec_;
    TorusCharacter omega_;
    Field K_;
    std::optional<DetTwist> twist_;
    int c_ = 0;
    int twist_level_ = 0;
    std::shared_ptr<const ScModel<Field>> sc_;
    std::shared_ptr<const PsModel<Field>> ps_;
    Value sqrt_q_;
    void check_central() const;
};

// generators of 1 + p_E^m O_E modulo deeper units, or of O_E^* when m = 0
std::vector<std::pair<std::int64_t, std::int64_t>> one_unit_generators(const LocalFieldParams& prm, int m);

// smallest m with the integrand invariant under 1 + p_E^m O_E, checked on every
// coset at the proven depth; throws PrecisionError when even that fails
template <class Field>
int invariance_depth(const TorusIntegrand<Field>& f, unsigned jobs = 1);

struct IntegralReport {
    enum class Verdict { match, vanish, mismatch, unchecked };

    std::string representation;
    std::string test_vector;
    int depth = 0;
    std::size_t coset_count = 0;
    bool exact = false;
    bool is_zero = false;
    std::optional<mpq_class> rational;  // exact, and the value is rational
    std::vector<mpq_class> coefficients;  // on zeta_M powers, when not rational
    std::uint64_t modulus = 0;
    std::complex<double> value;
    std::optional<mpq_class> predicted;
    Verdict verdict = Verdict::unchecked;
};

std::string to_string(IntegralReport::Verdict v);
std::string describe(const TestVectorSpec& spec, const Representation& rep);

template <class Field>
IntegralReport local_integral(const TorusIntegrand<Field>& f, const std::optional<mpq_class>& predicted = std::nullopt,
                              unsigned jobs = 1);

enum class Backend { exact, floating };
Backend parse_backend(const std::string& s);

IntegralReport local_integral(const Representation& rep, const TestVectorSpec& spec, const TorusCharacter& omega,
                              Backend backend = Backend::exact,
                              const std::optional<mpq_class>& predicted = std::nullopt, unsigned jobs = 1,
                              const std::optional<DetTwist>& twist = std::nullopt);

// k with c(pi) = 2k or 2k+1
int half_level(const Representation& rep);

// Vol{v(b D p^d / a) = c - 1} against (q - 1) Vol{v(b D p^d / a) >= c}
struct VolumeIdentity {
    int d = 0;
    mpq_class at_c_minus_1;
    mpq_class at_least_c;
    bool holds = false;
};
VolumeIdentity volume_identity(const LocalFieldParams& prm, int c, int d);

struct SweepResult {
    std::vector<IntegralReport> reports;  // one per d != k, ascending d
    std::vector<VolumeIdentity> volumes;
    bool all_vanish = true;
};

// newform translates with d != k; needs (2/e) c(Omega) < c(pi) and c(pi) >= 2
SweepResult vanishing_sweep(const Representation& rep, const TorusCharacter& omega, int d_lo, int d_hi,
                            unsigned jobs = 1);

// predicted epsilon(Pi x Omega, 1/2) for a supercuspidal; throws InvalidParameter
// outside the level hypotheses
int epsilon_dichotomy(const Representation& rep, const TorusCharacter& omega);

// newform translates d = 0..c, then twisted newforms by (level, index), d = 0..c
std::vector<TestVectorSpec> pool_specs(const Representation& rep);

struct DichotomyResult {
    int sign = 0;
    std::size_t evaluated = 0;
    std::size_t nonzero = 0;
    std::optional<std::size_t> first_nonzero;  // index into reports
    std::vector<IntegralReport> reports;
    bool consistent = false;  // some spec nonzero iff sign = +1
};

// with exhaustive = false the search stops at the first nonzero value
DichotomyResult dichotomy_sweep(const Representation& rep, const TorusCharacter& omega, bool exhaustive = true,
                                unsigned jobs = 1);

// pi = minimal x tau: returns the character paired with the minimal form, Omega tau_E
TorusCharacter twist_reduce(const TorusCharacter& omega, const UnitGroupF& G, const MultChar& tau);

struct TwistCheck {
    IntegralReport direct;   // Phi_min tau(det) against Omega
    IntegralReport reduced;  // Phi_min against Omega tau_E
    bool holds = false;
};

// omega_min must satisfy the central condition for rep; compares the two sides
TwistCheck twist_identity(const Representation& rep, const TestVectorSpec& spec, const TorusCharacter& omega_min,
                          const MultChar& tau, int tau_level, unsigned jobs = 1);

// I against Omega o sigma, and against conj I
struct ConjugationCheck {
    IntegralReport original;
    IntegralReport conjugated;
    bool holds = false;
};
ConjugationCheck conjugation_symmetry(const Representation& rep, const TestVectorSpec& spec,
                                      const TorusCharacter& omega, unsigned jobs = 1);

struct AveragedCertificate {
    int lower_exp = 0;  // K_1^1(p^lower, p^diag)
    int diag_exp = 0;
    std::size_t samples = 0;
    bool normal = false;      // t^-1 K t = K for every sampled t
    bool stabilizes = false;  // the translated vector is fixed by every sampled k
    IntegralReport pairing;   // <average, v> = I
};

// supercuspidal specs only; throws VanishingIntegral when I = 0
AveragedCertificate averaged_test_vector(const ScDatum& sc, const TestVectorSpec& spec, const TorusCharacter& omega,
                                         std::size_t samples = 64, std::uint64_t seed = 1, unsigned jobs = 1);

// Level-k twisted newforms when (-1/q) = -1, c(pi) = 2k, k >= 2 c(Omega).
struct DeepTwistEntry {
    MultChar eta;
    std::int64_t alpha_eta = 0;
    IntegralReport report;
    std::complex<double> predicted;
    int root_solutions = 0;  // s^2 = alpha_eta^2 D / (alpha_eta^2 - alpha^2 D) mod p^{c(Omega)}
    bool holds = false;
    double scaled = 0.0;  // |I| q^k
};

struct DeepTwistCheck {
    std::size_t lower_level_count = 0;
    bool lower_levels_vanish = true;
    bool other_shells_unsolvable = true;
    std::vector<DeepTwistEntry> entries;  // level-k eta with the Legendre condition
    std::optional<std::size_t> constructed;  // first entry with |I| q^k in [1/2, 8]
};

DeepTwistCheck deep_twist_check(const ScDatum& sc, const TorusCharacter& omega, unsigned jobs = 1);

// ---------------------------------------------------------------- decay

// pi(|.|^{s}, |.|^{-s}) with Satake parameters e^{+-i angle}
double spherical_whittaker(std::int64_t p, double angle, int r);
// Phi([[x, m], [0, 1]] k) with v(x) = vx and v(m) = vm (vm ignored if m = 0)
double spherical_coefficient(std::int64_t p, double angle, int vx, std::optional<int> vm, int shells);
// the closed Macdonald form at diag(p^r, 1)
double macdonald_coefficient(std::int64_t p, double angle, int r);

struct DecayRow {
    int n = 0;
    std::size_t cosets = 0;
    std::complex<double> value;
    double magnitude = 0.0;
    double magnitude_doubled = 0.0;  // with twice the Whittaker shells
};

struct DecayResult {
    std::vector<DecayRow> rows;
    double slope = 0.0;  // least squares slope of log_q |I| against n
    double truncation_drift = 0.0;
};

// d = -n translates of the spherical vector against an inert Omega
DecayResult decay_experiment(std::int64_t p, double angle, int n_max, const TorusCharacter& omega, int shells = 48,
                             unsigned jobs = 1);

}  // namespace torper
