#pragma once

#include <gmpxx.h>

#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace torper {

// exp(2 pi i num/den), num reduced mod den.
struct Phase {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Phase() = default;
    Phase(std::int64_t n, std::int64_t d);

    Phase operator+(const Phase& o) const;
    Phase operator-(const Phase& o) const;
    Phase operator-() const { return Phase(-num, den); }
    Phase times(std::int64_t k) const;
    bool is_one() const { return num == 0; }
    bool operator==(const Phase& o) const { return num == o.num && den == o.den; }
    // exponent of zeta_M; throws if den does not divide M
    std::int64_t exponent(std::uint64_t M) const;
};

class FieldBoundError : public std::range_error {
public:
    using std::range_error::range_error;
};

class CycContext;

// Element of Q(zeta_M), stored as its images under all embeddings
// zeta_M -> w^j (j a unit mod M) in F_l for a few primes l = 1 mod M.
// A common denominator and a bound on the numerator height make zero
// tests and rational recovery exact.
class CycValue {
public:
    CycValue() = default;

    CycValue operator+(const CycValue& o) const;
    CycValue operator-(const CycValue& o) const;
    CycValue operator*(const CycValue& o) const;
    CycValue operator-() const;
    CycValue& operator+=(const CycValue& o) { return *this = *this + o; }
    CycValue& operator-=(const CycValue& o) { return *this = *this - o; }
    CycValue& operator*=(const CycValue& o) { return *this = *this * o; }

    CycValue conj() const;
    CycValue times_root(std::int64_t e) const;
    // *this += x zeta_M^e in one pass
    CycValue& add_times_root(const CycValue& x, std::int64_t e);
    bool is_zero() const;
    bool operator==(const CycValue& o) const { return (*this - o).is_zero(); }
    bool equals_rational(const mpq_class& r) const;
    std::optional<mpq_class> as_rational() const;

    // coefficients on the basis zeta_M^e, e running over basis_exponents()
    std::vector<mpq_class> coefficients() const;
    std::complex<double> to_complex() const;
    std::uint64_t modulus() const;
    double height_bits() const { return hbits_; }
    const mpz_class& denominator() const { return den_; }
    const std::shared_ptr<const CycContext>& context() const { return ctx_; }

private:
    friend class CycContext;
    friend class CycAccumulator;
    std::shared_ptr<const CycContext> ctx_;
    std::vector<std::uint64_t> ev_;  // [prime][slot]
    mpz_class den_ = 1;
    double hbits_ = 0.0;  // log2 of numerator height bound; -inf for exact zero

    void check_same(const CycValue& o) const;
};

class CycContext : public std::enable_shared_from_this<CycContext> {
public:
    struct PrimePower {
        std::uint64_t prime;
        int exp;
        std::uint64_t value;
    };

    static std::shared_ptr<const CycContext> make(std::uint64_t M, int nprimes = 4);

    std::uint64_t modulus() const { return M_; }
    std::size_t degree() const { return units_.size(); }
    int nprimes() const { return static_cast<int>(ell_.size()); }
    double modulus_bits() const { return bits_; }
    const std::vector<PrimePower>& factors() const { return factors_; }
    std::vector<std::uint64_t> basis_exponents() const;

    CycValue zero() const;
    CycValue one() const;
    CycValue rational(const mpq_class& r) const;
    CycValue rational(std::int64_t num, std::int64_t den = 1) const;
    CycValue root(std::int64_t e) const;

    explicit CycContext(std::uint64_t M, int nprimes);

private:
    friend class CycValue;
    friend class CycAccumulator;

    std::uint64_t M_;
    std::vector<PrimePower> factors_;
    std::vector<std::uint64_t> ell_;
    std::vector<std::vector<std::uint64_t>> pw_;  // pw_[k][t] = w_k^t
    std::vector<std::uint64_t> units_;            // slot -> j
    std::vector<std::uint64_t> idem_;             // e = 1 mod m_i, 0 mod the other factors
    std::vector<std::uint32_t> conj_slot_;
    double bits_ = 0;

    mutable std::once_flag inv_once_;
    mutable std::vector<std::vector<std::vector<std::uint64_t>>> inv_;  // [prime][factor] flattened matrix
    mutable std::vector<std::vector<std::uint64_t>> factor_basis_;     // [factor] basis residues
    void build_inverses() const;

    std::uint64_t residue(std::int64_t num, int k) const;
    std::uint64_t residue(const mpz_class& num, int k) const;
    void transform(const std::vector<std::int64_t>& counts, std::vector<std::uint64_t>& ev) const;
};

// Sums of integer multiples of roots of unity, turned into a value once.
class CycAccumulator {
public:
    explicit CycAccumulator(std::shared_ptr<const CycContext> ctx);
    void add(std::int64_t e, std::int64_t coeff = 1);
    void add(const Phase& ph, std::int64_t coeff = 1) { add(ph.exponent(ctx_->modulus()), coeff); }
    CycValue value(const mpz_class& den = 1) const;

private:
    std::shared_ptr<const CycContext> ctx_;
    std::vector<std::int64_t> counts_;
};

// Field handle for the exact backend.
class CycField {
public:
    using Value = CycValue;
    using Accumulator = CycAccumulator;

    explicit CycField(std::uint64_t M, int nprimes = 4) : ctx_(CycContext::make(M, nprimes)) {}

    std::uint64_t modulus() const { return ctx_->modulus(); }
    Value zero() const { return ctx_->zero(); }
    Value one() const { return ctx_->one(); }
    Value rational(std::int64_t num, std::int64_t den = 1) const { return ctx_->rational(num, den); }
    Value rational(const mpq_class& r) const { return ctx_->rational(r); }
    Value root(const Phase& ph) const { return ctx_->root(ph.exponent(modulus())); }
    Value root(std::int64_t e) const { return ctx_->root(e); }
    Value times_root(const Value& x, const Phase& ph) const { return x.times_root(ph.exponent(modulus())); }
    void add_times_root(Value& acc, const Value& x, const Phase& ph) const {
        acc.add_times_root(x, ph.exponent(modulus()));
    }
    Accumulator accumulator() const { return Accumulator(ctx_); }
    const std::shared_ptr<const CycContext>& context() const { return ctx_; }
    static constexpr bool exact = true;

private:
    std::shared_ptr<const CycContext> ctx_;
};

using FloatValue = std::complex<double>;

class FloatAccumulator {
public:
    explicit FloatAccumulator(std::uint64_t M) : M_(M) {}
    void add(std::int64_t e, std::int64_t coeff = 1);
    void add(const Phase& ph, std::int64_t coeff = 1);
    FloatValue value(const mpz_class& den = 1) const;

private:
    std::uint64_t M_;
    FloatValue sum_{0.0, 0.0};
};

class FloatField {
public:
    using Value = FloatValue;
    using Accumulator = FloatAccumulator;

    explicit FloatField(std::uint64_t M = 1) : M_(M) {}
    std::uint64_t modulus() const { return M_; }
    Value zero() const { return {0.0, 0.0}; }
    Value one() const { return {1.0, 0.0}; }
    Value rational(std::int64_t num, std::int64_t den = 1) const {
        return {static_cast<double>(num) / static_cast<double>(den), 0.0};
    }
    Value rational(const mpq_class& r) const { return {r.get_d(), 0.0}; }
    Value root(const Phase& ph) const;
    Value root(std::int64_t e) const;
    Value times_root(const Value& x, const Phase& ph) const { return x * root(ph); }
    void add_times_root(Value& acc, const Value& x, const Phase& ph) const { acc += x * root(ph); }
    Accumulator accumulator() const { return Accumulator(M_); }
    static constexpr bool exact = false;

private:
    std::uint64_t M_;
};

inline constexpr double kFloatZeroTol = 1e-9;

inline CycValue conj(const CycValue& x) { return x.conj(); }
inline FloatValue conj(const FloatValue& x) { return std::conj(x); }
inline bool is_zero(const CycValue& x) { return x.is_zero(); }
inline bool is_zero(const FloatValue& x) { return std::abs(x) < kFloatZeroTol; }
inline CycValue times_root(const CycValue& x, std::int64_t e) { return x.times_root(e); }
FloatValue times_root(const FloatValue& x, std::int64_t e, std::uint64_t M);
inline std::complex<double> to_float(const CycValue& x) { return x.to_complex(); }
inline std::complex<double> to_float(const FloatValue& x) { return x; }

std::string to_string(const mpq_class& r);

}  // namespace torper
