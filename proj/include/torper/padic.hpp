#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace torper {

enum class ExtKind { inert, ramified };

std::string to_string(ExtKind k);
ExtKind parse_ext_kind(const std::string& s);

class InvalidPrime : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class PrecisionError : public std::range_error {
public:
    using std::range_error::range_error;
};

std::int64_t ipow(std::int64_t base, int exp);
int vp(std::int64_t x, std::int64_t p);             // valuation of a nonzero integer
int vp(const mpz_class& x, std::int64_t p);
std::int64_t mod_inverse(std::int64_t a, std::int64_t m);
std::int64_t mod_pos(std::int64_t a, std::int64_t m);
bool is_prime(std::int64_t n);
bool is_square_mod_p(std::int64_t a, std::int64_t p);  // a a unit mod p
// valuation, power and unit part for nonzero rationals
int val_q(const mpq_class& x, std::int64_t p);
mpq_class pow_q(std::int64_t p, int k);
mpq_class unit_part_q(const mpq_class& x, std::int64_t p);
// largest n with p^n safely below 2^62, so products of units fit in 128 bits
int max_precision(std::int64_t p);

struct LocalFieldParams {
    std::int64_t p = 5;
    int precision = 6;
    ExtKind kind = ExtKind::inert;
    std::int64_t D = 2;   // inert: unit non-residue; ramified: p * xi
    std::int64_t xi = 1;  // ramified only
    int e() const { return kind == ExtKind::inert ? 1 : 2; }
    std::int64_t q() const { return p; }
    std::int64_t residue_field_e() const { return kind == ExtKind::inert ? p * p : p; }
    bool operator==(const LocalFieldParams&) const = default;
};

LocalFieldParams make_params(std::int64_t p, ExtKind kind, int precision,
                             std::optional<std::int64_t> D = std::nullopt,
                             std::optional<std::int64_t> xi = std::nullopt);

// x = p^val * unit with unit known mod p^prec; a zero carries the floor
// below which it is known to vanish in val.
class ResidueElem {
public:
    ResidueElem() = default;
    static ResidueElem zero(std::int64_t p, int floor);
    static ResidueElem from_int(std::int64_t p, std::int64_t x, int prec);
    static ResidueElem from_mpz(std::int64_t p, const mpz_class& x, int prec);
    static ResidueElem from_rational(std::int64_t p, const mpq_class& x, int prec);
    static ResidueElem make(std::int64_t p, int val, std::int64_t unit, int prec);

    std::int64_t prime() const { return p_; }
    bool is_zero() const { return zero_; }
    int val() const { return val_; }
    std::int64_t unit() const { return unit_; }
    int prec() const { return prec_; }
    int abs_precision() const { return zero_ ? val_ : val_ + prec_; }
    // unit part mod p^L; needs L <= prec
    std::int64_t unit_mod(int L) const;
    // integer representative of x mod p^L for val >= 0
    std::int64_t residue_mod(int L) const;
    mpq_class to_rational() const;

    ResidueElem operator+(const ResidueElem& o) const;
    ResidueElem operator-(const ResidueElem& o) const;
    ResidueElem operator*(const ResidueElem& o) const;
    ResidueElem operator-() const;
    ResidueElem inverse() const;
    ResidueElem shift(int k) const;  // times p^k
    ResidueElem truncate(int prec) const;

private:
    std::int64_t p_ = 5;
    int val_ = 0;
    std::int64_t unit_ = 1;
    int prec_ = 1;
    bool zero_ = true;
};

std::string to_string(const ResidueElem& x);

// a + b sqrt(D) with both coordinates in F
struct ExtElem {
    ResidueElem a;
    ResidueElem b;
    int precision_e = 0;
};

ExtElem ext_make(const LocalFieldParams& prm, std::int64_t a, std::int64_t b, int prec);
ExtElem ext_mul(const LocalFieldParams& prm, const ExtElem& x, const ExtElem& y);
ResidueElem ext_norm(const LocalFieldParams& prm, const ExtElem& x);
ResidueElem ext_trace(const ExtElem& x);
ExtElem ext_conj(const ExtElem& x);
int ext_val(const LocalFieldParams& prm, const ExtElem& x);

struct Mat2 {
    ResidueElem a, b, c, d;
};

Mat2 mat_mul(const Mat2& x, const Mat2& y);
Mat2 mat_scale(const ResidueElem& s, const Mat2& x);
Mat2 mat_diag(const ResidueElem& x, const ResidueElem& y);
Mat2 mat_upper(const ResidueElem& x, const ResidueElem& m);  // [[x, m], [0, 1]]
Mat2 mat_lower_unipotent(std::int64_t p, int i, int prec);  // [[1, 0], [p^i, 1]]
bool mat_equal(const Mat2& x, const Mat2& y, int abs_prec);
bool in_K0(const Mat2& k, int c);
bool in_K11(const Mat2& k, int lower, int diag);

struct IwasawaResult {
    Mat2 borel;
    int i = 0;
    Mat2 k0;
};

// g = borel * [[1,0],[p^i,1]] * k0 with k0 in K_0(p^c), 0 <= i <= c
IwasawaResult iwasawa_decompose(const Mat2& g, int c);

inline constexpr int kInfiniteIndex = std::numeric_limits<int>::max();

struct TorusDecomposition {
    enum class Case { identity, upper, lower };
    Case kind = Case::identity;
    int i = kInfiniteIndex;
    ResidueElem top_left;    // Borel [[top_left, top_right], [0, 1]]
    ResidueElem top_right;
    ResidueElem scalar;      // central factor
    ResidueElem kappa_unit;  // upper case: kappa = diag(1, kappa_unit^{-1})
    ResidueElem kappa_shift; // lower case: kappa = [[1, kappa_shift], [0, 1]]
};

// [[a, b p^{-d}], [b D p^d, a]] = scalar * Borel * [[1,0],[p^i,1]] * kappa
TorusDecomposition conjugated_torus_decompose(const ResidueElem& a, const ResidueElem& b, int d,
                                              const LocalFieldParams& prm);
Mat2 conjugated_torus_matrix(const ResidueElem& a, const ResidueElem& b, int d, const LocalFieldParams& prm);
Mat2 recompose(const TorusDecomposition& t, std::int64_t p);

// Representatives a + b sqrt(D) of F^* \ E^* / (1 + p_E^depth O_E), depth on the
// p_E scale, each carrying its share of the unit total volume.
struct TorusCoset {
    std::int64_t a;
    std::int64_t b;
    mpq_class weight;
};

std::vector<TorusCoset> torus_cosets(const LocalFieldParams& prm, int depth);

}  // namespace torper
