#include "torper/padic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace torper {

namespace {

using i128 = __int128;

std::int64_t mulmod(std::int64_t a, std::int64_t b, std::int64_t m) {
    return static_cast<std::int64_t>(static_cast<i128>(a) * b % m);
}

}  // namespace

std::string to_string(ExtKind k) { return k == ExtKind::inert ? "inert" : "ramified"; }

ExtKind parse_ext_kind(const std::string& s) {
    if (s == "inert") return ExtKind::inert;
    if (s == "ramified") return ExtKind::ramified;
    throw InvalidParameter("extension kind must be inert or ramified, got '" + s + "'");
}

std::int64_t ipow(std::int64_t base, int exp) {
    if (exp < 0) throw std::invalid_argument("ipow: negative exponent");
    std::int64_t r = 1;
    for (int i = 0; i < exp; ++i) {
        if (r > std::numeric_limits<std::int64_t>::max() / base) throw PrecisionError("ipow overflow");
        r *= base;
    }
    return r;
}

int vp(std::int64_t x, std::int64_t p) {
    if (x == 0) throw std::invalid_argument("vp of zero");
    int v = 0;
    while (x % p == 0) {
        x /= p;
        ++v;
    }
    return v;
}

int vp(const mpz_class& x, std::int64_t p) {
    if (x == 0) throw std::invalid_argument("vp of zero");
    mpz_class y = x;
    mpz_class pp = static_cast<long>(p);
    return static_cast<int>(mpz_remove(y.get_mpz_t(), y.get_mpz_t(), pp.get_mpz_t()));
}

std::int64_t mod_pos(std::int64_t a, std::int64_t m) {
    a %= m;
    return a < 0 ? a + m : a;
}

std::int64_t mod_inverse(std::int64_t a, std::int64_t m) {
    std::int64_t g = m, x = 0, x1 = 1, r = mod_pos(a, m);
    while (r != 0) {
        std::int64_t t = g / r;
        std::tie(g, r) = std::make_pair(r, g - t * r);
        std::tie(x, x1) = std::make_pair(x1, x - t * x1);
    }
    if (g != 1) throw std::invalid_argument("mod_inverse: not a unit");
    return mod_pos(x, m);
}

bool is_prime(std::int64_t n) {
    if (n < 2) return false;
    for (std::int64_t d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

bool is_square_mod_p(std::int64_t a, std::int64_t p) {
    a = mod_pos(a, p);
    if (a == 0) throw std::invalid_argument("is_square_mod_p: not a unit");
    std::int64_t r = 1, b = a, e = (p - 1) / 2;
    while (e) {
        if (e & 1) r = mulmod(r, b, p);
        b = mulmod(b, b, p);
        e >>= 1;
    }
    return r == 1;
}

int val_q(const mpq_class& x, std::int64_t p) {
    if (x == 0) throw std::invalid_argument("val_q: zero");
    return vp(x.get_num(), p) - vp(x.get_den(), p);
}

mpq_class pow_q(std::int64_t p, int k) {
    mpz_class r;
    mpz_class pp = static_cast<long>(p);
    mpz_pow_ui(r.get_mpz_t(), pp.get_mpz_t(), static_cast<unsigned long>(std::abs(k)));
    return k >= 0 ? mpq_class(r) : mpq_class(1) / mpq_class(r);
}

mpq_class unit_part_q(const mpq_class& x, std::int64_t p) { return x / pow_q(p, val_q(x, p)); }

int max_precision(std::int64_t p) {
    int n = 0;
    double lim = 61.0;
    while ((n + 1) * std::log2(static_cast<double>(p)) < lim) ++n;
    return n;
}

LocalFieldParams make_params(std::int64_t p, ExtKind kind, int precision, std::optional<std::int64_t> D,
                             std::optional<std::int64_t> xi) {
    if (p < 5 || !is_prime(p)) throw InvalidPrime("p must be a prime >= 5, got " + std::to_string(p));
    if (precision < 1 || precision > max_precision(p))
        throw InvalidParameter("precision out of range: " + std::to_string(precision));
    LocalFieldParams prm;
    prm.p = p;
    prm.precision = precision;
    prm.kind = kind;
    if (kind == ExtKind::inert) {
        if (xi) throw InvalidParameter("xi applies to the ramified extension only");
        if (D) {
            if (mod_pos(*D, p) == 0 || is_square_mod_p(*D, p))
                throw InvalidParameter("inert D must be a non-residue unit mod p");
            prm.D = *D;
        } else {
            std::int64_t d = 2;
            while (is_square_mod_p(d, p)) ++d;
            prm.D = d;
        }
        prm.xi = 1;
    } else {
        std::int64_t x = xi.value_or(1);
        if (D) {
            if (*D % p != 0 || (*D / p) % p == 0) throw InvalidParameter("ramified D must have valuation 1");
            if (xi && *D != p * x) throw InvalidParameter("ramified D must equal p * xi");
            x = *D / p;
        }
        if (mod_pos(x, p) == 0) throw InvalidParameter("xi must be a unit");
        prm.xi = x;
        prm.D = p * x;
    }
    return prm;
}

// ---------------------------------------------------------------- ResidueElem

ResidueElem ResidueElem::zero(std::int64_t p, int floor) {
    ResidueElem r;
    r.p_ = p;
    r.val_ = floor;
    r.unit_ = 0;
    r.prec_ = 0;
    r.zero_ = true;
    return r;
}

ResidueElem ResidueElem::make(std::int64_t p, int val, std::int64_t unit, int prec) {
    if (prec <= 0) return zero(p, val);
    if (prec > max_precision(p)) throw PrecisionError("relative precision beyond word size");
    ResidueElem r;
    r.p_ = p;
    r.val_ = val;
    r.prec_ = prec;
    r.unit_ = mod_pos(unit, ipow(p, prec));
    if (r.unit_ % p == 0) throw std::invalid_argument("ResidueElem::make: unit divisible by p");
    r.zero_ = false;
    return r;
}

ResidueElem ResidueElem::from_int(std::int64_t p, std::int64_t x, int prec) {
    if (x == 0) return zero(p, prec);
    int v = vp(x, p);
    std::int64_t u = x / ipow(p, v);
    int rel = prec - v;
    if (rel <= 0) return zero(p, prec);
    return make(p, v, u, rel);
}

ResidueElem ResidueElem::from_mpz(std::int64_t p, const mpz_class& x, int prec) {
    if (x == 0) return zero(p, prec);
    int v = vp(x, p);
    int rel = prec - v;
    if (rel <= 0) return zero(p, prec);
    mpz_class pv, pr;
    mpz_ui_pow_ui(pv.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(v));
    mpz_ui_pow_ui(pr.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(rel));
    mpz_class u = x / pv;
    mpz_class r;
    mpz_mod(r.get_mpz_t(), u.get_mpz_t(), pr.get_mpz_t());
    return make(p, v, r.get_si(), rel);
}

ResidueElem ResidueElem::from_rational(std::int64_t p, const mpq_class& x, int prec) {
    if (x == 0) return zero(p, prec);
    int vn = vp(x.get_num(), p), vd = vp(x.get_den(), p);
    int v = vn - vd;
    int rel = prec - std::max(v, 0);
    if (v < 0) rel = prec;  // relative precision for negative valuation
    if (v >= prec) return zero(p, prec);
    mpz_class pr;
    mpz_ui_pow_ui(pr.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(rel));
    mpz_class num = x.get_num(), den = x.get_den(), pp = static_cast<long>(p);
    mpz_remove(num.get_mpz_t(), num.get_mpz_t(), pp.get_mpz_t());
    mpz_remove(den.get_mpz_t(), den.get_mpz_t(), pp.get_mpz_t());
    mpz_class inv, u;
    mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), pr.get_mpz_t());
    u = num * inv;
    mpz_mod(u.get_mpz_t(), u.get_mpz_t(), pr.get_mpz_t());
    return make(p, v, u.get_si(), rel);
}

std::int64_t ResidueElem::unit_mod(int L) const {
    if (zero_) throw std::logic_error("unit_mod of zero");
    if (L > prec_) throw PrecisionError("unit requested beyond known precision");
    return unit_ % ipow(p_, L);
}

std::int64_t ResidueElem::residue_mod(int L) const {
    if (L <= 0) return 0;
    if (zero_) {
        if (val_ < L) throw PrecisionError("zero marker below requested precision");
        return 0;
    }
    if (val_ < 0) throw PrecisionError("residue of a non-integral element");
    if (val_ >= L) return 0;
    if (L - val_ > prec_) throw PrecisionError("residue requested beyond known precision");
    return unit_mod(L - val_) * ipow(p_, val_);
}

mpq_class ResidueElem::to_rational() const {
    if (zero_) return 0;
    mpq_class r(static_cast<long>(unit_));
    mpz_class pv;
    mpz_ui_pow_ui(pv.get_mpz_t(), static_cast<unsigned long>(p_), static_cast<unsigned long>(std::abs(val_)));
    if (val_ >= 0)
        r *= pv;
    else
        r /= pv;
    return r;
}

ResidueElem ResidueElem::operator-() const {
    if (zero_) return *this;
    return make(p_, val_, -unit_, prec_);
}

ResidueElem ResidueElem::operator+(const ResidueElem& o) const {
    if (p_ != o.p_) throw std::invalid_argument("ResidueElem: mixed primes");
    int A = std::min(abs_precision(), o.abs_precision());
    if (zero_ && o.zero_) return zero(p_, A);
    if (zero_) return o.truncate(A - o.val_);
    if (o.zero_) return truncate(A - val_);
    int v = std::min(val_, o.val_);
    int rel = A - v;
    if (rel <= 0) return zero(p_, A);
    std::int64_t mod = ipow(p_, rel);
    auto lift = [&](const ResidueElem& x) {
        int s = x.val_ - v;
        if (s >= rel) return std::int64_t{0};
        return mulmod(x.unit_ % ipow(p_, rel - s), ipow(p_, s), mod);
    };
    std::int64_t s = mod_pos(lift(*this) + lift(o), mod);
    if (s == 0) return zero(p_, A);
    int t = vp(s, p_);
    return make(p_, v + t, s / ipow(p_, t), rel - t);
}

ResidueElem ResidueElem::operator-(const ResidueElem& o) const { return *this + (-o); }

ResidueElem ResidueElem::operator*(const ResidueElem& o) const {
    if (p_ != o.p_) throw std::invalid_argument("ResidueElem: mixed primes");
    if (zero_ && o.zero_) return zero(p_, val_ + o.val_);
    if (zero_) return zero(p_, val_ + o.val_);
    if (o.zero_) return zero(p_, val_ + o.val_);
    int rel = std::min(prec_, o.prec_);
    std::int64_t mod = ipow(p_, rel);
    return make(p_, val_ + o.val_, mulmod(unit_ % mod, o.unit_ % mod, mod), rel);
}

ResidueElem ResidueElem::inverse() const {
    if (zero_) throw std::domain_error("inverse of zero");
    return make(p_, -val_, mod_inverse(unit_, ipow(p_, prec_)), prec_);
}

ResidueElem ResidueElem::shift(int k) const {
    ResidueElem r = *this;
    r.val_ += k;
    return r;
}

ResidueElem ResidueElem::truncate(int prec) const {
    if (zero_) return *this;
    if (prec <= 0) return zero(p_, val_ + std::max(prec, 0));
    if (prec >= prec_) return *this;
    return make(p_, val_, unit_ % ipow(p_, prec), prec);
}

std::string to_string(const ResidueElem& x) {
    std::ostringstream os;
    if (x.is_zero())
        os << "O(" << x.prime() << "^" << x.val() << ")";
    else
        os << x.unit() << "*" << x.prime() << "^" << x.val() << " + O(" << x.prime() << "^" << x.abs_precision()
           << ")";
    return os.str();
}

// ---------------------------------------------------------------- ExtElem

namespace {

int ext_precision(const LocalFieldParams& prm, const ResidueElem& a, const ResidueElem& b) {
    return prm.kind == ExtKind::inert ? std::min(a.abs_precision(), b.abs_precision())
                                      : std::min(2 * a.abs_precision(), 2 * b.abs_precision() + 1);
}

void check_compatible(const LocalFieldParams& prm, const ExtElem& x) {
    if (x.a.prime() != prm.p || x.b.prime() != prm.p) throw std::invalid_argument("ExtElem: prime mismatch");
}

}  // namespace

ExtElem ext_make(const LocalFieldParams& prm, std::int64_t a, std::int64_t b, int prec) {
    ExtElem x{ResidueElem::from_int(prm.p, a, prec), ResidueElem::from_int(prm.p, b, prec), 0};
    x.precision_e = ext_precision(prm, x.a, x.b);
    return x;
}

ExtElem ext_mul(const LocalFieldParams& prm, const ExtElem& x, const ExtElem& y) {
    check_compatible(prm, x);
    check_compatible(prm, y);
    auto Dr = ResidueElem::from_int(prm.p, prm.D, prm.precision + 2);
    ExtElem r{x.a * y.a + x.b * y.b * Dr, x.a * y.b + x.b * y.a, 0};
    r.precision_e = ext_precision(prm, r.a, r.b);
    return r;
}

ResidueElem ext_norm(const LocalFieldParams& prm, const ExtElem& x) {
    check_compatible(prm, x);
    auto Dr = ResidueElem::from_int(prm.p, prm.D, prm.precision + 2);
    return x.a * x.a - x.b * x.b * Dr;
}

ResidueElem ext_trace(const ExtElem& x) { return x.a + x.a; }

ExtElem ext_conj(const ExtElem& x) { return {x.a, -x.b, x.precision_e}; }

int ext_val(const LocalFieldParams& prm, const ExtElem& x) {
    check_compatible(prm, x);
    if (x.a.is_zero() && x.b.is_zero()) throw PrecisionError("ext_val: element is zero at working precision");
    int e = prm.e();
    // for a zero marker these are only lower bounds
    int va = e * x.a.val();
    int vb = e * x.b.val() + (e - 1);
    if (x.a.is_zero() && vb >= va) throw PrecisionError("ext_val: undecided at working precision");
    if (x.b.is_zero() && va >= vb) throw PrecisionError("ext_val: undecided at working precision");
    return std::min(va, vb);
}

// ---------------------------------------------------------------- matrices

Mat2 mat_mul(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

Mat2 mat_scale(const ResidueElem& s, const Mat2& x) { return {s * x.a, s * x.b, s * x.c, s * x.d}; }

Mat2 mat_diag(const ResidueElem& x, const ResidueElem& y) {
    auto p = x.prime();
    auto z = ResidueElem::zero(p, std::max(x.abs_precision(), y.abs_precision()) + 64);
    return {x, z, z, y};
}

Mat2 mat_upper(const ResidueElem& x, const ResidueElem& m) {
    auto p = x.prime();
    int prec = std::max(x.prec(), 1);
    auto z = ResidueElem::zero(p, x.abs_precision() + 64);
    return {x, m, z, ResidueElem::make(p, 0, 1, prec)};
}

Mat2 mat_lower_unipotent(std::int64_t p, int i, int prec) {
    auto one = ResidueElem::make(p, 0, 1, prec);
    auto z = ResidueElem::zero(p, prec + 64);
    return {one, z, ResidueElem::make(p, i, 1, prec), one};
}

bool mat_equal(const Mat2& x, const Mat2& y, int abs_prec) {
    auto close = [&](const ResidueElem& u, const ResidueElem& v) {
        auto d = u - v;
        if (d.is_zero()) return d.val() >= abs_prec || std::min(u.abs_precision(), v.abs_precision()) == d.val();
        return d.val() >= abs_prec;
    };
    return close(x.a, y.a) && close(x.b, y.b) && close(x.c, y.c) && close(x.d, y.d);
}

namespace {

int lower_bound_val(const ResidueElem& x) { return x.val(); }

bool is_integral(const ResidueElem& x) { return lower_bound_val(x) >= 0; }

bool is_unit(const ResidueElem& x) { return !x.is_zero() && x.val() == 0; }

}  // namespace

bool in_K0(const Mat2& k, int c) {
    if (!is_integral(k.a) || !is_integral(k.b) || !is_integral(k.d)) return false;
    if (lower_bound_val(k.c) < c) return false;
    auto det = k.a * k.d - k.b * k.c;
    return is_unit(det);
}

bool in_K11(const Mat2& k, int lower, int diag) {
    auto p = k.a.prime();
    auto one = ResidueElem::make(p, 0, 1, std::max(k.a.prec(), 1));
    auto ok = [&](const ResidueElem& x, int v) { return x.is_zero() ? x.val() >= v : x.val() >= v; };
    return ok(k.a - one, diag) && ok(k.d - one, diag) && ok(k.b, diag) && ok(k.c, lower);
}

IwasawaResult iwasawa_decompose(const Mat2& g, int c) {
    if (c < 0) throw std::invalid_argument("iwasawa_decompose: negative level");
    const auto p = g.a.prime();
    const auto& A = g.a;
    const auto& B = g.b;
    const auto& C = g.c;
    const auto& Dd = g.d;
    auto det = A * Dd - B * C;
    if (det.is_zero()) throw PrecisionError("iwasawa_decompose: determinant vanishes at working precision");
    int prec = std::max({A.prec(), B.prec(), C.prec(), Dd.prec(), 1});
    auto one = ResidueElem::make(p, 0, 1, prec);
    auto zero = ResidueElem::zero(p, prec + 64);
    IwasawaResult r;

    bool c_small;  // v(C) < v(Dd)
    if (C.is_zero() && Dd.is_zero()) throw PrecisionError("iwasawa_decompose: bottom row vanishes");
    if (Dd.is_zero()) {
        if (Dd.val() <= C.val()) throw PrecisionError("iwasawa_decompose: precision insufficient to decide i");
        c_small = true;
    } else if (C.is_zero()) {
        if (C.val() - Dd.val() < c) throw PrecisionError("iwasawa_decompose: precision insufficient to decide i");
        c_small = false;
    } else {
        c_small = C.val() < Dd.val();
    }

    if (c_small) {
        // kappa = n(s) with s = Dd/C - 1
        auto s = Dd * C.inverse() - one;
        r.i = 0;
        r.k0 = {one, s, zero, one};
        r.borel = {A - B + A * s, B - A * s, zero, C};
        return r;
    }
    int diff = C.val() - Dd.val();  // >= 0 (zero marker: lower bound)
    auto t = C.is_zero() ? ResidueElem::zero(p, diff) : C * Dd.inverse();
    if (C.is_zero() || diff >= c) {
        r.i = c;
        auto pc = ResidueElem::make(p, c, 1, prec);
        r.k0 = {one, zero, t - pc, one};
        r.borel = {A - B * t, B, zero, Dd};
        return r;
    }
    r.i = diff;
    auto u = ResidueElem::make(p, 0, t.unit(), t.prec());
    r.k0 = {one, zero, zero, u.inverse()};
    // n^-(t) = diag(1,u) n^-(p^i) diag(1,u^{-1})
    r.borel = mat_mul(Mat2{A - B * t, B, zero, Dd}, mat_diag(one, u));
    return r;
}

// ---------------------------------------------------------------- conjugated torus

Mat2 conjugated_torus_matrix(const ResidueElem& a, const ResidueElem& b, int d, const LocalFieldParams& prm) {
    int prec = std::max({a.prec(), b.prec(), 1});
    auto Dr = ResidueElem::from_int(prm.p, prm.D, prec + 1);
    return {a, b.shift(-d), b * Dr.shift(d), a};
}

TorusDecomposition conjugated_torus_decompose(const ResidueElem& a, const ResidueElem& b, int d,
                                              const LocalFieldParams& prm) {
    const auto p = prm.p;
    if (a.is_zero() && b.is_zero()) throw PrecisionError("conjugated_torus_decompose: (a, b) vanishes");
    int prec = std::max({a.prec(), b.prec(), 1});
    auto one = ResidueElem::make(p, 0, 1, prec);
    auto Dr = ResidueElem::from_int(p, prm.D, prec + 1);
    TorusDecomposition t;
    if (b.is_zero()) {
        t.kind = TorusDecomposition::Case::identity;
        t.i = kInfiniteIndex;
        t.scalar = a;
        t.top_left = one;
        t.top_right = ResidueElem::zero(p, prec);
        return t;
    }
    auto s = b * Dr.shift(d);  // b D p^d
    if (a.is_zero()) {
        if (a.val() <= s.val()) throw PrecisionError("conjugated_torus_decompose: precision insufficient");
    }
    if (!a.is_zero() && s.val() - a.val() >= 0) {
        t.kind = TorusDecomposition::Case::upper;
        t.i = s.val() - a.val();
        auto u = ResidueElem::make(p, 0, (s * a.inverse()).unit(), (s * a.inverse()).prec());
        auto N = a * a - b * b * Dr;
        t.top_left = (N * (a * b * Dr).inverse()).shift(t.i - d);
        t.top_right = b * a.inverse().shift(-d);
        t.scalar = a * u;
        t.kappa_unit = u;
        return t;
    }
    t.kind = TorusDecomposition::Case::lower;
    t.i = 0;
    auto N = a * a - b * b * Dr;
    auto m = a * s.inverse();
    t.top_left = N * (s * s).inverse();
    t.top_right = m - t.top_left;
    t.scalar = s;
    t.kappa_shift = m - one;
    return t;
}

Mat2 recompose(const TorusDecomposition& t, std::int64_t p) {
    int prec = std::max({t.scalar.prec(), t.top_left.prec(), 1});
    auto one = ResidueElem::make(p, 0, 1, prec);
    auto zero = ResidueElem::zero(p, prec + 64);
    Mat2 borel{t.top_left, t.top_right, zero, one};
    Mat2 g;
    switch (t.kind) {
        case TorusDecomposition::Case::identity:
            g = mat_mul(mat_scale(t.scalar, borel), Mat2{one, zero, zero, one});
            break;
        case TorusDecomposition::Case::upper:
            g = mat_mul(mat_mul(borel, mat_lower_unipotent(p, t.i, prec)), mat_diag(one, t.kappa_unit.inverse()));
            g = mat_scale(t.scalar, g);
            break;
        case TorusDecomposition::Case::lower:
            g = mat_mul(mat_mul(borel, mat_lower_unipotent(p, 0, prec)), Mat2{one, t.kappa_shift, zero, one});
            g = mat_scale(t.scalar, g);
            break;
    }
    return g;
}

std::vector<TorusCoset> torus_cosets(const LocalFieldParams& prm, int depth) {
    if (depth < 0) throw std::invalid_argument("torus_cosets: negative depth");
    const auto p = prm.p;
    std::vector<TorusCoset> out;
    if (prm.kind == ExtKind::inert) {
        if (depth == 0) return {{1, 0, mpq_class(1)}};
        std::int64_t top = ipow(p, depth);
        for (std::int64_t b = 0; b < top; b += p) out.push_back({1, b, 0});
        for (std::int64_t a = 0; a < top; ++a) out.push_back({a, 1, 0});
    } else {
        int h = depth / 2;  // ceil((depth - 1) / 2)
        std::int64_t mb = ipow(p, h), ma = ipow(p, h + 1);
        for (std::int64_t b = 0; b < mb; ++b) out.push_back({1, b, 0});
        for (std::int64_t a = 0; a < ma; a += p) out.push_back({a, 1, 0});
    }
    mpq_class w(1, static_cast<long>(out.size()));
    for (auto& c : out) c.weight = w;
    return out;
}

}  // namespace torper
