#include "torper/values.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace torper {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSlack = 1e-9;

u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

u64 powmod(u64 a, u64 e, u64 m) {
    u64 r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod(r, a, m);
        a = mulmod(a, a, m);
        e >>= 1;
    }
    return r;
}

u64 invmod(u64 a, u64 m) { return powmod(a, m - 2, m); }

bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (u64 a : {2ULL, 325ULL, 9375ULL, 28178ULL, 450775ULL, 9780504ULL, 1795265022ULL}) {
        u64 x = powmod(a % n, d, n);
        if (x == 0 || x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

std::vector<CycContext::PrimePower> factor(u64 M) {
    std::vector<CycContext::PrimePower> out;
    for (u64 p = 2; p * p <= M; ++p) {
        if (M % p) continue;
        CycContext::PrimePower pp{p, 0, 1};
        while (M % p == 0) {
            M /= p;
            ++pp.exp;
            pp.value *= p;
        }
        out.push_back(pp);
    }
    if (M > 1) out.push_back({M, 1, M});
    return out;
}

double log2_mpz(const mpz_class& z) {
    if (z == 0) return kNegInf;
    long ex = 0;
    double d = mpz_get_d_2exp(&ex, z.get_mpz_t());
    return std::log2(std::fabs(d)) + static_cast<double>(ex);
}

double log2_sum(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log2(1.0 + std::exp2(lo - hi)) + kLogSlack;
}

u64 smallest_prime_factor(u64 n) {
    for (u64 p = 2; p * p <= n; ++p)
        if (n % p == 0) return p;
    return n;
}

// out[j] = sum_e in[e*stride] * w_n^{j e}, w_n = w^{M/n}
void dft_rec(const u64* in, std::size_t stride, u64 n, u64* out, const std::vector<u64>& pw, u64 M, u64 l) {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    u64 r = smallest_prime_factor(n);
    u64 m = n / r;
    std::vector<u64> tmp(n);
    for (u64 s = 0; s < r; ++s) dft_rec(in + s * stride, stride * r, m, tmp.data() + s * m, pw, M, l);
    u64 step = M / n;
    for (u64 j = 0; j < n; ++j) {
        u64 base = (j * step) % M, t = 0;
        u128 acc = 0;
        for (u64 s = 0; s < r; ++s) {
            acc += static_cast<u128>(pw[t]) * tmp[s * m + (j % m)];
            t += base;
            if (t >= M) t -= M;
            if ((s & 7) == 7) acc %= l;
        }
        out[j] = static_cast<u64>(acc % l);
    }
}

mpz_class crt_symmetric(const std::vector<u64>& res, const std::vector<u64>& mods) {
    mpz_class x = 0, P = 1;
    for (std::size_t k = 0; k < mods.size(); ++k) {
        mpz_class m = static_cast<unsigned long>(mods[k]);
        mpz_class r = static_cast<unsigned long>(res[k]);
        // x + P*t = r mod m
        mpz_class diff = (r - x) % m;
        if (diff < 0) diff += m;
        mpz_class Pinv;
        mpz_invert(Pinv.get_mpz_t(), mpz_class(P % m).get_mpz_t(), m.get_mpz_t());
        mpz_class t = (diff * Pinv) % m;
        x += P * t;
        P *= m;
    }
    if (2 * x > P) x -= P;
    return x;
}

}  // namespace

// ---------------------------------------------------------------- Phase

Phase::Phase(std::int64_t n, std::int64_t d) {
    if (d <= 0) throw std::invalid_argument("phase denominator must be positive");
    std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    if (g == 0) g = d;
    num = n / g;
    den = d / g;
    num %= den;
    if (num < 0) num += den;
    if (num == 0) den = 1;
}

Phase Phase::operator+(const Phase& o) const {
    std::int64_t l = std::lcm(den, o.den);
    __int128 a = static_cast<__int128>(num) * (l / den) + static_cast<__int128>(o.num) * (l / o.den);
    return Phase(static_cast<std::int64_t>(a % l), l);
}

Phase Phase::operator-(const Phase& o) const { return *this + (-o); }

Phase Phase::times(std::int64_t k) const {
    __int128 a = static_cast<__int128>(num) * (k % den);
    a %= den;
    return Phase(static_cast<std::int64_t>(a), den);
}

std::int64_t Phase::exponent(std::uint64_t M) const {
    if (M % static_cast<u64>(den) != 0)
        throw FieldBoundError("root of unity of order " + std::to_string(den) + " not in Q(zeta_" + std::to_string(M) +
                              ")");
    return num * static_cast<std::int64_t>(M / static_cast<u64>(den));
}

// ---------------------------------------------------------------- context

std::shared_ptr<const CycContext> CycContext::make(std::uint64_t M, int nprimes) {
    return std::make_shared<const CycContext>(M, nprimes);
}

CycContext::CycContext(std::uint64_t M, int nprimes) : M_(M), factors_(factor(M)) {
    if (M == 0) throw std::invalid_argument("cyclotomic modulus must be positive");
    if (M > (1ULL << 24)) throw FieldBoundError("cyclotomic modulus " + std::to_string(M) + " exceeds bound");
    if (nprimes < 1) throw std::invalid_argument("need at least one prime");

    u64 cand = ((1ULL << 62) / M) * M + 1;
    while (static_cast<int>(ell_.size()) < nprimes) {
        cand -= M;
        if (is_prime_u64(cand)) ell_.push_back(cand);
    }
    for (u64 l : ell_) {
        u64 w = 0;
        for (u64 g = 2;; ++g) {
            w = powmod(g, (l - 1) / M, l);
            bool ok = true;
            for (const auto& f : factors_)
                if (powmod(w, M / f.prime, l) == 1) ok = false;
            if (ok) break;
        }
        std::vector<u64> t(M);
        t[0] = 1;
        for (u64 i = 1; i < M; ++i) t[i] = mulmod(t[i - 1], w, l);
        pw_.push_back(std::move(t));
        bits_ += std::log2(static_cast<double>(l));
    }

    // slots in lexicographic order of (j mod m_1, j mod m_2, ...)
    for (const auto& f : factors_) {
        u64 rest = M / f.value;
        u64 e = 0;
        for (u64 t = 0; t < f.value; ++t)
            if ((rest * t) % f.value == 1) e = rest * t;
        idem_.push_back(e % M);
    }
    units_ = {0};
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        std::vector<u64> next;
        for (u64 j : units_)
            for (u64 u = 0; u < factors_[i].value; ++u)
                if (u % factors_[i].prime != 0) next.push_back((j + mulmod(u, idem_[i], M)) % M);
        units_ = std::move(next);
    }
    std::vector<std::int64_t> slot_of(M, -1);
    for (std::size_t s = 0; s < units_.size(); ++s) slot_of[units_[s]] = static_cast<std::int64_t>(s);
    conj_slot_.resize(units_.size());
    for (std::size_t s = 0; s < units_.size(); ++s)
        conj_slot_[s] = static_cast<std::uint32_t>(slot_of[(M - units_[s]) % M]);
}

std::vector<std::uint64_t> CycContext::basis_exponents() const {
    build_inverses();
    std::vector<u64> out = {0};
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        std::vector<u64> next;
        for (u64 x : out)
            for (u64 b : factor_basis_[i]) next.push_back((x + mulmod(b, idem_[i], M_)) % M_);
        out = std::move(next);
    }
    return out;
}

void CycContext::build_inverses() const {
    std::call_once(inv_once_, [this] {
        factor_basis_.clear();
        for (const auto& f : factors_) {
            std::vector<u64> basis;
            u64 top = f.value / f.prime;
            for (u64 b = 0; b < f.value; ++b)
                if (b / top <= f.prime - 2) basis.push_back(b);
            factor_basis_.push_back(std::move(basis));
        }
        inv_.assign(ell_.size(), {});
        for (std::size_t k = 0; k < ell_.size(); ++k) {
            u64 l = ell_[k];
            for (std::size_t i = 0; i < factors_.size(); ++i) {
                const auto& f = factors_[i];
                const auto& basis = factor_basis_[i];
                std::vector<u64> us;
                for (u64 u = 0; u < f.value; ++u)
                    if (u % f.prime) us.push_back(u);
                std::size_t n = basis.size();
                // T[u][b] = W^{b u}, W = w^{idem} has order m
                std::vector<u64> a(n * 2 * n, 0);
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t c = 0; c < n; ++c) a[r * 2 * n + c] = pw_[k][mulmod(idem_[i], (basis[c] * us[r]) % f.value, M_)];
                    a[r * 2 * n + n + r] = 1;
                }
                for (std::size_t c = 0; c < n; ++c) {
                    std::size_t piv = c;
                    while (a[piv * 2 * n + c] == 0) ++piv;
                    if (piv != c)
                        for (std::size_t t = 0; t < 2 * n; ++t) std::swap(a[piv * 2 * n + t], a[c * 2 * n + t]);
                    u64 iv = invmod(a[c * 2 * n + c], l);
                    for (std::size_t t = 0; t < 2 * n; ++t) a[c * 2 * n + t] = mulmod(a[c * 2 * n + t], iv, l);
                    for (std::size_t r = 0; r < n; ++r) {
                        if (r == c || a[r * 2 * n + c] == 0) continue;
                        u64 fct = a[r * 2 * n + c];
                        for (std::size_t t = 0; t < 2 * n; ++t)
                            a[r * 2 * n + t] = (a[r * 2 * n + t] + l - mulmod(fct, a[c * 2 * n + t], l)) % l;
                    }
                }
                std::vector<u64> invm(n * n);
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t c = 0; c < n; ++c) invm[r * n + c] = a[r * 2 * n + n + c];
                inv_[k].push_back(std::move(invm));
            }
        }
    });
}

std::uint64_t CycContext::residue(std::int64_t num, int k) const {
    u64 l = ell_[k];
    std::int64_t r = num % static_cast<std::int64_t>(l);
    if (r < 0) r += static_cast<std::int64_t>(l);
    return static_cast<u64>(r);
}

std::uint64_t CycContext::residue(const mpz_class& num, int k) const {
    mpz_class r = num % mpz_class(static_cast<unsigned long>(ell_[k]));
    if (r < 0) r += static_cast<unsigned long>(ell_[k]);
    return r.get_ui();
}

CycValue CycContext::zero() const {
    CycValue v;
    v.ctx_ = shared_from_this();
    v.ev_.assign(ell_.size() * units_.size(), 0);
    v.hbits_ = kNegInf;
    return v;
}

CycValue CycContext::one() const { return rational(1, 1); }

CycValue CycContext::rational(std::int64_t num, std::int64_t den) const {
    return rational(mpq_class(mpz_class(static_cast<long>(num)), mpz_class(static_cast<long>(den))));
}

CycValue CycContext::rational(const mpq_class& r0) const {
    mpq_class r = r0;
    r.canonicalize();
    CycValue v = zero();
    if (r == 0) return v;
    std::size_t n = units_.size();
    for (int k = 0; k < nprimes(); ++k) {
        u64 x = mulmod(residue(r.get_num(), k), invmod(residue(r.get_den(), k), ell_[k]), ell_[k]);
        std::fill(v.ev_.begin() + k * n, v.ev_.begin() + (k + 1) * n, x);
    }
    v.den_ = r.get_den();
    v.hbits_ = log2_mpz(r.get_num());
    return v;
}

CycValue CycContext::root(std::int64_t e) const {
    CycValue v = zero();
    std::int64_t Ms = static_cast<std::int64_t>(M_);
    u64 ee = static_cast<u64>(((e % Ms) + Ms) % Ms);
    std::size_t n = units_.size();
    for (int k = 0; k < nprimes(); ++k)
        for (std::size_t s = 0; s < n; ++s) v.ev_[k * n + s] = pw_[k][mulmod(ee, units_[s], M_)];
    v.hbits_ = 0;
    return v;
}

void CycContext::transform(const std::vector<std::int64_t>& counts, std::vector<std::uint64_t>& ev) const {
    std::size_t n = units_.size();
    ev.assign(ell_.size() * n, 0);
    std::vector<u64> nz;
    for (u64 e = 0; e < M_; ++e)
        if (counts[e] != 0) nz.push_back(e);
    double radix = 0;
    for (const auto& f : factors_) radix += static_cast<double>(f.prime) * f.exp;
    bool direct = static_cast<double>(nz.size()) * static_cast<double>(n) <
                  static_cast<double>(M_) * std::max(radix, 1.0);
    for (int k = 0; k < nprimes(); ++k) {
        u64 l = ell_[k];
        if (direct) {
            for (u64 e : nz) {
                u64 c = residue(counts[e], k);
                for (std::size_t s = 0; s < n; ++s) {
                    u64& slot = ev[k * n + s];
                    slot += mulmod(c, pw_[k][e * units_[s] % M_], l);
                    if (slot >= l) slot -= l;
                }
            }
        } else {
            std::vector<u64> in(M_), out(M_);
            for (u64 e = 0; e < M_; ++e) in[e] = residue(counts[e], k);
            dft_rec(in.data(), 1, M_, out.data(), pw_[k], M_, l);
            for (std::size_t s = 0; s < n; ++s) ev[k * n + s] = out[units_[s]];
        }
    }
}

// ---------------------------------------------------------------- values

void CycValue::check_same(const CycValue& o) const {
    if (!ctx_ || !o.ctx_) throw std::logic_error("uninitialised cyclotomic value");
    if (ctx_ != o.ctx_ && ctx_->modulus() != o.ctx_->modulus())
        throw FieldBoundError("values from different cyclotomic fields");
    if (ctx_ != o.ctx_) throw FieldBoundError("values from different field contexts");
}

std::uint64_t CycValue::modulus() const { return ctx_->modulus(); }

CycValue CycValue::operator+(const CycValue& o) const {
    check_same(o);
    if (hbits_ == kNegInf) return o;
    if (o.hbits_ == kNegInf) return *this;
    CycValue r;
    r.ctx_ = ctx_;
    r.ev_.resize(ev_.size());
    std::size_t n = ctx_->degree();
    for (int k = 0; k < ctx_->nprimes(); ++k) {
        u64 l = ctx_->ell_[k];
        for (std::size_t s = 0; s < n; ++s) {
            u64 a = ev_[k * n + s] + o.ev_[k * n + s];
            r.ev_[k * n + s] = a >= l ? a - l : a;
        }
    }
    mpz_class L;
    mpz_lcm(L.get_mpz_t(), den_.get_mpz_t(), o.den_.get_mpz_t());
    r.den_ = L;
    double a = hbits_ + log2_mpz(mpz_class(L / den_));
    double b = o.hbits_ + log2_mpz(mpz_class(L / o.den_));
    r.hbits_ = log2_sum(a, b);
    return r;
}

CycValue CycValue::operator-() const {
    CycValue r = *this;
    std::size_t n = ctx_->degree();
    for (int k = 0; k < ctx_->nprimes(); ++k) {
        u64 l = ctx_->ell_[k];
        for (std::size_t s = 0; s < n; ++s) {
            u64& x = r.ev_[k * n + s];
            x = x == 0 ? 0 : l - x;
        }
    }
    return r;
}

CycValue CycValue::operator-(const CycValue& o) const { return *this + (-o); }

CycValue CycValue::operator*(const CycValue& o) const {
    check_same(o);
    if (hbits_ == kNegInf) return *this;
    if (o.hbits_ == kNegInf) return o;
    CycValue r;
    r.ctx_ = ctx_;
    r.ev_.resize(ev_.size());
    std::size_t n = ctx_->degree();
    for (int k = 0; k < ctx_->nprimes(); ++k) {
        u64 l = ctx_->ell_[k];
        for (std::size_t s = 0; s < n; ++s) r.ev_[k * n + s] = mulmod(ev_[k * n + s], o.ev_[k * n + s], l);
    }
    r.den_ = den_ * o.den_;
    r.hbits_ = hbits_ + o.hbits_ + kLogSlack;
    return r;
}

CycValue CycValue::conj() const {
    CycValue r = *this;
    std::size_t n = ctx_->degree();
    for (int k = 0; k < ctx_->nprimes(); ++k)
        for (std::size_t s = 0; s < n; ++s) r.ev_[k * n + s] = ev_[k * n + ctx_->conj_slot_[s]];
    return r;
}

CycValue CycValue::times_root(std::int64_t e) const {
    if (hbits_ == kNegInf) return *this;
    CycValue r = *this;
    u64 M = ctx_->modulus();
    std::int64_t Ms = static_cast<std::int64_t>(M);
    u64 ee = static_cast<u64>(((e % Ms) + Ms) % Ms);
    if (ee == 0) return r;
    std::size_t n = ctx_->degree();
    for (int k = 0; k < ctx_->nprimes(); ++k) {
        u64 l = ctx_->ell_[k];
        for (std::size_t s = 0; s < n; ++s)
            r.ev_[k * n + s] = mulmod(ev_[k * n + s], ctx_->pw_[k][ee * ctx_->units_[s] % M], l);
    }
    return r;
}

CycValue& CycValue::add_times_root(const CycValue& x, std::int64_t e) {
    check_same(x);
    if (x.hbits_ == kNegInf) return *this;
    if (hbits_ == kNegInf) return *this = x.times_root(e);
    if (den_ != x.den_) return *this = *this + x.times_root(e);
    u64 M = ctx_->modulus();
    std::int64_t Ms = static_cast<std::int64_t>(M);
    u64 ee = static_cast<u64>(((e % Ms) + Ms) % Ms);
    std::size_t n = ctx_->degree();
    for (int k = 0; k < ctx_->nprimes(); ++k) {
        u64 l = ctx_->ell_[k];
        const auto& pw = ctx_->pw_[k];
        for (std::size_t s = 0; s < n; ++s) {
            u64 a = ev_[k * n + s] + mulmod(x.ev_[k * n + s], pw[ee * ctx_->units_[s] % M], l);
            ev_[k * n + s] = a >= l ? a - l : a;
        }
    }
    hbits_ = log2_sum(hbits_, x.hbits_);
    return *this;
}

bool CycValue::is_zero() const {
    if (hbits_ == kNegInf) return true;
    for (u64 x : ev_)
        if (x != 0) return false;
    if (hbits_ + 1.0 >= ctx_->modulus_bits())
        throw FieldBoundError("numerator height 2^" + std::to_string(hbits_) + " exceeds the modular certificate");
    return true;
}

bool CycValue::equals_rational(const mpq_class& r) const { return (*this - ctx_->rational(r)).is_zero(); }

std::optional<mpq_class> CycValue::as_rational() const {
    if (hbits_ == kNegInf) return mpq_class(0);
    std::size_t n = ctx_->degree();
    std::vector<u64> res(ctx_->nprimes());
    for (int k = 0; k < ctx_->nprimes(); ++k) {
        u64 r0 = ev_[k * n];
        for (std::size_t s = 1; s < n; ++s)
            if (ev_[k * n + s] != r0) return std::nullopt;
        res[k] = mulmod(r0, ctx_->residue(den_, k), ctx_->ell_[k]);
    }
    if (hbits_ + 1.0 >= ctx_->modulus_bits())
        throw FieldBoundError("numerator height exceeds the modular certificate");
    mpq_class q(crt_symmetric(res, ctx_->ell_), den_);
    q.canonicalize();
    return q;
}

std::vector<mpq_class> CycValue::coefficients() const {
    ctx_->build_inverses();
    std::size_t n = ctx_->degree();
    const auto& fac = ctx_->factors_;
    if (hbits_ + 1.0 >= ctx_->modulus_bits())
        throw FieldBoundError("numerator height exceeds the modular certificate");
    std::vector<std::vector<u64>> per(ctx_->nprimes());
    for (int k = 0; k < ctx_->nprimes(); ++k) {
        u64 l = ctx_->ell_[k];
        std::vector<u64> t(ev_.begin() + k * n, ev_.begin() + (k + 1) * n);
        std::size_t after = n;
        for (std::size_t i = 0; i < fac.size(); ++i) {
            std::size_t sz = ctx_->factor_basis_[i].size();
            after /= sz;
            std::size_t before = n / (sz * after);
            const auto& inv = ctx_->inv_[k][i];
            std::vector<u64> out(n, 0), col(sz);
            for (std::size_t b = 0; b < before; ++b)
                for (std::size_t a = 0; a < after; ++a) {
                    for (std::size_t r = 0; r < sz; ++r) col[r] = t[(b * sz + r) * after + a];
                    for (std::size_t r = 0; r < sz; ++r) {
                        u128 acc = 0;
                        for (std::size_t c = 0; c < sz; ++c) {
                            acc += static_cast<u128>(inv[r * sz + c]) * col[c];
                            if ((c & 7) == 7) acc %= l;
                        }
                        out[(b * sz + r) * after + a] = static_cast<u64>(acc % l);
                    }
                }
            t = std::move(out);
        }
        u64 d = ctx_->residue(den_, k);
        for (auto& x : t) x = mulmod(x, d, l);
        per[k] = std::move(t);
    }
    std::vector<mpq_class> coeffs(n);
    std::vector<u64> res(ctx_->nprimes());
    for (std::size_t s = 0; s < n; ++s) {
        for (int k = 0; k < ctx_->nprimes(); ++k) res[k] = per[k][s];
        coeffs[s] = mpq_class(crt_symmetric(res, ctx_->ell_), den_);
        coeffs[s].canonicalize();
    }
    return coeffs;
}

std::complex<double> CycValue::to_complex() const {
    if (hbits_ == kNegInf) return {0.0, 0.0};
    auto coeffs = coefficients();
    auto expo = ctx_->basis_exponents();
    long double re = 0, im = 0;
    const long double two_pi = 6.283185307179586476925286766559L;
    for (std::size_t s = 0; s < coeffs.size(); ++s) {
        if (coeffs[s] == 0) continue;
        long double c = coeffs[s].get_d();
        long double ang = two_pi * static_cast<long double>(expo[s]) / static_cast<long double>(ctx_->modulus());
        re += c * std::cos(ang);
        im += c * std::sin(ang);
    }
    return {static_cast<double>(re), static_cast<double>(im)};
}

// ---------------------------------------------------------------- accumulators

CycAccumulator::CycAccumulator(std::shared_ptr<const CycContext> ctx)
    : ctx_(std::move(ctx)), counts_(ctx_->modulus(), 0) {}

void CycAccumulator::add(std::int64_t e, std::int64_t coeff) {
    std::int64_t Ms = static_cast<std::int64_t>(ctx_->modulus());
    counts_[static_cast<std::size_t>(((e % Ms) + Ms) % Ms)] += coeff;
}

CycValue CycAccumulator::value(const mpz_class& den) const {
    CycValue v = ctx_->zero();
    mpz_class S = 0;
    for (auto c : counts_) S += c < 0 ? -c : c;
    if (S == 0) return v;
    ctx_->transform(counts_, v.ev_);
    std::size_t n = ctx_->degree();
    for (int k = 0; k < ctx_->nprimes(); ++k) {
        u64 l = ctx_->ell_[k];
        u64 di = invmod(ctx_->residue(den, k), l);
        for (std::size_t s = 0; s < n; ++s) v.ev_[k * n + s] = mulmod(v.ev_[k * n + s], di, l);
    }
    v.den_ = den;
    v.hbits_ = log2_mpz(S);
    return v;
}

void FloatAccumulator::add(std::int64_t e, std::int64_t coeff) {
    long double ang = 6.283185307179586476925286766559L * static_cast<long double>(e) / static_cast<long double>(M_);
    sum_ += static_cast<double>(coeff) * FloatValue(static_cast<double>(std::cos(ang)), static_cast<double>(std::sin(ang)));
}

void FloatAccumulator::add(const Phase& ph, std::int64_t coeff) {
    long double ang = 6.283185307179586476925286766559L * static_cast<long double>(ph.num) / static_cast<long double>(ph.den);
    sum_ += static_cast<double>(coeff) * FloatValue(static_cast<double>(std::cos(ang)), static_cast<double>(std::sin(ang)));
}

FloatValue FloatAccumulator::value(const mpz_class& den) const { return sum_ / den.get_d(); }

FloatValue FloatField::root(const Phase& ph) const {
    long double ang = 6.283185307179586476925286766559L * static_cast<long double>(ph.num) / static_cast<long double>(ph.den);
    return {static_cast<double>(std::cos(ang)), static_cast<double>(std::sin(ang))};
}

FloatValue FloatField::root(std::int64_t e) const { return root(Phase(e, static_cast<std::int64_t>(M_))); }

FloatValue times_root(const FloatValue& x, std::int64_t e, std::uint64_t M) {
    return x * FloatField(M).root(e);
}

std::string to_string(const mpq_class& r) {
    mpq_class c = r;
    c.canonicalize();
    if (c.get_den() == 1) return c.get_num().get_str();
    return c.get_num().get_str() + "/" + c.get_den().get_str();
}

}  // namespace torper
