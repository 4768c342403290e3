#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace wavectl {

class DegreeOverflow : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// Sparse multivariate polynomial with exponent-vector monomials.
///
/// Scalar is any exact field type (mpq_class in practice); zero coefficients
/// are never stored, so structural equality with zero is exact cancellation.
template <class Scalar>
class Polynomial {
public:
    using Monomial = std::vector<int>;

    Polynomial() = default;
    explicit Polynomial(int nvars, int max_degree = 20) : nvars_(nvars), max_degree_(max_degree) {}

    static Polynomial constant(int nvars, const Scalar& c, int max_degree = 20) {
        Polynomial p(nvars, max_degree);
        p.add_term(Monomial(nvars, 0), c);
        return p;
    }
    static Polynomial variable(int nvars, int i, int max_degree = 20) {
        Polynomial p(nvars, max_degree);
        Monomial m(nvars, 0);
        m[i] = 1;
        p.add_term(m, Scalar(1));
        return p;
    }

    int nvars() const { return nvars_; }
    int max_degree() const { return max_degree_; }
    const std::map<Monomial, Scalar>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    int degree() const {
        int d = -1;
        for (const auto& [m, c] : terms_) {
            int s = 0;
            for (int e : m) s += e;
            d = std::max(d, s);
        }
        return d;
    }

    void add_term(const Monomial& m, const Scalar& c) {
        if (static_cast<int>(m.size()) != nvars_) throw std::invalid_argument("Polynomial: monomial arity mismatch");
        int s = 0;
        for (int e : m) s += e;
        if (s > max_degree_) {
            std::ostringstream os;
            os << "Polynomial: degree " << s << " exceeds cap " << max_degree_;
            throw DegreeOverflow(os.str());
        }
        auto it = terms_.find(m);
        if (it == terms_.end()) {
            if (c != 0) terms_.emplace(m, c);
        } else {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Polynomial& operator+=(const Polynomial& o) {
        adopt(o);
        for (const auto& [m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        adopt(o);
        for (const auto& [m, c] : o.terms_) add_term(m, -c);
        return *this;
    }
    Polynomial& operator*=(const Scalar& s) {
        if (s == 0) {
            terms_.clear();
            return *this;
        }
        for (auto& [m, c] : terms_) c *= s;
        return *this;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator-(Polynomial a) { return a *= Scalar(-1); }
    friend Polynomial operator*(Polynomial a, const Scalar& s) { return a *= s; }
    friend Polynomial operator*(const Scalar& s, Polynomial a) { return a *= s; }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        Polynomial r(std::max(a.nvars_, b.nvars_), std::min(a.max_degree_, b.max_degree_));
        if (a.nvars_ != b.nvars_ && !a.is_zero() && !b.is_zero())
            throw std::invalid_argument("Polynomial: variable count mismatch");
        Monomial m(r.nvars_);
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) {
                for (int i = 0; i < r.nvars_; ++i) m[i] = ma[i] + mb[i];
                r.add_term(m, ca * cb);
            }
        return r;
    }
    Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

    /// Partial derivative with respect to variable i.
    Polynomial diff(int i) const {
        Polynomial r(nvars_, max_degree_);
        for (const auto& [m, c] : terms_) {
            if (m[i] == 0) continue;
            Monomial d = m;
            --d[i];
            r.add_term(d, c * Scalar(m[i]));
        }
        return r;
    }

    Scalar evaluate(const std::vector<Scalar>& x) const {
        if (static_cast<int>(x.size()) != nvars_) throw std::invalid_argument("Polynomial: point arity mismatch");
        Scalar s(0);
        for (const auto& [m, c] : terms_) {
            Scalar t = c;
            for (int i = 0; i < nvars_; ++i)
                for (int e = 0; e < m[i]; ++e) t *= x[i];
            s += t;
        }
        return s;
    }

private:
    void adopt(const Polynomial& o) {
        if (nvars_ == 0 && terms_.empty()) {
            nvars_ = o.nvars_;
            max_degree_ = o.max_degree_;
        } else if (o.nvars_ != nvars_ && !o.is_zero()) {
            throw std::invalid_argument("Polynomial: variable count mismatch");
        }
    }

    int nvars_ = 0;
    int max_degree_ = 20;
    std::map<Monomial, Scalar> terms_;
};

}  // namespace wavectl
