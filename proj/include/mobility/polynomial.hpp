#pragma once

// Sparse multivariate polynomials with double coefficients, used as symbolic
// edge gains when expanding Mason's formula on small graphs.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>

namespace mobility {

template <std::size_t NVars>
class Polynomial {
public:
    using Monomial = std::array<std::uint8_t, NVars>;  // exponent per variable

    Polynomial() = default;
    Polynomial(double c) {  // NOLINT: implicit from constants
        if (c != 0.0) terms_[Monomial{}] = c;
    }
    static Polynomial variable(std::size_t i) {
        Polynomial p;
        Monomial m{};
        m[i] = 1;
        p.terms_[m] = 1.0;
        return p;
    }

    const std::map<Monomial, double>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    double coefficient(const Monomial& m) const {
        const auto it = terms_.find(m);
        return it == terms_.end() ? 0.0 : it->second;
    }

    Polynomial& operator+=(const Polynomial& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        for (const auto& [m, c] : o.terms_) add_term(m, -c);
        return *this;
    }
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator-(const Polynomial& a) { return Polynomial{} - a; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        Polynomial r;
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) {
                Monomial m{};
                for (std::size_t i = 0; i < NVars; ++i) m[i] = static_cast<std::uint8_t>(ma[i] + mb[i]);
                r.add_term(m, ca * cb);
            }
        return r;
    }
    Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }
    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

    template <class Values>
    double evaluate(const Values& x) const {
        double s = 0.0;
        for (const auto& [m, c] : terms_) {
            double t = c;
            for (std::size_t i = 0; i < NVars; ++i)
                for (std::uint8_t e = 0; e < m[i]; ++e) t *= x[i];
            s += t;
        }
        return s;
    }

    /// e.g. "-k1*k2 + k3^2" with variables named prefix + index.
    std::string to_string(const std::string& prefix = "k") const {
        if (terms_.empty()) return "0";
        std::string out;
        for (const auto& [m, c] : terms_) {
            const bool neg = c < 0.0;
            if (!out.empty()) out += neg ? " - " : " + ";
            else if (neg) out += "-";
            std::string mono;
            for (std::size_t i = 0; i < NVars; ++i) {
                if (!m[i]) continue;
                if (!mono.empty()) mono += "*";
                mono += prefix + std::to_string(i);
                if (m[i] > 1) mono += "^" + std::to_string(m[i]);
            }
            const double a = std::abs(c);
            if (mono.empty())
                out += std::to_string(a);
            else if (a != 1.0)
                out += std::to_string(a) + "*" + mono;
            else
                out += mono;
        }
        return out;
    }

private:
    void add_term(const Monomial& m, double c) {
        auto [it, inserted] = terms_.emplace(m, c);
        if (!inserted) it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }

    std::map<Monomial, double> terms_;
};

}  // namespace mobility
