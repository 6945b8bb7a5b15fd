#include "mms/rational.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace mms {

namespace {

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

Rational parse_rational(const std::string& raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw std::invalid_argument("empty number");

    bool neg = false;
    std::string body = s;
    if (body[0] == '-' || body[0] == '+') {
        neg = body[0] == '-';
        body = body.substr(1);
    }

    Rational out;
    auto slash = body.find('/');
    auto dot = body.find('.');
    if (slash != std::string::npos) {
        std::string p = body.substr(0, slash), q = body.substr(slash + 1);
        if (!all_digits(p) || !all_digits(q)) throw std::invalid_argument("bad rational: " + raw);
        mpz_class den(q, 10);
        if (den == 0) throw std::invalid_argument("zero denominator: " + raw);
        out = Rational(mpz_class(p, 10), den);
    } else if (dot != std::string::npos) {
        std::string ip = body.substr(0, dot), fp = body.substr(dot + 1);
        if (ip.empty()) ip = "0";
        if (!all_digits(ip) || (!fp.empty() && !all_digits(fp)))
            throw std::invalid_argument("bad decimal: " + raw);
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, fp.size());
        mpz_class num(ip + fp, 10);
        out = Rational(num, scale);
    } else {
        if (!all_digits(body)) throw std::invalid_argument("bad integer: " + raw);
        out = Rational(mpz_class(body, 10));
    }
    out.canonicalize();
    return neg ? Rational(-out) : out;
}

std::string to_string(const Rational& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::string to_decimal(const Rational& q, int significant) {
    std::ostringstream os;
    os.precision(significant);
    os << to_double(q);
    return os.str();
}

double to_double(const Rational& q) { return q.get_d(); }

Rational rabs(const Rational& q) { return q < 0 ? Rational(-q) : q; }
Rational rmin(const Rational& a, const Rational& b) { return b < a ? b : a; }
Rational rmax(const Rational& a, const Rational& b) { return a < b ? b : a; }

mpz_class floor_z(const Rational& q) {
    mpz_class r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

mpz_class ceil_z(const Rational& q) {
    mpz_class r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

bool is_integer(const Rational& q) { return q.get_den() == 1; }

mpz_class lcm_z(const mpz_class& a, const mpz_class& b) {
    mpz_class r;
    mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

Rational norm_inf(const Vec& v) {
    Rational m = 0;
    for (const auto& x : v) m = rmax(m, rabs(x));
    return m;
}

}  // namespace mms
