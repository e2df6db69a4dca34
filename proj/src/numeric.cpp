#include "relucalc/numeric.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace relucalc {

Numeric Numeric::rational(long p, long q) {
  if (q == 0) throw std::domain_error("rational with zero denominator");
  mpq_class r(p, q);
  r.canonicalize();
  return Numeric(r);
}

Numeric Numeric::exact_from_double(double x) {
  if (!std::isfinite(x)) throw std::domain_error("non-finite value has no exact form");
  mpq_class r(x);
  return Numeric(r);
}

Numeric Numeric::parse(std::string_view s) {
  std::string str(s);
  if (str.empty()) throw std::invalid_argument("empty number");
  bool is_float = str.find_first_of(".eEiInN") != std::string::npos;
  if (!is_float) {
    mpq_class r;
    if (r.set_str(str, 10) != 0) throw std::invalid_argument("bad rational '" + str + "'");
    if (r.get_den() == 0) throw std::invalid_argument("zero denominator in '" + str + "'");
    r.canonicalize();
    return Numeric(r);
  }
  size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(str, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad decimal '" + str + "'");
  }
  if (pos != str.size()) throw std::invalid_argument("bad decimal '" + str + "'");
  return real(v);
}

Numeric Numeric::pow2(long k) {
  mpz_class one = 1;
  mpz_class p = one << static_cast<mp_bitcnt_t>(k < 0 ? -k : k);
  return k >= 0 ? Numeric(mpq_class(p)) : Numeric(mpq_class(one, p));
}

const mpq_class& Numeric::q() const {
  if (!is_exact()) throw std::logic_error("Float value has no exact representation");
  return std::get<0>(v_);
}

double Numeric::to_double() const {
  return is_exact() ? std::get<0>(v_).get_d() : std::get<1>(v_);
}

Numeric Numeric::to_mode(Mode m) const {
  if (m == mode()) return *this;
  if (m == Mode::Float) return real(std::get<0>(v_).get_d());
  return exact_from_double(std::get<1>(v_));
}

int Numeric::sign() const {
  if (is_exact()) return sgn(std::get<0>(v_));
  double d = std::get<1>(v_);
  return (d > 0) - (d < 0);
}

bool Numeric::is_finite() const { return is_exact() || std::isfinite(std::get<1>(v_)); }

std::string Numeric::str() const {
  if (is_exact()) {
    const auto& r = std::get<0>(v_);
    return r.get_den() == 1 ? r.get_num().get_str() : r.get_num().get_str() + "/" + r.get_den().get_str();
  }
  double d = std::get<1>(v_);
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".e") == std::string::npos) out += ".0";
  return out;
}

Numeric& Numeric::operator+=(const Numeric& o) {
  if (is_exact() && o.is_exact())
    std::get<0>(v_) += std::get<0>(o.v_);
  else
    v_ = to_double() + o.to_double();
  return *this;
}

Numeric& Numeric::operator-=(const Numeric& o) {
  if (is_exact() && o.is_exact())
    std::get<0>(v_) -= std::get<0>(o.v_);
  else
    v_ = to_double() - o.to_double();
  return *this;
}

Numeric& Numeric::operator*=(const Numeric& o) {
  if (is_exact() && o.is_exact())
    std::get<0>(v_) *= std::get<0>(o.v_);
  else
    v_ = to_double() * o.to_double();
  return *this;
}

Numeric& Numeric::operator/=(const Numeric& o) {
  if (is_exact() && o.is_exact()) {
    if (sgn(std::get<0>(o.v_)) == 0) throw std::domain_error("division by zero");
    std::get<0>(v_) /= std::get<0>(o.v_);
  } else {
    v_ = to_double() / o.to_double();
  }
  return *this;
}

void Numeric::add_product(const Numeric& a, const Numeric& b) {
  if (is_exact() && a.is_exact() && b.is_exact()) {
    thread_local mpq_class tmp;
    mpq_mul(tmp.get_mpq_t(), std::get<0>(a.v_).get_mpq_t(), std::get<0>(b.v_).get_mpq_t());
    std::get<0>(v_) += tmp;
  } else {
    v_ = to_double() + a.to_double() * b.to_double();
  }
}

Numeric Numeric::operator-() const {
  if (is_exact()) return Numeric(mpq_class(-std::get<0>(v_)));
  return real(-std::get<1>(v_));
}

int compare(const Numeric& a, const Numeric& b) {
  if (a.is_exact() && b.is_exact()) return cmp(std::get<0>(a.v_), std::get<0>(b.v_));
  double x = a.to_double(), y = b.to_double();
  return (x > y) - (x < y);
}

std::ostream& operator<<(std::ostream& os, const Numeric& x) {
  if (x.is_exact() && x.q().get_den() == 1) return os << x.q().get_num().get_str();
  if (x.is_exact()) return os << x.q().get_str();
  return os << x.str();
}

Numeric floor(const Numeric& x) {
  if (!x.is_exact()) return Numeric::real(std::floor(x.to_double()));
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), x.q().get_num_mpz_t(), x.q().get_den_mpz_t());
  return Numeric(mpq_class(f));
}

Numeric ceil(const Numeric& x) {
  if (!x.is_exact()) return Numeric::real(std::ceil(x.to_double()));
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), x.q().get_num_mpz_t(), x.q().get_den_mpz_t());
  return Numeric(mpq_class(c));
}

bool exact_sqrt(const Numeric& x, Numeric& out) {
  if (x.sign() < 0) return false;
  if (!x.is_exact()) {
    out = Numeric::real(std::sqrt(x.to_double()));
    return true;
  }
  const mpz_class& p = x.q().get_num();
  const mpz_class& q = x.q().get_den();
  if (!mpz_perfect_square_p(p.get_mpz_t()) || !mpz_perfect_square_p(q.get_mpz_t())) return false;
  mpz_class sp, sq;
  mpz_sqrt(sp.get_mpz_t(), p.get_mpz_t());
  mpz_sqrt(sq.get_mpz_t(), q.get_mpz_t());
  out = Numeric(mpq_class(sp, sq));
  return true;
}

Vec to_numeric(const std::vector<double>& xs) {
  Vec out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(Numeric::real(x));
  return out;
}

std::vector<double> to_doubles(const Vec& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.to_double());
  return out;
}

}  // namespace relucalc
