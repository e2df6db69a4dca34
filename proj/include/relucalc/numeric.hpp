#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace relucalc {

enum class Mode { Exact, Float };

// Scalar that is either an exact rational (GMP) or an IEEE double.
// Mixed arithmetic degrades to Float.
class Numeric {
 public:
  Numeric() : v_(mpq_class(0)) {}
  Numeric(int v) : v_(mpq_class(static_cast<long>(v))) {}
  Numeric(long v) : v_(mpq_class(v)) {}
  Numeric(long long v) : v_(mpq_class(static_cast<long>(v))) {}
  explicit Numeric(mpq_class q) : v_(std::move(q)) { std::get<0>(v_).canonicalize(); }

  static Numeric rational(long p, long q);
  static Numeric real(double x) { Numeric r; r.v_ = x; return r; }
  // exact rational with the same value as the double
  static Numeric exact_from_double(double x);
  // "p/q" or "p" -> Exact; anything with '.', 'e', inf or nan -> Float
  static Numeric parse(std::string_view s);
  static Numeric pow2(long k);  // exact 2^k, k may be negative

  Mode mode() const { return v_.index() == 0 ? Mode::Exact : Mode::Float; }
  bool is_exact() const { return v_.index() == 0; }
  const mpq_class& q() const;
  double to_double() const;
  Numeric to_mode(Mode m) const;
  int sign() const;
  bool is_zero() const { return sign() == 0; }
  bool is_finite() const;
  std::string str() const;

  Numeric& operator+=(const Numeric& o);
  Numeric& operator-=(const Numeric& o);
  Numeric& operator*=(const Numeric& o);
  Numeric& operator/=(const Numeric& o);
  Numeric operator-() const;
  // *this += a * b without temporaries
  void add_product(const Numeric& a, const Numeric& b);

  friend Numeric operator+(Numeric a, const Numeric& b) { return a += b; }
  friend Numeric operator-(Numeric a, const Numeric& b) { return a -= b; }
  friend Numeric operator*(Numeric a, const Numeric& b) { return a *= b; }
  friend Numeric operator/(Numeric a, const Numeric& b) { return a /= b; }

  friend int compare(const Numeric& a, const Numeric& b);
  friend bool operator==(const Numeric& a, const Numeric& b) { return compare(a, b) == 0; }
  friend bool operator<(const Numeric& a, const Numeric& b) { return compare(a, b) < 0; }
  friend bool operator>(const Numeric& a, const Numeric& b) { return compare(a, b) > 0; }
  friend bool operator<=(const Numeric& a, const Numeric& b) { return compare(a, b) <= 0; }
  friend bool operator>=(const Numeric& a, const Numeric& b) { return compare(a, b) >= 0; }

 private:
  std::variant<mpq_class, double> v_;
};

std::ostream& operator<<(std::ostream& os, const Numeric& x);

inline Numeric relu(const Numeric& x) { return x.sign() > 0 ? x : Numeric(0).to_mode(x.mode()); }
inline Numeric abs(const Numeric& x) { return x.sign() < 0 ? -x : x; }
inline const Numeric& min(const Numeric& a, const Numeric& b) { return b < a ? b : a; }
inline const Numeric& max(const Numeric& a, const Numeric& b) { return a < b ? b : a; }
Numeric floor(const Numeric& x);
Numeric ceil(const Numeric& x);

// exact or float square root when the argument is a perfect rational square
bool exact_sqrt(const Numeric& x, Numeric& out);

using Vec = std::vector<Numeric>;

Vec to_numeric(const std::vector<double>& xs);
std::vector<double> to_doubles(const Vec& xs);

}  // namespace relucalc
