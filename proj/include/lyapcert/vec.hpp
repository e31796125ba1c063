#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace lyapcert {

// Point or vector in R^2 or R^3. Planar points keep z = 0.
struct Vec {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  // The first `dimension` coordinates, for expression evaluation.
  std::span<const double> head(int dimension) const { return {&x, static_cast<std::size_t>(dimension)}; }

  static Vec from(std::span<const double> coords) {
    Vec v;
    for (std::size_t i = 0; i < coords.size() && i < 3; ++i) v[static_cast<int>(i)] = coords[i];
    return v;
  }

  std::vector<double> to_vector(int dimension) const {
    return std::vector<double>(&x, &x + dimension);
  }
};

static_assert(sizeof(Vec) == 3 * sizeof(double));

inline Vec operator+(const Vec& a, const Vec& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec operator-(const Vec& a) { return {-a.x, -a.y, -a.z}; }
inline Vec operator*(double s, const Vec& a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec operator*(const Vec& a, double s) { return s * a; }
inline Vec operator/(const Vec& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
inline Vec& operator+=(Vec& a, const Vec& b) { return a = a + b; }

inline double dot(const Vec& a, const Vec& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec cross(const Vec& a, const Vec& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec& a, const Vec& b) { return norm(a - b); }
inline Vec normalized(const Vec& a) {
  const double n = norm(a);
  return n > 0.0 ? a / n : Vec{};
}

}  // namespace lyapcert
