#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace kflk {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline double sqr(double x) { return x * x; }

// Wrap a coordinate onto the torus [0, 1).
inline double wrap01(double x) {
    x -= std::floor(x);
    return x < 1.0 ? x : 0.0;
}

// Standard normal CDF.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Least-squares line through (x_i, y_i).
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12);

// Rows 0..n of Pascal's triangle as doubles; row[k][j] = C(k, j).
std::vector<std::vector<double>> pascal_triangle(int n);

}  // namespace kflk
