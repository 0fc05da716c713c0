#include "kflk/math_util.hpp"

#include <stdexcept>

namespace kflk {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line needs >= 2 matching points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    LinearFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa, double b,
               double fb, double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)>& f, double a, double fa, double b,
                double fb, double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, fa, m, fm, lm, flm);
    const double right = simpson(f, m, fm, b, fb, rm, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = simpson(f, a, fa, b, fb, m, fm);
    return adaptive(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

std::vector<std::vector<double>> pascal_triangle(int n) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        rows[k].assign(static_cast<std::size_t>(k) + 1, 1.0);
        for (int j = 1; j < k; ++j) rows[k][j] = rows[k - 1][j - 1] + rows[k - 1][j];
    }
    return rows;
}

}  // namespace kflk
