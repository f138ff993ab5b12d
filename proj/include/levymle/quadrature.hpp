#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

namespace levymle::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = false;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod abscissae and weights (QUADPACK qk15).
inline constexpr double kronrod_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kronrod_w[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gauss_w[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment kronrod15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kron = fc * kronrod_w[7];
    double gauss = fc * gauss_w[3];
    double abs_sum = std::abs(kron);
    double fv1[7], fv2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kronrod_x[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kron += kronrod_w[j] * (f1 + f2);
        abs_sum += kronrod_w[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1) gauss += gauss_w[j / 2] * (f1 + f2);
    }
    const double mean = 0.5 * kron;
    double asc = kronrod_w[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j)
        asc += kronrod_w[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
    asc *= std::abs(h);
    double err = std::abs((kron - gauss) * h);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    const double resabs = abs_sum * std::abs(h);
    constexpr double eps = 2.220446049250313e-16;
    if (resabs > 1e-290 / (50 * eps)) err = std::max(eps * 50 * resabs, err);
    return {a, b, kron * h, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration over consecutive breakpoints.
/// Stops when the summed error estimate is below max(abs_tol, rel_tol*|I|)
/// or `max_segments` subintervals exist.
template <class F>
Result integrate(F&& f, std::span<const double> breakpoints, double rel_tol, double abs_tol = 0.0,
                 int max_segments = 2000) {
    Result out;
    std::priority_queue<detail::Segment> heap;
    double total = 0.0, total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i + 1] > breakpoints[i])) continue;
        auto s = detail::kronrod15(f, breakpoints[i], breakpoints[i + 1]);
        out.evaluations += 15;
        total += s.value;
        total_err += s.error;
        heap.push(s);
    }
    int segments = static_cast<int>(heap.size());
    while (!heap.empty() && total_err > std::max(abs_tol, rel_tol * std::abs(total)) &&
           segments < max_segments) {
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        auto left = detail::kronrod15(f, worst.a, mid);
        auto right = detail::kronrod15(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++segments;
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    total = 0.0;
    total_err = 0.0;
    std::vector<detail::Segment> segs;
    segs.reserve(heap.size());
    while (!heap.empty()) {
        segs.push_back(heap.top());
        heap.pop();
    }
    std::sort(segs.begin(), segs.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    for (const auto& s : segs) {
        total += s.value;
        total_err += s.error;
    }
    out.value = total;
    out.error = total_err;
    out.converged = total_err <= std::max(abs_tol, rel_tol * std::abs(total));
    return out;
}

template <class F>
Result integrate(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0,
                 int max_segments = 2000) {
    const double pts[2] = {a, b};
    return integrate(std::forward<F>(f), std::span<const double>(pts, 2), rel_tol, abs_tol,
                     max_segments);
}

}  // namespace levymle::quad
