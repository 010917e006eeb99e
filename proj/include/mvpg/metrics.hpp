#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "mvpg/core.hpp"

namespace mvpg {

struct Histogram {
    std::vector<double> edges;  // bins + 1 entries
    std::vector<std::uint64_t> counts;
};

struct ReturnStats {
    std::uint64_t n = 0;
    double mean = 0.0;
    double std = 0.0;
    double variance = 0.0;
    std::map<double, double> cvar;
    Histogram histogram;
};

// Lower-tail CVaR: mean of the ceil(alpha * n) smallest values of a sorted sample.
inline double cvar_sorted(const std::vector<double>& sorted, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("CVaR level must lie in (0, 1]");
    const double n = static_cast<double>(sorted.size());
    // The epsilon keeps e.g. 0.05 * 100 from rounding up to 6.
    auto count = static_cast<std::size_t>(std::ceil(alpha * n - 1e-9));
    count = std::clamp<std::size_t>(count, 1, sorted.size());
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += sorted[i];
    return s / static_cast<double>(count);
}

inline ReturnStats summarize(const std::vector<double>& returns, const std::vector<double>& alphas = {0.05},
                             std::size_t bins = 20) {
    if (returns.size() < 2) throw InsufficientDataError("need at least two returns for a sample standard deviation");
    if (bins == 0) throw Error("histogram needs at least one bin");
    ReturnStats st;
    st.n = returns.size();
    std::vector<double> sorted = returns;
    std::sort(sorted.begin(), sorted.end());

    // Summing in sorted order makes the result independent of input order.
    double sum = 0.0;
    for (double v : sorted) sum += v;
    st.mean = sum / static_cast<double>(st.n);
    double ss = 0.0;
    for (double v : sorted) ss += (v - st.mean) * (v - st.mean);
    st.std = std::sqrt(ss / static_cast<double>(st.n - 1));
    st.variance = st.std * st.std;

    for (double a : alphas) st.cvar[a] = a == 1.0 ? st.mean : cvar_sorted(sorted, a);

    const double lo = sorted.front(), hi = sorted.back();
    const double width = (hi - lo) / static_cast<double>(bins);
    st.histogram.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) st.histogram.edges[b] = lo + width * static_cast<double>(b);
    st.histogram.edges[bins] = hi;
    st.histogram.counts.assign(bins, 0);
    for (double v : sorted) {
        std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - lo) / width) : 0;
        st.histogram.counts[std::min(b, bins - 1)] += 1;
    }
    return st;
}

}  // namespace mvpg
