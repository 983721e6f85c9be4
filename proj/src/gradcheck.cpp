// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "silt/rng.hpp"

namespace silt {

double GradCheckReport::max_rel_err() const {
    double m = 0.0;
    for (const auto& b : blocks) m = std::max(m, b.max_rel_err);
    return m;
}

std::string GradCheckReport::to_string() const {
    std::string out = "grad_check precision=" + precision + " step=" + std::to_string(step) + "\n";
    char line[256];
    for (const auto& b : blocks) {
        std::snprintf(line, sizeof(line),
                      "  block %-24s max_rel_err=%.3e coords=%lld worst(analytic=%.6e numeric=%.6e)\n",
                      b.name.c_str(), b.max_rel_err, static_cast<long long>(b.coords_checked),
                      b.worst_analytic, b.worst_numeric);
        out += line;
    }
    return out;
}

namespace {

template <typename T>
T eval_scalar(const std::function<Var<T>(Graph<T>&, const std::vector<Var<T>>&)>& f,
              const std::vector<Tensor<T>>& point, const std::string& where) {
    Graph<T> g;
    std::vector<Var<T>> leaves;
    leaves.reserve(point.size());
    for (const auto& t : point) leaves.push_back(g.leaf(t, /*requires_grad=*/false));
    Var<T> out = f(g, leaves);
    if (g.val(out).numel() != 1)
        throw std::invalid_argument("grad_check: function output is not scalar");
    const T v = g.val(out).v[0];
    if (!std::isfinite(static_cast<double>(v)))
        throw std::runtime_error("grad_check: non-finite value at " + where);
    return v;
}

std::vector<int64_t> sample_coords(int64_t n, int64_t limit, uint64_t seed) {
    std::vector<int64_t> idx;
    if (n <= limit) {
        idx.resize(static_cast<size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        return idx;
    }
    // Partial Fisher-Yates over an index vector; first `limit` entries.
    std::vector<int64_t> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    SeededRng rng(derive_seed(seed, static_cast<uint64_t>(n)));
    for (int64_t i = 0; i < limit; ++i) {
        const int64_t j = i + static_cast<int64_t>(rng.uniform_index(static_cast<uint64_t>(n - i)));
        std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);
    }
    idx.assign(all.begin(), all.begin() + limit);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

template <typename T>
GradCheckReport grad_check(
    const std::function<Var<T>(Graph<T>&, const std::vector<Var<T>>&)>& f,
    const std::vector<Tensor<T>>& point, const std::vector<std::string>& block_names, T step,
    const GradCheckOptions& opts) {
    if (step <= T(0)) throw std::invalid_argument("grad_check: step must be positive");
    if (point.empty()) throw std::invalid_argument("grad_check: no input blocks");

    GradCheckReport report;
    report.step = static_cast<double>(step);
    report.precision = sizeof(T) == sizeof(double) ? "double" : "single";

    // Analytic pass.
    Graph<T> g;
    std::vector<Var<T>> leaves;
    for (const auto& t : point) leaves.push_back(g.leaf(t, /*requires_grad=*/true));
    Var<T> out = f(g, leaves);
    if (g.val(out).numel() != 1)
        throw std::invalid_argument("grad_check: function output is not scalar");
    if (!std::isfinite(static_cast<double>(g.val(out).v[0])))
        throw std::runtime_error("grad_check: non-finite value at base point");
    g.backward(out);
    std::vector<Tensor<T>> analytic;
    for (size_t b = 0; b < point.size(); ++b) analytic.push_back(g.grad(leaves[b]));

    std::vector<Tensor<T>> work = point;
    for (size_t b = 0; b < point.size(); ++b) {
        GradCheckBlock blk;
        blk.name = b < block_names.size() ? block_names[b] : ("block" + std::to_string(b));
        const auto coords =
            sample_coords(point[b].numel(), opts.max_coords_per_block,
                          derive_seed(opts.sample_seed, static_cast<uint64_t>(b)));
        for (int64_t ci : coords) {
            const size_t c = static_cast<size_t>(ci);
            const T saved = work[b].v[c];
            work[b].v[c] = saved + step;
            const double fp = static_cast<double>(
                eval_scalar(f, work, blk.name + "[" + std::to_string(ci) + "]+"));
            work[b].v[c] = saved - step;
            const double fm = static_cast<double>(
                eval_scalar(f, work, blk.name + "[" + std::to_string(ci) + "]-"));
            work[b].v[c] = saved;
            const double numeric = (fp - fm) / (2.0 * static_cast<double>(step));
            const double exact = static_cast<double>(analytic[b].v[c]);
            const double denom =
                std::max({std::abs(exact), std::abs(numeric), opts.eps_div});
            const double rel = std::abs(exact - numeric) / denom;
            if (rel > blk.max_rel_err) {
                blk.max_rel_err = rel;
                blk.worst_coord = ci;
                blk.worst_analytic = exact;
                blk.worst_numeric = numeric;
            }
            ++blk.coords_checked;
        }
        report.blocks.push_back(std::move(blk));
    }
    return report;
}

template GradCheckReport grad_check<float>(
    const std::function<Var<float>(Graph<float>&, const std::vector<Var<float>>&)>&,
    const std::vector<Tensor<float>>&, const std::vector<std::string>&, float,
    const GradCheckOptions&);
template GradCheckReport grad_check<double>(
    const std::function<Var<double>(Graph<double>&, const std::vector<Var<double>>&)>&,
    const std::vector<Tensor<double>>&, const std::vector<std::string>&, double,
    const GradCheckOptions&);

}  // namespace silt
