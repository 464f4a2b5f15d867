// Internal dense-table evaluation helpers shared by the cavity, Bethe and
// condition-check code paths.  Not installed.
#pragma once

#include <span>
#include <vector>

#include "cavity/model.hpp"

namespace cavity::detail {

// sum_tau psi_w(tau) prod_j msgs[j](tau_j)
inline double full_weight_sum(const Model& model, int w,
                              std::span<const std::span<const double>> msgs) {
    int q = model.q();
    int k = model.k();
    const auto& table = model.weights()[w].table;
    static thread_local std::vector<int> tau;
    tau.assign(k, 0);
    size_t total = model.table_size();
    double y = 0.0;
    for (size_t idx = 0; idx < total; ++idx) {
        double prod = table[idx];
        if (prod != 0.0) {
            for (int j = 0; j < k; ++j) prod *= msgs[j][tau[j]];
            y += prod;
        }
        for (int j = k - 1; j >= 0; --j) {
            if (++tau[j] < q) break;
            tau[j] = 0;
        }
    }
    return y;
}

// out[sigma] = sum_tau 1{tau_h = sigma} psi_w(tau) prod_{j != h} msgs[.](tau_j)
// with msgs listing the k-1 non-h slots in ascending slot order.
inline void factor_term(const Model& model, int w, int h,
                        std::span<const std::span<const double>> msgs, std::span<double> out) {
    int q = model.q();
    int k = model.k();
    for (int s = 0; s < q; ++s) out[s] = 0.0;
    const auto& table = model.weights()[w].table;
    static thread_local std::vector<int> tau;
    tau.assign(k, 0);
    size_t total = model.table_size();
    for (size_t idx = 0; idx < total; ++idx) {
        double prod = table[idx];
        if (prod != 0.0) {
            int mi = 0;
            for (int j = 0; j < k; ++j) {
                if (j == h) continue;
                prod *= msgs[mi++][tau[j]];
            }
            out[tau[h]] += prod;
        }
        for (int j = k - 1; j >= 0; --j) {
            if (++tau[j] < q) break;
            tau[j] = 0;
        }
    }
}

}  // namespace cavity::detail
