#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace oracle {

std::vector<double> stationary_direct(const cransched::LinkChain& chain) {
    const std::size_t n = chain.size();
    // Unknowns pi_0..pi_{n-1}. Equations: (P^T - I) pi = 0 for the first
    // n-1 rows, then sum pi = 1 replacing the last (dependent) row.
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t row = 0; row + 1 < n; ++row) {
        for (std::size_t col = 0; col < n; ++col) {
            a[row][col] = chain.transition(static_cast<int>(col), static_cast<int>(row));
        }
        a[row][row] -= 1.0;
        a[row][n] = 0.0;
    }
    for (std::size_t col = 0; col < n; ++col) a[n - 1][col] = 1.0;
    a[n - 1][n] = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row) {
            if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
        }
        std::swap(a[col], a[pivot]);
        if (std::abs(a[col][col]) < 1e-14) {
            throw std::runtime_error("singular system in stationary_direct");
        }
        for (std::size_t row = 0; row < n; ++row) {
            if (row == col) continue;
            const double factor = a[row][col] / a[col][col];
            for (std::size_t k = col; k <= n; ++k) a[row][k] -= factor * a[col][k];
        }
    }
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];
    return pi;
}

double handover_time(bool changed, double zeta, double r1, double r2) {
    if (!changed) return 0.0;
    if (zeta <= 0.0) return 0.0;  // nothing to exchange: free even on a dead hop
    if (r1 <= 0.0 || r2 <= 0.0) return std::numeric_limits<double>::infinity();
    return zeta * (1.0 / r1 + 1.0 / r2);
}

int l1_cap(int q_cu, int q_rrh, double rho, double r1, int q_max, double slot) {
    // min{ CU backlog, buffer room, max{0, floor of the time budget} }
    const double budget = slot - rho;
    int by_time = 0;
    if (budget > 0.0 && r1 > 0.0) by_time = static_cast<int>(std::floor(budget * r1 + 1e-9));
    const int room = q_max - q_rrh;
    return std::max(0, std::min({q_cu, room, by_time}));
}

int delivered(int q_rrh, int l1, double rho, double r1, double r2, double slot) {
    // Fronthaul occupies the link for l1/r1 after the handover gap; the
    // access link then drains what is available in the remaining time.
    double transfer = 0.0;
    if (l1 > 0) {
        if (r1 <= 0.0) return 0;  // cannot have sent packets on a dead link
        transfer = static_cast<double>(l1) / r1;
    }
    const double remaining = slot - rho - transfer;
    int by_time = 0;
    if (remaining > 0.0 && r2 > 0.0) by_time = static_cast<int>(std::floor(remaining * r2 + 1e-9));
    return std::max(0, std::min(q_rrh + l1, by_time));
}

CuStep cu_step(int q_cu, int arrivals, int l1, int q_max) {
    const int backlog = q_cu + arrivals - l1;
    CuStep out;
    out.q_next = std::clamp(backlog, 0, q_max);
    out.drops = std::max(0, backlog - q_max);
    return out;
}

namespace {

struct PostCell {
    int q_cu;
    std::vector<int> f;  // per RRH fronthaul state
    std::vector<int> a;  // per RRH access state
    std::vector<int> q;  // per RRH queue
    double value = 0.0;
    bool valid = true;
};

} // namespace

cransched::ValueTables additive_projection(const cransched::SystemModel& model,
                                           const cransched::ExactSolution& sol) {
    using cransched::GlobalState;
    using cransched::LinkPairState;
    using cransched::LocalState;
    if (sol.options.handover != cransched::HandoverModel::worst_case) {
        throw std::invalid_argument("additive_projection expects an untracked solution");
    }
    const auto& params = model.params();
    const int n_rrh = model.rrh_count();
    const int q_levels = params.q_max + 1;
    const auto pmf = model.traffic().pmf();

    // Enumerate joint link states once: digits [f0, a0, f1, a1, ...].
    std::vector<int> sizes;
    for (int j = 0; j < n_rrh; ++j) {
        sizes.push_back(static_cast<int>(model.fronthaul(j).size()));
        sizes.push_back(static_cast<int>(model.access(j).size()));
    }
    std::vector<std::vector<int>> joint_links;
    std::vector<int> digits(sizes.size(), 0);
    while (true) {
        joint_links.push_back(digits);
        int pos = static_cast<int>(digits.size()) - 1;
        while (pos >= 0 && ++digits[pos] == sizes[pos]) digits[pos--] = 0;
        if (pos < 0) break;
    }
    auto joint_prob = [&](const std::vector<int>& from, const std::vector<int>& to) {
        double p = 1.0;
        for (int j = 0; j < n_rrh; ++j) {
            p *= model.fronthaul(j).transition(from[2 * j], to[2 * j]);
            p *= model.access(j).transition(from[2 * j + 1], to[2 * j + 1]);
        }
        return p;
    };

    // Build the post-state grid.
    std::vector<PostCell> cells;
    for (int qc = 0; qc < q_levels; ++qc) {
        for (const auto& links : joint_links) {
            std::vector<int> rq(n_rrh, 0);
            while (true) {
                PostCell cell;
                cell.q_cu = qc;
                for (int j = 0; j < n_rrh; ++j) {
                    cell.f.push_back(links[2 * j]);
                    cell.a.push_back(links[2 * j + 1]);
                }
                cell.q = rq;
                cells.push_back(std::move(cell));
                int pos = n_rrh - 1;
                while (pos >= 0 && ++rq[pos] == q_levels) rq[pos--] = 0;
                if (pos < 0) break;
            }
        }
    }

    // F(post) = gamma * E[drops] + E[V(next)].
    for (auto& cell : cells) {
        double f = 0.0;
        bool valid = true;
        std::vector<int> from;
        for (int j = 0; j < n_rrh; ++j) {
            from.push_back(cell.f[j]);
            from.push_back(cell.a[j]);
        }
        for (int arrivals = 0; arrivals < static_cast<int>(pmf.size()); ++arrivals) {
            const double pa = pmf[static_cast<std::size_t>(arrivals)];
            if (pa == 0.0) continue;
            const int total = cell.q_cu + arrivals;
            const int drops = std::max(0, total - params.q_max);
            const int q_next = std::min(total, params.q_max);
            f += pa * params.drop_weight * drops;
            for (const auto& to : joint_links) {
                const double pl = joint_prob(from, to);
                if (pl == 0.0) continue;
                GlobalState next;
                next.q_cu = q_next;
                for (int j = 0; j < n_rrh; ++j) {
                    next.locals.push_back(LocalState{LinkPairState{to[2 * j], to[2 * j + 1]},
                                                     cell.q[static_cast<std::size_t>(j)]});
                }
                const double v = sol.values[sol.indexer.encode(next)];
                if (std::isnan(v)) {
                    valid = false;
                    break;
                }
                f += pa * pl * v;
            }
            if (!valid) break;
        }
        cell.value = f;
        cell.valid = valid;
    }

    // Alternating least squares for the additive fit, robust to skipped
    // cells. With a complete grid a single sweep already lands on the
    // closed-form main-effect means.
    std::vector<double> cu_part(static_cast<std::size_t>(q_levels), 0.0);
    struct RrhPart {
        std::vector<double> v;  // indexed f*(|A|*q_levels) + a*q_levels + q
        int a_count;
    };
    std::vector<RrhPart> rrh_parts;
    for (int j = 0; j < n_rrh; ++j) {
        RrhPart part;
        part.a_count = static_cast<int>(model.access(j).size());
        part.v.assign(model.fronthaul(j).size() * model.access(j).size() *
                          static_cast<std::size_t>(q_levels),
                      0.0);
        rrh_parts.push_back(std::move(part));
    }
    auto rrh_index = [&](int j, int f, int a, int q) {
        return (static_cast<std::size_t>(f) * static_cast<std::size_t>(rrh_parts[static_cast<std::size_t>(j)].a_count) +
                static_cast<std::size_t>(a)) *
                   static_cast<std::size_t>(q_levels) +
               static_cast<std::size_t>(q);
    };
    auto predict = [&](const PostCell& c) {
        double s = cu_part[static_cast<std::size_t>(c.q_cu)];
        for (int j = 0; j < n_rrh; ++j) {
            s += rrh_parts[static_cast<std::size_t>(j)]
                     .v[rrh_index(j, c.f[static_cast<std::size_t>(j)], c.a[static_cast<std::size_t>(j)],
                                  c.q[static_cast<std::size_t>(j)])];
        }
        return s;
    };

    for (int sweep = 0; sweep < 200; ++sweep) {
        double change = 0.0;
        {
            std::vector<double> sum(static_cast<std::size_t>(q_levels), 0.0);
            std::vector<int> count(static_cast<std::size_t>(q_levels), 0);
            for (const auto& c : cells) {
                if (!c.valid) continue;
                sum[static_cast<std::size_t>(c.q_cu)] +=
                    c.value - (predict(c) - cu_part[static_cast<std::size_t>(c.q_cu)]);
                ++count[static_cast<std::size_t>(c.q_cu)];
            }
            for (int q = 0; q < q_levels; ++q) {
                if (count[static_cast<std::size_t>(q)] == 0) continue;
                const double next = sum[static_cast<std::size_t>(q)] / count[static_cast<std::size_t>(q)];
                change = std::max(change, std::abs(next - cu_part[static_cast<std::size_t>(q)]));
                cu_part[static_cast<std::size_t>(q)] = next;
            }
        }
        for (int j = 0; j < n_rrh; ++j) {
            auto& part = rrh_parts[static_cast<std::size_t>(j)];
            std::vector<double> sum(part.v.size(), 0.0);
            std::vector<int> count(part.v.size(), 0);
            for (const auto& c : cells) {
                if (!c.valid) continue;
                const auto idx = rrh_index(j, c.f[static_cast<std::size_t>(j)],
                                           c.a[static_cast<std::size_t>(j)],
                                           c.q[static_cast<std::size_t>(j)]);
                sum[idx] += c.value - (predict(c) - part.v[idx]);
                ++count[idx];
            }
            for (std::size_t i = 0; i < part.v.size(); ++i) {
                if (count[i] == 0) continue;
                const double next = sum[i] / count[i];
                change = std::max(change, std::abs(next - part.v[i]));
                part.v[i] = next;
            }
        }
        if (change < 1e-12) break;
    }

    cransched::ValueTables tables(model);
    for (int q = 0; q < q_levels; ++q) tables.cu(q) = cu_part[static_cast<std::size_t>(q)];
    for (int j = 0; j < n_rrh; ++j) {
        for (int f = 0; f < static_cast<int>(model.fronthaul(j).size()); ++f) {
            for (int a = 0; a < static_cast<int>(model.access(j).size()); ++a) {
                for (int q = 0; q < q_levels; ++q) {
                    tables.rrh(j, f, a, q) = rrh_parts[static_cast<std::size_t>(j)].v[rrh_index(j, f, a, q)];
                }
            }
        }
    }
    return tables;
}

std::vector<double> window_sds(const std::vector<double>& series, std::size_t window) {
    std::vector<double> out;
    if (window < 2) throw std::invalid_argument("window must be at least 2");
    for (std::size_t start = 0; start + window <= series.size(); start += window) {
        std::vector<double> chunk(series.begin() + static_cast<std::ptrdiff_t>(start),
                                  series.begin() + static_cast<std::ptrdiff_t>(start + window));
        out.push_back(sample_sd(chunk));
    }
    return out;
}

double mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean of empty vector");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("sd needs at least two samples");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double standard_error(const std::vector<double>& v) {
    return sample_sd(v) / std::sqrt(static_cast<double>(v.size()));
}

} // namespace oracle
