#include "cfslab/kernels.hpp"

#include <exception>
#include <mutex>

namespace cfslab::kernels {

namespace {

// Exceptions must not cross an OpenMP region boundary; the first one is kept
// and rethrown after the loop.
class FirstError {
public:
    template <class F>
    void run(F&& f) {
        try {
            f();
        } catch (...) {
            std::lock_guard<std::mutex> lock(mu_);
            if (!err_) err_ = std::current_exception();
        }
    }
    void rethrow() const {
        if (err_) std::rethrow_exception(err_);
    }

private:
    std::mutex mu_;
    std::exception_ptr err_;
};

void mirror(PairTable& t) {
    for (std::size_t i = 0; i < t.m; ++i) {
        for (std::size_t j = 0; j < i; ++j) t.terms[i * t.m + j] = t.terms[j * t.m + i];
    }
}

Membership site_point(const DiracSeaConfig& c, const DiracSea& sea, std::size_t site) {
    const int s = static_cast<int>(site / static_cast<std::size_t>(c.lattice.nx));
    const int l = static_cast<int>(site % static_cast<std::size_t>(c.lattice.nx));
    const Matrix f = correlation_matrix(sea, c.t_at(s), c.x_at(l));
    return membership_F(Operator::selfadjoint(f), 1);
}

}  // namespace

PairTable pair_table_serial(std::span<const SpacetimePointOp> points, double classify_tol) {
    PairTable t;
    t.m = points.size();
    t.terms.resize(t.m * t.m);
    for (std::size_t i = 0; i < t.m; ++i) {
        for (std::size_t j = i; j < t.m; ++j) {
            t.terms[i * t.m + j] = pair_terms(points[i], points[j], classify_tol);
        }
    }
    mirror(t);
    return t;
}

PairTable pair_table_parallel(std::span<const SpacetimePointOp> points, double classify_tol) {
    PairTable t;
    t.m = points.size();
    t.terms.resize(t.m * t.m);
    const auto m = static_cast<std::ptrdiff_t>(t.m);
    FirstError err;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        err.run([&] {
            for (std::ptrdiff_t j = i; j < m; ++j) {
                t.terms[static_cast<std::size_t>(i * m + j)] =
                    pair_terms(points[static_cast<std::size_t>(i)],
                               points[static_cast<std::size_t>(j)], classify_tol);
            }
        });
    }
    err.rethrow();
    mirror(t);
    return t;
}

PairTable pair_table(std::span<const SpacetimePointOp> points, double classify_tol, Exec exec) {
    return exec == Exec::serial ? pair_table_serial(points, classify_tol)
                                : pair_table_parallel(points, classify_tol);
}

std::vector<PairGradient> pair_gradients_serial(std::span<const SpacetimePointOp> points) {
    const std::size_t m = points.size();
    std::vector<PairGradient> g(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) g[i * m + j] = pair_gradient_first(points[i], points[j]);
    }
    return g;
}

std::vector<PairGradient> pair_gradients_parallel(std::span<const SpacetimePointOp> points) {
    const auto m = static_cast<std::ptrdiff_t>(points.size());
    std::vector<PairGradient> g(static_cast<std::size_t>(m * m));
    FirstError err;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        err.run([&] {
            for (std::ptrdiff_t j = 0; j < m; ++j) {
                g[static_cast<std::size_t>(i * m + j)] = pair_gradient_first(
                    points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
            }
        });
    }
    err.rethrow();
    return g;
}

std::vector<Membership> correlation_points_serial(const DiracSeaConfig& config, const DiracSea& sea) {
    const std::size_t n = config.num_lattice_points();
    std::vector<Membership> out(n);
    for (std::size_t site = 0; site < n; ++site) out[site] = site_point(config, sea, site);
    return out;
}

std::vector<Membership> correlation_points_parallel(const DiracSeaConfig& config,
                                                    const DiracSea& sea) {
    const auto n = static_cast<std::ptrdiff_t>(config.num_lattice_points());
    std::vector<Membership> out(static_cast<std::size_t>(n));
    FirstError err;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t site = 0; site < n; ++site) {
        err.run([&] {
            out[static_cast<std::size_t>(site)] =
                site_point(config, sea, static_cast<std::size_t>(site));
        });
    }
    err.rethrow();
    return out;
}

}  // namespace cfslab::kernels
