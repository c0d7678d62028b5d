#pragma once

#include "clab/estimators.hpp"
#include "clab/measures.hpp"
#include "clab/parallel.hpp"
#include "clab/walk.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace clab {

/// A truncated hitting-probability estimate of the Green distance to one
/// target: F = hits/trials over walks of length `horizon`, d = -log F.
/// F is downward biased (late hits are missed), so the distance is an upper
/// bound in expectation; the half-horizon counts expose the residual bias.
struct GreenEstimate {
    GroupElement target;
    std::size_t horizon = 0;
    std::size_t trials = 0;
    std::size_t hits = 0;
    std::size_t hits_half = 0;
    bool infinite = false; // zero hits at the full horizon

    double hitting_probability() const;
    /// -log(hits/trials); when no trial hit, the largest resolvable lower
    /// bound log(trials) with the infinite flag set.
    double distance() const;
    double distance_half_horizon() const;
    /// distance() - distance_half_horizon(); nonpositive by construction.
    double horizon_delta() const;
    /// Delta-method standard error of -log F.
    double se() const;
};

/// Checks the preconditions shared by all Green-metric operations: the
/// measure is symmetric, the backend is nonamenable and the support contains
/// every standard generator. Throws std::invalid_argument otherwise.
void require_green_preconditions(const DrivingMeasure& m);

/// Direct single-target Monte Carlo estimate. Trial substreams are keyed by
/// the target word, so estimates do not depend on query order.
GreenEstimate green_distance(const GroupElement& z, const DrivingMeasure& m,
                             std::size_t horizon, std::size_t trials, std::uint64_t seed,
                             const Parallel& par);

/// Hitting estimates for many targets from one shared ensemble of walks:
/// each walk contributes a first-visit count to every target it touches.
class GreenTable {
  public:
    GreenTable(std::vector<GroupElement> targets, std::size_t horizon, std::size_t walks);

    std::optional<std::size_t> target_index(const GroupElement& z) const;
    GreenEstimate estimate(std::size_t target_index) const;
    std::size_t size() const { return targets_.size(); }
    std::size_t horizon() const { return horizon_; }
    std::size_t walks() const { return walks_; }

  private:
    friend GreenTable build_green_table(std::vector<GroupElement> targets,
                                        const DrivingMeasure& m, std::size_t horizon,
                                        std::size_t walks, std::uint64_t seed,
                                        const Parallel& par);

    std::vector<GroupElement> targets_;
    std::map<GroupElement, std::size_t> index_;
    std::vector<std::uint64_t> hits_;
    std::vector<std::uint64_t> hits_half_;
    std::size_t horizon_ = 0;
    std::size_t walks_ = 0;
};

GreenTable build_green_table(std::vector<GroupElement> targets, const DrivingMeasure& m,
                             std::size_t horizon, std::size_t walks, std::uint64_t seed,
                             const Parallel& par);

/// Memoized Green-distance registry backing the Green-length cocycle.
/// Lookups are served from the cache; misses run single-target estimation
/// with target-derived substreams (deterministic under any query order)
/// against a total step budget. Thread-safe.
class GreenMemo {
  public:
    GreenMemo(MeasurePtr m, std::size_t horizon, std::size_t trials, std::uint64_t seed,
              std::uint64_t max_total_steps);

    double distance(const GroupElement& z);
    GreenEstimate estimate(const GroupElement& z);

    std::uint64_t steps_spent() const;
    std::size_t entries() const;

    /// Cache file lines "measure-fingerprint word N M hits"; entries whose
    /// fingerprint or parameters do not match are ignored on load.
    void load_cache(std::istream& in);
    void save_cache(std::ostream& out) const;

  private:
    GreenEstimate compute(const GroupElement& z);

    MeasurePtr measure_;
    std::size_t horizon_;
    std::size_t trials_;
    std::uint64_t seed_;
    std::uint64_t budget_;
    mutable std::mutex mutex_;
    std::map<GroupElement, GreenEstimate> memo_;
    std::uint64_t spent_ = 0;
};

/// End-point cocycle Q_n = estimated d_G(id, Z_n).
Cocycle green_length_cocycle(const MeasurePtr& m, std::shared_ptr<GreenMemo> memo);

struct EntropyPoint {
    std::size_t n = 0;
    double mean_green_distance = 0;
    double se = 0;
    std::size_t unresolved = 0; // zero-hit targets at this grid point
    double mean_horizon_delta = 0;
};

struct EntropyReport {
    double value = 0; // fitted slope = entropy estimate (nats per step)
    double se = 0;
    std::vector<EntropyPoint> points;
    double convolution_bound = 0; // min_{n <= bound_powers} H(mu^n)/n
    int bound_powers = 0;
    bool within_bound = true;
    std::size_t samples = 0;
    std::size_t inner_walks = 0;
    std::size_t inner_horizon = 0;
};

struct EntropyParams {
    std::vector<std::size_t> n_grid = {8, 10, 12};
    std::size_t samples = 8000;      // outer trajectories
    std::size_t inner_walks = 2000000;
    std::size_t inner_horizon = 400;
    int convolution_powers = 6;
    std::size_t convolution_cap = 500000;
};

/// Asymptotic entropy as the rate of escape in the estimated Green metric:
/// weighted affine fit of mean d_G(id, Z_n) over the grid, cross-checked
/// against the exact-convolution bound min_n H(mu^n)/n. A bound violation
/// beyond 3 SE is a hard failure (it signals estimator bias).
EntropyReport entropy_estimate(const DrivingMeasure& m, const EntropyParams& params,
                               std::uint64_t seed, const Parallel& par);

struct SpectralRadiusDiagnostic {
    std::vector<double> return_probabilities; // mu^{2j}(id), j = 1..
    std::vector<double> ratios;               // successive ratios
    double fitted_ratio = 0;                  // limit estimate of rho^2
    double fitted_spectral_radius = 0;        // sqrt of the above
};

/// Exact-convolution decay of the return probability; on nonamenable
/// backends the fitted ratio stays below 1.
SpectralRadiusDiagnostic spectral_radius_diagnostic(const DrivingMeasure& m, int max_power,
                                                    std::size_t support_cap = 500000);

} // namespace clab
