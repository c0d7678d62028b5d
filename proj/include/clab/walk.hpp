#pragma once

#include "clab/group.hpp"
#include "clab/measures.hpp"
#include "clab/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace clab {

/// One random-walk path with its provenance: increments X_1..X_n and prefix
/// positions Z_0 = id, Z_j = Z_{j-1} X_j. (master_seed, stream_tag, index)
/// fully determine the path.
struct Trajectory {
    std::uint64_t master_seed = 0;
    std::uint64_t index = 0;
    std::string stream_tag;
    std::vector<GroupElement> increments; // X_1..X_n
    std::vector<GroupElement> positions;  // Z_0..Z_n

    std::size_t length() const { return increments.size(); }
    const GroupElement& position(std::size_t j) const { return positions[j]; }

    /// Z_j = Z_{j-1} X_j for every j; used by tests and debug checks.
    bool consistent(const GroupBackend& backend) const;
};

/// Draws a full trajectory of n steps from the substream
/// (master_seed ^ tag, index).
Trajectory generate_trajectory(const DrivingMeasure& m, std::size_t n,
                               std::uint64_t master_seed, std::uint64_t index,
                               const std::string& stream_tag = "walk");

/// Incremental walk that keeps only the running position; used by the
/// estimators for long horizons where storing every prefix is wasteful.
class WalkStream {
  public:
    WalkStream(const DrivingMeasure& m, std::uint64_t master_seed, std::uint64_t index,
               const std::string& stream_tag = "walk")
        : measure_(&m),
          rng_(CounterRng::stream(master_seed, stream_tag, index)),
          position_(m.backend().identity()) {}

    /// Advances one step; returns the new position.
    const GroupElement& step() {
        GroupElement x = measure_->sample(rng_);
        position_ = measure_->backend().multiply(position_, x);
        last_increment_ = std::move(x);
        ++steps_;
        return position_;
    }

    const GroupElement& position() const { return position_; }
    const GroupElement& last_increment() const { return last_increment_; }
    std::size_t steps() const { return steps_; }

  private:
    const DrivingMeasure* measure_;
    CounterRng rng_;
    GroupElement position_;
    GroupElement last_increment_;
    std::size_t steps_ = 0;
};

/// A defective adapted cocycle: Q_n is a function of the first n increments
/// with Q_0 = 0. Supported shapes:
///   - Length: Q_n = d(id, Z_n) in the backend word metric,
///   - AdditiveSum: Q_n = sum_j f(X_j) (defect vanishes identically),
///   - EndPoint: Q_n = q(Z_n) for a function q with q(id) = 0,
///   - GreenLength: end-point cocycle in an estimated Green metric.
class Cocycle {
  public:
    enum class Kind { Length, AdditiveSum, EndPoint, GreenLength };

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    bool endpoint_kind() const { return kind_ != Kind::AdditiveSum; }

    /// Q_n evaluated on the first n increments of t.
    double eval(const Trajectory& t, std::size_t n) const;

    /// Q_len applied to the shifted trajectory theta_offset(t); for
    /// end-point cocycles this is q(Z_offset^{-1} Z_{offset+len}).
    double eval_shifted(const Trajectory& t, std::size_t offset, std::size_t len) const;

    /// Evaluate on a bare position (end-point cocycles only).
    double eval_position(const GroupElement& z) const;

    /// Evaluate on one increment (additive cocycles only).
    double eval_increment(const GroupElement& x) const;

    static Cocycle length(const GroupBackend& backend);
    static Cocycle additive(std::string name,
                            std::function<double(const GroupElement&)> summand);
    static Cocycle end_point(const GroupBackend& backend, std::string name,
                             std::function<double(const GroupElement&)> q,
                             Kind kind = Kind::EndPoint);

  private:
    Kind kind_ = Kind::Length;
    std::string name_;
    GroupBackend backend_ = GroupBackend::integer_line();
    std::function<double(const GroupElement&)> endpoint_;
    std::function<double(const GroupElement&)> summand_;
};

/// Additive oracle cocycle with f(x) = sign of the first letter of x
/// (0 for the identity increment). Under a symmetric generator measure this
/// is a centered +-1 i.i.d. sum, the classical CLT reference case.
Cocycle additive_sign_cocycle();

/// Brooks-style counting quasimorphism on a free group: occurrences of the
/// pattern word minus occurrences of its inverse in the normal form of Z_n.
Cocycle brooks_counting_cocycle(const GroupBackend& backend, const std::string& pattern);

/// Defect sample Psi_{n,m} = Q_{n+m} - Q_n - Q_m o theta_n.
struct DefectSample {
    std::size_t n = 0;
    std::size_t m = 0;
    double value = 0;
};

DefectSample defect(const Cocycle& c, const Trajectory& t, std::size_t n, std::size_t m);

/// Replaces increment X_k (1-based) and recomputes positions from k on.
Trajectory replace_increment(const GroupBackend& backend, const Trajectory& t,
                             std::size_t k, GroupElement replacement);

/// One defect term Psi_{a,b} o theta_offset of a dyadic decomposition.
struct DyadicTerm {
    std::size_t offset = 0;
    std::size_t a = 0;
    std::size_t b = 0;
    double value = 0;
};

/// Q_n resolved into binary-carry boundary defects, blocks of length 2^M,
/// regrouping residue and the defect layers above M:
///   Q_n = sum gamma + sum_j Q_{2^M} o theta_{j 2^M} + R_M + sum_{i>M} layer_i.
/// For M = 0 the block terms are the base terms Q_1 o theta_j themselves.
struct DyadicDecomposition {
    std::size_t n = 0;
    std::size_t block_exponent = 0; // M

    std::vector<DyadicTerm> boundary;      // gamma_j with explicit (a, b) indices
    std::vector<double> block_terms;       // Q_{2^M} o theta_{j 2^M}
    std::vector<double> base_terms;        // Q_1 o theta_j (leftover past the blocks)
    std::vector<DyadicTerm> residue_terms; // leftover low-layer defects (i <= M)
    std::vector<DyadicTerm> layer_terms;   // defect layers i > M

    double q_n = 0;
    double reconstruction = 0;
    double residual() const { return q_n - reconstruction; }
};

DyadicDecomposition dyadic_decompose(const Cocycle& c, const Trajectory& t,
                                     std::size_t block_exponent);

/// Exhaustive enumeration over all |support|^n increment tuples of a
/// finite-support measure; fn receives each tuple with its probability.
/// Raises BudgetError when the product space exceeds the budget.
void enumerate_increment_tuples(
    const DrivingMeasure& m, std::size_t n,
    const std::function<void(const std::vector<GroupElement>&, double)>& fn,
    std::size_t budget = 10000000);

} // namespace clab
