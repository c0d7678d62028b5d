#pragma once

#include "clab/group.hpp"
#include "clab/rng.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace clab {

enum class TailClass { Finite, Exponential, Superexponential };

std::string tail_class_name(TailClass t);

/// A driving measure mu on a group backend: evaluable pmf (0 off support),
/// exact sampler, declared tail class. Immutable after construction; the
/// sampler draws from a caller-owned stream, so measures are safe to share
/// across workers.
class DrivingMeasure {
  public:
    explicit DrivingMeasure(GroupBackend backend) : backend_(std::move(backend)) {}
    virtual ~DrivingMeasure() = default;

    const GroupBackend& backend() const { return backend_; }

    virtual double pmf(const GroupElement& g) const = 0;
    virtual double log_pmf(const GroupElement& g) const;
    virtual GroupElement sample(CounterRng& rng) const = 0;
    virtual TailClass tail_class() const = 0;
    virtual double mass_at_id() const { return pmf(GroupElement{}); }

    /// pmf(g) == pmf(g^{-1}) for all g.
    virtual bool is_symmetric() const = 0;

    /// Atoms in canonical order when the support is finite, else nullptr.
    virtual const std::vector<std::pair<GroupElement, double>>* table() const {
        return nullptr;
    }
    bool finite_support() const { return table() != nullptr; }

    /// Human-readable family description, stable across runs.
    virtual std::string describe() const = 0;

    /// 16-hex stable hash of (backend, description); keys caches and reports.
    std::string fingerprint() const;

  private:
    GroupBackend backend_;
};

using MeasurePtr = std::shared_ptr<const DrivingMeasure>;

/// Finite support table. Atoms are normalized, deduplicated, canonically
/// sorted; probabilities must be strictly positive and sum to 1 within 1e-12.
class FiniteTableMeasure final : public DrivingMeasure {
  public:
    FiniteTableMeasure(GroupBackend backend,
                       std::vector<std::pair<GroupElement, double>> atoms);

    double pmf(const GroupElement& g) const override;
    double log_pmf(const GroupElement& g) const override;
    GroupElement sample(CounterRng& rng) const override;
    TailClass tail_class() const override { return TailClass::Finite; }
    bool is_symmetric() const override { return symmetric_; }
    const std::vector<std::pair<GroupElement, double>>* table() const override {
        return &atoms_;
    }
    std::string describe() const override;

  private:
    std::vector<std::pair<GroupElement, double>> atoms_;
    std::vector<double> cumulative_;
    bool symmetric_ = false;
};

/// Word length L is geometric with stopping parameter p (P[L=0] = p), and
/// the word is uniform among the N_L normal-form words of length L:
///   pmf(g) = p (1-p)^{|g|} / N_{|g|}.
/// N_L comes from the transfer recursion over syllables and specializes to
/// 2k (2k-1)^{L-1} on free groups of rank k. Exponential tail.
class GeometricLengthMeasure final : public DrivingMeasure {
  public:
    GeometricLengthMeasure(GroupBackend backend, double p);

    double pmf(const GroupElement& g) const override;
    double log_pmf(const GroupElement& g) const override;
    GroupElement sample(CounterRng& rng) const override;
    TailClass tail_class() const override { return TailClass::Exponential; }
    bool is_symmetric() const override { return true; }
    double mass_at_id() const override { return p_; }
    std::string describe() const override;

    double stop_probability() const { return p_; }
    /// Number of normal-form words of length L.
    double word_count(std::size_t length) const;

  private:
    GroupElement sample_uniform_word(std::size_t length, CounterRng& rng) const;

    double p_;
    double log_p_, log_1mp_;
    // completions_[r][f]: completions of remaining length r when the
    // previous syllable used factor f; f == rank() means "none yet".
    std::vector<std::vector<long double>> completions_;
};

/// Mixture q * delta_id + (1-q) * base; the base must carry no mass at the
/// identity, so q is exactly the mass at id.
class LazyMeasure final : public DrivingMeasure {
  public:
    LazyMeasure(double q, MeasurePtr base);

    double pmf(const GroupElement& g) const override;
    double log_pmf(const GroupElement& g) const override;
    GroupElement sample(CounterRng& rng) const override;
    TailClass tail_class() const override { return base_->tail_class(); }
    bool is_symmetric() const override { return base_->is_symmetric(); }
    double mass_at_id() const override { return q_; }
    const std::vector<std::pair<GroupElement, double>>* table() const override;
    std::string describe() const override;

    double laziness() const { return q_; }
    const MeasurePtr& base() const { return base_; }

  private:
    double q_;
    MeasurePtr base_;
    std::vector<std::pair<GroupElement, double>> combined_; // when base is finite
};

/// base conditioned on not being the identity (used by lazify for families
/// without a closed-form stripped table). Sampler is by rejection.
class ConditionedOffIdentityMeasure final : public DrivingMeasure {
  public:
    explicit ConditionedOffIdentityMeasure(MeasurePtr base);

    double pmf(const GroupElement& g) const override;
    double log_pmf(const GroupElement& g) const override;
    GroupElement sample(CounterRng& rng) const override;
    TailClass tail_class() const override { return base_->tail_class(); }
    bool is_symmetric() const override { return base_->is_symmetric(); }
    double mass_at_id() const override { return 0.0; }
    std::string describe() const override;

  private:
    MeasurePtr base_;
    double keep_; // 1 - base mass at id
};

MeasurePtr make_finite_table(GroupBackend backend,
                             std::vector<std::pair<GroupElement, double>> atoms);

/// Simple random walk measure: uniform on the standard symmetric generators.
MeasurePtr make_uniform_generators(const GroupBackend& backend);

MeasurePtr make_geometric_length(GroupBackend backend, double p);

MeasurePtr make_lazy(double q, MeasurePtr base);

/// Strips the atom at the identity and renormalizes:
/// mu~(a) = mu(a) / (1 - mu(id)) off id, mu~(id) = 0.
/// Requires mu(id) > 0.
MeasurePtr lazify(const MeasurePtr& m);

/// nu(mu0, mu1) = sup_a max(mu0(a)/mu1(a), mu1(a)/mu0(a)) - 1 over the common
/// support. Exact for finite tables; evaluated in closed form per family for
/// infinite supports (may be +infinity). Throws std::invalid_argument when
/// the supports differ or no closed form exists.
double measure_distance(const DrivingMeasure& m0, const DrivingMeasure& m1);

/// Linear interpolation curve mu_t = mu_0 + t (mu_1 - mu_0) between two
/// finite-table measures with identical support; carries the boundary
/// direction nu(a) = (mu_1(a) - mu_0(a)) / mu_0(a).
class MeasureCurve {
  public:
    MeasureCurve(MeasurePtr mu0, MeasurePtr mu1);

    const MeasurePtr& mu0() const { return mu0_; }
    const MeasurePtr& mu1() const { return mu1_; }
    const std::vector<std::pair<GroupElement, double>>& support() const;

    MeasurePtr at(double t) const;
    double nu0(std::size_t atom_index) const;
    double nu_t(double t, std::size_t atom_index) const;

    /// sum_a nu(a) mu0(a); must vanish for probability curves.
    double martingale_residual() const;

    /// sup_t sup_a |nu_t(a)|, which equals measure_distance(mu0, mu1).
    double nu_distance() const;

  private:
    MeasurePtr mu0_, mu1_;
};

/// An exactly represented distribution on the group (e.g. a convolution
/// power mu^n); atoms sorted canonically.
struct ExactDistribution {
    std::vector<std::pair<GroupElement, double>> atoms;
    int steps = 0;

    double prob(const GroupElement& g) const;
    double total_mass() const;
};

/// Point mass at the identity (the 0-th convolution power).
ExactDistribution exact_delta_id();

/// Converts a finite-support measure; throws for infinite families.
ExactDistribution to_exact(const DrivingMeasure& m);

/// Exact convolution (d1 * d2)(z) = sum_g d1(g) d2(g^{-1} z). Raises
/// BudgetError when the result support would exceed support_cap (no silent
/// truncation).
ExactDistribution convolve_exact(const GroupBackend& backend, const ExactDistribution& d1,
                                 const ExactDistribution& d2,
                                 std::size_t support_cap = 500000);

/// mu^n by repeated exact convolution.
ExactDistribution convolution_power(const GroupBackend& backend, const DrivingMeasure& m,
                                    int n, std::size_t support_cap = 500000);

/// Shannon entropy in nats, with 0 log 0 = 0.
double entropy_nats(const ExactDistribution& d);

inline double nats_to_bits(double nats) { return nats / 0.693147180559945309; }

} // namespace clab
