#include "clab/measures.hpp"

#include "clab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace clab {

namespace {

constexpr double kMassTolerance = 1e-12;
constexpr std::size_t kMaxGeometricLength = 600;

std::string format_prob(double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", p);
    return buf;
}

} // namespace

std::string tail_class_name(TailClass t) {
    switch (t) {
    case TailClass::Finite: return "finite";
    case TailClass::Exponential: return "exponential";
    case TailClass::Superexponential: return "superexponential";
    }
    return "?";
}

double DrivingMeasure::log_pmf(const GroupElement& g) const {
    double p = pmf(g);
    return p > 0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

std::string DrivingMeasure::fingerprint() const {
    std::uint64_t h = fnv1a64(backend_.name());
    h ^= fnv1a64(describe());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// FiniteTableMeasure

FiniteTableMeasure::FiniteTableMeasure(GroupBackend backend,
                                       std::vector<std::pair<GroupElement, double>> atoms)
    : DrivingMeasure(std::move(backend)) {
    if (atoms.empty())
        throw std::invalid_argument("finite table measure needs at least one atom");
    for (auto& [g, p] : atoms) {
        this->backend().check_element(g);
        g = this->backend().normalize(g.letters);
        if (!(p > 0))
            throw std::invalid_argument(
                "finite table measure: probabilities must be strictly positive");
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < atoms.size(); ++i)
        if (atoms[i].first == atoms[i - 1].first)
            throw std::invalid_argument("finite table measure: duplicate atom " +
                                        this->backend().render(atoms[i].first));
    double mass = 0;
    for (const auto& [g, p] : atoms)
        mass += p;
    if (std::abs(mass - 1.0) > kMassTolerance)
        throw std::invalid_argument("finite table measure: mass " + format_prob(mass) +
                                    " differs from 1 beyond 1e-12");
    atoms_ = std::move(atoms);
    cumulative_.reserve(atoms_.size());
    double acc = 0;
    for (const auto& [g, p] : atoms_) {
        acc += p;
        cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;

    symmetric_ = true;
    for (const auto& [g, p] : atoms_) {
        double q = pmf(this->backend().inverse(g));
        if (std::abs(q - p) > kMassTolerance) {
            symmetric_ = false;
            break;
        }
    }
}

double FiniteTableMeasure::pmf(const GroupElement& g) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), g,
                               [](const auto& a, const GroupElement& x) { return a.first < x; });
    if (it != atoms_.end() && it->first == g)
        return it->second;
    return 0.0;
}

double FiniteTableMeasure::log_pmf(const GroupElement& g) const {
    double p = pmf(g);
    return p > 0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

GroupElement FiniteTableMeasure::sample(CounterRng& rng) const {
    double u = rng.uniform01();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t i = std::min<std::size_t>(
        static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
    return atoms_[i].first;
}

std::string FiniteTableMeasure::describe() const {
    std::string out = "finite_table{";
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (i)
            out += ",";
        out += backend().render(atoms_[i].first) + ":" + format_prob(atoms_[i].second);
    }
    out += "}";
    return out;
}

// ---------------------------------------------------------------------------
// GeometricLengthMeasure

GeometricLengthMeasure::GeometricLengthMeasure(GroupBackend backend, double p)
    : DrivingMeasure(std::move(backend)), p_(p) {
    if (!(p > 0) || !(p < 1))
        throw std::invalid_argument("geometric length: p must lie in (0, 1)");
    log_p_ = std::log(p_);
    log_1mp_ = std::log1p(-p_);

    // Transfer recursion. completions_[r][f] counts normal-form words of
    // length r whose first syllable avoids factor f (f == rank means no
    // restriction). A syllable of letter-length l in a factor of order m
    // exists for l <= floor(m/2) (any l when m is infinite) and has two sign
    // variants except when 2l == m.
    int r = this->backend().rank();
    completions_.assign(kMaxGeometricLength + 1,
                        std::vector<long double>(static_cast<std::size_t>(r) + 1, 0.0L));
    for (int f = 0; f <= r; ++f)
        completions_[0][static_cast<std::size_t>(f)] = 1.0L;
    for (std::size_t len = 1; len <= kMaxGeometricLength; ++len) {
        for (int f = 0; f <= r; ++f) {
            long double total = 0.0L;
            for (int i = 0; i < r; ++i) {
                if (i == f)
                    continue;
                std::uint32_t m = this->backend().factor_order(i);
                std::size_t max_l = m == 0 ? len : std::min<std::size_t>(len, m / 2);
                for (std::size_t l = 1; l <= max_l; ++l) {
                    long double variants = (m != 0 && 2 * l == m) ? 1.0L : 2.0L;
                    total += variants * completions_[len - l][static_cast<std::size_t>(i)];
                }
            }
            completions_[len][static_cast<std::size_t>(f)] = total;
        }
    }
    if (completions_[1][static_cast<std::size_t>(r)] == 0.0L ||
        completions_[2][static_cast<std::size_t>(r)] == 0.0L)
        throw std::invalid_argument(
            "geometric length: backend has no normal-form words at every length");
}

double GeometricLengthMeasure::word_count(std::size_t length) const {
    if (length > kMaxGeometricLength)
        throw BudgetError("geometric length: word length exceeds the transfer table");
    return static_cast<double>(
        completions_[length][static_cast<std::size_t>(backend().rank())]);
}

double GeometricLengthMeasure::pmf(const GroupElement& g) const {
    return std::exp(log_pmf(g));
}

double GeometricLengthMeasure::log_pmf(const GroupElement& g) const {
    std::size_t len = g.letters.size();
    return log_p_ + static_cast<double>(len) * log_1mp_ - std::log(word_count(len));
}

GroupElement GeometricLengthMeasure::sample_uniform_word(std::size_t length,
                                                         CounterRng& rng) const {
    std::vector<Gen> letters;
    letters.reserve(length);
    int rank = backend().rank();
    int prev = rank; // no previous factor
    std::size_t remaining = length;
    while (remaining > 0) {
        long double total = completions_[remaining][static_cast<std::size_t>(prev)];
        long double target =
            static_cast<long double>(rng.uniform01()) * total;
        long double acc = 0.0L;
        bool chosen = false;
        for (int i = 0; i < rank && !chosen; ++i) {
            if (i == prev)
                continue;
            std::uint32_t m = backend().factor_order(i);
            std::size_t max_l = m == 0 ? remaining : std::min<std::size_t>(remaining, m / 2);
            for (std::size_t l = 1; l <= max_l && !chosen; ++l) {
                int variants = (m != 0 && 2 * l == m) ? 1 : 2;
                for (int v = 0; v < variants && !chosen; ++v) {
                    acc += completions_[remaining - l][static_cast<std::size_t>(i)];
                    if (target < acc || (i == rank - 1 && l == max_l && v == variants - 1)) {
                        std::int8_t sign = (v == 0) ? +1 : -1;
                        for (std::size_t t = 0; t < l; ++t)
                            letters.push_back(
                                Gen{static_cast<std::uint8_t>(i), sign});
                        prev = i;
                        remaining -= l;
                        chosen = true;
                    }
                }
            }
        }
        if (!chosen)
            throw std::logic_error("geometric length: syllable selection failed");
    }
    GroupElement out{std::move(letters)};
    return out;
}

GroupElement GeometricLengthMeasure::sample(CounterRng& rng) const {
    double u = rng.uniform01();
    std::size_t len = 0;
    if (u > p_) {
        // L = floor(log(1-u) / log(1-p)) gives P[L = l] = p (1-p)^l.
        double l = std::floor(std::log1p(-u) / log_1mp_);
        len = static_cast<std::size_t>(l);
    }
    if (len > kMaxGeometricLength)
        throw BudgetError("geometric length: sampled word length exceeds the table");
    return sample_uniform_word(len, rng);
}

std::string GeometricLengthMeasure::describe() const {
    return "geometric_length{p:" + format_prob(p_) + "}";
}

// ---------------------------------------------------------------------------
// LazyMeasure

LazyMeasure::LazyMeasure(double q, MeasurePtr base)
    : DrivingMeasure(base ? base->backend() : GroupBackend::integer_line()),
      q_(q), base_(std::move(base)) {
    if (!base_)
        throw std::invalid_argument("lazy measure: base measure required");
    if (!(q > 0) || !(q < 1))
        throw std::invalid_argument("lazy measure: laziness q must lie in (0, 1)");
    if (base_->mass_at_id() != 0.0)
        throw std::invalid_argument(
            "lazy measure: base must carry no mass at the identity");
    if (const auto* tbl = base_->table()) {
        combined_.emplace_back(GroupElement{}, q_);
        for (const auto& [g, p] : *tbl)
            combined_.emplace_back(g, (1 - q_) * p);
        std::sort(combined_.begin(), combined_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
}

double LazyMeasure::pmf(const GroupElement& g) const {
    if (g.is_identity())
        return q_;
    return (1 - q_) * base_->pmf(g);
}

double LazyMeasure::log_pmf(const GroupElement& g) const {
    if (g.is_identity())
        return std::log(q_);
    return std::log1p(-q_) + base_->log_pmf(g);
}

GroupElement LazyMeasure::sample(CounterRng& rng) const {
    if (rng.uniform01() < q_)
        return GroupElement{};
    return base_->sample(rng);
}

const std::vector<std::pair<GroupElement, double>>* LazyMeasure::table() const {
    return combined_.empty() ? nullptr : &combined_;
}

std::string LazyMeasure::describe() const {
    return "lazy{q:" + format_prob(q_) + ",base:" + base_->describe() + "}";
}

// ---------------------------------------------------------------------------
// ConditionedOffIdentityMeasure

ConditionedOffIdentityMeasure::ConditionedOffIdentityMeasure(MeasurePtr base)
    : DrivingMeasure(base ? base->backend() : GroupBackend::integer_line()),
      base_(std::move(base)) {
    if (!base_)
        throw std::invalid_argument("conditioned measure: base required");
    double q0 = base_->mass_at_id();
    if (!(q0 > 0))
        throw std::invalid_argument("nothing to strip: base has no mass at the identity");
    if (!(q0 < 1))
        throw std::invalid_argument("conditioned measure: base is a point mass at id");
    keep_ = 1 - q0;
}

double ConditionedOffIdentityMeasure::pmf(const GroupElement& g) const {
    if (g.is_identity())
        return 0.0;
    return base_->pmf(g) / keep_;
}

double ConditionedOffIdentityMeasure::log_pmf(const GroupElement& g) const {
    if (g.is_identity())
        return -std::numeric_limits<double>::infinity();
    return base_->log_pmf(g) - std::log(keep_);
}

GroupElement ConditionedOffIdentityMeasure::sample(CounterRng& rng) const {
    for (;;) {
        GroupElement g = base_->sample(rng);
        if (!g.is_identity())
            return g;
    }
}

std::string ConditionedOffIdentityMeasure::describe() const {
    return "conditioned_off_id{base:" + base_->describe() + "}";
}

// ---------------------------------------------------------------------------
// Factories and module operations

MeasurePtr make_finite_table(GroupBackend backend,
                             std::vector<std::pair<GroupElement, double>> atoms) {
    return std::make_shared<FiniteTableMeasure>(std::move(backend), std::move(atoms));
}

MeasurePtr make_uniform_generators(const GroupBackend& backend) {
    auto gens = backend.standard_generators();
    double p = 1.0 / static_cast<double>(gens.size());
    std::vector<std::pair<GroupElement, double>> atoms;
    atoms.reserve(gens.size());
    for (auto& g : gens)
        atoms.emplace_back(std::move(g), p);
    return make_finite_table(backend, std::move(atoms));
}

MeasurePtr make_geometric_length(GroupBackend backend, double p) {
    return std::make_shared<GeometricLengthMeasure>(std::move(backend), p);
}

MeasurePtr make_lazy(double q, MeasurePtr base) {
    return std::make_shared<LazyMeasure>(q, std::move(base));
}

MeasurePtr lazify(const MeasurePtr& m) {
    if (!m)
        throw std::invalid_argument("lazify: measure required");
    double q0 = m->mass_at_id();
    if (!(q0 > 0))
        throw std::invalid_argument("nothing to strip: measure has no mass at the identity");
    if (const auto* lz = dynamic_cast<const LazyMeasure*>(m.get()))
        return lz->base();
    if (const auto* tbl = m->table()) {
        std::vector<std::pair<GroupElement, double>> atoms;
        for (const auto& [g, p] : *tbl)
            if (!g.is_identity())
                atoms.emplace_back(g, p / (1 - q0));
        return make_finite_table(m->backend(), std::move(atoms));
    }
    return std::make_shared<ConditionedOffIdentityMeasure>(m);
}

namespace {

double table_distance(const std::vector<std::pair<GroupElement, double>>& a,
                      const std::vector<std::pair<GroupElement, double>>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("incomparable measures: supports differ in size");
    double sup = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].first != b[i].first)
            throw std::invalid_argument("incomparable measures: supports differ");
        double r = std::max(a[i].second / b[i].second, b[i].second / a[i].second);
        sup = std::max(sup, r - 1);
    }
    return sup;
}

} // namespace

double measure_distance(const DrivingMeasure& m0, const DrivingMeasure& m1) {
    if (!(m0.backend() == m1.backend()))
        throw std::invalid_argument("incomparable measures: different backends");
    if (m0.finite_support() && m1.finite_support())
        return table_distance(*m0.table(), *m1.table());

    const auto* g0 = dynamic_cast<const GeometricLengthMeasure*>(&m0);
    const auto* g1 = dynamic_cast<const GeometricLengthMeasure*>(&m1);
    if (g0 && g1) {
        // pmf ratio at word length L is (p1/p0) ((1-p1)/(1-p0))^L, monotone
        // in L; the sup over the support is attained at L = 0 or L -> inf,
        // so it is finite only when the parameters agree.
        if (g0->stop_probability() == g1->stop_probability())
            return 0.0;
        return std::numeric_limits<double>::infinity();
    }

    const auto* l0 = dynamic_cast<const LazyMeasure*>(&m0);
    const auto* l1 = dynamic_cast<const LazyMeasure*>(&m1);
    if (l0 && l1 && l0->base()->fingerprint() == l1->base()->fingerprint()) {
        double q0 = l0->laziness(), q1 = l1->laziness();
        double sup = std::max(q0 / q1, q1 / q0) - 1;
        sup = std::max(sup, std::max((1 - q0) / (1 - q1), (1 - q1) / (1 - q0)) - 1);
        return sup;
    }

    throw std::invalid_argument(
        "incomparable measures: no closed-form distance for these families");
}

// ---------------------------------------------------------------------------
// MeasureCurve

MeasureCurve::MeasureCurve(MeasurePtr mu0, MeasurePtr mu1)
    : mu0_(std::move(mu0)), mu1_(std::move(mu1)) {
    if (!mu0_ || !mu1_)
        throw std::invalid_argument("measure curve: two endpoint measures required");
    if (!mu0_->finite_support() || !mu1_->finite_support())
        throw std::invalid_argument("measure curve: endpoints must have finite support");
    const auto& a = *mu0_->table();
    const auto& b = *mu1_->table();
    if (a.size() != b.size())
        throw std::invalid_argument("measure curve: endpoint supports differ");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].first != b[i].first)
            throw std::invalid_argument("measure curve: endpoint supports differ");
}

const std::vector<std::pair<GroupElement, double>>& MeasureCurve::support() const {
    return *mu0_->table();
}

MeasurePtr MeasureCurve::at(double t) const {
    if (t < 0 || t > 1)
        throw std::invalid_argument("measure curve: t must lie in [0, 1]");
    if (t == 0)
        return mu0_;
    if (t == 1)
        return mu1_;
    const auto& a = *mu0_->table();
    const auto& b = *mu1_->table();
    std::vector<std::pair<GroupElement, double>> atoms;
    atoms.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        atoms.emplace_back(a[i].first, a[i].second + t * (b[i].second - a[i].second));
    return make_finite_table(mu0_->backend(), std::move(atoms));
}

double MeasureCurve::nu0(std::size_t atom_index) const {
    const auto& a = *mu0_->table();
    const auto& b = *mu1_->table();
    return (b[atom_index].second - a[atom_index].second) / a[atom_index].second;
}

double MeasureCurve::nu_t(double t, std::size_t atom_index) const {
    const auto& a = *mu0_->table();
    const auto& b = *mu1_->table();
    double diff = b[atom_index].second - a[atom_index].second;
    return diff / (a[atom_index].second + t * diff);
}

double MeasureCurve::martingale_residual() const {
    const auto& a = *mu0_->table();
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += nu0(i) * a[i].second;
    return acc;
}

double MeasureCurve::nu_distance() const {
    return measure_distance(*mu0_, *mu1_);
}

// ---------------------------------------------------------------------------
// Exact distributions

double ExactDistribution::prob(const GroupElement& g) const {
    auto it = std::lower_bound(atoms.begin(), atoms.end(), g,
                               [](const auto& a, const GroupElement& x) { return a.first < x; });
    if (it != atoms.end() && it->first == g)
        return it->second;
    return 0.0;
}

double ExactDistribution::total_mass() const {
    double acc = 0;
    for (const auto& [g, p] : atoms)
        acc += p;
    return acc;
}

ExactDistribution exact_delta_id() {
    ExactDistribution d;
    d.atoms.emplace_back(GroupElement{}, 1.0);
    d.steps = 0;
    return d;
}

ExactDistribution to_exact(const DrivingMeasure& m) {
    const auto* tbl = m.table();
    if (!tbl)
        throw std::invalid_argument(
            "exact distribution requires a finite-support measure");
    ExactDistribution d;
    d.atoms = *tbl;
    d.steps = 1;
    return d;
}

ExactDistribution convolve_exact(const GroupBackend& backend, const ExactDistribution& d1,
                                 const ExactDistribution& d2, std::size_t support_cap) {
    std::map<GroupElement, double> acc;
    for (const auto& [g, pg] : d1.atoms) {
        for (const auto& [h, ph] : d2.atoms) {
            GroupElement z = backend.multiply(g, h);
            acc[z] += pg * ph;
            if (acc.size() > support_cap)
                throw BudgetError("convolution support cap of " +
                                  std::to_string(support_cap) + " elements exceeded");
        }
    }
    ExactDistribution out;
    out.atoms.assign(acc.begin(), acc.end());
    out.steps = d1.steps + d2.steps;
    return out;
}

ExactDistribution convolution_power(const GroupBackend& backend, const DrivingMeasure& m,
                                    int n, std::size_t support_cap) {
    if (n < 0)
        throw std::invalid_argument("convolution power: n must be >= 0");
    ExactDistribution acc = exact_delta_id();
    if (n == 0)
        return acc;
    ExactDistribution step = to_exact(m);
    for (int i = 0; i < n; ++i)
        acc = convolve_exact(backend, acc, step, support_cap);
    return acc;
}

double entropy_nats(const ExactDistribution& d) {
    double acc = 0;
    for (const auto& [g, p] : d.atoms)
        if (p > 0)
            acc -= p * std::log(p);
    return acc;
}

} // namespace clab
