#include "clab/green.hpp"

#include "clab/errors.hpp"
#include "clab/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace clab {

double GreenEstimate::hitting_probability() const {
    return trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials);
}

double GreenEstimate::distance() const {
    if (hits == 0)
        return std::log(static_cast<double>(trials));
    return -std::log(hitting_probability());
}

double GreenEstimate::distance_half_horizon() const {
    if (hits_half == 0)
        return std::log(static_cast<double>(trials));
    return -std::log(static_cast<double>(hits_half) / static_cast<double>(trials));
}

double GreenEstimate::horizon_delta() const {
    return distance() - distance_half_horizon();
}

double GreenEstimate::se() const {
    if (hits == 0)
        return std::numeric_limits<double>::infinity();
    double f = hitting_probability();
    return std::sqrt((1 - f) / (f * static_cast<double>(trials)));
}

void require_green_preconditions(const DrivingMeasure& m) {
    if (!m.is_symmetric())
        throw std::invalid_argument("green metric: the driving measure must be symmetric");
    if (!m.backend().nonamenable())
        throw std::invalid_argument(
            "green metric: backend must be nonamenable (hitting probabilities of a "
            "recurrent or subexponential walk do not define a useful metric here)");
    // The support must generate the whole group; we require every standard
    // generator to carry mass, which is decidable for all families.
    const GroupBackend& b = m.backend();
    const DrivingMeasure* probe = &m;
    if (const auto* lazy = dynamic_cast<const LazyMeasure*>(probe))
        probe = lazy->base().get();
    if (dynamic_cast<const GeometricLengthMeasure*>(probe))
        return;
    for (const auto& g : b.standard_generators())
        if (!(probe->pmf(g) > 0))
            throw std::invalid_argument(
                "green metric: support does not contain generator " + b.render(g) +
                ", so it cannot generate a nonamenable group");
}

namespace {

std::uint64_t word_key(const GroupBackend& b, const GroupElement& z) {
    return fnv1a64(b.render(z));
}

} // namespace

GreenEstimate green_distance(const GroupElement& z, const DrivingMeasure& m,
                             std::size_t horizon, std::size_t trials, std::uint64_t seed,
                             const Parallel& par) {
    require_green_preconditions(m);
    const GroupBackend& b = m.backend();
    GroupElement target = b.normalize(z.letters);

    GreenEstimate est;
    est.target = target;
    est.horizon = horizon;
    est.trials = trials;
    if (target.is_identity())
        return GreenEstimate{target, horizon, trials, trials, trials, false};

    // With increments of bounded word length the distance to the target
    // shrinks by at most that much per step, giving an exact unreachability
    // cutoff for a trial.
    std::size_t max_step = 0;
    if (const auto* tbl = m.table()) {
        for (const auto& [g, p] : *tbl)
            max_step = std::max(max_step, g.letters.size());
    }

    std::uint64_t key = seed ^ word_key(b, target);
    std::vector<std::uint8_t> flags(trials, 0);
    std::size_t half = horizon / 2;
    par.for_each_index(trials, [&](std::size_t i) {
        CounterRng rng = CounterRng::stream(key, "green", i);
        // Track the quotient word Z_j^{-1} z, stored reversed so the walk's
        // increments act at the back; the target is hit when it empties.
        std::vector<Gen> quotient_rev(target.letters.rbegin(), target.letters.rend());
        for (std::size_t j = 1; j <= horizon; ++j) {
            if (max_step > 0 && quotient_rev.size() > (horizon - j + 1) * max_step)
                return;
            GroupElement x = m.sample(rng);
            for (const Gen& g : x.letters)
                b.append_letter(quotient_rev, Gen{g.index, static_cast<std::int8_t>(-g.sign)});
            if (quotient_rev.empty()) {
                flags[i] = j <= half ? 2 : 1;
                return;
            }
        }
    });
    for (std::uint8_t f : flags) {
        est.hits += f > 0;
        est.hits_half += f == 2;
    }
    est.infinite = est.hits == 0;
    return est;
}

// ---------------------------------------------------------------------------
// GreenTable

GreenTable::GreenTable(std::vector<GroupElement> targets, std::size_t horizon,
                       std::size_t walks)
    : targets_(std::move(targets)), horizon_(horizon), walks_(walks) {
    for (std::size_t i = 0; i < targets_.size(); ++i)
        index_.emplace(targets_[i], i);
    hits_.assign(targets_.size(), 0);
    hits_half_.assign(targets_.size(), 0);
}

std::optional<std::size_t> GreenTable::target_index(const GroupElement& z) const {
    auto it = index_.find(z);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

GreenEstimate GreenTable::estimate(std::size_t i) const {
    GreenEstimate est;
    est.target = targets_[i];
    est.horizon = horizon_;
    est.trials = walks_;
    est.hits = hits_[i];
    est.hits_half = hits_half_[i];
    est.infinite = est.hits == 0 && !est.target.is_identity();
    if (est.target.is_identity()) {
        est.hits = est.hits_half = walks_;
        est.infinite = false;
    }
    return est;
}

GreenTable build_green_table(std::vector<GroupElement> targets, const DrivingMeasure& m,
                             std::size_t horizon, std::size_t walks, std::uint64_t seed,
                             const Parallel& par) {
    require_green_preconditions(m);
    const GroupBackend& b = m.backend();
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    GreenTable table(std::move(targets), horizon, walks);

    std::size_t max_len = 0;
    for (const auto& t : table.targets_)
        max_len = std::max(max_len, t.letters.size());
    std::size_t half = horizon / 2;

    // Fixed chunk layout independent of the worker count; integer counts
    // merge exactly, so the result is scheduling-invariant.
    const std::size_t chunks = std::min<std::size_t>(64, std::max<std::size_t>(walks, 1));
    std::vector<std::vector<std::uint64_t>> chunk_hits(
        chunks, std::vector<std::uint64_t>(table.targets_.size(), 0));
    std::vector<std::vector<std::uint64_t>> chunk_half(
        chunks, std::vector<std::uint64_t>(table.targets_.size(), 0));

    par.for_each_index(chunks, [&](std::size_t ci) {
        std::size_t lo = walks * ci / chunks;
        std::size_t hi = walks * (ci + 1) / chunks;
        std::vector<std::uint8_t> seen(table.targets_.size(), 0);
        std::vector<std::size_t> dirty;
        for (std::size_t wi = lo; wi < hi; ++wi) {
            WalkStream w(m, seed, wi, "greentable");
            for (std::size_t j = 1; j <= horizon; ++j) {
                const GroupElement& pos = w.step();
                if (pos.letters.size() > max_len)
                    continue;
                auto it = table.index_.find(pos);
                if (it == table.index_.end() || seen[it->second])
                    continue;
                seen[it->second] = 1;
                dirty.push_back(it->second);
                chunk_hits[ci][it->second] += 1;
                if (j <= half)
                    chunk_half[ci][it->second] += 1;
            }
            for (std::size_t d : dirty)
                seen[d] = 0;
            dirty.clear();
        }
    });
    (void)b;
    for (std::size_t ci = 0; ci < chunks; ++ci)
        for (std::size_t t = 0; t < table.targets_.size(); ++t) {
            table.hits_[t] += chunk_hits[ci][t];
            table.hits_half_[t] += chunk_half[ci][t];
        }
    return table;
}

// ---------------------------------------------------------------------------
// GreenMemo and the Green-length cocycle

GreenMemo::GreenMemo(MeasurePtr m, std::size_t horizon, std::size_t trials,
                     std::uint64_t seed, std::uint64_t max_total_steps)
    : measure_(std::move(m)), horizon_(horizon), trials_(trials), seed_(seed),
      budget_(max_total_steps) {
    if (!measure_)
        throw std::invalid_argument("green memo: measure required");
    require_green_preconditions(*measure_);
}

GreenEstimate GreenMemo::compute(const GroupElement& z) {
    std::uint64_t cost = static_cast<std::uint64_t>(horizon_) * trials_;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (spent_ + cost > budget_)
            throw BudgetError("green memo: step budget of " + std::to_string(budget_) +
                              " exhausted while estimating " +
                              measure_->backend().render(z));
        spent_ += cost;
    }
    return green_distance(z, *measure_, horizon_, trials_, seed_, Parallel(1));
}

double GreenMemo::distance(const GroupElement& z) { return estimate(z).distance(); }

GreenEstimate GreenMemo::estimate(const GroupElement& z) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = memo_.find(z);
        if (it != memo_.end())
            return it->second;
    }
    GreenEstimate est = compute(z);
    std::lock_guard<std::mutex> lock(mutex_);
    memo_.emplace(z, est);
    return est;
}

std::uint64_t GreenMemo::steps_spent() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return spent_;
}

std::size_t GreenMemo::entries() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return memo_.size();
}

void GreenMemo::load_cache(std::istream& in) {
    std::string fp = measure_->fingerprint();
    const GroupBackend& b = measure_->backend();
    std::string line;
    std::map<GroupElement, GreenEstimate> partial;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream row(line);
        std::string fingerprint, word;
        std::size_t horizon = 0, trials = 0, hits = 0;
        if (!(row >> fingerprint >> word >> horizon >> trials >> hits))
            continue;
        if (fingerprint != fp || trials != trials_)
            continue;
        GroupElement z = b.parse(word);
        if (horizon == horizon_) {
            auto& est = partial[z];
            est.target = z;
            est.horizon = horizon_;
            est.trials = trials_;
            est.hits = hits;
            est.infinite = hits == 0 && !z.is_identity();
        } else if (horizon == horizon_ / 2) {
            partial[z].hits_half = hits;
        }
    }
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto& [z, est] : partial)
        if (est.horizon == horizon_)
            memo_.emplace(z, est);
}

void GreenMemo::save_cache(std::ostream& out) const {
    std::string fp = measure_->fingerprint();
    const GroupBackend& b = measure_->backend();
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& [z, est] : memo_) {
        out << fp << ' ' << b.render(z) << ' ' << est.horizon << ' ' << est.trials << ' '
            << est.hits << '\n';
        out << fp << ' ' << b.render(z) << ' ' << est.horizon / 2 << ' ' << est.trials
            << ' ' << est.hits_half << '\n';
    }
}

Cocycle green_length_cocycle(const MeasurePtr& m, std::shared_ptr<GreenMemo> memo) {
    if (!memo)
        throw std::invalid_argument("green cocycle: memo required");
    return Cocycle::end_point(
        m->backend(), "green_length",
        [memo](const GroupElement& z) { return memo->distance(z); },
        Cocycle::Kind::GreenLength);
}

// ---------------------------------------------------------------------------
// Entropy

EntropyReport entropy_estimate(const DrivingMeasure& m, const EntropyParams& params,
                               std::uint64_t seed, const Parallel& par) {
    require_green_preconditions(m);
    if (params.n_grid.size() < 2 || params.samples < 10)
        throw std::invalid_argument("entropy: need >= 2 grid points and >= 10 samples");
    const GroupBackend& b = m.backend();
    std::vector<std::size_t> grid = params.n_grid;
    std::sort(grid.begin(), grid.end());
    std::size_t n_max = grid.back();

    // Outer trajectories, read at every grid point (common random numbers).
    std::vector<GroupElement> endpoints(params.samples * grid.size());
    par.for_each_index(params.samples, [&](std::size_t i) {
        WalkStream w(m, seed, i, "entropyouter");
        std::size_t gi = 0;
        for (std::size_t j = 1; j <= n_max; ++j) {
            w.step();
            if (gi < grid.size() && j == grid[gi]) {
                endpoints[i * grid.size() + gi] = w.position();
                ++gi;
            }
        }
    });

    // One shared inner ensemble estimates every endpoint's Green distance.
    GreenTable table = build_green_table(endpoints, m, params.inner_horizon,
                                         params.inner_walks, seed ^ fnv1a64("inner"),
                                         par);

    EntropyReport report;
    report.samples = params.samples;
    report.inner_walks = params.inner_walks;
    report.inner_horizon = params.inner_horizon;

    std::vector<double> xs, ys, ws;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        std::vector<double> d(params.samples);
        EntropyPoint pt;
        pt.n = grid[gi];
        std::vector<double> deltas(params.samples, 0.0);
        for (std::size_t i = 0; i < params.samples; ++i) {
            auto idx = table.target_index(endpoints[i * grid.size() + gi]);
            GreenEstimate est = table.estimate(*idx);
            d[i] = est.distance();
            deltas[i] = est.infinite ? 0.0 : est.horizon_delta();
            pt.unresolved += est.infinite;
        }
        auto ms = mean_se(d);
        pt.mean_green_distance = ms.value;
        pt.se = ms.se;
        pt.mean_horizon_delta = mean(deltas);
        report.points.push_back(pt);
        xs.push_back(static_cast<double>(pt.n));
        ys.push_back(pt.mean_green_distance);
        ws.push_back(1.0 / (pt.se * pt.se + 1e-12));
    }

    auto fit = weighted_least_squares(xs, ys, ws);
    report.value = fit.slope;
    // WLS slope variance from the per-point errors, treating grid points as
    // independent; they share trajectories, which only correlates them
    // positively, so this is conservative.
    double sw = 0, swx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += ws[i];
        swx += ws[i] * xs[i];
    }
    double xbar = swx / sw;
    double sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        sxx += ws[i] * (xs[i] - xbar) * (xs[i] - xbar);
    report.se = std::sqrt(1.0 / sxx);

    report.bound_powers = params.convolution_powers;
    report.convolution_bound = std::numeric_limits<double>::infinity();
    if (m.finite_support()) {
        ExactDistribution power = exact_delta_id();
        ExactDistribution step = to_exact(m);
        for (int n = 1; n <= params.convolution_powers; ++n) {
            power = convolve_exact(b, power, step, params.convolution_cap);
            report.convolution_bound =
                std::min(report.convolution_bound, entropy_nats(power) / n);
        }
    }
    report.within_bound = report.value <= report.convolution_bound + 3 * report.se;
    if (!report.within_bound)
        throw std::runtime_error(
            "entropy estimate exceeds the exact-convolution bound beyond 3 SE; "
            "the Green estimator is biased");
    return report;
}

SpectralRadiusDiagnostic spectral_radius_diagnostic(const DrivingMeasure& m, int max_power,
                                                    std::size_t support_cap) {
    if (max_power < 2)
        throw std::invalid_argument("spectral radius: need at least two powers");
    SpectralRadiusDiagnostic diag;
    const GroupBackend& b = m.backend();
    ExactDistribution two = convolution_power(b, m, 2, support_cap);
    ExactDistribution power = two;
    for (int j = 1; j <= max_power; ++j) {
        diag.return_probabilities.push_back(power.prob(b.identity()));
        if (j < max_power)
            power = convolve_exact(b, power, two, support_cap);
    }
    for (std::size_t j = 1; j < diag.return_probabilities.size(); ++j)
        diag.ratios.push_back(diag.return_probabilities[j] /
                              diag.return_probabilities[j - 1]);
    diag.fitted_ratio = diag.ratios.back();
    diag.fitted_spectral_radius = std::sqrt(diag.fitted_ratio);
    return diag;
}

} // namespace clab
