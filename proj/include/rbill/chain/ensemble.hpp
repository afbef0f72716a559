#pragma once
/**
 * @file ensemble.hpp
 * @brief Independent-chain ensembles with deterministic, worker-count-free output.
 *
 * Chain c draws from stream (master_seed, c). Chains are grouped into fixed
 * blocks; each block is reduced sequentially in chain order and blocks are
 * merged in block order, so floating-point summaries do not depend on how
 * many workers ran them. Histograms are integer counts and merge in any order.
 *
 * The ensemble runner is generic over a model so the same pipeline can be
 * driven by synthetic chains with known mixing behaviour.
 */

#include <concepts>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "rbill/chain/chain.hpp"
#include "rbill/parallel.hpp"
#include "rbill/random.hpp"
#include "rbill/stats/histogram.hpp"

namespace rbill {

template <class M>
concept EnsembleModel = requires(const M& m, Rng& rng, typename M::State& s) {
    { m.initial(rng) } -> std::same_as<typename M::State>;
    m.advance(s, rng);
    { m.observable(s) } -> std::convertible_to<double>;
};

struct EnsembleSpec {
    std::uint64_t n_chains{1};
    std::uint64_t n_steps{1};
    std::uint64_t master_seed{0};
    unsigned workers{1};
    std::vector<double> edges{Histogram1D::v_perp_default().edges()};
    std::uint64_t block_size{256};
};

struct ChainFailure {
    std::uint64_t chain{0};
    std::uint64_t seed{0};
    std::string message;
};

struct EnsembleSummary {
    Histogram1D merged;                    ///< observable after steps 1..n_steps, all chains
    std::vector<Histogram1D> slices;       ///< slices[n]: observable after n steps (n = 0 is the initial law)
    std::vector<RunningStats> slice_stats;
    RunningStats overall;                  ///< same samples as `merged`
    std::vector<ChainFailure> failures;
    std::uint64_t chains_ok{0};

    EnsembleSummary() = default;
    EnsembleSummary(const std::vector<double>& edges, std::uint64_t n_steps)
        : merged(edges), slices(n_steps + 1, Histogram1D(edges)), slice_stats(n_steps + 1) {}

    void merge(const EnsembleSummary& o) {
        merged.merge(o.merged);
        for (std::size_t n = 0; n < slices.size(); ++n) {
            slices[n].merge(o.slices[n]);
            slice_stats[n].merge(o.slice_stats[n]);
        }
        overall.merge(o.overall);
        failures.insert(failures.end(), o.failures.begin(), o.failures.end());
        chains_ok += o.chains_ok;
    }
};

/// Chains [first, last) reduced sequentially in chain order.
template <EnsembleModel M>
EnsembleSummary summarize_chains(const M& model, const EnsembleSpec& spec, std::uint64_t first, std::uint64_t last) {
    EnsembleSummary out(spec.edges, spec.n_steps);
    std::vector<double> trace(spec.n_steps + 1);
    for (std::uint64_t c = first; c < last; ++c) {
        Rng rng = make_stream(spec.master_seed, c);
        try {
            auto s = model.initial(rng);
            trace[0] = model.observable(s);
            for (std::uint64_t n = 1; n <= spec.n_steps; ++n) {
                model.advance(s, rng);
                trace[n] = model.observable(s);
            }
        } catch (const std::exception& e) {
            out.failures.push_back({c, derive_seed(spec.master_seed, c), e.what()});
            continue;
        }
        for (std::uint64_t n = 0; n <= spec.n_steps; ++n) {
            out.slices[n].add(trace[n]);
            out.slice_stats[n].add(trace[n]);
            if (n > 0) {
                out.merged.add(trace[n]);
                out.overall.add(trace[n]);
            }
        }
        ++out.chains_ok;
    }
    return out;
}

template <EnsembleModel M>
EnsembleSummary run_model_ensemble(const M& model, const EnsembleSpec& spec) {
    if (spec.n_chains < 1 || spec.n_steps < 1)
        throw Error(ErrorKind::InvalidConfig, "ensemble needs n_chains >= 1 and n_steps >= 1");
    const std::uint64_t bs = std::max<std::uint64_t>(1, spec.block_size);
    const std::uint64_t n_blocks = (spec.n_chains + bs - 1) / bs;
    std::vector<EnsembleSummary> blocks(n_blocks);
    parallel_for(n_blocks, spec.workers, [&](std::size_t b) {
        const std::uint64_t first = b * bs;
        const std::uint64_t last = std::min(spec.n_chains, first + bs);
        blocks[b] = summarize_chains(model, spec, first, last);
    });
    EnsembleSummary total(spec.edges, spec.n_steps);
    for (const auto& b : blocks) total.merge(b);
    return total;
}

/// The billiard chain as an ensemble model; observable is v_perp.
struct BilliardModel {
    using State = BoundaryState;
    const ValidatedTable* table;
    InitialDistribution init;

    State initial(Rng& rng) const { return sample_initial(*table, init, rng); }
    void advance(State& s, Rng& rng) const { s = chain_step(*table, s, rng).first; }
    double observable(const State& s) const { return s.v_perp; }
};

inline EnsembleSummary run_ensemble(const ValidatedTable& table, const InitialDistribution& init,
                                    const EnsembleSpec& spec) {
    return run_model_ensemble(BilliardModel{&table, init}, spec);
}

}  // namespace rbill
