#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <vector>

#include "rbill/errors.hpp"

namespace rbill {

/// Fixed-edge histogram with under/overflow counters. Merging is plain
/// addition, so it is commutative and associative.
class Histogram1D {
public:
    Histogram1D() = default;
    explicit Histogram1D(std::vector<double> edges) : edges_(std::move(edges)), counts_(edges_.size() - 1, 0) {
        if (edges_.size() < 2) throw Error(ErrorKind::InvalidConfig, "histogram needs at least two edges");
        for (std::size_t i = 1; i < edges_.size(); ++i)
            if (!(edges_[i] > edges_[i - 1]))
                throw Error(ErrorKind::InvalidConfig, "histogram edges must be strictly increasing");
    }

    static Histogram1D log_spaced(double lo, double hi, std::size_t bins) {
        std::vector<double> e(bins + 1);
        const double a = std::log(lo), b = std::log(hi);
        for (std::size_t i = 0; i <= bins; ++i) e[i] = std::exp(a + (b - a) * static_cast<double>(i) / bins);
        e.front() = lo;
        e.back() = hi;
        return Histogram1D(std::move(e));
    }

    static Histogram1D linear(double lo, double hi, std::size_t bins) {
        std::vector<double> e(bins + 1);
        for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / bins;
        e.back() = hi;
        return Histogram1D(std::move(e));
    }

    /// The v_perp layout used throughout: 200 log bins over [1e-4, 1e3].
    static Histogram1D v_perp_default() { return log_spaced(1e-4, 1e3, 200); }

    void add(double x, std::uint64_t weight = 1) {
        total_ += weight;
        if (x < edges_.front()) {
            underflow_ += weight;
            return;
        }
        if (!(x < edges_.back())) {
            overflow_ += weight;
            return;
        }
        const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
        counts_[static_cast<std::size_t>(it - edges_.begin()) - 1] += weight;
    }

    void merge(const Histogram1D& other) {
        if (other.edges_ != edges_) throw Error(ErrorKind::EdgeMismatch, "cannot merge histograms with different edges");
        for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
        underflow_ += other.underflow_;
        overflow_ += other.overflow_;
        total_ += other.total_;
    }

    const std::vector<double>& edges() const { return edges_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    std::size_t bins() const { return counts_.size(); }
    std::uint64_t underflow() const { return underflow_; }
    std::uint64_t overflow() const { return overflow_; }
    std::uint64_t total() const { return total_; }

    /// Probability vector [underflow, bins..., overflow].
    std::vector<double> probabilities() const {
        std::vector<double> p;
        p.reserve(counts_.size() + 2);
        const double n = total_ > 0 ? static_cast<double>(total_) : 1.0;
        p.push_back(underflow_ / n);
        for (auto c : counts_) p.push_back(c / n);
        p.push_back(overflow_ / n);
        return p;
    }

    bool operator==(const Histogram1D& o) const {
        return edges_ == o.edges_ && counts_ == o.counts_ && underflow_ == o.underflow_ &&
               overflow_ == o.overflow_ && total_ == o.total_;
    }

private:
    std::vector<double> edges_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t underflow_{0};
    std::uint64_t overflow_{0};
    std::uint64_t total_{0};
};

/// Streaming mean/variance (Welford) with the pairwise merge of Chan et al.
struct RunningStats {
    std::uint64_t n{0};
    double mean{0.0};
    double m2{0.0};

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    void merge(const RunningStats& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
        const double d = o.mean - mean;
        const double nt = na + nb;
        mean += d * nb / nt;
        m2 += o.m2 + d * d * na * nb / nt;
        n += o.n;
    }

    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double std_error() const { return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

}  // namespace rbill
