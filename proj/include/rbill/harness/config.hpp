#pragma once
/**
 * @file config.hpp
 * @brief Experiment configuration: JSON schema, validation with complete
 * error reporting, and canonical serialization.
 *
 * parse_config never stops at the first problem. Every unknown key, missing
 * key, type mismatch and domain violation is collected with its JSON path and
 * reported together in a ConfigError.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbill/chain/chain.hpp"
#include "rbill/errors.hpp"
#include "rbill/geometry/table.hpp"
#include "rbill/potential/potential.hpp"

namespace rbill::harness {

using json = nlohmann::json;

enum class IssueKind { UnknownKey, MissingKey, TypeMismatch, DomainError };

inline const char* to_string(IssueKind k) {
    switch (k) {
        case IssueKind::UnknownKey: return "UnknownKey";
        case IssueKind::MissingKey: return "MissingKey";
        case IssueKind::TypeMismatch: return "TypeMismatch";
        case IssueKind::DomainError: return "DomainError";
    }
    return "?";
}

struct ConfigIssue {
    IssueKind kind;
    std::string path;        ///< e.g. "table.disks[1].radius"
    std::string message;
    std::string suggestion;  ///< closest known key, for UnknownKey
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues)
        : Error(ErrorKind::InvalidConfig, render(issues)), issues_(std::move(issues)) {}
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    static std::string render(const std::vector<ConfigIssue>& issues) {
        std::ostringstream os;
        os << issues.size() << " configuration problem(s)";
        for (const auto& i : issues) {
            os << "\n  " << to_string(i.kind) << " at " << (i.path.empty() ? "<root>" : i.path) << ": " << i.message;
            if (!i.suggestion.empty()) os << " (did you mean \"" << i.suggestion << "\"?)";
        }
        return os.str();
    }
    std::vector<ConfigIssue> issues_;
};

// ---------------------------------------------------------------- schema

/// Initial law of a chain or ensemble.
struct InitialSpec {
    std::string kind{"point_mass"};  ///< point_mass | equilibrium | uniform_box
    std::size_t disk{0};
    double theta{0.0};
    double v_perp{1.0};
    double beta{1.0};
    double v_lo{0.0};
    double v_hi{1.0};

    bool operator==(const InitialSpec&) const = default;

    InitialDistribution to_distribution() const {
        if (kind == "equilibrium") return InitialDistribution::equilibrium(beta);
        if (kind == "uniform_box") return InitialDistribution::uniform_box(v_lo, v_hi);
        return InitialDistribution::point_mass({{disk, theta}, v_perp});
    }
};

struct RunBlock {
    std::uint64_t n_steps{1000};
    std::uint64_t n_chains{1};
    std::uint64_t burn_in{0};
    std::uint64_t thinning{1};
    std::uint64_t master_seed{0};
    unsigned workers{1};

    bool operator==(const RunBlock&) const = default;
};

struct SimulateBlock {
    InitialSpec initial{};
    bool trajectory{true};  ///< write chain 0's thinned trajectory

    bool operator==(const SimulateBlock&) const = default;
};

struct EquilibriumBlock {
    InitialSpec initial{};
    std::size_t position_bins{50};
    double alpha{0.01};

    bool operator==(const EquilibriumBlock&) const = default;
};

struct DriftBlock {
    std::size_t n_v{40};
    double v_lo_factor{0.01};
    double v_hi_factor{10.0};
    std::size_t n_theta{32};
    bool densify{true};
    double densify_halfwidth{0.05};
    std::size_t densify_factor{4};
    std::size_t mc_samples{2000};
    double gamma_min{0.5};
    double gamma_max{0.995};
    std::size_t n_gamma{50};
    double rel_tol{1e-9};
    std::size_t scan_panels{2000};

    bool operator==(const DriftBlock&) const = default;
};

struct AutocorrelationBlock {
    std::string observable{"v_perp"};  ///< v_perp | V | level_set
    std::uint64_t n_steps{200000};
    double window_c{6.0};

    bool operator==(const AutocorrelationBlock&) const = default;
};

struct MixingBlock {
    InitialSpec initial_a{"point_mass", 0, 1.0, 5.0};
    InitialSpec initial_b{"equilibrium"};
    double window_lower{0.02};
    double window_upper{0.5};
    double confidence{0.95};
    bool weighted{true};  ///< also emit the V-weighted TV curve (needs a potential block)
    std::optional<AutocorrelationBlock> autocorrelation;

    bool operator==(const MixingBlock&) const = default;
};

struct JacobianBlock {
    std::size_t n_states{10000};
    double min_cos{1e-2};
    double det_tolerance{1e-9};
    std::size_t fd_states{1000};
    double fd_h{1e-7};
    double fd_min_cos{5e-2};
    double fd_tolerance{1e-4};

    bool operator==(const JacobianBlock&) const = default;
};

struct CoeffsBlock {
    std::size_t n_inputs{1000};
    std::size_t n_geometry{200};
    double discriminant_tolerance{1e-12};
    double geometry_tolerance{1e-9};
    double decay_factor{0.75};
    std::vector<double> decay_v_perps{10.0, 20.0, 40.0, 80.0};

    bool operator==(const CoeffsBlock&) const = default;
};

struct OutputBlock {
    std::string directory{"results"};

    bool operator==(const OutputBlock&) const = default;
};

struct ExperimentConfig {
    TableConfig table;
    std::optional<PotentialParams> potential;
    RunBlock run;
    std::optional<SimulateBlock> simulate;
    std::optional<EquilibriumBlock> check_equilibrium;
    std::optional<DriftBlock> verify_drift;
    std::optional<MixingBlock> estimate_mixing;
    std::optional<JacobianBlock> jacobian_check;
    std::optional<CoeffsBlock> coeffs_check;
    OutputBlock output;

    bool operator==(const ExperimentConfig&) const = default;
};

// ---------------------------------------------------------------- reading

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
    if (key.empty()) return path;
    return path.empty() ? key : path + "." + key;
}

inline const char* type_name(const json& j) { return j.type_name(); }

template <class T>
struct Kind;
template <>
struct Kind<double> {
    static constexpr const char* name = "number";
    static bool read(const json& j, double& out) {
        if (!j.is_number()) return false;
        out = j.get<double>();
        return std::isfinite(out);
    }
};
template <>
struct Kind<std::uint64_t> {
    static constexpr const char* name = "non-negative integer";
    static bool read(const json& j, std::uint64_t& out) {
        if (!j.is_number_unsigned()) return false;
        out = j.get<std::uint64_t>();
        return true;
    }
};
template <>
struct Kind<unsigned> {
    static constexpr const char* name = "non-negative integer";
    static bool read(const json& j, unsigned& out) {
        if (!j.is_number_unsigned() || j.get<std::uint64_t>() > 0xffffffffULL) return false;
        out = j.get<unsigned>();
        return true;
    }
};
template <>
struct Kind<bool> {
    static constexpr const char* name = "boolean";
    static bool read(const json& j, bool& out) {
        if (!j.is_boolean()) return false;
        out = j.get<bool>();
        return true;
    }
};
template <>
struct Kind<std::string> {
    static constexpr const char* name = "string";
    static bool read(const json& j, std::string& out) {
        if (!j.is_string()) return false;
        out = j.get<std::string>();
        return true;
    }
};
template <>
struct Kind<std::vector<double>> {
    static constexpr const char* name = "array of numbers";
    static bool read(const json& j, std::vector<double>& out) {
        if (!j.is_array()) return false;
        std::vector<double> v;
        for (const auto& e : j) {
            if (!e.is_number() || !std::isfinite(e.get<double>())) return false;
            v.push_back(e.get<double>());
        }
        out = std::move(v);
        return true;
    }
};

/// Reads one JSON object, remembering which keys the schema knows so the
/// leftovers can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json* j, std::string path, std::vector<ConfigIssue>& issues)
        : j_(j), path_(std::move(path)), issues_(&issues) {
        if (j_ && !j_->is_object()) {
            issues_->push_back({IssueKind::TypeMismatch, path_, std::string("expected object, got ") + type_name(*j_), ""});
            j_ = nullptr;
        }
    }
    ObjectReader(const ObjectReader&) = delete;
    ObjectReader& operator=(const ObjectReader&) = delete;
    ~ObjectReader() { finish(); }

    bool valid() const { return j_ != nullptr; }
    const std::string& path() const { return path_; }
    std::vector<ConfigIssue>& issues() { return *issues_; }

    bool has(const std::string& key) {
        known_.insert(key);
        return j_ && j_->contains(key);
    }

    const json* get(const std::string& key) {
        known_.insert(key);
        if (!j_) return nullptr;
        const auto it = j_->find(key);
        return it == j_->end() ? nullptr : &*it;
    }

    /// Returns false (and records an issue) when the key is present with the wrong type.
    template <class T>
    bool opt(const std::string& key, T& out) {
        const json* v = get(key);
        if (!v) return true;
        T tmp = out;
        if (!Kind<T>::read(*v, tmp)) {
            issues_->push_back({IssueKind::TypeMismatch, join(path_, key),
                                std::string("expected ") + Kind<T>::name + ", got " + v->dump(), ""});
            return false;
        }
        out = std::move(tmp);
        return true;
    }

    template <class T>
    bool req(const std::string& key, T& out) {
        if (!j_) return false;
        if (!has(key)) {
            issues_->push_back({IssueKind::MissingKey, join(path_, key), "required key is missing", ""});
            return false;
        }
        return opt(key, out);
    }

    void domain(const std::string& key, const std::string& msg) {
        issues_->push_back({IssueKind::DomainError, join(path_, key), msg, ""});
    }

    void finish() {
        if (!j_ || finished_) return;
        finished_ = true;
        for (auto it = j_->begin(); it != j_->end(); ++it) {
            if (known_.count(it.key())) continue;
            std::string best;
            std::size_t best_d = 3;
            for (const auto& k : known_) {
                const std::size_t d = edit_distance(it.key(), k);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            issues_->push_back({IssueKind::UnknownKey, join(path_, it.key()), "unknown key", best});
        }
    }

private:
    const json* j_;
    std::string path_;
    std::vector<ConfigIssue>* issues_;
    std::set<std::string> known_;
    bool finished_{false};
};

inline void positive(ObjectReader& r, const std::string& key, double v) {
    if (!(v > 0.0)) r.domain(key, "must be > 0 (got " + json(v).dump() + ")");
}

inline void read_initial(ObjectReader& parent, const std::string& key, InitialSpec& out, std::size_t n_disks) {
    const json* j = parent.get(key);
    if (!j) return;
    ObjectReader r(j, join(parent.path(), key), parent.issues());
    if (!r.valid()) return;
    r.req("kind", out.kind);
    std::uint64_t disk = out.disk;
    if (out.kind == "point_mass") {
        if (r.req("disk", disk)) {
            out.disk = static_cast<std::size_t>(disk);
            if (n_disks && out.disk >= n_disks) r.domain("disk", "disk index out of range");
        }
        r.req("theta", out.theta);
        if (r.req("v_perp", out.v_perp)) positive(r, "v_perp", out.v_perp);
    } else if (out.kind == "equilibrium") {
        if (r.req("beta", out.beta)) positive(r, "beta", out.beta);
    } else if (out.kind == "uniform_box") {
        const bool a = r.req("v_lo", out.v_lo), b = r.req("v_hi", out.v_hi);
        if (a && b && !(out.v_lo >= 0.0 && out.v_hi > out.v_lo)) r.domain("v_hi", "need 0 <= v_lo < v_hi");
    } else {
        r.domain("kind", "must be one of point_mass, equilibrium, uniform_box (got \"" + out.kind + "\")");
    }
}

inline void read_table(ObjectReader& r, TableConfig& t) {
    if (r.opt("period", t.period)) positive(r, "period", t.period);
    const json* disks = r.get("disks");
    if (!disks) {
        if (r.valid()) r.issues().push_back({IssueKind::MissingKey, join(r.path(), "disks"), "required key is missing", ""});
    } else if (!disks->is_array()) {
        r.issues().push_back({IssueKind::TypeMismatch, join(r.path(), "disks"),
                              std::string("expected array, got ") + type_name(*disks), ""});
    } else if (disks->empty()) {
        r.domain("disks", "need at least one disk");
    } else {
        t.disks.clear();
        for (std::size_t i = 0; i < disks->size(); ++i) {
            Disk d;
            ObjectReader dr(&(*disks)[i], join(r.path(), "disks[" + std::to_string(i) + "]"), r.issues());
            if (!dr.valid()) continue;
            const json* c = dr.get("center");
            if (!c) {
                dr.issues().push_back({IssueKind::MissingKey, join(dr.path(), "center"), "required key is missing", ""});
            } else if (!c->is_array() || c->size() != 2 || !(*c)[0].is_number() || !(*c)[1].is_number()) {
                dr.issues().push_back({IssueKind::TypeMismatch, join(dr.path(), "center"),
                                       "expected [x, y], got " + c->dump(), ""});
            } else {
                d.center = {(*c)[0].get<double>(), (*c)[1].get<double>()};
                if (!(d.center.x >= 0.0 && d.center.x < t.period && d.center.y >= 0.0 && d.center.y < t.period))
                    dr.domain("center", "must lie in [0, period)^2");
            }
            if (dr.req("radius", d.radius)) {
                positive(dr, "radius", d.radius);
                if (!(2.0 * d.radius < t.period)) dr.domain("radius", "need 2 * radius < period");
            }
            if (dr.req("beta", d.beta)) positive(dr, "beta", d.beta);
            t.disks.push_back(d);
        }
    }
    r.opt("image_cutoff", t.image_cutoff);
    if (const json* hp = r.get("horizon_probe")) {
        ObjectReader h(hp, join(r.path(), "horizon_probe"), r.issues());
        std::uint64_t np = static_cast<std::uint64_t>(t.horizon_probe.n_points);
        std::uint64_t na = static_cast<std::uint64_t>(t.horizon_probe.n_angles);
        if (h.opt("n_points", np)) t.horizon_probe.n_points = static_cast<int>(std::min<std::uint64_t>(np, 1u << 20));
        if (h.opt("n_angles", na)) t.horizon_probe.n_angles = static_cast<int>(std::min<std::uint64_t>(na, 1u << 20));
        if (h.opt("tau_cap", t.horizon_probe.tau_cap)) positive(h, "tau_cap", t.horizon_probe.tau_cap);
        if (t.horizon_probe.n_points < 1) h.domain("n_points", "must be >= 1");
        if (t.horizon_probe.n_angles < 1) h.domain("n_angles", "must be >= 1");
    }
    double rmax = 0.0;
    for (const auto& d : t.disks) rmax = std::max(rmax, d.radius);
    if (!(t.image_cutoff >= t.horizon_probe.tau_cap + 2.0 * rmax))
        r.domain("image_cutoff", "must be >= horizon_probe.tau_cap + 2 * max radius");
}

inline double beta_min(const TableConfig& t) {
    double b = 0.0;
    for (const auto& d : t.disks)
        if (d.beta > 0.0) b = b == 0.0 ? d.beta : std::min(b, d.beta);
    return b;
}

}  // namespace detail

/// Parse and validate a configuration. Throws ConfigError with every issue found.
inline ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({{IssueKind::TypeMismatch, "", std::string("not valid JSON: ") + e.what(), ""}});
    }
    std::vector<ConfigIssue> issues;
    ExperimentConfig c;
    {
        detail::ObjectReader r(&root, "", issues);
        if (r.valid()) {
            using detail::ObjectReader;
            const json* tj = r.get("table");
            if (!tj) {
                issues.push_back({IssueKind::MissingKey, "table", "required key is missing", ""});
            } else {
                ObjectReader t(tj, "table", issues);
                if (t.valid()) detail::read_table(t, c.table);
            }
            const std::size_t n_disks = c.table.disks.size();

            if (const json* pj = r.get("potential")) {
                ObjectReader p(pj, "potential", issues);
                PotentialParams pp;
                const bool a = p.req("epsilon", pp.epsilon), b = p.req("v_perp_max", pp.v_perp_max);
                if (a) detail::positive(p, "epsilon", pp.epsilon);
                if (b) detail::positive(p, "v_perp_max", pp.v_perp_max);
                const double bmin = detail::beta_min(c.table);
                if (a && bmin > 0.0 && !(pp.epsilon < bmin))
                    p.domain("epsilon", "epsilon = " + json(pp.epsilon).dump() + " violates epsilon < beta_min = " +
                                            json(bmin).dump());
                if (a && b && pp.epsilon > 0.0 && pp.v_perp_max > 0.0 && !(pp.v_perp_min() < pp.v_perp_max))
                    p.domain("v_perp_max", "v_perp_min = exp(-epsilon v_perp_max^2) must be below v_perp_max");
                c.potential = pp;
            }

            if (const json* rj = r.get("run")) {
                ObjectReader x(rj, "run", issues);
                auto& b = c.run;
                x.opt("n_steps", b.n_steps);
                x.opt("n_chains", b.n_chains);
                x.opt("burn_in", b.burn_in);
                x.opt("thinning", b.thinning);
                x.opt("master_seed", b.master_seed);
                x.opt("workers", b.workers);
                if (b.n_steps < 1) x.domain("n_steps", "must be >= 1");
                if (b.n_chains < 1) x.domain("n_chains", "must be >= 1");
                if (b.thinning < 1) x.domain("thinning", "must be >= 1");
                if (b.workers < 1) x.domain("workers", "must be >= 1");
            }

            if (const json* sj = r.get("simulate")) {
                ObjectReader x(sj, "simulate", issues);
                SimulateBlock b;
                detail::read_initial(x, "initial", b.initial, n_disks);
                x.opt("trajectory", b.trajectory);
                c.simulate = b;
            }

            if (const json* ej = r.get("check_equilibrium")) {
                ObjectReader x(ej, "check_equilibrium", issues);
                EquilibriumBlock b;
                detail::read_initial(x, "initial", b.initial, n_disks);
                if (b.initial.kind != "point_mass") x.domain("initial", "check_equilibrium runs from a point mass");
                std::uint64_t bins = b.position_bins;
                if (x.opt("position_bins", bins)) b.position_bins = static_cast<std::size_t>(bins);
                x.opt("alpha", b.alpha);
                if (b.position_bins < 2) x.domain("position_bins", "must be >= 2");
                if (!(b.alpha > 0.0 && b.alpha < 1.0)) x.domain("alpha", "must be in (0, 1)");
                if (c.run.n_steps <= c.run.burn_in) x.domain("", "needs run.n_steps > run.burn_in");
                c.check_equilibrium = b;
            }

            auto read_size = [](ObjectReader& x, const char* key, std::size_t& out) {
                std::uint64_t v = out;
                if (x.opt(key, v)) out = static_cast<std::size_t>(v);
            };

            if (const json* dj = r.get("verify_drift")) {
                ObjectReader x(dj, "verify_drift", issues);
                DriftBlock b;
                read_size(x, "n_v", b.n_v);
                x.opt("v_lo_factor", b.v_lo_factor);
                x.opt("v_hi_factor", b.v_hi_factor);
                read_size(x, "n_theta", b.n_theta);
                x.opt("densify", b.densify);
                x.opt("densify_halfwidth", b.densify_halfwidth);
                read_size(x, "densify_factor", b.densify_factor);
                read_size(x, "mc_samples", b.mc_samples);
                x.opt("gamma_min", b.gamma_min);
                x.opt("gamma_max", b.gamma_max);
                read_size(x, "n_gamma", b.n_gamma);
                x.opt("rel_tol", b.rel_tol);
                read_size(x, "scan_panels", b.scan_panels);
                if (b.n_v < 2) x.domain("n_v", "must be >= 2");
                if (b.n_theta < 1) x.domain("n_theta", "must be >= 1");
                if (b.mc_samples < 1000) x.domain("mc_samples", "must be >= 1000");
                if (b.n_gamma < 1) x.domain("n_gamma", "must be >= 1");
                if (!(b.gamma_min > 0.0 && b.gamma_min <= b.gamma_max)) x.domain("gamma_min", "need 0 < gamma_min <= gamma_max");
                if (!(b.v_lo_factor > 0.0)) x.domain("v_lo_factor", "must be > 0");
                if (!(b.v_hi_factor > 0.0)) x.domain("v_hi_factor", "must be > 0");
                if (!(b.rel_tol > 0.0)) x.domain("rel_tol", "must be > 0");
                if (b.scan_panels < 1) x.domain("scan_panels", "must be >= 1");
                if (!c.potential) issues.push_back({IssueKind::MissingKey, "potential", "required by verify_drift", ""});
                c.verify_drift = b;
            }

            if (const json* mj = r.get("estimate_mixing")) {
                ObjectReader x(mj, "estimate_mixing", issues);
                MixingBlock b;
                detail::read_initial(x, "initial_a", b.initial_a, n_disks);
                detail::read_initial(x, "initial_b", b.initial_b, n_disks);
                x.opt("window_lower", b.window_lower);
                x.opt("window_upper", b.window_upper);
                x.opt("confidence", b.confidence);
                x.opt("weighted", b.weighted);
                if (!(b.window_lower > 0.0 && b.window_lower < b.window_upper && b.window_upper <= 1.0))
                    x.domain("window_lower", "need 0 < window_lower < window_upper <= 1");
                if (!(b.confidence > 0.0 && b.confidence < 1.0)) x.domain("confidence", "must be in (0, 1)");
                if (c.run.n_chains < 1000) x.domain("", "needs run.n_chains >= 1000");
                if (b.weighted && !c.potential)
                    issues.push_back({IssueKind::MissingKey, "potential", "required by estimate_mixing.weighted", ""});
                if (const json* aj = x.get("autocorrelation")) {
                    ObjectReader a(aj, "estimate_mixing.autocorrelation", issues);
                    AutocorrelationBlock ab;
                    a.opt("observable", ab.observable);
                    a.opt("n_steps", ab.n_steps);
                    a.opt("window_c", ab.window_c);
                    if (ab.observable != "v_perp" && ab.observable != "V" && ab.observable != "level_set")
                        a.domain("observable", "must be one of v_perp, V, level_set");
                    if ((ab.observable != "v_perp") && !c.potential)
                        issues.push_back({IssueKind::MissingKey, "potential", "required by this observable", ""});
                    if (ab.n_steps < 100000) a.domain("n_steps", "must be >= 100000");
                    if (!(ab.window_c > 0.0)) a.domain("window_c", "must be > 0");
                    b.autocorrelation = ab;
                }
                c.estimate_mixing = b;
            }

            if (const json* jj = r.get("jacobian_check")) {
                ObjectReader x(jj, "jacobian_check", issues);
                JacobianBlock b;
                read_size(x, "n_states", b.n_states);
                x.opt("min_cos", b.min_cos);
                x.opt("det_tolerance", b.det_tolerance);
                read_size(x, "fd_states", b.fd_states);
                x.opt("fd_h", b.fd_h);
                x.opt("fd_min_cos", b.fd_min_cos);
                x.opt("fd_tolerance", b.fd_tolerance);
                if (!(b.min_cos > 0.0 && b.min_cos < 1.0)) x.domain("min_cos", "must be in (0, 1)");
                if (!(b.fd_min_cos > 0.0 && b.fd_min_cos < 1.0)) x.domain("fd_min_cos", "must be in (0, 1)");
                if (!(b.fd_h > 0.0)) x.domain("fd_h", "must be > 0");
                c.jacobian_check = b;
            }

            if (const json* kj = r.get("coeffs_check")) {
                ObjectReader x(kj, "coeffs_check", issues);
                CoeffsBlock b;
                read_size(x, "n_inputs", b.n_inputs);
                read_size(x, "n_geometry", b.n_geometry);
                x.opt("discriminant_tolerance", b.discriminant_tolerance);
                x.opt("geometry_tolerance", b.geometry_tolerance);
                x.opt("decay_factor", b.decay_factor);
                x.opt("decay_v_perps", b.decay_v_perps);
                if (b.decay_v_perps.size() < 2) x.domain("decay_v_perps", "need at least two speeds");
                for (double v : b.decay_v_perps)
                    if (!(v > 0.0)) x.domain("decay_v_perps", "speeds must be > 0");
                c.coeffs_check = b;
            }

            if (const json* oj = r.get("output")) {
                ObjectReader x(oj, "output", issues);
                x.opt("directory", c.output.directory);
            }
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return c;
}

// ---------------------------------------------------------------- writing

inline json to_json(const InitialSpec& s) {
    json j{{"kind", s.kind}};
    if (s.kind == "point_mass") {
        j["disk"] = s.disk;
        j["theta"] = s.theta;
        j["v_perp"] = s.v_perp;
    } else if (s.kind == "equilibrium") {
        j["beta"] = s.beta;
    } else {
        j["v_lo"] = s.v_lo;
        j["v_hi"] = s.v_hi;
    }
    return j;
}

inline json to_json(const TableConfig& t) {
    json disks = json::array();
    for (const auto& d : t.disks)
        disks.push_back({{"center", {d.center.x, d.center.y}}, {"radius", d.radius}, {"beta", d.beta}});
    return {{"period", t.period},
            {"disks", disks},
            {"image_cutoff", t.image_cutoff},
            {"horizon_probe",
             {{"n_points", t.horizon_probe.n_points},
              {"n_angles", t.horizon_probe.n_angles},
              {"tau_cap", t.horizon_probe.tau_cap}}}};
}

/// Full effective configuration with every default spelled out.
inline json to_json(const ExperimentConfig& c) {
    json j;
    j["table"] = to_json(c.table);
    if (c.potential) j["potential"] = {{"epsilon", c.potential->epsilon}, {"v_perp_max", c.potential->v_perp_max}};
    j["run"] = {{"n_steps", c.run.n_steps},         {"n_chains", c.run.n_chains}, {"burn_in", c.run.burn_in},
                {"thinning", c.run.thinning},       {"master_seed", c.run.master_seed},
                {"workers", c.run.workers}};
    if (c.simulate) j["simulate"] = {{"initial", to_json(c.simulate->initial)}, {"trajectory", c.simulate->trajectory}};
    if (c.check_equilibrium) {
        const auto& b = *c.check_equilibrium;
        j["check_equilibrium"] = {{"initial", to_json(b.initial)}, {"position_bins", b.position_bins}, {"alpha", b.alpha}};
    }
    if (c.verify_drift) {
        const auto& b = *c.verify_drift;
        j["verify_drift"] = {{"n_v", b.n_v},
                             {"v_lo_factor", b.v_lo_factor},
                             {"v_hi_factor", b.v_hi_factor},
                             {"n_theta", b.n_theta},
                             {"densify", b.densify},
                             {"densify_halfwidth", b.densify_halfwidth},
                             {"densify_factor", b.densify_factor},
                             {"mc_samples", b.mc_samples},
                             {"gamma_min", b.gamma_min},
                             {"gamma_max", b.gamma_max},
                             {"n_gamma", b.n_gamma},
                             {"rel_tol", b.rel_tol},
                             {"scan_panels", b.scan_panels}};
    }
    if (c.estimate_mixing) {
        const auto& b = *c.estimate_mixing;
        json m{{"initial_a", to_json(b.initial_a)},
               {"initial_b", to_json(b.initial_b)},
               {"window_lower", b.window_lower},
               {"window_upper", b.window_upper},
               {"confidence", b.confidence},
               {"weighted", b.weighted}};
        if (b.autocorrelation)
            m["autocorrelation"] = {{"observable", b.autocorrelation->observable},
                                    {"n_steps", b.autocorrelation->n_steps},
                                    {"window_c", b.autocorrelation->window_c}};
        j["estimate_mixing"] = m;
    }
    if (c.jacobian_check) {
        const auto& b = *c.jacobian_check;
        j["jacobian_check"] = {{"n_states", b.n_states},         {"min_cos", b.min_cos},
                               {"det_tolerance", b.det_tolerance}, {"fd_states", b.fd_states},
                               {"fd_h", b.fd_h},                 {"fd_min_cos", b.fd_min_cos},
                               {"fd_tolerance", b.fd_tolerance}};
    }
    if (c.coeffs_check) {
        const auto& b = *c.coeffs_check;
        j["coeffs_check"] = {{"n_inputs", b.n_inputs},
                             {"n_geometry", b.n_geometry},
                             {"discriminant_tolerance", b.discriminant_tolerance},
                             {"geometry_tolerance", b.geometry_tolerance},
                             {"decay_factor", b.decay_factor},
                             {"decay_v_perps", b.decay_v_perps}};
    }
    j["output"] = {{"directory", c.output.directory}};
    return j;
}

inline std::string serialize(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace rbill::harness
