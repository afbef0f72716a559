#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <string>

#include "rbill/harness/commands.hpp"
#include "rbill/harness/config.hpp"
#include "rbill/harness/output.hpp"

using namespace rbill;
using namespace rbill::harness;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "table": {
    "disks": [
      {"center": [0.0, 0.0], "radius": 0.35, "beta": 1.0},
      {"center": [0.5, 0.5], "radius": 0.2, "beta": 1.0},
      {"center": [0.5, 0.0], "radius": 0.1, "beta": 1.0}
    ]
  },
  "jacobian_check": {}
})";

std::vector<ConfigIssue> issues_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.issues();
    }
    return {};
}

json with(const std::string& base, const std::function<void(json&)>& edit) {
    json j = json::parse(base);
    edit(j);
    return j;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rbill_harness_test_" + name);
    fs::remove_all(p);
    return p;
}

// Every file of a run except the wall-clock fields of the manifest.
std::map<std::string, std::string> fingerprint(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        std::string bytes = read_file(e.path());
        if (name == "manifest.json") {
            json m = json::parse(bytes);
            for (const auto& k : wall_clock_keys()) m.erase(k);
            bytes = m.dump();
        }
        out[name] = bytes;
    }
    return out;
}

}  // namespace

TEST(Config, MinimalRoundTrips) {
    const ExperimentConfig c = parse_config(kMinimal);
    ASSERT_TRUE(c.jacobian_check.has_value());
    EXPECT_EQ(c.table.disks.size(), 3u);
    const ExperimentConfig back = parse_config(serialize(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(serialize(back), serialize(c));
}

TEST(Config, FullSampleConfigsRoundTrip) {
    for (const auto& e : fs::directory_iterator(fs::path(RBILL_SOURCE_DIR) / "configs")) {
        const ExperimentConfig c = parse_config(read_file(e.path()));
        EXPECT_EQ(parse_config(serialize(c)), c) << e.path();
    }
}

TEST(Config, RoundTripKeepsAwkwardDoubles) {
    ExperimentConfig c = parse_config(kMinimal);
    c.table.disks[0].beta = 1.0 + 1.0 / 3.0;
    c.run.master_seed = 0xffffffffffffffffULL;
    c.potential = PotentialParams{0.1 + 0.2, std::nextafter(3.0, 4.0)};
    EXPECT_EQ(parse_config(serialize(c)), c);
}

TEST(Config, UnknownKeySuggestsClosest) {
    const auto j = with(kMinimal, [](json& j) { j["table"]["perriod"] = 1.0; });
    const auto issues = issues_of(j.dump());
    ASSERT_EQ(issues.size(), 1u);
    EXPECT_EQ(issues[0].kind, IssueKind::UnknownKey);
    EXPECT_EQ(issues[0].path, "table.perriod");
    EXPECT_EQ(issues[0].suggestion, "period");
}

TEST(Config, EpsilonAboveBetaMinIsDomainError) {
    const auto j = with(kMinimal, [](json& j) { j["potential"] = {{"epsilon", 2.0}, {"v_perp_max", 3.0}}; });
    const auto issues = issues_of(j.dump());
    ASSERT_EQ(issues.size(), 1u);
    EXPECT_EQ(issues[0].kind, IssueKind::DomainError);
    EXPECT_EQ(issues[0].path, "potential.epsilon");
    EXPECT_NE(issues[0].message.find("epsilon < beta_min"), std::string::npos) << issues[0].message;
}

TEST(Config, ReportsEveryProblemAtOnce) {
    const auto j = with(kMinimal, [](json& j) {
        j["table"]["disks"][1].erase("radius");
        j["table"]["disks"][2]["beta"] = "hot";
        j["run"] = {{"master_seed", -4}, {"thinnning", 2}};
        j["verify_drift"] = json::object();
    });
    const auto issues = issues_of(j.dump());
    auto has = [&](IssueKind k, const std::string& path) {
        return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.kind == k && i.path == path; });
    };
    EXPECT_TRUE(has(IssueKind::MissingKey, "table.disks[1].radius"));
    EXPECT_TRUE(has(IssueKind::TypeMismatch, "table.disks[2].beta"));
    EXPECT_TRUE(has(IssueKind::TypeMismatch, "run.master_seed"));
    EXPECT_TRUE(has(IssueKind::UnknownKey, "run.thinnning"));
    EXPECT_TRUE(has(IssueKind::MissingKey, "potential"));
    EXPECT_EQ(issues.size(), 5u);
}

TEST(Config, NotJsonIsReported) { EXPECT_FALSE(issues_of("{ table: ").empty()); }

TEST(Config, HashIgnoresKeyOrderWorkersAndOutput) {
    const ExperimentConfig a = parse_config(kMinimal);
    json reordered = json::parse(kMinimal);
    std::string text = "{\"jacobian_check\": {}, \"table\": " + reordered["table"].dump() + "}";
    ExperimentConfig b = parse_config(text);
    b.run.workers = 7;
    b.output.directory = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.run.master_seed = 1;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Output, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Output, SeventeenSignificantDigits) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(1.0), "1");
    EXPECT_EQ(std::stod(format_double(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(Commands, JacobianCheckPassesAndInventoriesFiles) {
    const fs::path dir = scratch("jac");
    ExperimentConfig c = parse_config(kMinimal);
    c.jacobian_check->n_states = 500;
    c.jacobian_check->fd_states = 50;
    EXPECT_EQ(run_command("jacobian-check", c, dir), kPass);
    const json m = json::parse(read_file(dir / "manifest.json"));
    EXPECT_EQ(m["summary"]["verdict"], "PASS");
    EXPECT_EQ(m["config_hash"], config_hash(c));
    std::size_t listed = 0;
    for (const auto& f : m["files"]) {
        EXPECT_EQ(f["sha256"], sha256_hex(read_file(dir / f["path"].get<std::string>())));
        ++listed;
    }
    EXPECT_EQ(listed + 1, static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator())));
    EXPECT_EQ(read_file(dir / "jacobian_fd.csv").rfind("disk_id,theta,v_perp,phi,max_rel_error,status\n", 0), 0u);
}

TEST(Commands, MissingBlockIsExecutionError) {
    const fs::path dir = scratch("missing");
    const ExperimentConfig c = parse_config(kMinimal);
    EXPECT_EQ(run_command("verify-drift", c, dir), kExecutionError);
    const json m = json::parse(read_file(dir / "manifest.json"));
    EXPECT_EQ(m["exit_status"], 2);
    EXPECT_NE(m["summary"]["error"].get<std::string>().find("master_seed 0"), std::string::npos);
}

TEST(Commands, UnboundedHorizonIsExecutionError) {
    const fs::path dir = scratch("horizon");
    ExperimentConfig c = parse_config(kMinimal);
    c.table.disks = {{{0.25, 0.5}, 0.2, 1.0}, {{0.75, 0.5}, 0.2, 1.0}};
    EXPECT_EQ(run_command("jacobian-check", c, dir), kExecutionError);
}

TEST(Commands, FailedVerificationExitsOne) {
    const fs::path dir = scratch("fail");
    ExperimentConfig c = parse_config(kMinimal);
    c.jacobian_check->n_states = 100;
    c.jacobian_check->fd_states = 10;
    c.jacobian_check->det_tolerance = 0.0;
    c.jacobian_check->fd_tolerance = 0.0;
    EXPECT_EQ(run_command("jacobian-check", c, dir), kVerificationFail);
}

TEST(Commands, RerunsAreByteIdenticalAcrossWorkerCounts) {
    ExperimentConfig c = parse_config(kMinimal);
    c.jacobian_check.reset();
    c.potential = PotentialParams{0.1, 3.0};
    c.run = {200, 3000, 0, 1, 99, 1};
    c.simulate = SimulateBlock{};
    c.estimate_mixing = MixingBlock{};
    c.estimate_mixing->initial_a = {"point_mass", 0, 1.0, 5.0};
    c.estimate_mixing->window_lower = 0.1;
    c.run.n_steps = 20;
    for (const std::string cmd : {"simulate", "estimate-mixing"}) {
        const fs::path a = scratch(cmd + "_a"), b = scratch(cmd + "_b");
        c.run.workers = 1;
        const int sa = run_command(cmd, c, a);
        c.run.workers = 3;
        const int sb = run_command(cmd, c, b);
        EXPECT_EQ(sa, sb);
        EXPECT_EQ(fingerprint(a), fingerprint(b)) << cmd;
    }
}
