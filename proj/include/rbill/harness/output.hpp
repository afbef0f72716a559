#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "rbill/errors.hpp"
#include "rbill/stats/histogram.hpp"

namespace rbill::harness {

inline constexpr const char* artifact_name = "rbill";
inline constexpr const char* artifact_version = "1.0.0";

/// Doubles as printf("%.17g") would write them, independent of the locale.
inline std::string format_double(double x) {
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
    return std::string(buf.data(), r.ptr);
}

inline std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Csv {
public:
    explicit Csv(std::initializer_list<std::string> header) {
        bool first = true;
        for (const auto& h : header) {
            if (!first) text_ += ',';
            text_ += h;
            first = false;
        }
        text_ += '\n';
        columns_ = header.size();
    }

    class Row {
    public:
        explicit Row(Csv& csv) : csv_(csv) {}
        Row(const Row&) = delete;
        ~Row() { csv_.text_ += '\n'; }
        Row& operator<<(double x) { return cell(format_double(x)); }
        Row& operator<<(std::uint64_t x) { return cell(std::to_string(x)); }
        Row& operator<<(int x) { return cell(std::to_string(x)); }
        Row& operator<<(const std::string& s) { return cell(s); }
        Row& operator<<(const char* s) { return cell(s); }

    private:
        Row& cell(const std::string& s) {
            if (n_++) csv_.text_ += ',';
            csv_.text_ += s;
            return *this;
        }
        Csv& csv_;
        std::size_t n_{0};
    };

    Row row() { return Row(*this); }
    const std::string& text() const { return text_; }
    std::size_t columns() const { return columns_; }

private:
    std::string text_;
    std::size_t columns_{0};
};

inline Csv histogram_csv(const Histogram1D& h) {
    Csv csv{"edge_lo", "edge_hi", "count"};
    const auto& e = h.edges();
    for (std::size_t i = 0; i < h.bins(); ++i) csv.row() << e[i] << e[i + 1] << static_cast<std::uint64_t>(h.counts()[i]);
    return csv;
}

/// Output directory for one invocation. Every file goes through here so the
/// manifest can list it with its content hash; the manifest is written last.
class RunOutput {
public:
    explicit RunOutput(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

    const std::filesystem::path& directory() const { return dir_; }

    void write(const std::string& name, const std::string& bytes) {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << bytes;
        out.close();
        files_.push_back({{"path", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    void write(const std::string& name, const Csv& csv) { write(name, csv.text()); }
    void write(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

    const nlohmann::json& inventory() const { return files_; }

private:
    std::filesystem::path dir_;
    nlohmann::json files_ = nlohmann::json::array();
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Keys of manifest.json that legitimately differ between identical reruns.
inline const std::vector<std::string>& wall_clock_keys() {
    static const std::vector<std::string> k{"started_at", "finished_at", "wall_clock_seconds"};
    return k;
}

}  // namespace rbill::harness
