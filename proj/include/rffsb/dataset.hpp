#pragma once
// Dataset store: one directory per split holding manifest.json (config echo,
// seeds, counts, blob digests) plus frames.f32 (interleaved I/Q, LE),
// features.f32, labels.u16.

#include <fstream>
#include <openssl/evp.h>

#include "json.hpp"

#include "rffsb/common.hpp"

namespace rffsb {

inline std::string sha256_hex(const std::uint8_t* data, std::size_t n) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data, n) != 1 ||
        EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out.push_back(hex[md[k] >> 4]);
        out.push_back(hex[md[k] & 0xf]);
    }
    return out;
}

struct DatasetSplit {
    std::size_t n_samples = 0;     // per frame
    std::size_t feature_len = 0;
    std::vector<float> frames;     // rows of interleaved i,q (2*n_samples each)
    std::vector<float> features;   // rows of feature_len
    std::vector<std::uint16_t> labels;
    nlohmann::json provenance;     // config echo, seeds, profile

    std::size_t rows() const { return labels.size(); }

    void append(const std::vector<double>& i, const std::vector<double>& q,
                const std::vector<double>& feat, std::uint16_t label) {
        if (n_samples == 0) n_samples = i.size();
        if (feature_len == 0) feature_len = feat.size();
        if (i.size() != n_samples || q.size() != n_samples ||
            feat.size() != feature_len)
            throw ShapeError("dataset: inconsistent row shapes");
        for (std::size_t k = 0; k < n_samples; ++k) {
            frames.push_back(static_cast<float>(i[k]));
            frames.push_back(static_cast<float>(q[k]));
        }
        for (double v : feat) features.push_back(static_cast<float>(v));
        labels.push_back(label);
    }

    void frame_row(std::size_t r, std::vector<double>& i,
                   std::vector<double>& q) const {
        i.resize(n_samples);
        q.resize(n_samples);
        const float* p = frames.data() + r * 2 * n_samples;
        for (std::size_t k = 0; k < n_samples; ++k) {
            i[k] = p[2 * k];
            q[k] = p[2 * k + 1];
        }
    }

    std::vector<double> feature_row(std::size_t r) const {
        return std::vector<double>(features.begin() + r * feature_len,
                                   features.begin() + (r + 1) * feature_len);
    }

    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        write_blob(dir / "frames.f32", frames.data(), frames.size() * 4);
        write_blob(dir / "features.f32", features.data(), features.size() * 4);
        write_blob(dir / "labels.u16", labels.data(), labels.size() * 2);

        nlohmann::json m;
        m["rows"] = rows();
        m["n_samples"] = n_samples;
        m["feature_len"] = feature_len;
        m["provenance"] = provenance;
        m["sha256"] = {
            {"frames.f32", sha256_hex(
                reinterpret_cast<const std::uint8_t*>(frames.data()),
                frames.size() * 4)},
            {"features.f32", sha256_hex(
                reinterpret_cast<const std::uint8_t*>(features.data()),
                features.size() * 4)},
            {"labels.u16", sha256_hex(
                reinterpret_cast<const std::uint8_t*>(labels.data()),
                labels.size() * 2)},
        };
        std::ofstream f(dir / "manifest.json");
        if (!f) throw IoError("dataset: cannot write manifest in " + dir.string());
        f << m.dump(2) << "\n";
    }

    static DatasetSplit load(const std::filesystem::path& dir) {
        std::ifstream mf(dir / "manifest.json");
        if (!mf) throw IoError("dataset: missing manifest in " + dir.string());
        nlohmann::json m = nlohmann::json::parse(mf);
        DatasetSplit d;
        d.n_samples = m.at("n_samples").get<std::size_t>();
        d.feature_len = m.at("feature_len").get<std::size_t>();
        d.provenance = m.value("provenance", nlohmann::json::object());
        const std::size_t rows = m.at("rows").get<std::size_t>();
        read_blob(dir / "frames.f32", d.frames, rows * 2 * d.n_samples);
        read_blob(dir / "features.f32", d.features, rows * d.feature_len);
        read_blob(dir / "labels.u16", d.labels, rows);
        // Integrity: stored digests must match the blobs on disk.
        const auto& sums = m.at("sha256");
        check_digest(sums, "frames.f32", d.frames.data(), d.frames.size() * 4, dir);
        check_digest(sums, "features.f32", d.features.data(),
                     d.features.size() * 4, dir);
        check_digest(sums, "labels.u16", d.labels.data(), d.labels.size() * 2, dir);
        return d;
    }

  private:
    static void write_blob(const std::filesystem::path& p, const void* data,
                           std::size_t nbytes) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw IoError("dataset: cannot write " + p.string());
        f.write(static_cast<const char*>(data),
                static_cast<std::streamsize>(nbytes));
        if (!f) throw IoError("dataset: write failed " + p.string());
    }

    template <typename V>
    static void read_blob(const std::filesystem::path& p, std::vector<V>& out,
                          std::size_t count) {
        std::ifstream f(p, std::ios::binary);
        if (!f) throw IoError("dataset: cannot read " + p.string());
        out.resize(count);
        f.read(reinterpret_cast<char*>(out.data()),
               static_cast<std::streamsize>(count * sizeof(V)));
        if (!f) throw IoError("dataset: truncated blob " + p.string());
    }

    static void check_digest(const nlohmann::json& sums, const std::string& key,
                             const void* data, std::size_t nbytes,
                             const std::filesystem::path& dir) {
        const std::string want = sums.at(key).get<std::string>();
        const std::string got = sha256_hex(
            static_cast<const std::uint8_t*>(data), nbytes);
        if (want != got)
            throw IoError("dataset: digest mismatch for " + key + " in " +
                          dir.string());
    }
};

}  // namespace rffsb
