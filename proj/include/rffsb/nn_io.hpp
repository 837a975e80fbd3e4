#pragma once
// Checkpoint container: magic "RFNN", version, manifest (name, shape, dtype,
// offset), then raw little-endian blobs.  Round-trips bit-exact.

#include <cstring>
#include <fstream>
#include <map>

#include "rffsb/common.hpp"

namespace rffsb::nn {

class Checkpoint {
  public:
    enum Dtype : std::uint8_t { F32 = 0, F64 = 1 };

    struct Entry {
        std::vector<std::uint64_t> shape;
        Dtype dtype;
        std::vector<std::uint8_t> bytes;
    };

    void put_f32(const std::string& name, std::vector<std::uint64_t> shape,
                 const float* data, std::size_t count) {
        put(name, std::move(shape), F32,
            reinterpret_cast<const std::uint8_t*>(data), count * 4);
    }

    void put_f64(const std::string& name, std::vector<std::uint64_t> shape,
                 const double* data, std::size_t count) {
        put(name, std::move(shape), F64,
            reinterpret_cast<const std::uint8_t*>(data), count * 8);
    }

    void put_scalar(const std::string& name, double v) {
        put_f64(name, {1}, &v, 1);
    }

    bool has(const std::string& name) const { return entries_.count(name) > 0; }

    const Entry& at(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end())
            throw IoError("checkpoint: missing entry " + name);
        return it->second;
    }

    std::vector<float> get_f32(const std::string& name) const {
        const auto& e = at(name);
        if (e.dtype != F32) throw IoError("checkpoint: dtype mismatch " + name);
        std::vector<float> out(e.bytes.size() / 4);
        std::memcpy(out.data(), e.bytes.data(), e.bytes.size());
        return out;
    }

    std::vector<double> get_f64(const std::string& name) const {
        const auto& e = at(name);
        if (e.dtype != F64) throw IoError("checkpoint: dtype mismatch " + name);
        std::vector<double> out(e.bytes.size() / 8);
        std::memcpy(out.data(), e.bytes.data(), e.bytes.size());
        return out;
    }

    double get_scalar(const std::string& name) const {
        auto v = get_f64(name);
        if (v.size() != 1) throw IoError("checkpoint: not a scalar: " + name);
        return v[0];
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("checkpoint: cannot write " + path.string());
        f.write("RFNN", 4);
        write_u32(f, 1);                                    // format version
        write_u32(f, static_cast<std::uint32_t>(entries_.size()));
        // Manifest, then blobs; offsets are relative to the blob region.
        std::uint64_t offset = 0;
        for (const auto& [name, e] : entries_) {
            write_u32(f, static_cast<std::uint32_t>(name.size()));
            f.write(name.data(), static_cast<std::streamsize>(name.size()));
            f.put(static_cast<char>(e.dtype));
            write_u32(f, static_cast<std::uint32_t>(e.shape.size()));
            for (auto d : e.shape) write_u64(f, d);
            write_u64(f, offset);
            write_u64(f, e.bytes.size());
            offset += e.bytes.size();
        }
        for (const auto& [name, e] : entries_)
            f.write(reinterpret_cast<const char*>(e.bytes.data()),
                    static_cast<std::streamsize>(e.bytes.size()));
        if (!f) throw IoError("checkpoint: write failed " + path.string());
    }

    static Checkpoint load(const std::filesystem::path& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw IoError("checkpoint: cannot read " + path.string());
        char magic[4];
        f.read(magic, 4);
        if (!f || std::memcmp(magic, "RFNN", 4) != 0)
            throw IoError("checkpoint: bad magic in " + path.string());
        if (read_u32(f) != 1)
            throw IoError("checkpoint: unsupported version in " + path.string());
        const std::uint32_t count = read_u32(f);
        struct Head { std::string name; Entry e; std::uint64_t off, len; };
        std::vector<Head> heads(count);
        for (auto& h : heads) {
            const std::uint32_t nl = read_u32(f);
            h.name.resize(nl);
            f.read(h.name.data(), nl);
            h.e.dtype = static_cast<Dtype>(f.get());
            const std::uint32_t nd = read_u32(f);
            h.e.shape.resize(nd);
            for (auto& d : h.e.shape) d = read_u64(f);
            h.off = read_u64(f);
            h.len = read_u64(f);
        }
        const std::streampos blob0 = f.tellg();
        Checkpoint ck;
        for (auto& h : heads) {
            f.seekg(blob0 + static_cast<std::streamoff>(h.off));
            h.e.bytes.resize(h.len);
            f.read(reinterpret_cast<char*>(h.e.bytes.data()),
                   static_cast<std::streamsize>(h.len));
            if (!f) throw IoError("checkpoint: truncated " + path.string());
            ck.entries_.emplace(h.name, std::move(h.e));
        }
        return ck;
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }

  private:
    void put(const std::string& name, std::vector<std::uint64_t> shape,
             Dtype dt, const std::uint8_t* data, std::size_t nbytes) {
        std::uint64_t numel = 1;
        for (auto d : shape) numel *= d;
        if (numel * (dt == F32 ? 4 : 8) != nbytes)
            throw ShapeError("checkpoint: shape/data mismatch for " + name);
        Entry e;
        e.shape = std::move(shape);
        e.dtype = dt;
        e.bytes.assign(data, data + nbytes);
        entries_[name] = std::move(e);
    }

    static void write_u32(std::ofstream& f, std::uint32_t v) {
        f.write(reinterpret_cast<const char*>(&v), 4);
    }
    static void write_u64(std::ofstream& f, std::uint64_t v) {
        f.write(reinterpret_cast<const char*>(&v), 8);
    }
    static std::uint32_t read_u32(std::ifstream& f) {
        std::uint32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        return v;
    }
    static std::uint64_t read_u64(std::ifstream& f) {
        std::uint64_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    }

    std::map<std::string, Entry> entries_;
};

}  // namespace rffsb::nn
