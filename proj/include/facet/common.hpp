#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace facet {

// Error hierarchy. Callers that only care about "something failed" catch
// facet::Error; the service layer maps the concrete types to HTTP status codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Input violates a documented precondition (bad argument, malformed request).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// An external collaborator broke its contract (wrong dimension, bad payload).
class ContractError : public Error {
public:
    using Error::Error;
};

// Transient failure; the same call may succeed later.
class RetryableError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

/// 64-bit FNV-1a. Used for content hashes and n-gram feature hashing, so the
/// value must stay stable across platforms and releases.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dense vectors
// ---------------------------------------------------------------------------

using Vector = std::vector<float>;

inline float dot(std::span<const float> a, std::span<const float> b) noexcept {
    float s = 0.0f;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline float squared_l2(std::span<const float> a, std::span<const float> b) noexcept {
    float s = 0.0f;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        const float d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double norm(std::span<const float> a) noexcept {
    double s = 0.0;
    for (float x : a) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

/// Scales `v` to unit length in place. Returns false (leaving v untouched)
/// for the zero vector.
inline bool normalize(std::span<float> v) noexcept {
    const double n = norm(v);
    if (n == 0.0) return false;
    for (float& x : v) x = static_cast<float>(x / n);
    return true;
}

inline bool all_finite(std::span<const float> v) noexcept {
    for (float x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Row-major n x dim block of float vectors. The workhorse container for
/// clustering and indexing; rows are handed out as spans.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0f) {}

    static Matrix from_rows(const std::vector<Vector>& rows) {
        if (rows.empty()) return {};
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.dim_)
                throw PreconditionError("Matrix::from_rows: ragged input at row " + std::to_string(i));
            std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<float> row(std::size_t i) noexcept { return {data_.data() + i * dim_, dim_}; }
    std::span<const float> row(std::size_t i) const noexcept { return {data_.data() + i * dim_, dim_}; }

    void push_back(std::span<const float> v) {
        if (rows_ == 0 && dim_ == 0) dim_ = v.size();
        if (v.size() != dim_)
            throw PreconditionError("Matrix::push_back: dimension " + std::to_string(v.size()) +
                                    " != " + std::to_string(dim_));
        data_.insert(data_.end(), v.begin(), v.end());
        ++rows_;
    }

    const std::vector<float>& data() const noexcept { return data_; }
    std::vector<float>& data() noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

// ---------------------------------------------------------------------------
// Little-endian binary I/O for the versioned on-disk formats.
// ---------------------------------------------------------------------------

namespace io {

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw IoError("cannot open for writing: " + path);
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write failed: " + path_);
    }
    void magic(std::string_view m) { bytes(m.data(), m.size()); }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void floats(std::span<const float> v) { bytes(v.data(), v.size() * sizeof(float)); }

    void close() {
        out_.flush();
        if (!out_) throw IoError("flush failed: " + path_);
        out_.close();
    }

private:
    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open for reading: " + path);
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("truncated file: " + path_);
    }
    void expect_magic(std::string_view m) {
        std::string got(m.size(), '\0');
        bytes(got.data(), got.size());
        if (got != m) throw FormatError("bad magic in " + path_ + " (expected " + std::string(m) + ")");
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, sizeof v);
        return v;
    }
    std::string str() {
        const auto n = u32();
        if (n > (1u << 26)) throw FormatError("implausible string length in " + path_);
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    void floats(std::span<float> v) { bytes(v.data(), v.size() * sizeof(float)); }

    bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::ifstream in_;
};

}  // namespace io

}  // namespace facet
