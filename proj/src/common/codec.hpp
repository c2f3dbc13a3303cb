#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>

#include "common/bytes.hpp"

// Little-endian, length-prefixed primitives shared by every on-disk and
// on-wire format in the system.

namespace brook {

class CodecError : public std::runtime_error {
  public:
    explicit CodecError(const std::string& what) : std::runtime_error(what) {}
};

class Writer {
  public:
    Writer() = default;
    explicit Writer(Bytes& out) : out_(&out) {}

    void u8(uint8_t v) { buf().push_back(v); }
    void u16(uint16_t v) { put_le(v); }
    void u32(uint32_t v) { put_le(v); }
    void u64(uint64_t v) { put_le(v); }

    void raw(const void* p, size_t n) { append_bytes(buf(), p, n); }
    void raw(const Bytes& b) { raw(b.data(), b.size()); }
    void hash(const Hash32& h) { raw(h.data(), h.size()); }

    // [u32 length][bytes]
    void blob(const Bytes& b) {
        u32(static_cast<uint32_t>(b.size()));
        raw(b);
    }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

    Bytes take() { return std::move(owned_); }
    const Bytes& bytes() const { return out_ ? *out_ : owned_; }

  private:
    Bytes& buf() { return out_ ? *out_ : owned_; }

    template <typename T>
    void put_le(T v) {
        uint8_t tmp[sizeof(T)];
        for (size_t i = 0; i < sizeof(T); ++i) tmp[i] = static_cast<uint8_t>(v >> (8 * i));
        raw(tmp, sizeof(T));
    }

    Bytes owned_;
    Bytes* out_ = nullptr;
};

class Reader {
  public:
    Reader(const uint8_t* data, size_t size) : p_(data), end_(data + size) {}
    explicit Reader(const Bytes& b) : Reader(b.data(), b.size()) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() { return get_le<uint16_t>(); }
    uint32_t u32() { return get_le<uint32_t>(); }
    uint64_t u64() { return get_le<uint64_t>(); }

    Bytes blob() {
        uint32_t n = u32();
        const uint8_t* p = take(n);
        return Bytes(p, p + n);
    }
    std::string str() {
        uint32_t n = u32();
        const uint8_t* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }
    Hash32 hash() {
        Hash32 h;
        std::memcpy(h.data(), take(32), 32);
        return h;
    }
    void raw(void* dst, size_t n) { std::memcpy(dst, take(n), n); }

    size_t remaining() const { return static_cast<size_t>(end_ - p_); }
    bool done() const { return p_ == end_; }

  private:
    const uint8_t* take(size_t n) {
        if (remaining() < n) throw CodecError("truncated input");
        const uint8_t* p = p_;
        p_ += n;
        return p;
    }

    template <typename T>
    T get_le() {
        const uint8_t* p = take(sizeof(T));
        T v = 0;
        for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
        return v;
    }

    const uint8_t* p_;
    const uint8_t* end_;
};

}  // namespace brook
