#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace incrasat {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          _offset(offset) {}
    size_t offset() const { return _offset; }
private:
    size_t _offset;
};

// Little-endian serialization helpers.
class ByteWriter {
public:
    ByteWriter() = default;
    explicit ByteWriter(size_t reserve) { _buf.reserve(reserve); }

    void u8(uint8_t v) { _buf.push_back(v); }
    void u16(uint16_t v) { put(v); }
    void u32(uint32_t v) { put(v); }
    void u64(uint64_t v) { put(v); }
    void i32(int32_t v) { put(static_cast<uint32_t>(v)); }
    void f64(double v) { uint64_t x; std::memcpy(&x, &v, 8); put(x); }
    void bytes(std::span<const uint8_t> data) {
        _buf.insert(_buf.end(), data.begin(), data.end());
    }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        _buf.insert(_buf.end(), s.begin(), s.end());
    }
    void i32s(std::span<const int32_t> vals) {
        u64(vals.size());
        for (int32_t v : vals) i32(v);
    }

    size_t size() const { return _buf.size(); }
    std::vector<uint8_t>& buffer() { return _buf; }
    std::vector<uint8_t> take() { return std::move(_buf); }

private:
    template <typename T>
    void put(T v) {
        for (size_t i = 0; i < sizeof(T); i++) _buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    std::vector<uint8_t> _buf;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : _data(data) {}

    uint8_t u8() { need(1); return _data[_pos++]; }
    uint16_t u16() { return get<uint16_t>(); }
    uint32_t u32() { return get<uint32_t>(); }
    uint64_t u64() { return get<uint64_t>(); }
    int32_t i32() { return static_cast<int32_t>(get<uint32_t>()); }
    double f64() { uint64_t x = get<uint64_t>(); double v; std::memcpy(&v, &x, 8); return v; }
    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(_data.data() + _pos), n);
        _pos += n;
        return s;
    }
    std::vector<int32_t> i32s() {
        uint64_t n = u64();
        if (n > remaining() / 4) throw ParseError("integer list longer than remaining input", _pos);
        std::vector<int32_t> out(n);
        for (auto& v : out) v = i32();
        return out;
    }
    std::span<const uint8_t> bytes(size_t n) {
        need(n);
        auto s = _data.subspan(_pos, n);
        _pos += n;
        return s;
    }
    std::span<const uint8_t> rest() { auto s = _data.subspan(_pos); _pos = _data.size(); return s; }

    size_t offset() const { return _pos; }
    size_t remaining() const { return _data.size() - _pos; }
    bool done() const { return _pos == _data.size(); }

private:
    void need(size_t n) const {
        if (remaining() < n) throw ParseError("truncated input", _data.size());
    }
    template <typename T>
    T get() {
        need(sizeof(T));
        T v = 0;
        for (size_t i = 0; i < sizeof(T); i++) v |= static_cast<T>(static_cast<T>(_data[_pos + i]) << (8 * i));
        _pos += sizeof(T);
        return v;
    }
    std::span<const uint8_t> _data;
    size_t _pos {0};
};

} // namespace incrasat
