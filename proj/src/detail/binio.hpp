#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "crew/error.hpp"

namespace crew::detail {

// Little-endian scalar append/read over a byte vector.

template <typename T>
void put(std::vector<uint8_t>& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    // host is assumed little-endian; enforced at build targets we support
    out.insert(out.end(), raw, raw + sizeof(T));
}

class ByteCursor {
public:
    explicit ByteCursor(std::span<const uint8_t> data) : data_(data) {}

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos_ + sizeof(T) > data_.size())
            throw format_error("unexpected end of stream");
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::span<const uint8_t> take(size_t n) {
        if (pos_ + n > data_.size())
            throw format_error("unexpected end of stream");
        auto view = data_.subspan(pos_, n);
        pos_ += n;
        return view;
    }

    size_t remaining() const { return data_.size() - pos_; }
    size_t pos() const { return pos_; }

private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

inline std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (in.bad())
        throw io_error("read failed on " + path);
    return bytes;
}

// Temp-file + rename so partially written outputs never shadow good ones.
inline void write_file_atomic(const std::string& path, std::span<const uint8_t> bytes) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw io_error("cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw io_error("write failed on " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw io_error("rename failed for " + path + ": " + ec.message());
    }
}

}  // namespace crew::detail
