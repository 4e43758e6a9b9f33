#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crew/error.hpp"

namespace crew {

// MSB-first bit packing: the first value written lands in the high bits of
// the first byte.

class BitWriter {
public:
    void write(uint32_t value, int nbits) {
        for (int b = nbits - 1; b >= 0; --b) {
            acc_ = static_cast<uint8_t>((acc_ << 1) | ((value >> b) & 1u));
            if (++fill_ == 8) {
                bytes_.push_back(acc_);
                acc_ = 0;
                fill_ = 0;
            }
        }
    }

    /// Zero-pads to the next byte boundary.
    void align() {
        if (fill_ > 0) {
            bytes_.push_back(static_cast<uint8_t>(acc_ << (8 - fill_)));
            acc_ = 0;
            fill_ = 0;
        }
    }

    size_t bit_count() const { return bytes_.size() * 8 + fill_; }

    std::vector<uint8_t> take() {
        align();
        return std::move(bytes_);
    }

private:
    std::vector<uint8_t> bytes_;
    uint8_t acc_ = 0;
    int fill_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const uint8_t> data) : data_(data) {}

    uint32_t read(int nbits) {
        uint32_t v = 0;
        for (int b = 0; b < nbits; ++b) {
            size_t byte = pos_ >> 3;
            if (byte >= data_.size())
                throw format_error("bit stream truncated");
            int shift = 7 - static_cast<int>(pos_ & 7);
            v = (v << 1) | ((data_[byte] >> shift) & 1u);
            ++pos_;
        }
        return v;
    }

    void align() { pos_ = (pos_ + 7) & ~size_t{7}; }

    size_t bit_pos() const { return pos_; }

private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

}  // namespace crew
