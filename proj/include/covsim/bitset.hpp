#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace covsim {

/// Fixed-size bitset over file indices of one user.
class FileBitset {
public:
    FileBitset() = default;
    explicit FileBitset(std::uint32_t size)
        : size_(size), words_((size + 63) / 64, 0) {}

    std::uint32_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    bool test(std::uint32_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }

    /// Returns true when the bit was not set before.
    bool set(std::uint32_t i) {
        std::uint64_t& w = words_[i >> 6];
        const std::uint64_t mask = 1ULL << (i & 63);
        if (w & mask) return false;
        w |= mask;
        ++count_;
        return true;
    }

    void set_all() {
        if (size_ == 0) return;
        for (auto& w : words_) w = ~0ULL;
        const std::uint32_t tail = size_ & 63;
        if (tail != 0) words_.back() = (1ULL << tail) - 1;
        count_ = size_;
    }

    std::uint32_t count() const { return count_; }
    bool full() const { return count_ == size_; }

    /// In-place union. The operand must have the same size.
    /// Returns the number of newly set bits.
    std::uint32_t union_with(const FileBitset& other) {
        if (other.size_ != size_) throw std::invalid_argument("FileBitset size mismatch");
        std::uint32_t added = 0;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            const std::uint64_t fresh = other.words_[i] & ~words_[i];
            if (fresh != 0) {
                added += static_cast<std::uint32_t>(std::popcount(fresh));
                words_[i] |= fresh;
            }
        }
        count_ += added;
        return added;
    }

    std::vector<std::uint32_t> indices() const {
        std::vector<std::uint32_t> out;
        out.reserve(count_);
        for (std::uint32_t i = 0; i < size_; ++i) {
            if (test(i)) out.push_back(i);
        }
        return out;
    }

    friend bool operator==(const FileBitset& a, const FileBitset& b) {
        return a.size_ == b.size_ && a.words_ == b.words_;
    }

private:
    std::uint32_t size_ = 0;
    std::uint32_t count_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace covsim
