#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace filtlab {

// Counter-based random stream (Philox4x32-10, Salmon et al. 2011).
//
// One stream per simulated path: the key is the master seed, the high
// counter words are the stream id, the low words count draws. A path's
// sequence therefore depends only on (seed, stream id), never on which
// worker thread produced it.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)},
          stream_{static_cast<std::uint32_t>(stream_id),
                  static_cast<std::uint32_t>(stream_id >> 32)} {}

    std::uint32_t next_u32() {
        if (block_pos_ == 4) {
            block_ = generate_block();
            ++counter_;
            block_pos_ = 0;
        }
        return block_[block_pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform draw in the open interval (0,1).
    double uniform() {
        const std::uint64_t bits = next_u64() >> 11;  // 53 random bits
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; pairs are cached so consecutive
    // calls consume a deterministic number of counter increments.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    static void mulhilo(std::uint32_t a, std::uint32_t b,
                        std::uint32_t& hi, std::uint32_t& lo) {
        const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    std::array<std::uint32_t, 4> generate_block() const {
        constexpr std::uint32_t kWeylA = 0x9E3779B9u;
        constexpr std::uint32_t kWeylB = 0xBB67AE85u;
        constexpr std::uint32_t kMulA = 0xD2511F53u;
        constexpr std::uint32_t kMulB = 0xCD9E8D57u;

        std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(counter_),
            static_cast<std::uint32_t>(counter_ >> 32),
            stream_[0], stream_[1]};
        std::uint32_t k0 = key_[0];
        std::uint32_t k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(kMulA, ctr[0], hi0, lo0);
            mulhilo(kMulB, ctr[2], hi1, lo1);
            ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
            k0 += kWeylA;
            k1 += kWeylB;
        }
        return ctr;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 2> stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int block_pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace filtlab
