#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

// Counter-based splittable RNG. Every stream is a pure function of its key,
// so parallel replay is deterministic regardless of scheduling: the stream
// for (seed, level, replica, sample, purpose) is the same no matter which
// thread asks for it.

namespace whmc::rng {

// What a stream is used for inside one sample. Separate purposes get
// disjoint streams so adding draws of one kind never shifts another.
enum class Purpose : std::uint32_t {
    spacing = 1,
    sup_factor = 2,
    inf_factor = 3,
    coin = 4,
    normal = 5,
    bridge = 6,
    direct_coarse = 7,
};

struct StreamKey {
    std::uint64_t seed = 0;
    std::int32_t level = 0;
    std::int32_t replica = 0;
    std::int64_t sample = 0;
    Purpose purpose = Purpose::spacing;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Philox 4x32-10 (Salmon et al. round function, standard constants).
struct Philox4x32 {
    std::array<std::uint32_t, 2> key{};
    std::array<std::uint32_t, 4> ctr{};

    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
        std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> c,
                                              std::array<std::uint32_t, 2> k) {
        constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(m0, c[0], hi0, lo0);
            mulhilo(m1, c[2], hi1, lo1);
            c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
            k[0] += w0;
            k[1] += w1;
        }
        return c;
    }
};

} // namespace detail

// Stream of doubles in the open interval (0,1). One Philox block yields two
// doubles; the 128-bit counter is (position, key-derived nonce).
class UniformStream {
  public:
    UniformStream() : UniformStream(StreamKey{}) {}

    explicit UniformStream(const StreamKey& k) {
        using detail::splitmix64;
        std::uint64_t h = splitmix64(k.seed ^ 0x5DEECE66Dull);
        h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.level)));
        h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.replica)));
        h = splitmix64(h ^ static_cast<std::uint64_t>(k.sample));
        h = splitmix64(h ^ static_cast<std::uint64_t>(k.purpose));
        std::uint64_t key64 = splitmix64(h);
        std::uint64_t nonce = splitmix64(key64 ^ 0x9E3779B97F4A7C15ull);
        key_ = {static_cast<std::uint32_t>(key64), static_cast<std::uint32_t>(key64 >> 32)};
        nonce_ = {static_cast<std::uint32_t>(nonce), static_cast<std::uint32_t>(nonce >> 32)};
    }

    double next() {
        if (have_ == 0) refill();
        std::uint64_t u = buf_[--have_];
        // (u >> 11) is uniform on [0, 2^53); the half-step keeps 0 and 1 out.
        return (static_cast<double>(u >> 11) + 0.5) * 0x1p-53;
    }

    bool coin() { return next() < 0.5; }

  private:
    void refill() {
        std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(pos_),
                                            static_cast<std::uint32_t>(pos_ >> 32), nonce_[0],
                                            nonce_[1]};
        auto out = detail::Philox4x32::block(ctr, key_);
        buf_[0] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
        buf_[1] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
        have_ = 2;
        ++pos_;
    }

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 2> nonce_{};
    std::uint64_t pos_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int have_ = 0;
};

inline UniformStream stream(const StreamKey& key) { return UniformStream(key); }

inline double exponential(UniformStream& s, double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
    double u = s.next();
    return -std::log(u) / rate;
}

// Inverse normal CDF, Wichura's PPND16 (AS 241). Full double accuracy; one
// uniform per normal keeps stream consumption predictable.
double inverse_normal_cdf(double p);

inline double standard_normal(UniformStream& s) { return inverse_normal_cdf(s.next()); }

} // namespace whmc::rng
