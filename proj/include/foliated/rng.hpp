#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace foliated {

//---------------------------------------------------------------------------//
/*!
 * Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
 *
 * Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits. Having
 * no hidden state, it lets every (seed, path, process) triple own an
 * independent stream that can be regenerated in isolation.
 */
struct Philox4x32
{
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter counter, Key key) noexcept;
};

/// Which driving process a stream feeds.
enum class ProcessTag : std::uint32_t
{
    leaf_noise = 0,        //!< Z, acting along the leaves
    transversal_noise = 1, //!< Z-tilde, acting across the leaves
    auxiliary = 2          //!< sampling used by diagnostics (tangency probes, ...)
};

//---------------------------------------------------------------------------//
/*!
 * Value-semantic random stream keyed by (global seed, stream id, process tag).
 *
 * Satisfies UniformRandomBitGenerator with 32-bit output. Streams with
 * different keys never share counters, so they are statistically independent;
 * copying a stream duplicates its position.
 */
class RngStream
{
  public:
    using result_type = std::uint32_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id, ProcessTag tag) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept;

    /// Uniform double in the open interval (0, 1) with 53 random bits.
    double uniform_open() noexcept;
    /// Uniform double in [a, b).
    double uniform(double a, double b) noexcept;
    /// Exponential variate with the given rate.
    double exponential(double rate) noexcept;
    /// Standard normal variate (Box-Muller, both halves used).
    double normal() noexcept;

    /// Number of 128-bit blocks consumed so far.
    std::uint64_t blocks_used() const noexcept { return block_; }

  private:
    void refill() noexcept;

    Philox4x32::Key key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int next_ = 4;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

}  // namespace foliated
