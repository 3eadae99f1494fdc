#include "foliated/rng.hpp"

#include <cmath>
#include <numbers>

namespace foliated {
namespace {

constexpr std::uint32_t mult0 = 0xD2511F53u;
constexpr std::uint32_t mult1 = 0xCD9E8D57u;
constexpr std::uint32_t weyl0 = 0x9E3779B9u;
constexpr std::uint32_t weyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    std::uint64_t const product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) noexcept
{
    for (int round = 0; round < 10; ++round)
    {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(mult0, ctr[0], hi0, lo0);
        mulhilo(mult1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += weyl0;
        key[1] += weyl1;
    }
    return ctr;
}

// Counter layout: words 0-1 hold the block index, words 2-3 the stream id
// with the process tag in the top byte of word 3.
RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id, ProcessTag tag) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_lo_(static_cast<std::uint32_t>(stream_id)),
      stream_hi_((static_cast<std::uint32_t>(stream_id >> 32) & 0x00FFFFFFu)
                 | (static_cast<std::uint32_t>(tag) << 24))
{
}

void RngStream::refill() noexcept
{
    Philox4x32::Counter const ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32),
                                  stream_lo_,
                                  stream_hi_};
    buffer_ = Philox4x32::apply(ctr, key_);
    ++block_;
    next_ = 0;
}

RngStream::result_type RngStream::operator()() noexcept
{
    if (next_ == 4)
        refill();
    return buffer_[next_++];
}

double RngStream::uniform_open() noexcept
{
    std::uint64_t const hi = (*this)() >> 5;  // 27 bits
    std::uint64_t const lo = (*this)() >> 6;  // 26 bits
    std::uint64_t const bits = (hi << 26) | lo;
    // Shift by half an ulp so neither endpoint is reachable.
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double a, double b) noexcept
{
    return a + (b - a) * uniform_open();
}

double RngStream::exponential(double rate) noexcept
{
    return -std::log(uniform_open()) / rate;
}

double RngStream::normal() noexcept
{
    if (has_spare_normal_)
    {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    double const radius = std::sqrt(-2.0 * std::log(uniform_open()));
    double const angle = 2.0 * std::numbers::pi * uniform_open();
    spare_normal_ = radius * std::sin(angle);
    has_spare_normal_ = true;
    return radius * std::cos(angle);
}

}  // namespace foliated
